"""Federated double deep Q-learning for delay/energy-aware computation offloading."""
from .kernels import BACKEND

__version__ = "0.1.0"
