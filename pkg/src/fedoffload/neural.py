"""Small fully-connected Q-network on a flat parameter vector.

Parameters are stored as one float64 array laid out layer by layer, weights
(row-major, shape ``(n_in, n_out)``) followed by biases.  That flat vector is
what gets averaged during federation and written to checkpoints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from . import kernels
from .errors import ConfigError, DomainError, FormatError, UsageError

N_FEATURES = 6
N_OUTPUTS = 3
BASE_HIDDEN = (30, 64, 16, 32, 32)
STACK_BLOCK = (16, 32, 32)


def layer_spec(hidden: Sequence[int] = BASE_HIDDEN) -> Tuple[int, ...]:
    return (N_FEATURES, *(int(h) for h in hidden), N_OUTPUTS)


def stacked_spec(n_blocks: int) -> Tuple[int, ...]:
    """Base architecture with ``n_blocks`` extra [16, 32, 32] blocks appended."""
    return layer_spec(BASE_HIDDEN + STACK_BLOCK * n_blocks)


def validate_spec(sizes: Sequence[int]) -> Tuple[int, ...]:
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 2:
        raise ConfigError(f"layer spec needs at least input and output sizes, got {sizes}")
    if sizes[0] != N_FEATURES or sizes[-1] != N_OUTPUTS:
        raise ConfigError(f"layer spec must go from {N_FEATURES} to {N_OUTPUTS}, got {sizes}")
    if min(sizes) < 1:
        raise ConfigError(f"layer widths must be >= 1, got {sizes}")
    return sizes


def param_count(sizes: Sequence[int]) -> int:
    return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))


@dataclass(eq=False)
class ParamVector:
    values: np.ndarray
    sizes: Tuple[int, ...]

    def __post_init__(self):
        self.sizes = tuple(self.sizes)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size != param_count(self.sizes):
            raise UsageError(
                f"parameter vector of length {self.values.size} does not fit {self.sizes}")

    def copy(self) -> "ParamVector":
        return ParamVector(self.values.copy(), self.sizes)

    def layers(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Views ``[(W, b), ...]`` into ``values``."""
        out, off = [], 0
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            w = self.values[off:off + n_in * n_out].reshape(n_in, n_out)
            off += n_in * n_out
            b = self.values[off:off + n_out]
            off += n_out
            out.append((w, b))
        return out

    def equals(self, other: "ParamVector") -> bool:
        """Bitwise equality."""
        return self.sizes == other.sizes and self.values.tobytes() == other.values.tobytes()


def init_network(sizes: Sequence[int], seed) -> ParamVector:
    """He-normal weights, zero biases."""
    sizes = validate_spec(sizes)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p = ParamVector(np.zeros(param_count(sizes)), sizes)
    for w, _ in p.layers():
        w[...] = rng.normal(0.0, math.sqrt(2.0 / w.shape[0]), size=w.shape)
    return p


def _forward_cached(params: ParamVector, x: np.ndarray):
    acts = [x]
    layers = params.layers()
    for w, b in layers[:-1]:
        acts.append(np.maximum(acts[-1] @ w + b, 0.0))
    w, b = layers[-1]
    return acts, acts[-1] @ w + b


def forward(params: ParamVector, x) -> np.ndarray:
    """Q-values for one state (shape (6,)) or a batch (shape (n, 6))."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("network input must be finite")
    return _forward_cached(params, x)[1]


def loss_and_gradients(params: ParamVector, states, actions, targets):
    """Mean squared TD error on the taken actions and its gradient.

    Returns ``(loss, grad)`` with ``grad`` a :class:`ParamVector` of the same shape.
    """
    states = np.asarray(states, dtype=np.float64)
    actions = np.asarray(actions, dtype=np.intp)
    targets = np.asarray(targets, dtype=np.float64)
    n = len(actions)
    if n == 0:
        raise UsageError("empty batch")
    if not np.all(np.isfinite(targets)):
        raise DomainError("targets must be finite")
    acts, q = _forward_cached(params, states)
    rows = np.arange(n)
    err = q[rows, actions] - targets
    loss = float(np.mean(err * err))

    grad = ParamVector(np.zeros_like(params.values), params.sizes)
    delta = np.zeros_like(q)
    delta[rows, actions] = (2.0 / n) * err
    layers = params.layers()
    glayers = grad.layers()
    for k in range(len(layers) - 1, -1, -1):
        w, _ = layers[k]
        gw, gb = glayers[k]
        gw[...] = acts[k].T @ delta
        gb[...] = delta.sum(axis=0)
        if k:
            delta = (delta @ w.T) * (acts[k] > 0.0)
    return loss, grad


@dataclass(eq=False)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **hyper) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), **hyper)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.step, self.lr, self.beta1,
                         self.beta2, self.eps)


def adam_update(values: np.ndarray, grad: np.ndarray, adam: AdamState):
    """Adam step on raw arrays; returns ``(new_values, new_state)``."""
    values = np.asarray(values, dtype=np.float64)
    grad = np.ascontiguousarray(grad, dtype=np.float64)
    n = values.size
    if grad.size != n or adam.m.size != n or adam.v.size != n:
        raise UsageError("Adam update: shape mismatch between params, grad and state")
    new_v = np.array(values, dtype=np.float64, copy=True)
    new_s = adam.copy()
    new_s.step += 1
    bc1 = 1.0 - adam.beta1 ** new_s.step
    bc2 = 1.0 - adam.beta2 ** new_s.step
    kernels.adam_step(new_v, grad, new_s.m, new_s.v, adam.lr, adam.beta1, adam.beta2,
                      adam.eps, bc1, bc2)
    return new_v, new_s


def apply_update(params: ParamVector, grad: ParamVector, adam: AdamState):
    """One bias-corrected Adam step.  Inputs are left untouched."""
    if grad.sizes != params.sizes:
        raise UsageError("apply_update: gradient shape does not match parameters")
    values, state = adam_update(params.values, grad.values, adam)
    return ParamVector(values, params.sizes), state


# -- checkpoints -------------------------------------------------------------

HEADER = "layers"


def export_params(params: ParamVector) -> str:
    """Text form: ``layers 6 30 ... 3`` then one value per line (exact repr)."""
    lines = [HEADER + " " + " ".join(str(s) for s in params.sizes)]
    lines.extend(repr(float(x)) for x in params.values)
    return "\n".join(lines) + "\n"


def import_params(text: str, sizes: Sequence[int] = None) -> ParamVector:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(HEADER + " "):
        raise FormatError("line 1: missing 'layers' header")
    try:
        got = tuple(int(t) for t in lines[0].split()[1:])
    except ValueError as exc:
        raise FormatError(f"line 1: bad layer sizes ({exc})") from None
    if sizes is not None and tuple(sizes) != got:
        raise FormatError(f"checkpoint shape {got} does not match expected {tuple(sizes)}")
    body = [ln for ln in lines[1:] if ln.strip()]
    want = param_count(got)
    if len(body) != want:
        raise FormatError(f"expected {want} values for {got}, found {len(body)}")
    try:
        values = np.array([float(ln) for ln in body])
    except ValueError as exc:
        raise FormatError(f"bad parameter value ({exc})") from None
    if not np.all(np.isfinite(values)):
        raise FormatError("non-finite parameter value")
    return ParamVector(values, got)


def save_checkpoint(params: ParamVector, path) -> Path:
    path = Path(path)
    path.write_text(export_params(params))
    return path


def load_checkpoint(path, sizes: Sequence[int] = None) -> ParamVector:
    return import_params(Path(path).read_text(), sizes)
