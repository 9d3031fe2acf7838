"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Times each hot kernel on identical inputs with both backends, checks that
their outputs are bit-identical, and times a short end-to-end training run
(the backend for that is chosen at import, so it runs in a subprocess).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from fedoffload import _pykernels
from fedoffload.kernels import available_backends

TRAIN_SNIPPET = """
import time
from fedoffload.ddqn_agent import AgentConfig
from fedoffload.env_sim import EnvConfig
from fedoffload.federation import FedConfig, run_training
from fedoffload.kernels import BACKEND
t = time.perf_counter()
run_training(EnvConfig(n_devices=20), AgentConfig(), FedConfig(20, 5, 10), 0)
print(BACKEND, time.perf_counter() - t)
"""


def instances(n, seed=0):
    rng = np.random.default_rng(seed)
    local, power = [], []
    for _ in range(n):
        local.append((rng.uniform(1e7, 1e9), rng.uniform(0.05, 2.0), 1e9, rng.uniform(0.01, 1),
                      1e-27, 10 ** rng.uniform(-1, 9)))
        power.append((rng.uniform(1e4, 5e6), rng.uniform(0.001, 0.3), rng.uniform(0.4, 2.0),
                      10 ** rng.uniform(-2, 2), 1e-3 * rng.uniform(10, 200) ** -3 *
                      rng.exponential(), 1e-13, 1e6, 0.1995, rng.uniform(0.01, 1), 1e-9,
                      200, 100))
    return local, power


def run_adam(mod, n=10_000, steps=50):
    rng = np.random.default_rng(1)
    p, g = rng.normal(size=n), rng.normal(size=n)
    m, v = np.zeros(n), np.zeros(n)
    for t in range(1, steps + 1):
        mod.adam_step(p, g, m, v, 1e-3, 0.9, 0.999, 1e-8, 1 - 0.9 ** t, 1 - 0.999 ** t)
    return p


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--n", type=int, default=2000, help="subproblem instances")
    ap.add_argument("--skip-training", action="store_true")
    args = ap.parse_args(argv)

    backends = {k: v for k, v in available_backends().items() if v is not None}
    if "cython" not in backends:
        print("compiled extension not built; only the Python backend is timed")
    local, power = instances(args.n)
    jobs = {
        f"solve_local x{args.n}": lambda mod: [mod.solve_local(*a) for a in local],
        f"solve_power x{args.n}": lambda mod: [mod.solve_power(*a) for a in power],
        "adam_step 10k x50": run_adam,
    }
    print(f"{'kernel':<22}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, job in jobs.items():
        times = {b: min(timeit.repeat(lambda: job(mod), number=1, repeat=args.repeat))
                 for b, mod in backends.items()}
        outs = [np.asarray(job(mod), dtype=float) for mod in backends.values()]
        same = all(np.array_equal(outs[0], o, equal_nan=True) for o in outs[1:])
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<22}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times.values())
              + f"{speed:>9.1f}x" + ("" if same else "  OUTPUTS DIFFER"))

    if not args.skip_training:
        print("\nend-to-end: 20 devices, 5 selected, 10 rounds")
        for force in ("0", "1") if "cython" in backends else ("1",):
            env = {**os.environ, "FEDOFFLOAD_PURE_PYTHON": force}
            out = subprocess.run([sys.executable, "-c", TRAIN_SNIPPET], env=env, check=True,
                                 capture_output=True, text=True).stdout.split()
            print(f"  {out[0]:<8} {float(out[1]):.2f}s")
    assert _pykernels is backends["python"]


if __name__ == "__main__":
    main()
