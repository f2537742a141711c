"""Benchmark the compiled kernels against the NumPy/SciPy fallback.

Usage:  python benchmarks/bench_kernels.py [--steps 20000] [--shells 20]

Times the four trajectory loops (forward Euler/RK4, tangent, adjoint) on an
identical workload for both backends, checks that results agree, and prints
a speedup table.
"""

import argparse
import time

import numpy as np

from sabrashell._kernels import _core_py

try:
    from sabrashell._kernels import _core_cy
except ImportError:
    _core_cy = None


def _time(fn, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--shells", type=int, default=20)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n, m = args.shells, args.steps
    k = 2.0 ** np.arange(1, n + 1)
    a, b, nu, dt = 1.0, -0.5, 1e-3, 1e-4
    decay = 2.0 ** (-np.arange(1, n + 1) / 2)
    u0 = 0.1 * decay * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    rhs = np.zeros((m, n), np.complex128)
    rhs[:, 0] = 0.1
    h = 0.01 * (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))
    term = np.zeros(n, np.complex128)

    backends = [("python", _core_py)]
    if _core_cy is not None:
        backends.append(("compiled", _core_cy))
    else:
        print("compiled extension not available; timing fallback only")

    workloads = {
        "si-euler forward": lambda mod: mod.run_si_euler(k, a, b, nu, dt, u0, rhs)[0],
        "ifrk4 forward": lambda mod: mod.run_ifrk4(k, a, b, nu, dt, u0, rhs)[0],
    }
    states = _core_py.run_si_euler(k, a, b, nu, dt, u0, rhs)[0]
    workloads["si-euler tangent"] = lambda mod: mod.run_si_euler_tangent(k, a, b, nu, dt, states, h)
    workloads["si-euler adjoint"] = lambda mod: mod.run_si_euler_adjoint(k, a, b, nu, dt, states, h, term)

    print(f"{m} steps, {n} shells")
    header = f"{'loop':<18}" + "".join(f"{name:>12}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}{'max diff':>12}"
    print(header)
    for wname, fn in workloads.items():
        times, outs = [], []
        for _, mod in backends:
            t, out = _time(lambda mod=mod: fn(mod))
            times.append(t)
            outs.append(np.asarray(out))
        row = f"{wname:<18}" + "".join(f"{t:>11.3f}s" for t in times)
        if len(backends) == 2:
            diff = float(np.abs(outs[0] - outs[1]).max())
            row += f"{times[0] / times[1]:>9.1f}x{diff:>12.2e}"
        print(row)


if __name__ == "__main__":
    main()
