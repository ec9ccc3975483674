"""Time the compiled kernels against the pure-Python fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3]

Both backends are called on identical inputs; the script also checks that
their outputs agree bit for bit.
"""
import argparse
import time

import numpy as np

from seisdamage import _accel
from seisdamage.models.kernels import KernelSpec, gram
from seisdamage.signal import DEFAULT_PERIODS


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def _record(n=2000, dt=0.01, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(n) * dt
    env = (t / t[-1]) ** 2 * np.exp(-6 * t / t[-1]) * 50.0
    return env * rng.standard_normal(n), dt


def _qp(n=300, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 5))
    t = np.where(X[:, 0] + X[:, 1] ** 2 - 1 + 0.3 * rng.normal(size=n) > 0, 1.0, -1.0)
    K = gram(KernelSpec("rbf", sigma=1.0), X)
    return np.ascontiguousarray(np.outer(t, t) * K), np.ascontiguousarray(t)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--samples", type=int, default=2000, help="accelerogram length")
    ap.add_argument("--points", type=int, default=300, help="SVM training set size")
    args = ap.parse_args(argv)

    backends = _accel.available_backends()
    print(f"active backend: {_accel.BACKEND}; available: {', '.join(sorted(backends))}")
    ag, dt = _record(args.samples)
    Q, t = _qp(args.points)
    cases = {
        f"newmark ({args.samples} samples x {DEFAULT_PERIODS.size} periods)":
            lambda mod: np.asarray(mod.newmark_peak_displacement(ag, dt, DEFAULT_PERIODS, 0.05)),
        f"smo ({args.points} points, c=1, tol=1e-3)":
            lambda mod: np.asarray(mod.smo_solve(Q, t, 1.0, 1e-3, 10_000_000)[0]),
    }
    print(f"{'kernel':45s} {'backend':>9s} {'seconds':>10s} {'speedup':>8s}")
    for label, call in cases.items():
        results = {name: _best(lambda: call(mod), args.repeat) for name, mod in sorted(backends.items())}
        ref = results["python"][0]
        for name, (secs, _) in results.items():
            print(f"{label:45s} {name:>9s} {secs:10.4f} {ref / secs:7.1f}x")
        if "compiled" in results:
            same = np.array_equal(results["compiled"][1], results["python"][1])
            print(f"{'':45s} outputs identical: {same}")


if __name__ == "__main__":
    main()
