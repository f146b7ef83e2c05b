"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeats 5] [--qubits 16]

Prints one line per kernel with the best wall time of each path and the
speedup. Outputs of both paths are compared before timing.
"""

import argparse
import time

import numpy as np

from qdlc import _kernels
from qdlc.diagenc import walsh_phases, walsh_transform
from qdlc.simulator import ry_matrix
from qdlc.workloads import cavity_profile


def best_time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(nq, rng):
    vec = rng.normal(size=1 << nq)
    state = (rng.normal(size=1 << nq) + 1j * rng.normal(size=1 << nq)).astype(np.complex128)
    state /= np.linalg.norm(state)
    selectors = np.arange(1, min(nq, 7), dtype=np.int64)
    mats = np.stack([ry_matrix(t) for t in rng.uniform(0, np.pi, 1 << selectors.size)]).astype(np.complex128)
    perm = rng.permutation(1 << nq).astype(np.int64)

    g = walsh_phases(np.asarray(cavity_profile().amplitudes.real))
    c = walsh_transform(g)
    ks = np.argsort(-np.abs(c), kind="stable").astype(np.int64)[:256]

    return {
        "fwht": lambda k: k.fwht(vec),
        "mux1q": lambda k: k.mux1q(state.copy(), nq, 0, selectors, mats, 0, 0),
        "scatter": lambda k: k.scatter(state, perm),
        "walsh_prefix_errors": lambda k: k.walsh_prefix_errors(c[ks], ks, g, -1.0),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--qubits", type=int, default=16)
    args = ap.parse_args()
    if _kernels.numba_kernels is None:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)
    fast, slow = _kernels.numba_kernels, _kernels.numpy_kernels
    print(f"{'kernel':<22}{'numpy s':>12}{'numba s':>12}{'speedup':>10}")
    for name, run in cases(args.qubits, rng).items():
        ref = run(slow)
        got = run(fast)  # also triggers compilation
        if not np.allclose(ref, got, atol=1e-12):
            raise SystemExit(f"{name}: paths disagree")
        t_np = best_time(lambda: run(slow), args.repeats)
        t_nb = best_time(lambda: run(fast), args.repeats)
        print(f"{name:<22}{t_np:>12.5f}{t_nb:>12.5f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
