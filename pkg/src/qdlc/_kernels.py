"""Hot loops with a numba implementation and a pure-numpy fallback.

Set ``QDLC_DISABLE_NUMBA=1`` to force the numpy path. Both paths are always
importable so tests can compare them directly.
"""

from __future__ import annotations

import os

import numpy as np


class _NumpyKernels:
    name = "numpy"

    @staticmethod
    def fwht(a: np.ndarray) -> np.ndarray:
        """Unnormalized Walsh-Hadamard transform in natural order."""
        out = np.array(a, dtype=np.float64)
        n = out.size
        h = 1
        while h < n:
            v = out.reshape(-1, 2, h)
            out = np.stack((v[:, 0] + v[:, 1], v[:, 0] - v[:, 1]), axis=1).reshape(-1)
            h *= 2
        return out

    @staticmethod
    def mux1q(state, nq, target, selectors, mats, cmask, cval):
        """Apply mats[s] to ``target`` where s is the selector value; in place."""
        tbit = 1 << (nq - 1 - target)
        idx = np.arange(state.size, dtype=np.int64)
        i0 = idx[(idx & tbit) == 0]
        if cmask:
            i0 = i0[(i0 & cmask) == cval]
        i1 = i0 | tbit
        sel = np.zeros(i0.size, dtype=np.int64)
        for q in selectors:
            sel = (sel << 1) | ((i0 >> (nq - 1 - q)) & 1)
        m = mats[sel]
        a0 = state[i0]
        a1 = state[i1]
        state[i0] = m[:, 0, 0] * a0 + m[:, 0, 1] * a1
        state[i1] = m[:, 1, 0] * a0 + m[:, 1, 1] * a1
        return state

    @staticmethod
    def scatter(state, dest):
        out = np.empty_like(state)
        out[dest] = state
        return out

    @staticmethod
    def walsh_prefix_errors(coeffs, ks, g, stop_tol):
        """Sup-norm error of the partial Walsh sums taken in the given order.

        Stops early at the first prefix whose error is <= stop_tol.
        """
        n = g.size
        j = np.arange(n, dtype=np.int64)
        scale = 1.0 / np.sqrt(n)
        rec = np.zeros(n)
        errs = np.empty(len(ks))
        for t in range(len(ks)):
            sign = 1.0 - 2.0 * (np.bitwise_count(j & ks[t]) & 1)
            rec += coeffs[t] * scale * sign
            errs[t] = np.max(np.abs(rec - g))
            if errs[t] <= stop_tol:
                return errs[: t + 1]
        return errs


def _build_numba():
    import numba

    jit = numba.njit(cache=True, nogil=True)

    @jit
    def fwht(a):
        out = a.astype(np.float64).copy()
        n = out.size
        h = 1
        while h < n:
            for i in range(0, n, 2 * h):
                for j in range(i, i + h):
                    x = out[j]
                    y = out[j + h]
                    out[j] = x + y
                    out[j + h] = x - y
            h *= 2
        return out

    @jit
    def mux1q(state, nq, target, selectors, mats, cmask, cval):
        tbit = np.int64(1) << (nq - 1 - target)
        ns = selectors.size
        for i0 in range(state.size):
            if i0 & tbit:
                continue
            if cmask and (i0 & cmask) != cval:
                continue
            s = 0
            for t in range(ns):
                s = (s << 1) | ((i0 >> (nq - 1 - selectors[t])) & 1)
            i1 = i0 | tbit
            a0 = state[i0]
            a1 = state[i1]
            state[i0] = mats[s, 0, 0] * a0 + mats[s, 0, 1] * a1
            state[i1] = mats[s, 1, 0] * a0 + mats[s, 1, 1] * a1
        return state

    @jit
    def scatter(state, dest):
        out = np.empty_like(state)
        for i in range(state.size):
            out[dest[i]] = state[i]
        return out

    @jit
    def _parity(x):
        p = 0
        while x:
            p ^= 1
            x &= x - 1
        return p

    @jit
    def walsh_prefix_errors(coeffs, ks, g, stop_tol):
        n = g.size
        scale = 1.0 / np.sqrt(n)
        rec = np.zeros(n)
        errs = np.empty(ks.size)
        for t in range(ks.size):
            c = coeffs[t] * scale
            k = ks[t]
            worst = 0.0
            for j in range(n):
                if _parity(j & k):
                    rec[j] -= c
                else:
                    rec[j] += c
                d = abs(rec[j] - g[j])
                if d > worst:
                    worst = d
            errs[t] = worst
            if worst <= stop_tol:
                return errs[: t + 1]
        return errs

    class _NumbaKernels:
        name = "numba"

    for f in (fwht, mux1q, scatter, walsh_prefix_errors):
        setattr(_NumbaKernels, f.__name__, staticmethod(f))
    return _NumbaKernels


numpy_kernels = _NumpyKernels
try:
    numba_kernels = _build_numba()
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_kernels = None

_disabled = os.environ.get("QDLC_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")
active = numpy_kernels if (_disabled or numba_kernels is None) else numba_kernels
