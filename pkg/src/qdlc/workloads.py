"""Reference vectors used by the benchmarks and the acceptance suite.

Grids are x_i = i / 2^n on [0, 1); qubit 0 is the most significant index bit.
"""

from __future__ import annotations

import numpy as np

from .core import TargetVector, Task


def grid(n: int) -> np.ndarray:
    return np.arange(1 << n) / (1 << n)


def _state(values: np.ndarray) -> TargetVector:
    v = np.asarray(values, dtype=np.float64)
    return TargetVector.from_values(v / np.linalg.norm(v))


def gaussian_state(n: int, sigma: float = 0.5, center: float = 0.5) -> TargetVector:
    """Amplitudes proportional to exp(-(x - center)^2 / (2 sigma^2))."""
    x = grid(n)
    return _state(np.exp(-((x - center) ** 2) / (2 * sigma * sigma)))


def smooth_family(n: int) -> TargetVector:
    """Narrow Gaussian bump exp(-(x - 1/2)^2 / 0.08), the bond-dimension sweep family."""
    x = grid(n)
    return _state(np.exp(-((x - 0.5) ** 2) / 0.08))


def sparse_state(n: int, nonzeros: int, seed: int = 0) -> TargetVector:
    rng = np.random.default_rng(seed)
    a = np.zeros(1 << n)
    idx = rng.choice(1 << n, nonzeros, replace=False)
    a[idx] = rng.normal(size=nonzeros)
    return _state(a)


def split_state(n: int, nonzeros: int = 6, seed: int = 0) -> TargetVector:
    """First half sparse, second half a smooth cosine profile."""
    half = 1 << (n - 1)
    rng = np.random.default_rng(seed)
    a = np.zeros(1 << n)
    a[rng.choice(half, nonzeros, replace=False)] = rng.uniform(0.5, 1.0, nonzeros)
    x = np.arange(half) / half
    a[half:] = 1 + 0.5 * np.cos(2 * np.pi * x)
    return _state(a)


def cavity_profile(row_bits: int = 5, col_bits: int = 6) -> TargetVector:
    """Diagonal target: a lid-driven-cavity-like velocity field on a 2^row x 2^col grid.

    u(x, y) = 0.5 + 0.3 y^2 (1 - 5e-4 sin(pi x)); rows are the high index bits.
    """
    rows, cols = 1 << row_bits, 1 << col_bits
    yy, xx = np.divmod(np.arange(rows * cols), cols)
    x, y = xx / cols, yy / rows
    u = 0.5 + 0.3 * y * y * (1 - 0.05 * np.sin(np.pi * x) * 0.01)
    return TargetVector(row_bits + col_bits, u, Task.DIAGONAL)


def kl_state(n: int = 11) -> TargetVector:
    """Couette shear-flow velocity profile u = 0.2 + x, the sampling-study state.

    On a dyadic grid x is a weighted sum of the index bits, so its Walsh
    spectrum has n + 1 nonzero terms.
    """
    x = grid(n)
    return _state(0.2 + x)


def random_state(n: int, rng: np.random.Generator, complex_valued: bool = False) -> TargetVector:
    a = rng.normal(size=1 << n)
    if complex_valued:
        a = a + 1j * rng.normal(size=1 << n)
    return TargetVector.from_values(a / np.linalg.norm(a))


def random_diagonal(n: int, rng: np.random.Generator, smooth: bool = False) -> TargetVector:
    if smooth:
        x = grid(n)
        f = rng.uniform(0.2, 0.6) + rng.uniform(-0.3, 0.3) * np.sin(np.pi * x * rng.integers(1, 3))
        return TargetVector(n, f, Task.DIAGONAL)
    return TargetVector(n, rng.uniform(-1, 1, 1 << n), Task.DIAGONAL)
