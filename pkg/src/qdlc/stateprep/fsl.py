"""Fourier-series loading: prepare a few Fourier coefficients, then apply an inverse QFT."""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from ..core import BlockPayload, CircuitIR, ErrorBudget, GateKind, GateRecord, Method, MethodPlan, TargetVector
from ..costmodel import DEFAULT_COSTS, CostConfig, estimate_circuit, qft_breakdown
from .multiplexer import EXACT_TOL, _check_state_target
from .sparse import largest_first, smallest_count, sparse_loader, truncation_errors


@dataclass(frozen=True, eq=False)
class FourierTruncation:
    frequencies: np.ndarray  # ascending
    coefficients: np.ndarray  # renormalized, aligned with ``frequencies``
    num_kept: int
    predicted_state: np.ndarray
    error: float

    @property
    def kept_coefficients(self) -> list[tuple[int, complex]]:
        return [(int(k), complex(c)) for k, c in zip(self.frequencies, self.coefficients)]


def fourier_coefficients(amplitudes) -> np.ndarray:
    """c with amplitudes = fft(c, norm="ortho"): the input of an inverse QFT."""
    return np.fft.ifft(np.asarray(amplitudes, dtype=np.complex128), norm="ortho")


@dataclass(frozen=True, eq=False)
class _Spectrum:
    coeffs: np.ndarray
    order: np.ndarray
    errors: np.ndarray
    truncations: dict


_cache: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def _spectrum(target: TargetVector) -> _Spectrum:
    if target not in _cache:
        c = fourier_coefficients(target.amplitudes)
        order = largest_first(c)
        w = np.abs(c[order]) ** 2
        _cache[target] = _Spectrum(c, order, truncation_errors(w / w.sum()), {})
    return _cache[target]


def truncate_fourier(target: TargetVector, num_kept: int) -> FourierTruncation:
    spec = _spectrum(target)
    if num_kept not in spec.truncations:
        spec.truncations[num_kept] = _truncate(spec, num_kept)
    return spec.truncations[num_kept]


def _truncate(spec: _Spectrum, num_kept: int) -> FourierTruncation:
    kept = np.sort(spec.order[:num_kept])
    padded = np.zeros_like(spec.coeffs)
    padded[kept] = spec.coeffs[kept]
    padded /= np.linalg.norm(padded)
    pred = np.fft.fft(padded, norm="ortho")
    err = float(spec.errors[num_kept - 1])
    return FourierTruncation(kept, padded[kept], int(num_kept), pred, 0.0 if err <= EXACT_TOL else err)


def fourier_errors(target: TargetVector) -> np.ndarray:
    """Truncation error after keeping the d largest coefficients, for d = 1..2^n."""
    return _spectrum(target).errors


def smallest_fourier_count(target: TargetVector, eps_a: float) -> int:
    n = target.n_qubits
    return smallest_count(fourier_errors(target), eps_a, allowed=[1 << k for k in range(n + 1)])


def synth_fsl(target: TargetVector, budget: ErrorBudget, cfg: CostConfig = DEFAULT_COSTS,
              use_phase_gradient: bool = True, **_) -> tuple[MethodPlan, CircuitIR]:
    _check_state_target(target)
    n = target.n_qubits
    d = smallest_fourier_count(target, budget.eps_a)
    trunc = truncate_fourier(target, d)
    loader, hp = sparse_loader(n, trunc.frequencies, trunc.coefficients, budget.eps_p, cfg,
                               use_phase_gradient)
    iqft = GateRecord(GateKind.BlockGate, tuple(range(n)), registers=(0, n),
                      block=BlockPayload("iqft"), cost=qft_breakdown(n, cfg))
    # the QFT's gradient register is charged as the block's scratch
    ir = CircuitIR(n, loader.num_ancilla_qubits, loader.gates + (iqft,))
    res = estimate_circuit(ir, cfg, hp["delta_g"] or 1.0)
    hp = dict(hp, d=d)
    feasible = trunc.error <= budget.eps_a + EXACT_TOL
    return MethodPlan(Method.FSL, hp, budget, res, feasible, trunc.error), ir
