"""Sparse loading: keep the D largest amplitudes, prepare them on an index
register, then write and erase the basis labels with table lookups."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import (
    CircuitIR,
    CostOverride,
    ErrorBudget,
    GateKind,
    GateRecord,
    Method,
    MethodPlan,
    TargetVector,
    Task,
)
from ..costmodel import DEFAULT_COSTS, CostConfig, estimate_circuit, qrom_breakdown
from .multiplexer import (
    EXACT_TOL,
    _check_state_target,
    cascade_levels,
    grover_rudolph_angles,
    qrom_layout,
    qrom_records,
)


def truncation_errors(weights: np.ndarray) -> np.ndarray:
    """errors[D-1] = distance to the renormalized vector keeping the D largest of ``weights``.

    ``weights`` must already be sorted in decreasing order and sum to one.
    Uses the tail mass directly so that keeping everything gives exactly 0.
    """
    tail = np.concatenate((np.cumsum(weights[::-1])[::-1][1:], [0.0]))
    tail = np.clip(tail, 0.0, 1.0)
    return np.sqrt(2.0 * tail / (1.0 + np.sqrt(1.0 - tail)))


def largest_first(values: np.ndarray) -> np.ndarray:
    """Indices sorted by decreasing magnitude, equal magnitudes by lower index."""
    return np.argsort(-np.abs(values), kind="stable")


@dataclass(frozen=True, eq=False)
class SparseTruncation:
    kept: np.ndarray  # basis indices, ascending
    coefficients: np.ndarray  # renormalized amplitudes at ``kept``
    error: float

    @property
    def sparsity(self) -> int:
        return int(self.kept.size)


def smallest_count(errors: np.ndarray, eps_a: float, allowed=None) -> int:
    """Smallest count D (1-based) with errors[D-1] <= eps_a, optionally restricted to ``allowed`` counts."""
    ok = errors <= eps_a + EXACT_TOL
    counts = np.arange(1, errors.size + 1)
    if allowed is not None:
        ok &= np.isin(counts, allowed)
    hits = np.flatnonzero(ok)
    return int(counts[hits[0]]) if hits.size else int(errors.size)


def sparse_truncation(amplitudes, eps_a: float) -> SparseTruncation:
    a = np.asarray(amplitudes, dtype=np.complex128)
    order = largest_first(a)
    errs = truncation_errors(np.abs(a[order]) ** 2)
    d = smallest_count(errs, eps_a)
    kept = np.sort(order[:d])
    coeff = a[kept] / np.linalg.norm(a[kept])
    err = float(errs[d - 1])
    return SparseTruncation(kept, coeff, 0.0 if err <= EXACT_TOL else err)


def distinguishing_bits(labels: np.ndarray, n: int) -> tuple[int, ...]:
    """Greedy set of qubits whose values already tell the labels apart."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 1 << n:
        return tuple(range(n))
    chosen: list[int] = []
    key = np.zeros(labels.size, dtype=np.int64)
    distinct = 1
    while distinct < labels.size:
        best, best_q = -1, None
        for q in range(n):
            if q in chosen:
                continue
            trial = (key << 1) | ((labels >> (n - 1 - q)) & 1)
            count = int(np.count_nonzero(np.bincount(trial)))
            if count > best:
                best, best_q = count, q
        chosen.append(best_q)
        key = (key << 1) | ((labels >> (n - 1 - best_q)) & 1)
        distinct = best
    return tuple(sorted(chosen))


def _project(labels: np.ndarray, bits: tuple[int, ...], n: int) -> np.ndarray:
    out = np.zeros(labels.size, dtype=np.int64)
    for q in bits:
        out = (out << 1) | ((labels >> (n - 1 - q)) & 1)
    return out


def sparse_loader(n: int, labels: np.ndarray, coeffs: np.ndarray, eps_p: float,
                  cfg: CostConfig = DEFAULT_COSTS, use_phase_gradient: bool = True,
                  lowered: bool = False) -> tuple[CircuitIR, dict]:
    """Circuit loading sum_i coeffs[i] |labels[i]> on n system qubits.

    Prepare coeffs on an index register, write labels into the system register,
    then erase the index using only the qubits that distinguish the labels.
    """
    labels = np.asarray(labels, dtype=np.int64)
    d = labels.size
    r = max(0, math.ceil(math.log2(d))) if d > 1 else 0
    index = tuple(range(n, n + r))
    gates: list[GateRecord] = []
    hp = {"D": d, "index_bits": r}
    anc = r
    if r:
        beta = np.zeros(1 << r, dtype=np.complex128)
        beta[:d] = coeffs
        angles = grover_rudolph_angles(TargetVector(r, beta, Task.STATE_PREP))
        levels = cascade_levels(angles, index)
        layout = qrom_layout(angles.rotation_count, n + r, eps_p, use_phase_gradient, len(levels))
        gates += qrom_records(levels, layout, cfg, lowered)
        anc += layout.ancillas
        hp.update(m=layout.bits, delta_g=layout.delta_g, rotations=angles.rotation_count)
    else:
        # one basis state: the label write prepares it; a phase needs one RZ on a fresh qubit
        phase = float(np.angle(coeffs[0]))
        hp.update(m=0, delta_g=0.0, rotations=0)
        if abs(phase) > EXACT_TOL:
            gates.append(GateRecord(GateKind.RZ, (0,), params=[-2 * phase]))
            hp.update(delta_g=eps_p, rotations=1)
    gates.append(GateRecord(GateKind.QROMLookup, index + tuple(range(n)), table=labels,
                            registers=(r, n)))
    if r:
        bits = distinguishing_bits(labels, n)
        table = np.zeros(1 << len(bits), dtype=np.int64)
        table[_project(labels, bits, n)] = np.arange(d)
        look, qa = qrom_breakdown(d, r, cfg)
        gates.append(GateRecord(GateKind.QROMLookup, bits + index, table=table,
                                registers=(len(bits), r),
                                cost=CostOverride(toffolis=look.toffolis, cnots=look.cnots, scratch=qa - r)))
        hp["identifier_bits"] = len(bits)
    return CircuitIR(n, anc, tuple(gates)), hp


def synth_sparse_sos(target: TargetVector, budget: ErrorBudget, cfg: CostConfig = DEFAULT_COSTS,
                     use_phase_gradient: bool = True, **_) -> tuple[MethodPlan, CircuitIR]:
    _check_state_target(target)
    trunc = sparse_truncation(target.amplitudes, budget.eps_a)
    ir, hp = sparse_loader(target.n_qubits, trunc.kept, trunc.coefficients, budget.eps_p, cfg,
                           use_phase_gradient)
    res = estimate_circuit(ir, cfg, hp["delta_g"] or 1.0)
    feasible = trunc.error <= budget.eps_a + EXACT_TOL
    plan = MethodPlan(Method.SparseSOS, hp, budget, res, feasible, trunc.error)
    return plan, ir
