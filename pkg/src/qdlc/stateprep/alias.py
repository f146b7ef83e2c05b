"""Alias-sampling coefficient loader.

Produces sum_i sqrt(p_i) |i> |garbage_i>, so only the index-register
marginal is meaningful. Suited to the Prep step of an LCU, not to general
state preparation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import (
    CircuitIR,
    DomainError,
    ErrorBudget,
    GateKind,
    GateRecord,
    Method,
    MethodPlan,
    TargetVector,
    UnsupportedTargetError,
)
from ..costmodel import DEFAULT_COSTS, CostConfig, estimate_circuit
from .multiplexer import _check_state_target


@dataclass(frozen=True, eq=False)
class AliasTable:
    thresholds: np.ndarray  # t_i in 0..2^mu, blocks kept at i
    destinations: np.ndarray  # d_i, receiver of i's other 2^mu - t_i blocks
    mu: int

    @property
    def size(self) -> int:
        return int(self.thresholds.size)

    def reconstructed(self) -> np.ndarray:
        full = 1 << self.mu
        got = self.thresholds.astype(np.float64).copy()
        np.add.at(got, self.destinations, full - self.thresholds)
        return got / (self.size * full)


def quantize(probabilities: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing to ``total``, each within one of p_i * total (largest remainder)."""
    raw = probabilities * total
    base = np.floor(raw).astype(np.int64)
    short = total - int(base.sum())
    if short > 0:
        frac = raw - base
        base[np.argsort(-frac, kind="stable")[:short]] += 1
    elif short < 0:
        frac = raw - base
        base[np.argsort(frac, kind="stable")[: -short]] -= 1
    return base


def build_alias_table(probabilities, mu: int) -> AliasTable:
    p = np.asarray(probabilities, dtype=np.float64)
    if mu < 1:
        raise DomainError("mu must be at least 1")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise DomainError("probabilities must be nonnegative and sum to 1")
    size = p.size
    full = 1 << mu
    counts = quantize(p, size * full)
    thresh = np.full(size, full, dtype=np.int64)
    dest = np.arange(size, dtype=np.int64)
    small = [i for i in range(size) if counts[i] < full]
    large = [i for i in range(size) if counts[i] > full]
    while small:
        s = small.pop()
        if not large:
            raise AssertionError("alias construction lost track of excess mass")
        g = large[-1]
        thresh[s] = counts[s]
        dest[s] = g
        counts[g] -= full - counts[s]
        if counts[g] <= full:
            large.pop()
            if counts[g] < full:
                small.append(g)
    return AliasTable(thresh, dest, mu)


def solve_alias_mu(eps_p: float) -> int:
    """Smallest mu >= 1 with 2^-mu <= eps_p."""
    if eps_p <= 0:
        raise DomainError("eps_p must be positive")
    mu = max(1, math.ceil(-math.log2(eps_p)))
    while mu > 1 and math.ldexp(1.0, -(mu - 1)) <= eps_p:
        mu -= 1
    while math.ldexp(1.0, -mu) > eps_p:
        mu += 1
    return mu


def alias_probabilities(target: TargetVector) -> np.ndarray:
    a = np.asarray(target.amplitudes)
    if np.any(a.imag != 0) or np.any(a.real < 0):
        raise UnsupportedTargetError("alias loading needs nonnegative real amplitudes")
    p = a.real ** 2
    return p / p.sum()


def alias_circuit(table: AliasTable, n: int) -> CircuitIR:
    mu = table.mu
    index = tuple(range(n))
    block = tuple(range(n, n + mu))
    dest = tuple(range(n + mu, 2 * n + mu))
    thresh = tuple(range(2 * n + mu, 2 * n + 2 * mu + 1))
    flag = 2 * n + 2 * mu + 1
    gates = [GateRecord(GateKind.H, (q,)) for q in index + block]
    entries = (table.destinations << (mu + 1)) | table.thresholds
    gates.append(GateRecord(GateKind.QROMLookup, index + dest + thresh, table=entries,
                            registers=(n, n + mu + 1)))
    gates.append(GateRecord(GateKind.Comparator, block + thresh + (flag,), registers=(mu, mu + 1, 1)))
    gates.append(GateRecord(GateKind.CSwap, index + dest, ((flag, True),), registers=(n, n)))
    return CircuitIR(n, 2 * mu + n + 2, tuple(gates), {"garbage": True})


def synth_alias(target: TargetVector, budget: ErrorBudget, cfg: CostConfig = DEFAULT_COSTS,
                **_) -> tuple[MethodPlan, CircuitIR]:
    _check_state_target(target)
    p = alias_probabilities(target)
    mu = solve_alias_mu(budget.eps_p)
    table = build_alias_table(p, mu)
    ir = alias_circuit(table, target.n_qubits)
    res = estimate_circuit(ir, cfg)
    marginal = float(np.linalg.norm(table.reconstructed() - p))
    hp = {"mu": mu, "marginal_error": marginal}
    notes = "index register is entangled with a garbage register; valid as an LCU Prep only"
    return MethodPlan(Method.AliasSampling, hp, budget, res, True, 0.0, notes), ir
