"""Matrix-product-state loading with a bounded bond dimension."""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from ..core import (
    BlockPayload,
    CircuitIR,
    CostOverride,
    DomainError,
    ErrorBudget,
    GateKind,
    GateRecord,
    Method,
    MethodPlan,
    TargetVector,
)
from ..costmodel import DEFAULT_COSTS, CostConfig, block_cnots, estimate_circuit, t_count_for_rotation
from .multiplexer import EXACT_TOL, _check_state_target

# singular values below this fraction of the largest are treated as zero rank
RANK_TOL = 1e-13
EMIT_QUBIT_LIMIT = 24


@dataclass(frozen=True, eq=False)
class MpsFactorization:
    """tensors[k] has shape (chi_{k+1}, 2, chi_k): right bond, physical bit, left bond.

    Site k+1 is qubit k; chi_0 = chi_n = 1. The last tensor holds the
    normalized remainder, so every tensor is an isometry from (bit, left) to right.
    """

    tensors: tuple[np.ndarray, ...]
    bond_dims: tuple[int, ...]  # chi_1 .. chi_{n-1}
    predicted_state: np.ndarray
    error: float

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def block_bonds(self) -> list[int]:
        """Largest bond touched by each site's block."""
        dims = (1,) + self.bond_dims + (1,)
        return [max(dims[k], dims[k + 1]) for k in range(len(self.tensors))]


def mps_compress(target: TargetVector, chi_max: int) -> MpsFactorization:
    if chi_max < 1:
        raise DomainError("chi_max must be at least 1")
    a = np.asarray(target.amplitudes, dtype=np.complex128)
    n = target.n_qubits
    tensors = []
    bonds = []
    rest = a.reshape(1, -1)
    left = 1
    for _ in range(n - 1):
        u, s, vh = np.linalg.svd(rest.reshape(2 * left, -1), full_matrices=False)
        rank = int(np.count_nonzero(s > RANK_TOL * s[0])) if s[0] > 0 else 1
        c = max(1, min(chi_max, rank))
        # rows of u are (left, bit); store as (right, bit, left)
        tensors.append(u[:, :c].reshape(left, 2, c).transpose(2, 1, 0).copy())
        rest = s[:c, None] * vh[:c]
        bonds.append(c)
        left = c
    rest = rest.reshape(left, 2)
    rest = rest / np.linalg.norm(rest)
    tensors.append(rest.reshape(left, 2, 1).transpose(2, 1, 0).copy())
    pred = contract(tensors)
    err = float(np.linalg.norm(a - pred))
    return MpsFactorization(tuple(tensors), tuple(bonds), pred, 0.0 if err <= EXACT_TOL else err)


def contract(tensors) -> np.ndarray:
    cur = np.ones((1, 1), dtype=np.complex128)  # (prefix basis index, bond)
    for t in tensors:
        cur = np.einsum("pl,rbl->pbr", cur, t).reshape(-1, t.shape[0])
    out = cur.reshape(-1)
    return out / np.linalg.norm(out)


def solve_mps_delta(bond_dims, eps_p: float) -> float:
    """Largest double strictly below eps_p / sqrt(4 * sum chi^2)."""
    dims = list(bond_dims)
    if not dims:
        raise DomainError("need at least one bond dimension")
    if eps_p <= 0:
        raise DomainError("eps_p must be positive")
    bound = eps_p / math.sqrt(4 * sum(int(c) ** 2 for c in dims))
    return float(np.nextafter(bound, 0.0))


def complete_unitary(cols: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a unitary, adding standard basis vectors in order."""
    dim, k = cols.shape
    basis = [cols[:, i] for i in range(k)]
    for e in range(dim):
        if len(basis) == dim:
            break
        v = np.zeros(dim, dtype=np.complex128)
        v[e] = 1.0
        for _ in range(2):
            for b in basis:
                v = v - np.vdot(b, v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            basis.append(v / nv)
    return np.column_stack(basis)


def site_unitary(tensor: np.ndarray, r: int) -> np.ndarray:
    """Unitary on (site qubit, r bond qubits) sending |0, right> to sum tensor[right, b, left] |b, left>."""
    right, _, left = tensor.shape
    dim = 2 << r
    cols = np.zeros((dim, right), dtype=np.complex128)
    for b in (0, 1):
        cols[b << r: (b << r) + left, :] = tensor[:, b, :].T
    return complete_unitary(cols)


def _block_cost(m: int, delta: float, cfg: CostConfig) -> CostOverride:
    rot = 4 ** m
    return CostOverride(rotations=rot, rotation_t=rot * t_count_for_rotation(delta, cfg), cnots=block_cnots(m))


def mps_circuit(fact: MpsFactorization, emit: bool = True, delta: float | None = None,
                cfg: CostConfig = DEFAULT_COSTS) -> CircuitIR:
    """Blocks for sites n..1; the bond register sits after the system qubits, value in its low bits."""
    n = len(fact.tensors)
    bond_bits = max(0, math.ceil(math.log2(fact.max_bond)))
    bond = tuple(range(n, n + bond_bits))
    gates = []
    for k in range(n - 1, -1, -1):
        t = fact.tensors[k]
        r = math.ceil(math.log2(max(t.shape[0], t.shape[2])))
        qubits = (k,) + bond[bond_bits - r:]
        if emit:
            payload = BlockPayload(f"mps-site-{k}", site_unitary(t, r))
            gates.append(GateRecord(GateKind.BlockGate, qubits, registers=(0, r + 1), block=payload))
        else:
            gates.append(GateRecord(GateKind.BlockGate, qubits, registers=(0, r + 1),
                                    block=BlockPayload(f"mps-site-{k}"),
                                    cost=_block_cost(r + 1, delta, cfg)))
    return CircuitIR(n, bond_bits, tuple(gates))


_cache: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def cached_compress(target: TargetVector, chi: int) -> MpsFactorization:
    per = _cache.setdefault(target, {})
    if chi not in per:
        per[chi] = mps_compress(target, chi)
    return per[chi]


def smallest_bond(target: TargetVector, eps_a: float) -> MpsFactorization:
    """Binary search over powers of two for the smallest chi meeting eps_a."""
    top = target.n_qubits // 2
    lo, hi = 0, top
    best = cached_compress(target, 1 << top)
    while lo <= hi:
        mid = (lo + hi) // 2
        f = cached_compress(target, 1 << mid)
        if f.error <= eps_a + EXACT_TOL:
            best = f
            hi = mid - 1
        else:
            lo = mid + 1
    return best


def synth_mps(target: TargetVector, budget: ErrorBudget, cfg: CostConfig = DEFAULT_COSTS,
              estimate_only: bool = False, **_) -> tuple[MethodPlan, CircuitIR]:
    _check_state_target(target)
    fact = smallest_bond(target, budget.eps_a)
    delta = solve_mps_delta(fact.block_bonds(), budget.eps_p)
    emit = not estimate_only and target.n_qubits + math.ceil(math.log2(fact.max_bond)) <= EMIT_QUBIT_LIMIT
    ir = mps_circuit(fact, emit, delta, cfg)
    res = estimate_circuit(ir, cfg, delta)
    chi = 1 << math.ceil(math.log2(fact.max_bond))
    hp = {"chi": chi, "bond_dims": list(fact.bond_dims), "delta_g": delta}
    feasible = fact.error <= budget.eps_a + EXACT_TOL
    return MethodPlan(Method.MPS, hp, budget, res, feasible, fact.error), ir
