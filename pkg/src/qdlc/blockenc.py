"""Block encodings built from diagonal encoders: banded matrices with a single
shared adder, and the kinetic-energy operator as an LCU of three axis terms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CircuitIR,
    DomainError,
    ErrorBudget,
    GateKind,
    GateRecord,
    MethodPlan,
    NormViolationError,
    TargetVector,
    Task,
    ValidationError,
)
from .costmodel import DEFAULT_COSTS, CostConfig, estimate_circuit, freeze_rotations
from .diagenc import Embedding, synth_diag_qsp
from .stateprep.multiplexer import cascade_levels, grover_rudolph_angles, rotation_records, solve_mottonen

PREP_SHARE = 0.1


@dataclass(frozen=True, eq=False)
class Diagonal:
    shift: int
    weight: float
    entries: np.ndarray


@dataclass(frozen=True, eq=False)
class DDiagonalSpec:
    n_qubits: int
    diagonals: tuple[Diagonal, ...]

    def __post_init__(self):
        n = self.n_qubits
        if n < 1 or not self.diagonals:
            raise ValidationError("need at least one qubit and one diagonal")
        diags = []
        for d in self.diagonals:
            e = np.asarray(d.entries, dtype=np.float64)
            if abs(int(d.shift)) >= 1 << n:
                raise DomainError(f"shift {d.shift} does not fit a {n}-qubit register")
            if not d.weight > 0:
                raise DomainError("weights must be positive; absorb signs into the entries")
            if e.shape != (1 << n,):
                raise ValidationError(f"each diagonal needs {1 << n} entries")
            if np.max(np.abs(e)) > 1 + 1e-12:
                raise NormViolationError("diagonal entries must lie in [-1, 1]")
            diags.append(Diagonal(int(d.shift), float(d.weight), e))
        object.__setattr__(self, "diagonals", tuple(diags))

    @property
    def lcu_norm(self) -> float:
        return float(sum(d.weight for d in self.diagonals))

    @classmethod
    def from_json(cls, d: dict) -> "DDiagonalSpec":
        return cls(int(d["n_qubits"]), tuple(Diagonal(int(x["shift"]), float(x["weight"]), x["entries"])
                                             for x in d["diagonals"]))

    def to_json(self) -> dict:
        return {"n_qubits": self.n_qubits,
                "diagonals": [{"shift": d.shift, "weight": d.weight, "entries": d.entries.tolist()}
                              for d in self.diagonals]}


def ddiagonal_matrix(spec: DDiagonalSpec) -> np.ndarray:
    """sum_i alpha_i D_i / lambda with D_i |j> = c_ij |j + k_i>; entries shifted off the edge are dropped."""
    dim = 1 << spec.n_qubits
    out = np.zeros((dim, dim))
    j = np.arange(dim)
    for d in spec.diagonals:
        row = j + d.shift
        ok = (row >= 0) & (row < dim)
        out[row[ok], j[ok]] += d.weight * d.entries[ok]
    return out / spec.lcu_norm


def unified_entries(spec: DDiagonalSpec, index_bits: int) -> np.ndarray:
    """E[i, j'] = c_{i, j' - k_i}, the entries seen after the shift was added; zero where it wrapped."""
    dim = 1 << spec.n_qubits
    out = np.zeros((1 << index_bits, dim))
    jp = np.arange(dim)
    for i, d in enumerate(spec.diagonals):
        src = jp - d.shift
        ok = (src >= 0) & (src < dim)
        out[i, ok] = d.entries[src[ok]]
    return out.reshape(-1)


def adder_count(spec: DDiagonalSpec, baseline: bool = False) -> int:
    """Adders in the emitted circuit (always 1), or in the one-adder-per-diagonal baseline."""
    return len(spec.diagonals) if baseline else 1


def _index_controls(index: tuple[int, ...], i: int) -> tuple[tuple[int, bool], ...]:
    r = len(index)
    return tuple((q, bool((i >> (r - 1 - b)) & 1)) for b, q in enumerate(index))


def _prep_records(weights: np.ndarray, qubits: tuple[int, ...], delta: float, cfg: CostConfig):
    amps = np.zeros(1 << len(qubits))
    amps[: weights.size] = np.sqrt(weights / weights.sum())
    t = TargetVector(len(qubits), amps, Task.STATE_PREP)
    prep = CircuitIR(len(qubits), 0, tuple(rotation_records(cascade_levels(grover_rudolph_angles(t), qubits))))
    return list(freeze_rotations(prep, delta, cfg).gates)


def _inverse(records: list[GateRecord]) -> list[GateRecord]:
    """Adjoint of a rotation cascade: reverse order, negate angles."""
    out = []
    for g in reversed(records):
        out.append(GateRecord(g.kind, g.targets, g.controls, params=-np.asarray(g.params),
                              registers=g.registers, cost=g.cost))
    return out


def _embed(ir: CircuitIR, mapping: list[int], delta: float, cfg: CostConfig) -> list[GateRecord]:
    return [g.remapped(mapping) for g in freeze_rotations(ir, delta, cfg).gates]


def synth_ddiagonal(spec: DDiagonalSpec, budget: ErrorBudget, cfg: CostConfig = DEFAULT_COSTS,
                    diagonal_methods=None) -> tuple[MethodPlan, CircuitIR]:
    """Prep, load shifts, one in-place adder, unload shifts, diagonal encoder, Prep^dagger.

    Layout: system (n) | index (r) | shift (n) | encoder ancillas.
    """
    from .planner import PlanRequest, sweep, synthesize

    n = spec.n_qubits
    d = len(spec.diagonals)
    r = math.ceil(math.log2(d)) if d > 1 else 0
    system = tuple(range(n))
    index = tuple(range(n, n + r))
    shift = tuple(range(n + r, 2 * n + r))
    base = 2 * n + r
    mask = (1 << n) - 1

    prep_eps = PREP_SHARE * budget.eps_p
    enc_eps = budget.epsilon - prep_eps
    unified = TargetVector(r + n, unified_entries(spec, r), Task.DIAGONAL)
    report = sweep(PlanRequest(unified, enc_eps, methods=diagonal_methods, cost_config=cfg))
    enc_plan, enc_ir = synthesize(report.selected.method, unified, report.selected.budget, cfg)
    enc_delta = enc_plan.hyperparams.get("delta_g") or 1.0

    gates: list[GateRecord] = []
    prep = []
    if r:
        weights = np.array([x.weight for x in spec.diagonals])
        # Prep and its inverse share the prep budget
        prep = _prep_records(weights, index, solve_mottonen(r, prep_eps / 2), cfg)
    gates += prep
    loads = []
    for i, x in enumerate(spec.diagonals):
        if x.shift % (1 << n):
            loads.append(GateRecord(GateKind.ConstantAdder, shift, _index_controls(index, i),
                                    table=[x.shift & mask]))
    gates += loads
    gates.append(GateRecord(GateKind.InPlaceAdder, shift + system, registers=(n, n)))
    gates += [GateRecord(GateKind.ConstantAdder, g.targets, g.controls, table=[(-int(g.table[0])) & mask])
              for g in loads]
    mapping = list(index + system) + [base + q for q in range(enc_ir.num_ancilla_qubits)]
    gates += _embed(enc_ir, mapping, enc_delta, cfg)
    gates += _inverse(prep)

    ir = CircuitIR(n, r + n + enc_ir.num_ancilla_qubits, tuple(gates), {"lambda": spec.lcu_norm, "s_d": 1.0})
    res = estimate_circuit(ir, cfg)
    hp = {"construction": "d-diagonal", "d": d, "lambda": spec.lcu_norm, "s_d": 1.0,
          "adders": adder_count(spec), "baseline_adders": adder_count(spec, baseline=True),
          "encoder": enc_plan.method.value, "encoder_hyperparams": enc_plan.hyperparams,
          "prep_delta_g": solve_mottonen(r, prep_eps / 2) if r else None}
    plan = MethodPlan(enc_plan.method, hp, budget, res, enc_plan.feasible, enc_plan.eps_a_predicted,
                      "block = sum_i alpha_i D_i / (lambda s_d)")
    return plan, ir


# ------------------------------------------------------------ kinetic operator

@dataclass(frozen=True)
class KineticSpec:
    qubits_per_axis: int
    omega: float

    def __post_init__(self):
        if self.qubits_per_axis < 1:
            raise ValidationError("need at least one qubit per axis")
        if not self.omega > 0:
            raise DomainError("cell volume must be positive")

    @property
    def prefactor(self) -> float:
        return 0.5 * (2 * math.pi / self.omega ** (1 / 3)) ** 2

    @property
    def subnormalization(self) -> float:
        """lambda_T: three unit-norm axis terms, each encoding (x/N)^2."""
        return 3 * self.prefactor * (1 << self.qubits_per_axis) ** 2

    @classmethod
    def from_json(cls, d: dict) -> "KineticSpec":
        return cls(int(d["qubits_per_axis"]), float(d["omega"]))

    def to_json(self) -> dict:
        return {"qubits_per_axis": self.qubits_per_axis, "omega": self.omega}


def kinetic_diagonal(spec: KineticSpec) -> np.ndarray:
    """prefactor (x^2 + y^2 + z^2) / lambda_T over the x|y|z grid, x most significant."""
    n = spec.qubits_per_axis
    g = np.arange(1 << n, dtype=np.float64)
    sq = g * g
    tot = sq[:, None, None] + sq[None, :, None] + sq[None, None, :]
    return spec.prefactor * tot.reshape(-1) / spec.subnormalization


def synth_kinetic(spec: KineticSpec, budget: ErrorBudget, cfg: CostConfig = DEFAULT_COSTS) -> tuple[MethodPlan, CircuitIR]:
    """LCU over three branches |00>, |01>, |10>; each applies the degree-2 QSP encoding of (x/N)^2 on one axis.

    Layout: x | y | z | branch (2) | QSP ancilla.
    """
    n = spec.qubits_per_axis
    peak = float(np.max(kinetic_diagonal(spec)))
    if peak > 1 + 1e-12:
        raise NormViolationError(f"encoded peak {peak} exceeds 1; raise lambda_T")
    branch = (3 * n, 3 * n + 1)
    anc = 3 * n + 2
    prep_eps = PREP_SHARE * budget.eps_p
    axis_budget = ErrorBudget(budget.epsilon - prep_eps, 1.0, budget.epsilon - prep_eps, 0.0)
    s = np.arange(1 << n) / (1 << n)
    axis_target = TargetVector(n, s * s, Task.DIAGONAL)
    qsp_plan, qsp_ir = synth_diag_qsp(axis_target, axis_budget, embedding=Embedding.Linear, cfg=cfg)
    qsp_delta = qsp_plan.hyperparams["delta_g"]

    prep = _prep_records(np.array([1.0, 1.0, 1.0]), branch, solve_mottonen(2, prep_eps / 2), cfg)
    gates = list(prep)
    for b in range(3):
        ctrl = _index_controls(branch, b)
        axis = tuple(range(b * n, (b + 1) * n))
        mapping = list(axis) + [anc]
        gates += [g.with_controls(ctrl) for g in _embed(qsp_ir, mapping, qsp_delta, cfg)]
    gates += _inverse(prep)
    lam = spec.subnormalization
    ir = CircuitIR(3 * n, 3, tuple(gates), {"lambda": lam})
    res = estimate_circuit(ir, cfg)
    hp = {"construction": "kinetic", "d": qsp_plan.hyperparams["d"], "lambda_T": lam,
          "prefactor": spec.prefactor, "delta_g": qsp_delta}
    plan = MethodPlan(qsp_plan.method, hp, budget, res, qsp_plan.feasible, qsp_plan.eps_a_predicted,
                      "block = prefactor diag(x^2 + y^2 + z^2) / lambda_T")
    return plan, ir
