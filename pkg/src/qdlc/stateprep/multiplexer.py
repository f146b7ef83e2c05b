"""Multiplexer-cascade state preparation: Grover-Rudolph angles, the plain
rotation cascade, and the QROM-driven variants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import (
    CircuitIR,
    CostOverride,
    DomainError,
    ErrorBudget,
    GateKind,
    GateRecord,
    Method,
    MethodPlan,
    TargetVector,
    Task,
)
from ..costmodel import (
    DEFAULT_COSTS,
    CostConfig,
    adder_toffolis,
    estimate_circuit,
    qrom_breakdown,
    t_count_for_rotation,
)

EXACT_TOL = 1e-12


def solve_mottonen(n: int, eps_p: float) -> float:
    return rotation_tolerance((1 << n) - 1, eps_p)


def rotation_tolerance(num_rotations: int, eps_p: float) -> float:
    """Per-rotation tolerance when errors of ``num_rotations`` gates add in quadrature."""
    if eps_p <= 0:
        raise DomainError("eps_p must be positive")
    return eps_p / math.sqrt(max(num_rotations, 1))


def angle_bits(num_rotations: int, eps_p: float) -> int:
    """Smallest m >= 1 with pi * 2^-m * sqrt(num_rotations) <= eps_p."""
    if eps_p <= 0:
        raise DomainError("eps_p must be positive")
    root = math.sqrt(max(num_rotations, 1))

    def ok(m: int) -> bool:
        return math.ldexp(math.pi, -m) * root <= eps_p

    m = max(1, math.ceil(math.log2(math.pi * root / eps_p)))
    while m > 1 and ok(m - 1):
        m -= 1
    while not ok(m):
        m += 1
    return m


def solve_qrom_bits(n: int, eps_p: float) -> int:
    return angle_bits((1 << n) - 1, eps_p)


@dataclass(frozen=True, eq=False)
class GroverRudolphAngles:
    ry_levels: tuple[np.ndarray, ...]
    rz_levels: tuple[np.ndarray, ...] | None = None
    global_phase: float = 0.0

    @property
    def rotation_count(self) -> int:
        r = sum(a.size for a in self.ry_levels)
        if self.rz_levels is not None:
            r += sum(a.size for a in self.rz_levels) + 1
        return r


def grover_rudolph_angles(target: TargetVector) -> GroverRudolphAngles:
    a = np.asarray(target.amplitudes, dtype=np.complex128)
    n = target.n_qubits
    real = not np.any(a.imag)
    p = np.abs(a) ** 2
    ry = []
    for k in range(n):
        if real and k == n - 1:
            pairs = a.real.reshape(-1, 2)
            ry.append(2 * np.arctan2(pairs[:, 1], pairs[:, 0]))
            continue
        mass = p.reshape(1 << k, 2, -1).sum(axis=2)
        ry.append(2 * np.arctan2(np.sqrt(mass[:, 1]), np.sqrt(mass[:, 0])))
    if real:
        return GroverRudolphAngles(tuple(ry))
    psi = np.where(np.abs(a) > 0, np.angle(a), 0.0)
    rz = [None] * n
    for k in range(n - 1, -1, -1):
        pairs = psi.reshape(-1, 2)
        rz[k] = pairs[:, 1] - pairs[:, 0]
        psi = pairs.mean(axis=1)
    return GroverRudolphAngles(tuple(ry), tuple(rz), float(psi[0]))


@dataclass(frozen=True, eq=False)
class Level:
    """One uniformly controlled rotation: 2^len(selectors) angles on ``target``."""

    kind: GateKind  # RY or RZ
    selectors: tuple[int, ...]
    target: int
    angles: np.ndarray


def cascade_levels(angles: GroverRudolphAngles, qubits) -> list[Level]:
    qubits = list(qubits)
    levels = []
    if angles.rz_levels is not None and angles.global_phase:
        # RZ on a qubit still in |0> contributes exactly a global phase
        levels.append(Level(GateKind.RZ, (), qubits[0], np.array([-2 * angles.global_phase])))
    for k, th in enumerate(angles.ry_levels):
        levels.append(Level(GateKind.RY, tuple(qubits[:k]), qubits[k], th))
    if angles.rz_levels is not None:
        for k, th in enumerate(angles.rz_levels):
            levels.append(Level(GateKind.RZ, tuple(qubits[:k]), qubits[k], th))
    return levels


def rotation_records(levels: list[Level]) -> list[GateRecord]:
    out = []
    for lv in levels:
        if not lv.selectors:
            out.append(GateRecord(lv.kind, (lv.target,), params=lv.angles[:1]))
        else:
            kind = GateKind.MultiplexedRY if lv.kind is GateKind.RY else GateKind.MultiplexedRZ
            out.append(GateRecord(kind, lv.selectors + (lv.target,), params=lv.angles,
                                  registers=(len(lv.selectors), 1)))
    return out


# ------------------------------------------------------------ QROM variants

@dataclass(frozen=True)
class QromLayout:
    """Where the angle register and phase-gradient register live, and how rotations are applied."""

    bits: int
    angle_reg: tuple[int, ...]
    gradient_reg: tuple[int, ...]
    phase_gradient: bool = True
    delta_g: float = 0.0  # tolerance of the controlled rotations (controlled-rotation variant)

    @property
    def ancillas(self) -> int:
        return len(self.angle_reg) + len(self.gradient_reg)


def qrom_level_cost(num_selectors: int, layout: QromLayout, cfg: CostConfig = DEFAULT_COSTS) -> CostOverride:
    """Lookup, rotation stage, and uncompute lookup for one multiplexer level."""
    m = layout.bits
    look, anc = qrom_breakdown(1 << num_selectors, m, cfg)
    look = CostOverride(toffolis=look.toffolis, cnots=look.cnots, scratch=anc - m)
    if layout.phase_gradient:
        stage = CostOverride(toffolis=adder_toffolis(m, cfg), cnots=8 * m)
    else:
        t = t_count_for_rotation(layout.delta_g, cfg)
        stage = CostOverride(rotations=2 * m, rotation_t=2 * m * t, cnots=2 * m)
    return look + look + stage


def _angle_table(lv: Level, m: int) -> np.ndarray:
    """Angles rounded to m-bit fractions of the rotation period 4*pi."""
    frac = np.mod(lv.angles, 4 * np.pi) / (4 * np.pi)
    return np.mod(np.rint(frac * (1 << m)).astype(np.int64), 1 << m)


def qrom_records(levels: list[Level], layout: QromLayout, cfg: CostConfig = DEFAULT_COSTS,
                 lowered: bool = False) -> list[GateRecord]:
    """Semantic form: each level stays one exact multiplexer carrying the QROM cost.

    Lowered form: explicit lookup of m-bit angles, rotation stage, and uncompute,
    so the simulator sees the truncation error.
    """
    if not lowered:
        out = []
        for lv in levels:
            kind = GateKind.MultiplexedRY if lv.kind is GateKind.RY else GateKind.MultiplexedRZ
            out.append(GateRecord(kind, lv.selectors + (lv.target,), params=lv.angles,
                                  registers=(len(lv.selectors), 1),
                                  cost=qrom_level_cost(len(lv.selectors), layout, cfg)))
        return out
    m = layout.bits
    areg = layout.angle_reg
    out = []
    for lv in levels:
        s = len(lv.selectors)
        look = GateRecord(GateKind.QROMLookup, lv.selectors + areg, table=_angle_table(lv, m),
                          registers=(s, m))
        out.append(look)
        t = lv.target
        basis_in, basis_out = [], []
        if lv.kind is GateKind.RY:
            # RY(a) = S H RZ(a) H S^dagger
            basis_in = [GateRecord(GateKind.S, (t,))] * 3 + [GateRecord(GateKind.H, (t,))]
            basis_out = [GateRecord(GateKind.H, (t,)), GateRecord(GateKind.S, (t,))]
        if layout.phase_gradient:
            out += basis_in
            out.append(GateRecord(GateKind.PhaseAdder, (t,) + areg + layout.gradient_reg,
                                  registers=(1, m, m)))
            out += basis_out
        else:
            rot = GateKind.RY if lv.kind is GateKind.RY else GateKind.RZ
            for i, q in enumerate(areg):
                ang = 4 * math.pi * math.ldexp(1.0, -(i + 1))
                out.append(GateRecord(rot, (t,), ((q, True),), params=[ang]))
        out.append(look)
    return out


# ------------------------------------------------------------ synthesizers

def _check_state_target(target: TargetVector) -> None:
    if target.task is not Task.STATE_PREP:
        raise DomainError("state preparation needs a state-prep target")
    if target.n_qubits < 1:
        raise DomainError("state preparation needs at least one qubit")


def synth_mottonen(target: TargetVector, budget: ErrorBudget, cfg: CostConfig = DEFAULT_COSTS,
                   **_) -> tuple[MethodPlan, CircuitIR]:
    _check_state_target(target)
    angles = grover_rudolph_angles(target)
    levels = cascade_levels(angles, range(target.n_qubits))
    ir = CircuitIR(target.n_qubits, 0, tuple(rotation_records(levels)))
    r = angles.rotation_count
    delta = solve_mottonen(target.n_qubits, budget.eps_p) if angles.rz_levels is None \
        else rotation_tolerance(r, budget.eps_p)
    res = estimate_circuit(ir, cfg, delta)
    plan = MethodPlan(Method.Mottonen, {"delta_g": delta, "rotations": r}, budget, res, True, 0.0)
    return plan, ir


def qrom_layout(num_rotations: int, first_ancilla: int, eps_p: float, phase_gradient: bool,
                num_levels: int) -> QromLayout:
    if phase_gradient:
        m = angle_bits(num_rotations, eps_p)
        return QromLayout(m, tuple(range(first_ancilla, first_ancilla + m)),
                          tuple(range(first_ancilla + m, first_ancilla + 2 * m)), True, 0.0)
    # half the budget to angle truncation, half to synthesizing the controlled rotations
    m = angle_bits(num_rotations, eps_p / 2)
    delta = rotation_tolerance(2 * m * num_levels, eps_p / 2)
    return QromLayout(m, tuple(range(first_ancilla, first_ancilla + m)), (), False, delta)


def synth_qrom_stateprep(target: TargetVector, budget: ErrorBudget, use_phase_gradient: bool = True,
                         cfg: CostConfig = DEFAULT_COSTS, lowered: bool = False,
                         bits: int | None = None, **_) -> tuple[MethodPlan, CircuitIR]:
    _check_state_target(target)
    n = target.n_qubits
    angles = grover_rudolph_angles(target)
    levels = cascade_levels(angles, range(n))
    layout = qrom_layout(angles.rotation_count, n, budget.eps_p, use_phase_gradient, len(levels))
    if bits is not None:
        m = int(bits)
        layout = QromLayout(m, tuple(range(n, n + m)),
                            tuple(range(n + m, n + 2 * m)) if use_phase_gradient else (),
                            use_phase_gradient, layout.delta_g)
    ir = CircuitIR(n, layout.ancillas, tuple(qrom_records(levels, layout, cfg, lowered)))
    res = estimate_circuit(ir, cfg, layout.delta_g or 1.0)
    hp = {"m": layout.bits, "phase_gradient": use_phase_gradient, "delta_g": layout.delta_g,
          "rotations": angles.rotation_count,
          "truncation_bound": math.ldexp(math.pi, -layout.bits) * math.sqrt(angles.rotation_count)}
    return MethodPlan(Method.QromStatePrep, hp, budget, res, True, 0.0), ir
