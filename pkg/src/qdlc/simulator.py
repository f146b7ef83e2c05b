"""Dense statevector interpreter for CircuitIR, block extraction, verification
and the measurement-shot study.

Qubit 0 is the most significant bit of a basis index. Ancillas follow the
system register. Ancillas that no gate touches stay in |0> and are left out
of the simulated register.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import (
    CircuitIR,
    DimensionError,
    DomainError,
    GateKind,
    GateRecord,
    Method,
    MethodPlan,
    ResourceLimitError,
    TargetVector,
    Task,
    UnsupportedGateError,
    l2_distance,
    linf_distance,
    validate_target,
)

MAX_AMPLITUDES = 1 << 26
VERIFY_QUBIT_LIMIT = 16
BLOCK_QUBIT_LIMIT = 12
SIM_TOL = 1e-10
ROUNDOFF_PROBABILITY = 1e-28

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_S = np.array([[1, 0], [0, 1j]], dtype=np.complex128)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=np.complex128)


def _ry_stack(thetas: np.ndarray) -> np.ndarray:
    c, s = np.cos(thetas / 2), np.sin(thetas / 2)
    m = np.zeros((thetas.size, 2, 2), dtype=np.complex128)
    m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1] = c, -s, s, c
    return m


def _rz_stack(thetas: np.ndarray) -> np.ndarray:
    m = np.zeros((thetas.size, 2, 2), dtype=np.complex128)
    m[:, 0, 0] = np.exp(-0.5j * thetas)
    m[:, 1, 1] = np.exp(0.5j * thetas)
    return m


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.complex128)
        if a.shape != (1 << self.n_qubits,):
            raise DimensionError(f"expected {1 << self.n_qubits} amplitudes, got {a.shape}")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        a = np.zeros(1 << n_qubits, dtype=np.complex128)
        a[0] = 1.0
        return cls(n_qubits, a)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        a = np.zeros(1 << n_qubits, dtype=np.complex128)
        a[index] = 1.0
        return cls(n_qubits, a)


# ------------------------------------------------------------ index helpers

def _reg(idx: np.ndarray, nq: int, qs) -> np.ndarray:
    v = np.zeros_like(idx)
    for q in qs:
        v = (v << 1) | ((idx >> (nq - 1 - q)) & 1)
    return v


def _set_reg(idx: np.ndarray, nq: int, qs, val: np.ndarray) -> np.ndarray:
    w = len(qs)
    for pos, q in enumerate(qs):
        sh = nq - 1 - q
        bit = (val >> (w - 1 - pos)) & 1
        idx = (idx & ~(np.int64(1) << sh)) | (bit << sh)
    return idx


def _control_mask(controls, nq: int) -> tuple[int, int]:
    mask = val = 0
    for q, pol in controls:
        b = 1 << (nq - 1 - q)
        mask |= b
        if pol:
            val |= b
    return mask, val


_PERMUTATION_KINDS = frozenset({GateKind.SWAP, GateKind.QROMLookup, GateKind.InPlaceAdder,
                                GateKind.ConstantAdder, GateKind.Comparator, GateKind.CSwap})


def permuted_indices(g: GateRecord, idx: np.ndarray, nq: int) -> np.ndarray:
    """Image of each basis index under a classical-reversible gate."""
    k = g.kind
    t = g.targets
    if k is GateKind.SWAP:
        regs = (1, 1)
    else:
        regs = g.registers
    if k in (GateKind.SWAP, GateKind.CSwap):
        a = regs[0]
        x, y = _reg(idx, nq, t[:a]), _reg(idx, nq, t[a:])
        new = _set_reg(_set_reg(idx, nq, t[:a], y), nq, t[a:], x)
    elif k is GateKind.QROMLookup:
        a = regs[0]
        addr = _reg(idx, nq, t[:a])
        table = g.table if g.table is not None else np.zeros(0, dtype=np.int64)
        vals = np.zeros_like(idx)
        inside = addr < table.size
        vals[inside] = table[addr[inside]]
        vals &= (1 << regs[1]) - 1
        new = _set_reg(idx, nq, t[a:], _reg(idx, nq, t[a:]) ^ vals)
    elif k is GateKind.InPlaceAdder:
        a, b = regs
        s = (_reg(idx, nq, t[a:]) + _reg(idx, nq, t[:a])) & ((1 << b) - 1)
        new = _set_reg(idx, nq, t[a:], s)
    elif k is GateKind.ConstantAdder:
        b = len(t)
        s = (_reg(idx, nq, t) + int(g.table[0])) & ((1 << b) - 1)
        new = _set_reg(idx, nq, t, s)
    elif k is GateKind.Comparator:
        a, b, _ = regs
        x, y = _reg(idx, nq, t[:a]), _reg(idx, nq, t[a:a + b])
        flag = _reg(idx, nq, t[-1:]) ^ (x >= y).astype(np.int64)
        new = _set_reg(idx, nq, t[-1:], flag)
    else:
        raise UnsupportedGateError(f"{k.value} is not a basis permutation")
    mask, val = _control_mask(g.controls, nq)
    if mask:
        new = np.where((idx & mask) == val, new, idx)
    return new


def _one_qubit_stack(g: GateRecord) -> tuple[np.ndarray, tuple[int, ...], int, tuple]:
    """(matrices, selectors, target, controls) for gates acting as a 1-qubit multiplexer."""
    k = g.kind
    if k is GateKind.H:
        return _H[None], (), g.targets[0], g.controls
    if k in (GateKind.X, GateKind.CNOT):
        return _X[None], (), g.targets[0], g.controls
    if k is GateKind.S:
        return _S[None], (), g.targets[0], g.controls
    if k is GateKind.RY:
        return ry_matrix(g.params[0])[None], (), g.targets[0], g.controls
    if k in (GateKind.RZ, GateKind.ControlledRZ):
        return rz_matrix(g.params[0])[None], (), g.targets[0], g.controls
    if k in (GateKind.MultiplexedRY, GateKind.MultiplexedRZ):
        s = g.registers[0]
        if g.params is None:
            raise ResourceLimitError("multiplexer emitted without angles (estimate-only record)")
        mats = _ry_stack(g.params) if k is GateKind.MultiplexedRY else _rz_stack(g.params)
        return mats, g.targets[:s], g.targets[s], g.controls
    if k is GateKind.BlockGate and g.registers[1] == 1 and g.block.matrix is not None:
        s = g.registers[0]
        return g.block.matrix, g.targets[:s], g.targets[s], g.controls
    raise KeyError(k)


def _apply_block(state: np.ndarray, nq: int, g: GateRecord) -> np.ndarray:
    s, l = g.registers
    ctrl = [q for q, _ in g.controls]
    order = ctrl + list(g.targets)
    rest = [q for q in range(nq) if q not in order]
    perm = order + rest
    t = state.reshape((2,) * nq).transpose(perm)
    nc = len(ctrl)
    t = t.reshape(1 << nc, 1 << s, 1 << l, -1)
    cv = 0
    for q, pol in g.controls:
        cv = (cv << 1) | int(pol)
    sub = t[cv]
    label = g.block.label
    if g.block.matrix is not None:
        new = np.einsum("sij,sjr->sir", g.block.matrix, sub)
    elif label == "qft":
        new = np.fft.ifft(sub, axis=1, norm="ortho")
    elif label == "iqft":
        new = np.fft.fft(sub, axis=1, norm="ortho")
    else:
        raise UnsupportedGateError(f"BlockGate '{label}' has no simulable action")
    t = t.copy()
    t[cv] = new
    inv = np.argsort(perm)
    return np.ascontiguousarray(t.reshape((2,) * nq).transpose(inv)).reshape(-1)


def _apply_phase_adder(state: np.ndarray, nq: int, g: GateRecord) -> np.ndarray:
    s, a, _ = g.registers
    idx = np.arange(state.size, dtype=np.int64)
    val = _reg(idx, nq, g.targets[s:s + a]).astype(np.float64)
    sign = 1.0 - 2.0 * _reg(idx, nq, g.targets[:1]) if s else 1.0
    phase = np.exp(-1j * sign * 2 * np.pi * val / (1 << a))
    mask, cv = _control_mask(g.controls, nq)
    if mask:
        phase = np.where((idx & mask) == cv, phase, 1.0)
    return state * phase


def apply_gate(state: np.ndarray, nq: int, g: GateRecord, kernels=None) -> np.ndarray:
    """Apply one record to a flat state on ``nq`` qubits. May modify ``state`` in place."""
    kern = kernels or _kernels.active
    k = g.kind
    if k in _PERMUTATION_KINDS:
        dest = permuted_indices(g, np.arange(state.size, dtype=np.int64), nq)
        return kern.scatter(state, dest)
    if k is GateKind.PhaseAdder:
        return _apply_phase_adder(state, nq, g)
    try:
        mats, sel, target, controls = _one_qubit_stack(g)
    except KeyError:
        if k is GateKind.BlockGate:
            return _apply_block(state, nq, g)
        raise UnsupportedGateError(f"cannot simulate {k}") from None
    mask, val = _control_mask(controls, nq)
    return kern.mux1q(state, nq, target, np.asarray(sel, dtype=np.int64),
                      np.ascontiguousarray(mats, dtype=np.complex128), mask, val)


def active_qubits(ir: CircuitIR) -> list[int]:
    """System qubits plus every ancilla some gate acts on (phase-gradient catalysts excluded)."""
    used = set(range(ir.num_system_qubits))
    for g in ir.gates:
        if g.kind is GateKind.PhaseAdder:
            s, a, _ = g.registers
            used.update(g.targets[: s + a])
        else:
            used.update(g.targets)
        used.update(q for q, _ in g.controls)
    return sorted(used)


def _compact(ir: CircuitIR) -> tuple[int, list[GateRecord]]:
    act = active_qubits(ir)
    local = {q: i for i, q in enumerate(act)}
    gates = []
    for g in ir.gates:
        if g.kind is GateKind.PhaseAdder:
            s, a, b = g.registers
            mapping = {q: local[q] for q in g.targets[: s + a]}
            mapping.update({q: local.get(q, -1) for q in g.targets[s + a:]})
            mapping.update({q: local[q] for q, _ in g.controls})
        else:
            mapping = local
        gates.append(g.remapped(_Lookup(mapping)))
    return len(act), gates


class _Lookup:
    def __init__(self, d):
        self.d = d

    def __getitem__(self, q):
        return self.d[q]


def _guard(nq: int, max_qubits: int) -> None:
    if nq > max_qubits or (1 << nq) > MAX_AMPLITUDES:
        raise ResourceLimitError(f"{nq} simulated qubits exceed the limit of {min(max_qubits, 26)}")


def run(state: np.ndarray, nq: int, gates, kernels=None) -> np.ndarray:
    state = np.array(state, dtype=np.complex128)
    for g in gates:
        state = apply_gate(state, nq, g, kernels)
    return state


def apply(ir: CircuitIR, initial: StateVector, max_qubits: int = 26, kernels=None) -> StateVector:
    """Run the circuit on the full declared register."""
    ir.validate()
    if initial.n_qubits != ir.num_qubits:
        raise DimensionError(f"circuit has {ir.num_qubits} qubits, state has {initial.n_qubits}")
    _guard(ir.num_qubits, max_qubits)
    return StateVector(ir.num_qubits, run(initial.amplitudes, ir.num_qubits, ir.gates, kernels))


def prepared_state(ir: CircuitIR, max_qubits: int = 26, kernels=None) -> tuple[np.ndarray, float]:
    """System amplitudes with every ancilla in |0>, after running on |0...0>.

    Also returns the probability weight found outside the ancilla-zero subspace.
    """
    ir.validate()
    nq, gates = _compact(ir)
    _guard(nq, max_qubits)
    psi = np.zeros(1 << nq, dtype=np.complex128)
    psi[0] = 1.0
    psi = run(psi, nq, gates, kernels)
    na = nq - ir.num_system_qubits
    grid = psi.reshape(1 << ir.num_system_qubits, 1 << na)
    sys = grid[:, 0].copy()
    return sys, float(max(0.0, 1.0 - np.vdot(sys, sys).real))


def system_marginal(ir: CircuitIR, max_qubits: int = 26, kernels=None) -> np.ndarray:
    """Probability of each system basis state with all ancillas traced out."""
    ir.validate()
    nq, gates = _compact(ir)
    _guard(nq, max_qubits)
    psi = np.zeros(1 << nq, dtype=np.complex128)
    psi[0] = 1.0
    psi = run(psi, nq, gates, kernels)
    na = nq - ir.num_system_qubits
    return (np.abs(psi.reshape(1 << ir.num_system_qubits, 1 << na)) ** 2).sum(axis=1)


def reversible_marginal(ir: CircuitIR, max_branch_qubits: int = 24) -> np.ndarray:
    """System marginal for circuits made of a Hadamard layer on fresh qubits followed
    by basis permutations, computed by pushing every branch index through the
    permutations. Exact, and independent of how many garbage qubits the circuit holds.
    """
    ir.validate()
    nq = ir.num_qubits
    hq: list[int] = []
    seen_perm = False
    for g in ir.gates:
        if g.kind is GateKind.H and not g.controls and not seen_perm:
            if g.targets[0] in hq:
                raise UnsupportedGateError("repeated Hadamard in the branching layer")
            hq.append(g.targets[0])
        elif g.kind in _PERMUTATION_KINDS or (g.kind in (GateKind.X, GateKind.CNOT)):
            seen_perm = True
            if any(q in hq for q in g.targets) and g.kind is GateKind.H:
                raise UnsupportedGateError("Hadamard after permutations")
        else:
            raise UnsupportedGateError(f"{g.kind.value} is not classical-reversible")
    if len(hq) > max_branch_qubits:
        raise ResourceLimitError(f"{len(hq)} branching qubits exceed {max_branch_qubits}")
    branches = np.arange(1 << len(hq), dtype=np.int64)
    idx = _set_reg(np.zeros_like(branches), nq, hq, branches)
    for g in ir.gates:
        if g.kind is GateKind.H:
            continue
        if g.kind in (GateKind.X, GateKind.CNOT):
            sh = nq - 1 - g.targets[0]
            mask, val = _control_mask(g.controls, nq)
            flip = (idx & mask) == val if mask else np.ones(idx.size, dtype=bool)
            idx = np.where(flip, idx ^ (np.int64(1) << sh), idx)
        else:
            idx = permuted_indices(g, idx, nq)
    sys = idx >> ir.num_ancilla_qubits
    counts = np.bincount(sys, minlength=1 << ir.num_system_qubits)
    return counts / branches.size


def extract_block(ir: CircuitIR, ancilla_count: int | None = None, max_qubits: int = BLOCK_QUBIT_LIMIT,
                  kernels=None) -> np.ndarray:
    """Matrix <0_anc, i| U |0_anc, j> over the system register."""
    ir.validate()
    if ancilla_count is not None and ancilla_count != ir.num_ancilla_qubits:
        raise DimensionError(f"circuit declares {ir.num_ancilla_qubits} ancillas, not {ancilla_count}")
    nq, gates = _compact(ir)
    _guard(nq, max_qubits)
    ns = ir.num_system_qubits
    na = nq - ns
    dim = 1 << ns
    out = np.zeros((dim, dim), dtype=np.complex128)
    for j in range(dim):
        psi = np.zeros(1 << nq, dtype=np.complex128)
        psi[j << na] = 1.0
        psi = run(psi, nq, gates, kernels)
        out[:, j] = psi.reshape(dim, 1 << na)[:, 0]
    return out


# ------------------------------------------------------------ verification

def verify_plan(plan: MethodPlan, ir: CircuitIR, target: TargetVector,
                max_qubits: int = VERIFY_QUBIT_LIMIT) -> dict:
    """Simulate and compare against the target. Never raises on scale; reports it instead."""
    target = validate_target(target)
    method = plan.method.value
    if plan.method is Method.AliasSampling:
        bound = plan.budget.eps_p + SIM_TOL
        probs = np.abs(target.amplitudes) ** 2
        try:
            if len(active_qubits(ir)) <= max_qubits:
                marg = system_marginal(ir, max_qubits)
            else:
                marg = reversible_marginal(ir)
        except ResourceLimitError:
            return _unverified(method, bound, "l2")
        err = l2_distance(marg, probs)
        return _record(method, err, bound, "l2")
    bound = plan.eps_a_predicted + SIM_TOL
    if target.task is Task.STATE_PREP:
        if len(active_qubits(ir)) > max_qubits:
            return _unverified(method, bound, "l2")
        state, _ = prepared_state(ir, max_qubits)
        return _record(method, l2_distance(state, target.amplitudes), bound, "l2")
    if len(active_qubits(ir)) > max(max_qubits, BLOCK_QUBIT_LIMIT):
        return _unverified(method, bound, "linf")
    block = extract_block(ir, max_qubits=max(max_qubits, BLOCK_QUBIT_LIMIT))
    diag = np.diag(block)
    off = float(np.max(np.abs(block - np.diag(diag)))) if block.size > 1 else 0.0
    err = max(linf_distance(diag, target.amplitudes), off)
    return _record(method, err, bound, "linf")


def _record(method: str, err: float, bound: float, norm: str) -> dict:
    return {"method": method, "achieved_error": float(err), "bound": float(bound),
            "pass": bool(err <= bound), "norm": norm, "status": "verified"}


def _unverified(method: str, bound: float, norm: str) -> dict:
    return {"method": method, "achieved_error": None, "bound": float(bound),
            "pass": False, "norm": norm, "status": "unverified-at-scale"}


# ------------------------------------------------------------ sampling study

class Transform(enum.Enum):
    Identity = "identity"
    QFT = "qft"
    Walsh = "walsh"


def transformed_distribution(amplitudes: np.ndarray, transform: Transform) -> np.ndarray:
    a = np.asarray(amplitudes, dtype=np.complex128)
    if transform is Transform.Identity:
        v = a
    elif transform is Transform.QFT:
        v = np.fft.ifft(a, norm="ortho")
    else:
        re = _kernels.active.fwht(np.ascontiguousarray(a.real))
        im = _kernels.active.fwht(np.ascontiguousarray(a.imag))
        v = (re + 1j * im) / math.sqrt(a.size)
    p = np.abs(v) ** 2
    # transform roundoff leaves ~1e-33 where the exact probability is 0; those are not support
    p[p <= ROUNDOFF_PROBABILITY * a.size] = 0.0
    return p / p.sum()


def smoothing_delta(shots: int) -> float:
    return 1.0 / (10.0 * shots)


def kl_divergence(p, q, shots: int | None = None) -> float:
    """KL(p || q) in nats.

    With ``shots`` given, q is an empirical distribution: each zero of q where
    p has mass is replaced by 1/(10*shots) and q is renormalized.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DimensionError("distributions differ in length")
    if np.any(p < 0) or np.any(q < 0):
        raise DomainError("probabilities must be nonnegative")
    support = p > 0
    if shots is not None:
        holes = support & (q == 0)
        if np.any(holes):
            q = q.copy()
            q[holes] = smoothing_delta(shots)
            q /= q.sum()
    if np.any(q[support] == 0):
        return math.inf
    return float(np.sum(p[support] * np.log(p[support] / q[support])))


@dataclass(frozen=True, eq=False)
class SamplingStudy:
    distribution: np.ndarray
    transform: Transform
    shots_grid: tuple[int, ...]
    trials: int
    seed: int
    records: tuple[tuple[int, int, float, int], ...] = ()  # (shots, trial, kl, seed)
    kl_curve: dict = field(default_factory=dict)
    kl_stderr: dict = field(default_factory=dict)


def _trial_seed(seed: int, transform: Transform, shots_index: int, trial: int) -> int:
    tid = list(Transform).index(transform)
    return int(np.random.SeedSequence([seed, tid, shots_index, trial]).generate_state(1, dtype=np.uint32)[0])


def run_sampling_study(amplitudes, transform: Transform, shots_grid, trials: int = 10,
                       seed: int = 0) -> SamplingStudy:
    if trials < 10:
        raise DomainError("a sampling study needs at least 10 trials")
    p = transformed_distribution(amplitudes, transform)
    records = []
    curve, err = {}, {}
    for si, shots in enumerate(shots_grid):
        vals = []
        for trial in range(trials):
            s = _trial_seed(seed, transform, si, trial)
            counts = np.random.default_rng(s).multinomial(int(shots), p)
            kl = kl_divergence(p, counts / shots, shots=int(shots))
            vals.append(kl)
            records.append((int(shots), trial, kl, s))
        curve[int(shots)] = float(np.mean(vals))
        err[int(shots)] = float(np.std(vals, ddof=1) / math.sqrt(trials))
    return SamplingStudy(p, transform, tuple(int(s) for s in shots_grid), trials, seed,
                         tuple(records), curve, err)


BEYOND_GRID = "beyond-grid"


def shots_to_tolerance(study: SamplingStudy | list[SamplingStudy], tol: float):
    """Smallest grid shot count with mean KL <= tol, per transform.

    Unreachable tolerances give ("beyond-grid", last mean KL).
    """
    if isinstance(study, (list, tuple)):
        return {s.transform: shots_to_tolerance(s, tol) for s in study}
    for shots in study.shots_grid:
        if study.kl_curve[shots] <= tol:
            return shots
    return (BEYOND_GRID, study.kl_curve[study.shots_grid[-1]])
