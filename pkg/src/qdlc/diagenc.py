"""Diagonal encoders: a one-ancilla unitary whose |0>-block is diag(alpha)."""

from __future__ import annotations

import enum
import math
import weakref
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (
    BlockPayload,
    CircuitIR,
    CostOverride,
    DimensionError,
    DomainError,
    ErrorBudget,
    GateKind,
    GateRecord,
    Method,
    MethodPlan,
    NormViolationError,
    TargetVector,
    Task,
    UnsupportedTargetError,
)
from .costmodel import (
    DEFAULT_COSTS,
    CostConfig,
    adder_toffolis,
    estimate_circuit,
    t_count_for_rotation,
)
from .stateprep.multiplexer import EXACT_TOL, Level, QromLayout, angle_bits, qrom_records

# above this many terms (or qubits) the Walsh series is emitted as one costed block
WALSH_EMIT_TERMS = 4096
DENSE_BLOCK_QUBITS = 14


def solve_diag_mottonen(n: int, eps_p: float) -> float:
    """Largest double strictly below eps_p * 2^(-n/2)."""
    if eps_p <= 0:
        raise DomainError("eps_p must be positive")
    return float(np.nextafter(eps_p * 2.0 ** (-n / 2), 0.0))


def solve_qsp_delta(degree: int, eps_p: float) -> float:
    if degree < 1:
        raise DomainError("degree must be at least 1")
    if eps_p <= 0:
        raise DomainError("eps_p must be positive")
    return eps_p / math.sqrt(degree)


def solve_walsh_delta(kappa: int, eps_p: float) -> float:
    """Largest double strictly below eps_p / sqrt(kappa)."""
    if kappa < 1 or eps_p <= 0:
        raise DomainError("kappa and eps_p must be positive")
    return float(np.nextafter(eps_p / math.sqrt(kappa), 0.0))


def real_diagonal(target: TargetVector) -> np.ndarray:
    if target.task is not Task.DIAGONAL:
        raise DomainError("diagonal encoding needs a diagonal target")
    a = np.asarray(target.amplitudes)
    if np.any(a.imag != 0):
        raise UnsupportedTargetError("diagonal encoders take real entries")
    if np.max(np.abs(a.real)) > 1 + 1e-12:
        raise NormViolationError("diagonal entries must lie in [-1, 1]")
    return np.clip(a.real, -1.0, 1.0)


# ------------------------------------------------------------ multiplexer

def synth_diag_multiplexer(target: TargetVector, budget: ErrorBudget, via_qrom: bool = False,
                           cfg: CostConfig = DEFAULT_COSTS, use_phase_gradient: bool = True,
                           lowered: bool = False, **_) -> tuple[MethodPlan, CircuitIR]:
    alpha = real_diagonal(target)
    n = target.n_qubits
    anc = n
    angles = 2 * np.arccos(alpha)
    sel = tuple(range(n))
    if not via_qrom:
        delta = solve_diag_mottonen(n, budget.eps_p)
        g = GateRecord(GateKind.MultiplexedRY, sel + (anc,), params=angles, registers=(n, 1))
        ir = CircuitIR(n, 1, (g,))
        res = estimate_circuit(ir, cfg, delta)
        return MethodPlan(Method.MottonenDiag, {"delta_g": delta, "rotations": 1 << n}, budget, res,
                          True, 0.0), ir
    rot = 1 << n
    if use_phase_gradient:
        m = angle_bits(rot, budget.eps_p)
        layout = QromLayout(m, tuple(range(n + 1, n + 1 + m)), tuple(range(n + 1 + m, n + 1 + 2 * m)))
    else:
        m = angle_bits(rot, budget.eps_p / 2)
        delta = budget.eps_p / 2 / math.sqrt(2 * m)
        layout = QromLayout(m, tuple(range(n + 1, n + 1 + m)), (), False, delta)
    level = Level(GateKind.RY, sel, anc, angles)
    ir = CircuitIR(n, 1 + layout.ancillas, tuple(qrom_records([level], layout, cfg, lowered)))
    res = estimate_circuit(ir, cfg, layout.delta_g or 1.0)
    hp = {"m": m, "phase_gradient": use_phase_gradient, "delta_g": layout.delta_g, "rotations": rot}
    return MethodPlan(Method.QromDiag, hp, budget, res, True, 0.0), ir


# ------------------------------------------------------------ QSP

class Embedding(enum.Enum):
    Linear = "linear"  # s_j = j / N
    Sin = "sin"  # s_j = sin(2 pi j / N)


def signal_values(n: int, embedding: Embedding) -> np.ndarray:
    x = np.arange(1 << n) / (1 << n)
    return x if embedding is Embedding.Linear else np.sin(2 * np.pi * x)


@dataclass(frozen=True, eq=False)
class QspDiagonalSpec:
    polynomial: np.ndarray  # Chebyshev coefficients, length degree + 1
    signal_embedding: Embedding
    predicted_diagonal: np.ndarray
    residual: float

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.polynomial)
        return int(nz[-1]) if nz.size else 0


_BOUND_GRID = np.cos(np.linspace(0, np.pi, 2049))


def _parity_fits(s: np.ndarray, y: np.ndarray, max_degree: int, parity: int):
    """Least-squares fits of y by T_parity, T_parity+2, ...; yields (degree, coefficients)."""
    degs = list(range(parity, max_degree + 1, 2))
    if not degs:
        return
    v = np.polynomial.chebyshev.chebvander(s, max_degree)[:, degs]
    q, r = np.linalg.qr(v)
    proj = q.T @ y
    scale = max(1.0, float(np.max(np.linalg.norm(v, axis=0))))
    for k, d in enumerate(degs):
        if k >= r.shape[0] or abs(r[k, k]) <= 1e-10 * scale:
            return  # later columns are dependent on these sample points
        coeffs = np.zeros(d + 1)
        coeffs[degs[: k + 1]] = np.linalg.solve(r[: k + 1, : k + 1], proj[: k + 1])
        yield d, coeffs


def fit_qsp_polynomial(alpha: np.ndarray, n: int, embedding: Embedding, eps_a: float,
                       max_degree: int) -> QspDiagonalSpec | None:
    """Lowest-degree definite-parity polynomial with sup residual <= eps_a and |P| <= 1 on [-1, 1]."""
    s = signal_values(n, embedding)
    best = None
    candidates = []
    for parity in (0, 1):
        for d, coeffs in _parity_fits(s, alpha, max_degree, parity):
            pred = np.polynomial.chebyshev.chebval(s, coeffs)
            res = float(np.max(np.abs(pred - alpha)))
            if np.max(np.abs(np.polynomial.chebyshev.chebval(_BOUND_GRID, coeffs))) > 1 + 1e-12:
                continue
            spec = QspDiagonalSpec(coeffs, embedding, pred, 0.0 if res <= EXACT_TOL else res)
            if best is None or spec.residual < best.residual:
                best = spec
            if res <= eps_a + EXACT_TOL:
                candidates.append(spec)
                break
    if candidates:
        return min(candidates, key=lambda c: (c.degree, c.residual))
    return best


def qsp_block(spec: QspDiagonalSpec, n: int, dense: bool = True) -> BlockPayload:
    p = np.clip(spec.predicted_diagonal, -1.0, 1.0)
    if not dense:
        return BlockPayload(f"qsp-sequence({spec.degree})")
    c = np.sqrt(1 - p * p)
    m = np.empty((p.size, 2, 2))
    m[:, 0, 0] = p
    m[:, 0, 1] = -c
    m[:, 1, 0] = c
    m[:, 1, 1] = p
    return BlockPayload(f"qsp-sequence({spec.degree})", m)


def qsp_cost(degree: int, n: int, delta: float, cfg: CostConfig = DEFAULT_COSTS) -> CostOverride:
    """d+1 signal-processing rotations and d signal operators, each an adder into a gradient register."""
    rot = degree + 1
    return CostOverride(rotations=rot, rotation_t=rot * t_count_for_rotation(delta, cfg),
                        toffolis=degree * adder_toffolis(n, cfg), cnots=degree * 6 * n,
                        scratch=n if degree else 0)


def synth_diag_qsp(target: TargetVector, budget: ErrorBudget, max_degree: int = 64,
                   embedding: Embedding | None = None, cfg: CostConfig = DEFAULT_COSTS,
                   **_) -> tuple[MethodPlan, CircuitIR]:
    alpha = real_diagonal(target)
    n = target.n_qubits
    options = [embedding] if embedding is not None else [Embedding.Linear, Embedding.Sin]
    fits = [f for f in (fit_qsp_polynomial(alpha, n, e, budget.eps_a, max_degree) for e in options) if f]
    ok = [f for f in fits if f.residual <= budget.eps_a + EXACT_TOL]
    if ok:
        spec = min(ok, key=lambda f: (f.degree, f.residual))
    elif fits:
        spec = min(fits, key=lambda f: f.residual)
    else:
        spec = QspDiagonalSpec(np.zeros(1), options[0], np.zeros_like(alpha), float(np.max(np.abs(alpha))))
    d = spec.degree
    delta = solve_qsp_delta(max(d, 1), budget.eps_p)
    g = GateRecord(GateKind.BlockGate, tuple(range(n + 1)), registers=(n, 1),
                   block=qsp_block(spec, n, n <= DENSE_BLOCK_QUBITS), cost=qsp_cost(d, n, delta, cfg))
    ir = CircuitIR(n, 1, (g,))
    res = estimate_circuit(ir, cfg, delta)
    feasible = bool(ok)
    hp = {"d": d, "delta_g": delta, "embedding": spec.signal_embedding.value,
          "polynomial": [float(x) for x in spec.polynomial]}
    return MethodPlan(Method.QspDiag, hp, budget, res, feasible, spec.residual), ir


# ------------------------------------------------------------ Walsh

def walsh_transform(samples) -> np.ndarray:
    """Orthonormal Walsh-Hadamard transform; index bit i of k selects Z on qubit i (MSB = qubit 0)."""
    x = np.asarray(samples, dtype=np.float64)
    n = x.size
    if n == 0 or n & (n - 1):
        raise DimensionError(f"length {n} is not a power of two")
    return _kernels.active.fwht(x) / math.sqrt(n)


@dataclass(frozen=True, eq=False)
class WalshSpectrum:
    coefficients: np.ndarray
    kept_indices: np.ndarray  # in decreasing |c_k| order, ties to lower k
    prefix_errors: np.ndarray  # sup phase error after each kept term

    @property
    def truncation_order(self) -> int:
        return int(self.kept_indices.size)


_spectra: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def walsh_phases(alpha: np.ndarray) -> np.ndarray:
    return 2 * np.arccos(alpha)


def walsh_spectrum(target: TargetVector, eps_a: float, kernels=None) -> WalshSpectrum:
    """Smallest prefix of the largest-|c_k| terms whose sup phase error is <= eps_a."""
    kernels = kernels or _kernels.active
    per = _spectra.setdefault(target, {})
    g = walsh_phases(real_diagonal(target))
    if "c" not in per:
        c = walsh_transform(g)
        per["c"] = c
        per["order"] = np.argsort(-np.abs(c), kind="stable")
    c, order = per["c"], per["order"]
    ks = order.astype(np.int64)
    errs = kernels.walsh_prefix_errors(c[ks], ks, g, eps_a + EXACT_TOL)
    kappa = errs.size
    if errs[-1] > eps_a + EXACT_TOL:
        kappa = c.size
    errs = np.where(errs <= EXACT_TOL, 0.0, errs)
    return WalshSpectrum(c, ks[:kappa], errs[:kappa])


def walsh_prefix_errors(target: TargetVector, kernels=None) -> np.ndarray:
    """Sup phase error for every truncation order 1..N."""
    kernels = kernels or _kernels.active
    g = walsh_phases(real_diagonal(target))
    c = walsh_transform(g)
    ks = np.argsort(-np.abs(c), kind="stable").astype(np.int64)
    return kernels.walsh_prefix_errors(c[ks], ks, g, -1.0)


def _bits(k: int, n: int) -> tuple[int, ...]:
    return tuple(q for q in range(n) if (k >> (n - 1 - q)) & 1)


def walsh_term_circuit(n: int, k: int, c: float) -> CircuitIR:
    """exp(i c Z^k) on n qubits: parity ladder onto the last selected qubit, RZ(-2c), ladder back."""
    qs = _bits(k, n)
    if not qs:
        raise DomainError("k = 0 is a global phase with no circuit")
    *src, tgt = qs
    ladder = [GateRecord(GateKind.CNOT, (tgt,), ((q, True),)) for q in src]
    gates = ladder + [GateRecord(GateKind.RZ, (tgt,), params=[-2 * c])] + ladder[::-1]
    return CircuitIR(n, 0, tuple(gates))


def gray_rank(k: np.ndarray) -> np.ndarray:
    """Position of k in the reflected Gray sequence (inverse Gray code)."""
    k = np.asarray(k, dtype=np.int64).copy()
    out = k.copy()
    shift = k >> 1
    while np.any(shift):
        out ^= shift
        shift >>= 1
    return out


def walsh_records(n: int, ks: np.ndarray, coeffs: np.ndarray, gray: bool = False) -> list[GateRecord]:
    """exp(-i theta_k Z_anc Z^k) for each kept term, inside the Z -> Y basis change on the ancilla."""
    anc = n
    theta = coeffs / (2 * math.sqrt(1 << n))
    order = np.argsort(gray_rank(ks), kind="stable") if gray else np.arange(ks.size)
    gates = [GateRecord(GateKind.S, (anc,))] * 3 + [GateRecord(GateKind.H, (anc,))]
    prev = 0
    for i in order:
        k = int(ks[i])
        flip = (prev ^ k) if gray else k
        pre = [GateRecord(GateKind.CNOT, (anc,), ((q, True),)) for q in _bits(flip, n)]
        gates += pre
        gates.append(GateRecord(GateKind.RZ, (anc,), params=[2 * theta[i]]))
        if gray:
            prev = k
        else:
            gates += pre[::-1]
    if gray:
        gates += [GateRecord(GateKind.CNOT, (anc,), ((q, True),)) for q in _bits(prev, n)]
    gates += [GateRecord(GateKind.H, (anc,)), GateRecord(GateKind.S, (anc,))]
    return gates


def walsh_cost(n: int, ks: np.ndarray, delta: float, cfg: CostConfig = DEFAULT_COSTS,
               gray: bool = False) -> CostOverride:
    ks = np.asarray(ks, dtype=np.int64)
    if gray:
        seq = np.concatenate(([0], ks[np.argsort(gray_rank(ks), kind="stable")], [0]))
        cn = int(np.bitwise_count(seq[1:] ^ seq[:-1]).sum())
    else:
        cn = int(2 * np.bitwise_count(ks).sum())
    rot = int(ks.size)
    return CostOverride(rotations=rot, rotation_t=rot * t_count_for_rotation(delta, cfg), cnots=cn)


def synth_diag_walsh(target: TargetVector, budget: ErrorBudget, gray: bool = False,
                     cfg: CostConfig = DEFAULT_COSTS, **_) -> tuple[MethodPlan, CircuitIR]:
    n = target.n_qubits
    spec = walsh_spectrum(target, budget.eps_a)
    kappa = spec.truncation_order
    ks = spec.kept_indices
    coeffs = spec.coefficients[ks]
    delta = solve_walsh_delta(kappa, budget.eps_p)
    if kappa <= WALSH_EMIT_TERMS:
        gates = tuple(walsh_records(n, ks, coeffs, gray))
    else:
        rebuilt = np.zeros(1 << n)
        rebuilt[ks] = coeffs
        p = np.cos(walsh_transform(rebuilt) / 2)
        spec_q = QspDiagonalSpec(np.zeros(1), Embedding.Linear, p, 0.0)
        block = qsp_block(spec_q, n, n <= DENSE_BLOCK_QUBITS)
        block = BlockPayload(f"walsh-series({kappa})", block.matrix)
        gates = (GateRecord(GateKind.BlockGate, tuple(range(n + 1)), registers=(n, 1), block=block,
                            cost=walsh_cost(n, ks, delta, cfg, gray)),)
    ir = CircuitIR(n, 1, gates)
    res = estimate_circuit(ir, cfg, delta)
    err = float(spec.prefix_errors[-1]) if spec.prefix_errors.size else 0.0
    if kappa == 1 << n:
        err = 0.0
    hp = {"kappa": kappa, "delta_g": delta, "gray": gray}
    feasible = err <= budget.eps_a + EXACT_TOL
    return MethodPlan(Method.WalshDiag, hp, budget, res, feasible, err), ir


def synth_diag_qrom(target: TargetVector, budget: ErrorBudget, **kw) -> tuple[MethodPlan, CircuitIR]:
    return synth_diag_multiplexer(target, budget, via_qrom=True, **kw)


def synth_diag_mottonen(target: TargetVector, budget: ErrorBudget, **kw) -> tuple[MethodPlan, CircuitIR]:
    return synth_diag_multiplexer(target, budget, via_qrom=False, **kw)


SYNTHESIZERS = {
    Method.MottonenDiag: synth_diag_mottonen,
    Method.QromDiag: synth_diag_qrom,
    Method.QspDiag: synth_diag_qsp,
    Method.WalshDiag: synth_diag_walsh,
}
