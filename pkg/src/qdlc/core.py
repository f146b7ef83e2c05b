"""Shared domain types, error metrics and JSON interchange."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

import numpy as np

SCHEMA_VERSION = 1
NORM_TOL = 1e-12


class QdlcError(Exception):
    """Base class for all package errors."""


class DimensionError(QdlcError, ValueError):
    pass


class DegenerateInputError(QdlcError, ValueError):
    pass


class NormViolationError(QdlcError, ValueError):
    pass


class DomainError(QdlcError, ValueError):
    pass


class ValidationError(QdlcError, ValueError):
    pass


class UnsupportedTargetError(QdlcError, ValueError):
    pass


class UnsupportedGateError(QdlcError, ValueError):
    pass


class ResourceLimitError(QdlcError, RuntimeError):
    pass


class InfeasibleError(QdlcError, RuntimeError):
    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class Task(enum.Enum):
    STATE_PREP = "state-prep"
    DIAGONAL = "diagonal"


def _frozen_array(values: Any, dtype=np.complex128) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TargetVector:
    n_qubits: int
    amplitudes: np.ndarray
    task: Task = Task.STATE_PREP
    scale: float = 1.0

    def __post_init__(self):
        amps = _frozen_array(self.amplitudes)
        object.__setattr__(self, "amplitudes", amps)
        if self.n_qubits < 0 or amps.ndim != 1 or amps.size != 1 << self.n_qubits:
            raise DimensionError(
                f"expected {1 << max(self.n_qubits, 0)} amplitudes, got shape {amps.shape}"
            )

    @property
    def size(self) -> int:
        return self.amplitudes.size

    @property
    def is_real(self) -> bool:
        return not np.any(self.amplitudes.imag)

    @classmethod
    def from_values(cls, values: Sequence[complex], task: Task = Task.STATE_PREP) -> "TargetVector":
        arr = np.asarray(values, dtype=np.complex128)
        n = int(round(math.log2(arr.size))) if arr.size else -1
        if arr.size == 0 or 1 << n != arr.size:
            raise DimensionError(f"length {arr.size} is not a power of two")
        return cls(n, arr, task)


def l2_distance(a: Sequence[complex], b: Sequence[complex]) -> float:
    a, b = np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def linf_distance(a: Sequence[complex], b: Sequence[complex]) -> float:
    a, b = np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)))


def validate_target(v: TargetVector) -> TargetVector:
    """Normalize a state-prep target, or check a diagonal target's sup norm."""
    amps = v.amplitudes
    if not np.all(np.isfinite(amps)):
        raise DegenerateInputError("amplitudes must be finite")
    if v.task is Task.STATE_PREP:
        norm = float(np.linalg.norm(amps))
        if norm == 0.0:
            raise DegenerateInputError("zero vector cannot be normalized")
        if abs(norm - 1.0) <= NORM_TOL:
            return v
        return TargetVector(v.n_qubits, amps / norm, v.task, v.scale * norm)
    peak = float(np.max(np.abs(amps)))
    if peak > 1.0 + NORM_TOL:
        raise NormViolationError(f"diagonal sup norm {peak} exceeds 1")
    return v


@dataclass(frozen=True)
class ErrorBudget:
    epsilon: float
    omega: float
    eps_p: float
    eps_a: float

    @classmethod
    def split(cls, epsilon: float, omega: float) -> "ErrorBudget":
        if not epsilon > 0:
            raise DomainError("epsilon must be positive")
        if not 0.0 < omega <= 1.0:
            raise DomainError("omega must lie in (0, 1]")
        return cls(epsilon, omega, omega * epsilon, (1.0 - omega) * epsilon)

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "omega": self.omega, "eps_p": self.eps_p, "eps_a": self.eps_a}


@dataclass(frozen=True)
class ResourceEstimate:
    t_count: int = 0
    cnot_count: int = 0
    rotation_count: int = 0
    ancilla_qubits: int = 0
    total_qubits: int = 0
    toffoli_count: int = 0

    def __add__(self, other: "ResourceEstimate") -> "ResourceEstimate":
        # gate counts add; registers are reused across concatenated pieces
        return ResourceEstimate(
            self.t_count + other.t_count,
            self.cnot_count + other.cnot_count,
            self.rotation_count + other.rotation_count,
            max(self.ancilla_qubits, other.ancilla_qubits),
            max(self.total_qubits, other.total_qubits),
            self.toffoli_count + other.toffoli_count,
        )

    def to_json(self) -> dict:
        return {
            "t_count": self.t_count,
            "cnot_count": self.cnot_count,
            "rotation_count": self.rotation_count,
            "toffoli_count": self.toffoli_count,
            "ancilla_qubits": self.ancilla_qubits,
            "total_qubits": self.total_qubits,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ResourceEstimate":
        return cls(
            int(d["t_count"]), int(d["cnot_count"]), int(d["rotation_count"]),
            int(d["ancilla_qubits"]), int(d["total_qubits"]), int(d.get("toffoli_count", 0)),
        )


class GateKind(enum.Enum):
    H = "H"
    X = "X"
    S = "S"
    RY = "RY"
    RZ = "RZ"
    CNOT = "CNOT"
    SWAP = "SWAP"
    ControlledRZ = "ControlledRZ"
    MultiplexedRY = "MultiplexedRY"
    MultiplexedRZ = "MultiplexedRZ"
    QROMLookup = "QROMLookup"
    InPlaceAdder = "InPlaceAdder"
    ConstantAdder = "ConstantAdder"
    Comparator = "Comparator"
    CSwap = "CSwap"
    PhaseAdder = "PhaseAdder"
    BlockGate = "BlockGate"


ROTATION_KINDS = frozenset({GateKind.RY, GateKind.RZ, GateKind.ControlledRZ,
                            GateKind.MultiplexedRY, GateKind.MultiplexedRZ})
# kinds whose own definition includes one control qubit
NATURAL_CONTROLS = {GateKind.CNOT: 1, GateKind.ControlledRZ: 1, GateKind.CSwap: 1}


@dataclass(frozen=True)
class CostOverride:
    """Pre-computed gate cost attached to a record, used instead of the per-kind rule.

    ``rotation_t`` is the T-count already charged for the record's rotations;
    Toffolis are converted to T at estimate time.
    """

    rotations: int = 0
    rotation_t: int = 0
    toffolis: int = 0
    cnots: int = 0
    scratch: int = 0

    def __add__(self, other: "CostOverride") -> "CostOverride":
        return CostOverride(
            self.rotations + other.rotations, self.rotation_t + other.rotation_t,
            self.toffolis + other.toffolis, self.cnots + other.cnots,
            max(self.scratch, other.scratch),
        )

    def scaled(self, k: int) -> "CostOverride":
        return CostOverride(self.rotations * k, self.rotation_t * k, self.toffolis * k,
                            self.cnots * k, self.scratch)

    def to_json(self) -> dict:
        return {"rotations": self.rotations, "rotation_t": self.rotation_t,
                "toffolis": self.toffolis, "cnots": self.cnots, "scratch": self.scratch}


@dataclass(frozen=True, eq=False)
class BlockPayload:
    """Action of a BlockGate.

    ``matrix`` has shape (2^s, 2^l, 2^l): one local unitary per selector value
    (s = 0 for a plain dense block). Labels "qft" and "iqft" need no matrix.
    """

    label: str
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.matrix is not None:
            m = np.array(self.matrix, dtype=np.complex128)
            if m.ndim == 2:
                m = m[None]
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)


@dataclass(frozen=True, eq=False)
class GateRecord:
    kind: GateKind
    targets: tuple[int, ...]
    controls: tuple[tuple[int, bool], ...] = ()
    params: np.ndarray | None = None
    table: np.ndarray | None = None
    registers: tuple[int, ...] | None = None
    block: BlockPayload | None = None
    cost: CostOverride | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple((int(q), bool(p)) for q, p in self.controls))
        if self.params is not None:
            object.__setattr__(self, "params", _frozen_array(self.params, np.float64))
        if self.table is not None:
            object.__setattr__(self, "table", _frozen_array(self.table, np.int64))
        if self.registers is not None:
            object.__setattr__(self, "registers", tuple(int(r) for r in self.registers))

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + tuple(q for q, _ in self.controls)

    def with_controls(self, extra: Iterable[tuple[int, bool]]) -> "GateRecord":
        return replace(self, controls=tuple(extra) + self.controls)

    def remapped(self, mapping: Sequence[int]) -> "GateRecord":
        return replace(
            self,
            targets=tuple(mapping[q] for q in self.targets),
            controls=tuple((mapping[q], p) for q, p in self.controls),
        )


def _check_registers(g: GateRecord, expected_parts: int) -> tuple[int, ...]:
    if g.registers is None or len(g.registers) != expected_parts:
        raise ValidationError(f"{g.kind.value} needs {expected_parts} register sizes")
    if sum(g.registers) != len(g.targets):
        raise ValidationError(f"{g.kind.value} register sizes do not cover its targets")
    return g.registers


def validate_gate(g: GateRecord, num_qubits: int) -> None:
    qs = g.qubits
    if any(q < 0 or q >= num_qubits for q in qs):
        raise ValidationError(f"{g.kind.value} index out of range in {qs}")
    if len(set(qs)) != len(qs):
        raise ValidationError(f"{g.kind.value} repeats a qubit in {qs}")
    k = g.kind
    nt = len(g.targets)
    natural = NATURAL_CONTROLS.get(k, 0)
    if len(g.controls) < natural:
        raise ValidationError(f"{k.value} needs {natural} control(s)")
    if k in (GateKind.H, GateKind.X, GateKind.S, GateKind.RY, GateKind.RZ,
             GateKind.CNOT, GateKind.ControlledRZ) and nt != 1:
        raise ValidationError(f"{k.value} acts on exactly one target")
    if k in (GateKind.RY, GateKind.RZ, GateKind.ControlledRZ):
        if g.params is None or g.params.size != 1:
            raise ValidationError(f"{k.value} needs one angle")
    elif k in (GateKind.MultiplexedRY, GateKind.MultiplexedRZ):
        s, _ = _check_registers(g, 2)
        if g.registers[1] != 1:
            raise ValidationError("multiplexer rotates a single target")
        if g.params is not None and g.params.size != 1 << s:
            raise ValidationError(f"multiplexer with {s} selectors needs {1 << s} angles")
    elif g.params is not None:
        raise ValidationError(f"{k.value} takes no angles")
    if k is GateKind.SWAP and nt != 2:
        raise ValidationError("SWAP acts on two qubits")
    if k is GateKind.QROMLookup:
        a, _ = _check_registers(g, 2)
        if g.table is not None and g.table.size > 1 << a:
            raise ValidationError("QROM table longer than its address space")
    elif k is GateKind.InPlaceAdder:
        _check_registers(g, 2)
    elif k is GateKind.ConstantAdder:
        if g.table is None or g.table.size != 1:
            raise ValidationError("ConstantAdder needs a one-entry table")
    elif k is GateKind.Comparator:
        _, _, f = _check_registers(g, 3)
        if f != 1:
            raise ValidationError("Comparator writes a single flag")
    elif k is GateKind.CSwap:
        a, b = _check_registers(g, 2)
        if a != b:
            raise ValidationError("CSwap halves differ in size")
    elif k is GateKind.PhaseAdder:
        s, a, b = _check_registers(g, 3)
        if s > 1 or a != b:
            raise ValidationError("PhaseAdder layout is [sign?] + source + gradient")
    elif k is GateKind.BlockGate:
        s, l = _check_registers(g, 2)
        if g.block is None:
            raise ValidationError("BlockGate needs a payload")
        if g.block.matrix is not None and g.block.matrix.shape != (1 << s, 1 << l, 1 << l):
            raise ValidationError("BlockGate matrix shape does not match its registers")
        if g.block.matrix is None and g.block.label not in ("qft", "iqft") and g.cost is None:
            raise ValidationError(f"BlockGate '{g.block.label}' has no action")


@dataclass(frozen=True, eq=False)
class CircuitIR:
    num_system_qubits: int
    num_ancilla_qubits: int
    gates: tuple[GateRecord, ...] = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))

    @property
    def num_qubits(self) -> int:
        return self.num_system_qubits + self.num_ancilla_qubits

    def validate(self) -> "CircuitIR":
        if self.num_system_qubits < 0 or self.num_ancilla_qubits < 0:
            raise ValidationError("negative register size")
        for g in self.gates:
            validate_gate(g, self.num_qubits)
        return self

    def count(self, kind: GateKind) -> int:
        return sum(1 for g in self.gates if g.kind is kind)

    def then(self, other: "CircuitIR") -> "CircuitIR":
        if other.num_system_qubits != self.num_system_qubits:
            raise DimensionError("system registers differ")
        return CircuitIR(self.num_system_qubits, max(self.num_ancilla_qubits, other.num_ancilla_qubits),
                         self.gates + other.gates, dict(self.metadata))


class Method(enum.Enum):
    Mottonen = "mottonen"
    QromStatePrep = "qrom"
    SparseSOS = "sparse"
    MPS = "mps"
    FSL = "fsl"
    AliasSampling = "alias"
    MottonenDiag = "diag-mottonen"
    QromDiag = "diag-qrom"
    QspDiag = "diag-qsp"
    WalshDiag = "diag-walsh"
    Hybrid = "hybrid"

    @property
    def order(self) -> int:
        return list(Method).index(self)


STATE_METHODS = (Method.Mottonen, Method.QromStatePrep, Method.SparseSOS, Method.MPS,
                 Method.FSL, Method.AliasSampling)
DIAGONAL_METHODS = (Method.MottonenDiag, Method.QromDiag, Method.QspDiag, Method.WalshDiag)


@dataclass(frozen=True, eq=False)
class MethodPlan:
    method: Method
    hyperparams: dict
    budget: ErrorBudget
    resources: ResourceEstimate
    feasible: bool
    eps_a_predicted: float
    notes: str = ""

    def to_json(self) -> dict:
        return {
            "method": self.method.value,
            "hyperparams": _jsonable(self.hyperparams),
            "budget": self.budget.to_json(),
            "resources": self.resources.to_json(),
            "feasible": self.feasible,
            "eps_a_predicted": self.eps_a_predicted,
            "notes": self.notes,
        }

    @classmethod
    def from_json(cls, d: dict) -> "MethodPlan":
        b = d["budget"]
        return cls(Method(d["method"]), d["hyperparams"],
                   ErrorBudget(b["epsilon"], b["omega"], b["eps_p"], b["eps_a"]),
                   ResourceEstimate.from_json(d["resources"]), bool(d["feasible"]),
                   float(d["eps_a_predicted"]), d.get("notes", ""))


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, enum.Enum):
        return x.value
    return x


# ---------------------------------------------------------------- JSON

def dumps(obj: Any) -> str:
    """Canonical JSON text: sorted keys, shortest round-trip floats, trailing newline."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def loads(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def target_to_json(v: TargetVector) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "n_qubits": v.n_qubits,
        "task": v.task.value,
        "amplitudes": [[float(z.real), float(z.imag)] for z in v.amplitudes],
    }


def target_from_json(d: dict) -> TargetVector:
    try:
        n = int(d["n_qubits"])
        task = Task(d.get("task", Task.STATE_PREP.value))
        pairs = np.asarray(d["amplitudes"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed vector file: {exc}") from exc
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValidationError("amplitudes must be [re, im] pairs")
    return TargetVector(n, pairs[:, 0] + 1j * pairs[:, 1], task)


def _gate_to_json(g: GateRecord) -> dict:
    d: dict[str, Any] = {
        "kind": g.kind.value,
        "targets": list(g.targets),
        "controls": [[q, p] for q, p in g.controls],
        "params": None if g.params is None else g.params.tolist(),
        "table": None if g.table is None else g.table.tolist(),
    }
    if g.registers is not None:
        d["registers"] = list(g.registers)
    if g.block is not None:
        m = g.block.matrix
        d["block"] = {
            "label": g.block.label,
            "matrix": None if m is None else np.stack([m.real, m.imag], axis=-1).tolist(),
        }
    if g.cost is not None:
        d["cost"] = g.cost.to_json()
    return d


def _gate_from_json(d: dict) -> GateRecord:
    try:
        block = None
        if d.get("block") is not None:
            b = d["block"]
            mat = None
            if b.get("matrix") is not None:
                arr = np.asarray(b["matrix"], dtype=np.float64)
                mat = arr[..., 0] + 1j * arr[..., 1]
            block = BlockPayload(str(b["label"]), mat)
        cost = CostOverride(**{k: int(v) for k, v in d["cost"].items()}) if d.get("cost") else None
        return GateRecord(
            GateKind(d["kind"]),
            tuple(d["targets"]),
            tuple((q, p) for q, p in d.get("controls", [])),
            None if d.get("params") is None else np.asarray(d["params"], dtype=np.float64),
            None if d.get("table") is None else np.asarray(d["table"], dtype=np.int64),
            None if d.get("registers") is None else tuple(d["registers"]),
            block,
            cost,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed gate record {d!r:.80}: {exc}") from exc


def circuit_to_json(ir: CircuitIR) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "system_qubits": ir.num_system_qubits,
        "ancilla_qubits": ir.num_ancilla_qubits,
        "gates": [_gate_to_json(g) for g in ir.gates],
        "metadata": _jsonable(ir.metadata),
    }


def circuit_from_json(d: dict) -> CircuitIR:
    try:
        ir = CircuitIR(int(d["system_qubits"]), int(d["ancilla_qubits"]),
                       tuple(_gate_from_json(g) for g in d["gates"]), dict(d.get("metadata", {})))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed circuit file: {exc}") from exc
    return ir.validate()
