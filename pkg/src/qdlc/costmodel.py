"""Clifford+T resource accounting for semantic circuits.

Every counting rule lives here; ``cost_ledger_markdown`` renders them for
COST_LEDGER.md.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .core import (
    NATURAL_CONTROLS,
    ROTATION_KINDS,
    CircuitIR,
    CostOverride,
    DomainError,
    GateKind,
    GateRecord,
    ResourceEstimate,
    UnsupportedGateError,
    ValidationError,
)


@dataclass(frozen=True)
class CostConfig:
    t_per_rotation_slope: float = 3.02
    t_per_rotation_offset: float = 1.77
    toffoli_t_cost: int = 4
    qrom_swap_width: int | str = "auto"
    adder_toffoli_per_bit: float = 2.0

    def __post_init__(self):
        if not self.t_per_rotation_slope > 0:
            raise DomainError("rotation slope must be positive")
        if self.toffoli_t_cost not in (4, 7):
            raise DomainError("toffoli_t_cost must be 4 or 7")
        w = self.qrom_swap_width
        if w != "auto" and (not isinstance(w, int) or w < 1 or w & (w - 1)):
            raise DomainError("qrom_swap_width must be 'auto' or a power of two")
        if not self.adder_toffoli_per_bit > 0:
            raise DomainError("adder_toffoli_per_bit must be positive")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "CostConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known - {"schema_version"}
        if unknown:
            raise ValidationError(f"unknown cost-model keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in d.items() if k in known})

    @classmethod
    def load(cls, path: str | Path) -> "CostConfig":
        from .core import loads

        p = Path(path)
        return cls.from_json(loads(p.read_text(), str(p)))


DEFAULT_COSTS = CostConfig()


def t_count_for_rotation(delta_g: float, cfg: CostConfig = DEFAULT_COSTS) -> int:
    if not delta_g > 0:
        raise DomainError(f"rotation tolerance must be positive, got {delta_g}")
    if delta_g >= 1:
        return 0
    return max(0, math.ceil(cfg.t_per_rotation_slope * math.log2(1.0 / delta_g) + cfg.t_per_rotation_offset))


def qrom_swap_width(num_entries: int, bits_per_entry: int, cfg: CostConfig = DEFAULT_COSTS) -> int:
    if cfg.qrom_swap_width != "auto":
        return int(cfg.qrom_swap_width)
    best, best_tof = 1, None
    lam = 1
    while True:
        tof = -(-num_entries // lam) + bits_per_entry * (lam - 1)
        if best_tof is None or tof < best_tof:
            best, best_tof = lam, tof
        if lam >= num_entries:
            break
        lam *= 2
    return best


def qrom_breakdown(num_entries: int, bits_per_entry: int, cfg: CostConfig = DEFAULT_COSTS,
                   lam: int | None = None) -> tuple[CostOverride, int]:
    """Return the lookup cost and the total ancilla count (output copies plus swap selector)."""
    if num_entries < 1 or bits_per_entry < 1:
        raise DomainError("QROM needs at least one entry of at least one bit")
    lam = lam or qrom_swap_width(num_entries, bits_per_entry, cfg)
    toffolis = -(-num_entries // lam) + bits_per_entry * (lam - 1)
    ancillas = bits_per_entry * lam + math.ceil(math.log2(lam))
    return CostOverride(toffolis=toffolis, cnots=2 * bits_per_entry * num_entries), ancillas


def qrom_cost(num_entries: int, bits_per_entry: int, cfg: CostConfig = DEFAULT_COSTS,
              lam: int | None = None) -> ResourceEstimate:
    c, anc = qrom_breakdown(num_entries, bits_per_entry, cfg, lam)
    return ResourceEstimate(
        t_count=c.toffolis * cfg.toffoli_t_cost,
        cnot_count=c.cnots,
        ancilla_qubits=anc,
        total_qubits=anc + math.ceil(math.log2(num_entries)) if num_entries > 1 else anc,
        toffoli_count=c.toffolis,
    )


def adder_toffolis(bits: int, cfg: CostConfig = DEFAULT_COSTS) -> int:
    return math.ceil(cfg.adder_toffoli_per_bit * bits)


def block_cnots(m: int) -> int:
    """CNOTs of a quantum Shannon decomposition of an m-qubit unitary."""
    if m <= 1:
        return 0
    if m == 2:
        return 3
    return math.ceil(23 / 48 * 4**m - 1.5 * 2**m + 4 / 3)


def qft_breakdown(n: int, cfg: CostConfig = DEFAULT_COSTS) -> CostOverride:
    """Quantum Fourier transform with its controlled phases applied as additions into a phase gradient."""
    pairs = n * (n - 1) // 2
    return CostOverride(toffolis=math.ceil(cfg.adder_toffoli_per_bit * pairs),
                        cnots=3 * (n // 2) + 2 * pairs, scratch=n)


def _base_cost(g: GateRecord, delta_g: float, cfg: CostConfig) -> CostOverride:
    if g.cost is not None:
        return g.cost
    k = g.kind
    rot_t = t_count_for_rotation(delta_g, cfg) if k in (
        GateKind.RY, GateKind.RZ, GateKind.ControlledRZ, GateKind.MultiplexedRY,
        GateKind.MultiplexedRZ, GateKind.BlockGate) else 0
    if k in (GateKind.H, GateKind.X, GateKind.S):
        return CostOverride()
    if k is GateKind.CNOT:
        return CostOverride(cnots=1)
    if k is GateKind.SWAP:
        return CostOverride(cnots=3)
    if k in (GateKind.RY, GateKind.RZ):
        return CostOverride(rotations=1, rotation_t=rot_t)
    if k is GateKind.ControlledRZ:
        return CostOverride(rotations=2, rotation_t=2 * rot_t, cnots=2)
    if k in (GateKind.MultiplexedRY, GateKind.MultiplexedRZ):
        c = g.registers[0]
        r = 1 << c
        return CostOverride(rotations=r, rotation_t=r * rot_t, cnots=r if c else 0)
    if k is GateKind.QROMLookup:
        a, b = g.registers
        entries = g.table.size if g.table is not None else 1 << a
        c, anc = qrom_breakdown(max(entries, 1), max(b, 1), cfg)
        return CostOverride(toffolis=c.toffolis, cnots=c.cnots, scratch=anc - b)
    if k is GateKind.InPlaceAdder:
        b = g.registers[1]
        return CostOverride(toffolis=adder_toffolis(b, cfg), cnots=6 * b)
    if k is GateKind.ConstantAdder:
        b = len(g.targets)
        return CostOverride(toffolis=adder_toffolis(b, cfg), cnots=6 * b)
    if k is GateKind.PhaseAdder:
        s, a, _ = g.registers
        return CostOverride(toffolis=adder_toffolis(a, cfg), cnots=6 * a + 2 * a * s)
    if k is GateKind.Comparator:
        w = g.registers[1]
        return CostOverride(toffolis=w, cnots=4 * w, scratch=w)
    if k is GateKind.CSwap:
        w = g.registers[0]
        return CostOverride(toffolis=w, cnots=2 * w)
    if k is GateKind.BlockGate:
        s, l = g.registers
        m = s + l
        r = 4**m
        return CostOverride(rotations=r, rotation_t=r * rot_t, cnots=block_cnots(m))
    raise UnsupportedGateError(f"no cost rule for {k}")


def controlled_cost(base: CostOverride, c: int, single_qubit_clifford: bool = False,
                    control_points: int | None = None) -> CostOverride:
    """Surcharge for wrapping a gate in ``c`` additional controls.

    c <= 3: the controls are ANDed into one ancilla (2(c-1) Toffolis), then every
    rotation becomes a singly-controlled rotation (2 rotations + 2 CNOTs), every
    CNOT a Toffoli and every Toffoli a doubly-controlled Toffoli (2 Toffolis).
    c > 3: rotations are charged as a 2^c-branch multiplexer.

    Arithmetic and lookup gates pass ``control_points``: the control only has to
    reach that many Toffolis (one per iterated entry or per carry bit), so the
    surcharge is that many extra Toffolis instead of converting every CNOT.
    """
    if c <= 0:
        return base
    if single_qubit_clifford:
        base = CostOverride(rotations=1, rotation_t=0, scratch=base.scratch)
    and_chain = 2 * (c - 1)
    fan = 2 if c <= 3 else 1 << c
    if control_points is not None:
        return CostOverride(
            rotations=fan * base.rotations,
            rotation_t=fan * base.rotation_t,
            toffolis=base.toffolis + control_points + and_chain,
            cnots=base.cnots + fan * base.rotations,
            scratch=base.scratch + (c - 1),
        )
    return CostOverride(
        rotations=fan * base.rotations,
        rotation_t=fan * base.rotation_t,
        toffolis=2 * base.toffolis + base.cnots + and_chain,
        cnots=fan * base.rotations,
        scratch=base.scratch + (c - 1),
    )


def _control_points(g: GateRecord, cfg: CostConfig) -> int | None:
    k = g.kind
    if k is GateKind.QROMLookup:
        a, b = g.registers
        entries = max(g.table.size if g.table is not None else 1 << a, 1)
        return -(-entries // qrom_swap_width(entries, max(b, 1), cfg))
    if k in (GateKind.InPlaceAdder, GateKind.PhaseAdder):
        return g.registers[1]
    if k is GateKind.ConstantAdder:
        return len(g.targets)
    if k in (GateKind.Comparator, GateKind.CSwap):
        return 2
    if g.cost is not None and g.cost.rotations == 0:
        # pre-costed arithmetic (lookup levels, phase-gradient QFT): each Toffoli gains the control
        return g.cost.toffolis
    return None


def gate_cost(g: GateRecord, delta_g: float, cfg: CostConfig = DEFAULT_COSTS, extra_controls: int = 0) -> CostOverride:
    k = g.kind
    c = len(g.controls) - NATURAL_CONTROLS.get(k, 0) + extra_controls
    if k in (GateKind.X, GateKind.CNOT):
        total = c + NATURAL_CONTROLS.get(k, 0)
        if total == 0:
            return CostOverride()
        if total == 1:
            return CostOverride(cnots=1)
        return CostOverride(toffolis=2 * total - 3, scratch=total - 2)
    if k is GateKind.SWAP and c > 0:
        return controlled_cost(CostOverride(toffolis=1, cnots=2), c - 1) if c > 1 else CostOverride(toffolis=1, cnots=2)
    base = _base_cost(g, delta_g, cfg)
    return controlled_cost(base, c, single_qubit_clifford=k in (GateKind.H, GateKind.S),
                           control_points=_control_points(g, cfg) if c > 0 else None)


def freeze_rotations(ir: CircuitIR, delta_g: float, cfg: CostConfig = DEFAULT_COSTS) -> CircuitIR:
    """Attach the cost at ``delta_g`` to every record that would otherwise be charged at the
    estimate-time tolerance, so circuits with different tolerances can be concatenated."""
    gates = []
    for g in ir.gates:
        if g.cost is None and (g.kind in ROTATION_KINDS or g.kind is GateKind.BlockGate):
            g = replace(g, cost=_base_cost(g, delta_g, cfg))
        gates.append(g)
    return replace(ir, gates=tuple(gates))


def estimate_circuit(ir: CircuitIR, cfg: CostConfig = DEFAULT_COSTS, delta_g: float = 1.0,
                     extra_controls: int = 0) -> ResourceEstimate:
    """Sum per-gate costs. Rotations without an override are charged at ``delta_g``.

    Ancillas are the declared ancilla register plus the largest transient
    scratch any single gate needs.
    """
    rot = rot_t = tof = cnot = 0
    scratch = 0
    for g in ir.gates:
        c = gate_cost(g, delta_g, cfg, extra_controls)
        rot += c.rotations
        rot_t += c.rotation_t
        tof += c.toffolis
        cnot += c.cnots
        scratch = max(scratch, c.scratch)
    anc = ir.num_ancilla_qubits + scratch
    return ResourceEstimate(
        t_count=rot_t + tof * cfg.toffoli_t_cost,
        cnot_count=cnot,
        rotation_count=rot,
        ancilla_qubits=anc,
        total_qubits=max(1, ir.num_system_qubits + anc),
        toffoli_count=tof,
    )


def cost_ledger_markdown(cfg: CostConfig = DEFAULT_COSTS) -> str:
    d = cfg.to_json()
    lines = [
        "# Cost ledger",
        "",
        "Generated by `python3 -m qdlc.costmodel`. Every resource number the planner reports comes from these rules.",
        "",
        "## Configuration defaults",
        "",
        "| key | value |",
        "|---|---|",
    ]
    lines += [f"| `{k}` | `{json.dumps(v)}` |" for k, v in d.items()]
    lines += [
        "",
        "## Rotations",
        "",
        "- T per synthesized rotation at tolerance delta: `ceil(slope * log2(1/delta) + offset)`; 0 when delta >= 1; delta <= 0 is a domain error.",
        "- RY / RZ: 1 rotation. ControlledRZ: 2 rotations + 2 CNOTs.",
        "- MultiplexedRY / MultiplexedRZ with c selectors: 2^c rotations, 2^c CNOTs (0 CNOTs when c = 0).",
        "- BlockGate on m qubits (selectors included): 4^m rotations and the quantum Shannon decomposition CNOT count",
        "  `ceil(23/48 4^m - 3/2 2^m + 4/3)` (0 for m = 1, 3 for m = 2), unless the record carries a cost override.",
        "- H, S, X: free. CNOT: 1 CNOT. SWAP: 3 CNOTs.",
        "",
        "## Arithmetic and lookups",
        "",
        f"- Toffoli = {cfg.toffoli_t_cost} T.",
        "- QROMLookup with N entries of b bits, swap width lambda: `ceil(N/lambda) + b(lambda-1)` Toffolis,",
        "  `2bN` CNOTs, `b*lambda + ceil(log2 lambda)` ancillas (the b output qubits included).",
        "  `auto` picks the power of two minimizing Toffolis; ties go to the smaller lambda.",
        "- InPlaceAdder / ConstantAdder on b target bits: `adder_toffoli_per_bit * b` Toffolis, 6b CNOTs.",
        "- PhaseAdder (addition into a phase-gradient register of w bits): `adder_toffoli_per_bit * w` Toffolis,",
        "  6w CNOTs plus 2w for the sign fan-out; the gradient register is a reusable catalyst and its preparation is not charged.",
        "- Comparator on w-bit operands: w Toffolis, 4w CNOTs, w scratch qubits.",
        "- CSwap of w pairs: w Toffolis, 2w CNOTs.",
        "- Quantum Fourier transform on n qubits: `adder_toffoli_per_bit * n(n-1)/2` Toffolis (phase-gradient",
        "  additions), `3 floor(n/2) + n(n-1)` CNOTs, n gradient qubits.",
        "",
        "## Controlled gates",
        "",
        "Extra controls c on a gate (beyond the ones in its own definition):",
        "",
        "- X / CNOT with t total controls: t = 1 is a CNOT; t >= 2 costs 2t - 3 Toffolis.",
        "- c <= 3: controls are ANDed into one ancilla (2(c-1) Toffolis incl. uncompute); each rotation becomes",
        "  a controlled rotation (x2 rotations, +2 CNOTs each), each CNOT a Toffoli, each Toffoli two Toffolis.",
        "- Lookups and arithmetic keep their own counts and add Toffolis where the control enters:",
        "  QROMLookup + ceil(N / lambda) (controlled unary iteration), adders + b (one per carry),",
        "  Comparator and CSwap + 2 (the control is ANDed into the output flag). Pre-costed records with no",
        "  rotations (lookup-driven multiplexer levels, phase-gradient QFT) add one Toffoli per Toffoli.",
        "- c > 3: rotations are charged as a 2^c-branch multiplexer (x2^c rotations and 2^c CNOTs per rotation).",
        "- Controlled H or S is charged as one controlled rotation.",
        "",
        "## Composition",
        "",
        "- Gate counts add under concatenation; ancilla and total qubit counts take the maximum (registers are reused).",
        "- Circuit ancillas = declared ancilla register + largest transient scratch of any single gate.",
        "",
    ]
    return "\n".join(lines)


if __name__ == "__main__":  # pragma: no cover
    import sys

    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("COST_LEDGER.md")
    out.write_text(cost_ledger_markdown())
