import math

import pytest
from hypothesis import given, settings, strategies as st

from qdlc.core import CircuitIR, DomainError, GateKind, GateRecord, ValidationError
from qdlc.costmodel import (
    DEFAULT_COSTS,
    CostConfig,
    estimate_circuit,
    gate_cost,
    qrom_cost,
    qrom_swap_width,
    t_count_for_rotation,
)


def test_rotation_t_examples():
    assert t_count_for_rotation(0.5) == 5
    assert t_count_for_rotation(1e-5) == 52
    assert t_count_for_rotation(0.999999) == 2
    assert t_count_for_rotation(1.0) == 0
    assert t_count_for_rotation(3.0) == 0
    for bad in (0.0, -1e-3):
        with pytest.raises(DomainError):
            t_count_for_rotation(bad)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-15, 0.999), st.floats(1e-15, 0.999))
def test_rotation_t_monotone(a, b):
    lo, hi = sorted((a, b))
    assert t_count_for_rotation(lo) >= t_count_for_rotation(hi)


def test_rotation_t_matches_formula():
    for d in (1e-2, 1e-4, 3.7e-9):
        assert t_count_for_rotation(d) == math.ceil(3.02 * math.log2(1 / d) + 1.77)


def test_qrom_examples():
    r = qrom_cost(1, 8, lam=1)
    assert (r.toffoli_count, r.t_count) == (1, 4)
    r = qrom_cost(2, 1, lam=1)
    assert (r.toffoli_count, r.t_count) == (2, 8)


def test_qrom_auto_width_regression():
    # exhaustive power-of-two scan: ceil(1024/lam) + 16(lam-1) is smallest at lam=8
    scan = {lam: -(-1024 // lam) + 16 * (lam - 1) for lam in (1 << k for k in range(11))}
    best = min(scan, key=lambda lam: (scan[lam], lam))
    assert qrom_swap_width(1024, 16) == best == 8
    assert qrom_cost(1024, 16).t_count == 4 * scan[8] == 960


def test_qrom_auto_never_worse_than_plain_lookup():
    for entries in (1 << k for k in range(13)):
        for bits in (1, 4, 18):
            assert qrom_cost(entries, bits).toffoli_count <= qrom_cost(entries, bits, lam=1).toffoli_count


def test_qrom_toffoli_cost_seven():
    cfg = CostConfig(toffoli_t_cost=7)
    assert qrom_cost(2, 1, cfg, lam=1).t_count == 14


def test_config_validation():
    with pytest.raises(DomainError):
        CostConfig(toffoli_t_cost=5)
    with pytest.raises(DomainError):
        CostConfig(qrom_swap_width=3)
    with pytest.raises(ValidationError):
        CostConfig.from_json({"t_slope": 1})
    assert CostConfig.from_json(DEFAULT_COSTS.to_json()) == DEFAULT_COSTS


def test_estimate_examples():
    empty = estimate_circuit(CircuitIR(2, 0, ()))
    assert (empty.t_count, empty.cnot_count, empty.rotation_count) == (0, 0, 0)
    one = estimate_circuit(CircuitIR(2, 0, (GateRecord(GateKind.CNOT, (1,), ((0, True),)),)))
    assert (one.t_count, one.cnot_count, one.rotation_count) == (0, 1, 0)
    mux = GateRecord(GateKind.MultiplexedRY, (0, 1, 2, 3), params=[0.1] * 8, registers=(3, 1))
    r = estimate_circuit(CircuitIR(4, 0, (mux,)), delta_g=1e-5)
    assert (r.rotation_count, r.cnot_count, r.t_count) == (8, 8, 416)


def test_estimate_is_additive(rng):
    gates = [GateRecord(GateKind.RY, (q % 3,), params=[0.3]) for q in range(5)]
    gates += [GateRecord(GateKind.CNOT, (1,), ((0, True),)),
              GateRecord(GateKind.InPlaceAdder, (0, 1, 2, 3), registers=(2, 2))]
    a = estimate_circuit(CircuitIR(4, 0, tuple(gates[:4])), delta_g=1e-4)
    b = estimate_circuit(CircuitIR(4, 0, tuple(gates[4:])), delta_g=1e-4)
    ab = estimate_circuit(CircuitIR(4, 0, tuple(gates)), delta_g=1e-4)
    assert ab.t_count == a.t_count + b.t_count
    assert ab.cnot_count == a.cnot_count + b.cnot_count
    assert ab.rotation_count == a.rotation_count + b.rotation_count


def test_controls_never_reduce_cost():
    gates = [
        GateRecord(GateKind.RY, (0,), params=[0.3]),
        GateRecord(GateKind.InPlaceAdder, (0, 1, 2, 3), registers=(2, 2)),
        GateRecord(GateKind.ConstantAdder, (0, 1, 2), table=[3]),
        GateRecord(GateKind.QROMLookup, (0, 1, 2, 3), table=[1, 2, 3, 0], registers=(2, 2)),
    ]
    for g in gates:
        prev = gate_cost(g, 1e-3)
        for c in range(1, 6):
            cur = gate_cost(g, 1e-3, extra_controls=c)
            tof = lambda x: x.rotation_t + 4 * x.toffolis
            assert tof(cur) >= tof(prev)
            prev = cur


def test_toffoli_ladder():
    assert gate_cost(GateRecord(GateKind.X, (0,), ((1, True), (2, True))), 1).toffolis == 1
    assert gate_cost(GateRecord(GateKind.X, (0,), ((1, True), (2, True), (3, True))), 1).toffolis == 3
