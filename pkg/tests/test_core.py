import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdlc.core import (
    CircuitIR,
    DegenerateInputError,
    DimensionError,
    DomainError,
    ErrorBudget,
    GateKind,
    GateRecord,
    NormViolationError,
    ResourceEstimate,
    TargetVector,
    Task,
    circuit_from_json,
    circuit_to_json,
    dumps,
    l2_distance,
    linf_distance,
    loads,
    target_from_json,
    target_to_json,
    validate_target,
)


def test_l2_examples():
    assert l2_distance([0.3, 0.1], [0.3, 0.1]) == 0
    assert l2_distance([1, 0], [0, 1]) == pytest.approx(math.sqrt(2))
    assert l2_distance([0.6, 0.8], [0.8, 0.6]) == pytest.approx(math.sqrt(0.08), abs=1e-15)


def test_linf_examples():
    assert linf_distance([1, 1, 1], [1, 0.5, 1]) == 0.5
    with pytest.raises(DimensionError):
        linf_distance([1, 2], [1])
    with pytest.raises(DimensionError):
        l2_distance([1, 2], [1])


def test_linf_is_spectral_norm_of_diagonal_difference(rng):
    for _ in range(20):
        a = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        b = np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
        spectral = np.linalg.svd(np.diag(a) - np.diag(b), compute_uv=False)[0]
        assert linf_distance(a, b) == pytest.approx(spectral, abs=1e-12)


def test_validate_target():
    v = validate_target(TargetVector(2, [2, 0, 0, 0]))
    np.testing.assert_allclose(v.amplitudes, [1, 0, 0, 0])
    assert v.scale == 2
    u = TargetVector(1, np.array([1, 1]) / math.sqrt(2))
    assert validate_target(u) is u
    with pytest.raises(NormViolationError):
        validate_target(TargetVector(1, [1.5, 0.2], Task.DIAGONAL))
    with pytest.raises(DegenerateInputError):
        validate_target(TargetVector(2, [0, 0, 0, 0]))
    with pytest.raises(DimensionError):
        TargetVector.from_values([1, 2, 3])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=8, max_size=8).filter(lambda v: np.linalg.norm(v) > 1e-3))
def test_validate_idempotent(values):
    once = validate_target(TargetVector(3, values))
    twice = validate_target(once)
    assert twice is once
    assert np.linalg.norm(once.amplitudes) == pytest.approx(1, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-8, 1.0), st.floats(0.01, 1.0))
def test_budget_split_sums(eps, omega):
    b = ErrorBudget.split(eps, omega)
    assert b.eps_p + b.eps_a == pytest.approx(eps, rel=1e-12)
    assert b.eps_p == pytest.approx(omega * eps)


def test_budget_rejects_bad_values():
    for eps, w in [(0, 0.5), (-1, 0.5), (1e-3, 0), (1e-3, 1.2)]:
        with pytest.raises(DomainError):
            ErrorBudget.split(eps, w)


def test_resource_addition():
    a = ResourceEstimate(t_count=4, cnot_count=2, rotation_count=1, ancilla_qubits=3)
    b = ResourceEstimate(t_count=1, cnot_count=1, rotation_count=0, ancilla_qubits=5)
    s = a + b
    assert (s.t_count, s.cnot_count, s.rotation_count) == (5, 3, 1)


def test_target_json_round_trip(rng):
    v = TargetVector(3, rng.normal(size=8) + 1j * rng.normal(size=8), Task.DIAGONAL)
    w = target_from_json(loads(dumps(target_to_json(v))))
    np.testing.assert_array_equal(v.amplitudes, w.amplitudes)
    assert w.task is Task.DIAGONAL


def test_circuit_json_round_trip():
    ir = CircuitIR(2, 1, (
        GateRecord(GateKind.H, (0,)),
        GateRecord(GateKind.RY, (1,), ((0, True),), params=[0.25]),
        GateRecord(GateKind.MultiplexedRZ, (0, 1, 2), params=[0.1, 0.2, 0.3, 0.4], registers=(2, 1)),
    ))
    back = circuit_from_json(loads(dumps(circuit_to_json(ir))))
    assert dumps(circuit_to_json(back)) == dumps(circuit_to_json(ir))


def test_gate_controls_and_remap():
    g = GateRecord(GateKind.RY, (0,), ((1, True),), params=[0.5])
    h = g.with_controls([(2, False)])
    assert h.controls == ((2, False), (1, True))
    r = h.remapped([5, 6, 7])
    assert r.targets == (5,) and r.controls == ((7, False), (6, True))


def test_loads_reports_line():
    with pytest.raises(Exception) as exc:
        loads('{\n "a": 1,\n oops}', "x.json")
    assert "3" in str(exc.value)
