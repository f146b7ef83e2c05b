import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdlc.core import CircuitIR, DomainError, GateKind, GateRecord, ResourceLimitError
from qdlc.diagenc import walsh_term_circuit
from qdlc.simulator import (
    BEYOND_GRID,
    StateVector,
    Transform,
    apply,
    extract_block,
    kl_divergence,
    run_sampling_study,
    shots_to_tolerance,
    transformed_distribution,
)

H = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def controlled_matrix(nq, target, controls, u):
    """Dense oracle built one basis column at a time."""
    dim = 1 << nq
    out = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        bits = [(j >> (nq - 1 - q)) & 1 for q in range(nq)]
        if all(bits[q] == int(v) for q, v in controls):
            b = bits[target]
            for nb in (0, 1):
                nbits = list(bits)
                nbits[target] = nb
                i = sum(x << (nq - 1 - q) for q, x in enumerate(nbits))
                out[i, j] += u[nb, b]
        else:
            out[j, j] = 1
    return out


def ry(t):
    return np.array([[math.cos(t / 2), -math.sin(t / 2)], [math.sin(t / 2), math.cos(t / 2)]])


def rz(t):
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def test_empty_circuit_is_identity(rng):
    v = rng.normal(size=8) + 0j
    out = apply(CircuitIR(3, 0, ()), StateVector(3, v))
    np.testing.assert_array_equal(out.amplitudes, v)


def test_hadamard_on_zero():
    out = apply(CircuitIR(1, 0, (GateRecord(GateKind.H, (0,)),)), StateVector(1, [1, 0]))
    np.testing.assert_allclose(out.amplitudes, [1 / math.sqrt(2)] * 2, atol=1e-15)


@pytest.mark.parametrize("kind,mat", [(GateKind.RY, ry), (GateKind.RZ, rz)])
def test_controlled_rotation_matches_dense_oracle(rng, kind, mat, kernels):
    nq = 4
    for _ in range(5):
        t = rng.uniform(-np.pi, np.pi)
        target = int(rng.integers(nq))
        others = [q for q in range(nq) if q != target]
        ctrls = tuple((q, bool(rng.integers(2))) for q in rng.choice(others, 2, replace=False))
        g = GateRecord(kind, (target,), ctrls, params=[t])
        v = rng.normal(size=16) + 1j * rng.normal(size=16)
        got = apply(CircuitIR(nq, 0, (g,)), StateVector(nq, v), kernels=kernels).amplitudes
        np.testing.assert_allclose(got, controlled_matrix(nq, target, ctrls, mat(t)) @ v, atol=1e-12)


def test_multiplexer_matches_branchwise_oracle(rng, kernels):
    angles = rng.uniform(-np.pi, np.pi, 4)
    g = GateRecord(GateKind.MultiplexedRY, (0, 2, 1), params=angles, registers=(2, 1))
    u = np.eye(8, dtype=complex)
    for s, (a, b) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
        m = controlled_matrix(3, 1, ((0, a), (2, b)), ry(angles[s]))
        u = m @ u
    ir = CircuitIR(3, 0, (g,))
    np.testing.assert_allclose(extract_block(ir, kernels=kernels), u, atol=1e-12)


def random_circuit(rng, nq, depth):
    gates = []
    for _ in range(depth):
        k = rng.integers(4)
        t = int(rng.integers(nq))
        if k == 0:
            gates.append(GateRecord(GateKind.H, (t,)))
        elif k == 1:
            c = int((t + 1 + rng.integers(nq - 1)) % nq)
            gates.append(GateRecord(GateKind.CNOT, (t,), ((c, True),)))
        elif k == 2:
            gates.append(GateRecord(GateKind.RY, (t,), params=[rng.uniform(-3, 3)]))
        else:
            gates.append(GateRecord(GateKind.RZ, (t,), params=[rng.uniform(-3, 3)]))
    return CircuitIR(nq, 0, tuple(gates))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_unitarity_and_linearity(seed):
    rng = np.random.default_rng(seed)
    ir = random_circuit(rng, 4, 20)
    u = extract_block(ir)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(16), atol=1e-12)
    a, b = (rng.normal(size=16) + 1j * rng.normal(size=16) for _ in range(2))
    lhs = apply(ir, StateVector(4, 2 * a - 3j * b)).amplitudes
    rhs = 2 * apply(ir, StateVector(4, a)).amplitudes - 3j * apply(ir, StateVector(4, b)).amplitudes
    np.testing.assert_allclose(lhs, rhs, atol=1e-11)


def test_walsh_term_exhaustive():
    """exp(i c Z^k) is a diagonal with phase c * (-1)^{popcount(j & k)}."""
    c = 0.377
    for n in range(1, 5):
        j = np.arange(1 << n)
        for k in range(1, 1 << n):
            sign = 1 - 2 * (np.array([bin(x & k).count("1") for x in j]) & 1)
            want = np.diag(np.exp(1j * c * sign))
            np.testing.assert_allclose(extract_block(walsh_term_circuit(n, k, c)), want, atol=1e-12)


def test_resource_guard():
    ir = CircuitIR(14, 0, tuple(GateRecord(GateKind.H, (q,)) for q in range(14)))
    with pytest.raises(ResourceLimitError):
        extract_block(ir, max_qubits=12)


def test_kl_examples():
    assert kl_divergence([0.2, 0.8], [0.2, 0.8]) == 0
    assert kl_divergence([1, 0], [0.5, 0.5]) == pytest.approx(math.log(2))
    assert kl_divergence([0.75, 0.25], [0.25, 0.75]) == pytest.approx(0.5 * math.log(3))
    assert kl_divergence([0.5, 0.5], [1, 0]) == math.inf
    with pytest.raises(DomainError):
        kl_divergence([1.1, -0.1], [0.5, 0.5])


def test_kl_smoothing_fills_empty_outcomes():
    shots = 100
    q = np.array([1.0, 0.0])
    delta = 1 / (10 * shots)
    qs = np.array([1.0, delta]) / (1 + delta)
    assert kl_divergence([0.5, 0.5], q, shots=shots) == pytest.approx(
        0.5 * math.log(0.5 / qs[0]) + 0.5 * math.log(0.5 / qs[1]))


def test_transforms_of_uniform_state():
    a = np.ones(16) / 4
    np.testing.assert_allclose(transformed_distribution(a, Transform.Walsh), np.eye(16)[0])
    np.testing.assert_allclose(transformed_distribution(a, Transform.QFT), np.eye(16)[0])
    np.testing.assert_allclose(transformed_distribution(a, Transform.Identity), np.full(16, 1 / 16))


def test_shots_for_delta_distribution():
    grid = [1, 10, 100]
    s = run_sampling_study(np.eye(8)[3], Transform.Identity, grid)
    assert s.kl_curve[1] == 0
    assert shots_to_tolerance(s, 1e-9) == 1


def test_uniform_walsh_needs_no_more_shots_than_identity():
    a = np.ones(64) / 8
    grid = [1, 10, 100, 1000, 10000]
    ident = run_sampling_study(a, Transform.Identity, grid)
    walsh = run_sampling_study(a, Transform.Walsh, grid)
    out = shots_to_tolerance([ident, walsh], 0.05)
    assert out[Transform.Walsh] == 1
    assert out[Transform.Walsh] <= out[Transform.Identity]


def test_kl_vanishes_with_many_shots(rng):
    for _ in range(3):
        p = rng.dirichlet(np.ones(4))
        s = run_sampling_study(np.sqrt(p), Transform.Identity, [10**6])
        assert s.kl_curve[10**6] < 1e-3


def test_beyond_grid_sentinel():
    a = np.ones(256) / 16
    s = run_sampling_study(a, Transform.Identity, [1, 2])
    tag, last = shots_to_tolerance(s, 1e-6)
    assert tag == BEYOND_GRID and last == s.kl_curve[2]


def test_study_is_seeded():
    a = np.linspace(1, 2, 32)
    a /= np.linalg.norm(a)
    r1 = run_sampling_study(a, Transform.QFT, [5, 50], seed=7)
    r2 = run_sampling_study(a, Transform.QFT, [5, 50], seed=7)
    assert r1.records == r2.records


def test_study_needs_ten_trials():
    with pytest.raises(DomainError):
        run_sampling_study([1, 0], Transform.Identity, [1], trials=3)
