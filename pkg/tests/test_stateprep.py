import math

import numpy as np
import pytest

from qdlc.core import ErrorBudget, TargetVector, UnsupportedTargetError
from qdlc.simulator import prepared_state, run, system_marginal, verify_plan
from qdlc.stateprep.alias import build_alias_table, solve_alias_mu, synth_alias
from qdlc.stateprep.fsl import synth_fsl, truncate_fourier
from qdlc.stateprep.mps import mps_compress, solve_mps_delta, synth_mps
from qdlc.stateprep.multiplexer import (
    cascade_levels,
    grover_rudolph_angles,
    solve_mottonen,
    solve_qrom_bits,
    synth_mottonen,
    synth_qrom_stateprep,
)
from qdlc.stateprep.sparse import sparse_truncation, synth_sparse_sos
from qdlc.workloads import gaussian_state, random_state, smooth_family

from test_simulator import controlled_matrix, ry, rz


def budget(eps_a, eps_p=1e-3):
    return ErrorBudget(eps_a + eps_p, eps_p / (eps_a + eps_p), eps_p, eps_a)


def up_to_phase(a, b):
    k = np.argmax(np.abs(b))
    return a * (b[k] / a[k]) / abs(b[k] / a[k])


# ------------------------------------------------------------ multiplexer / Mottonen

def test_mottonen_tolerance_examples():
    assert solve_mottonen(1, 0.1) == pytest.approx(0.1)
    assert solve_mottonen(11, 1e-3) == pytest.approx(1e-3 / math.sqrt(2047))
    assert solve_mottonen(11, 1e-3) == pytest.approx(2.2102e-5, rel=1e-4)
    assert solve_mottonen(20, 5e-4) == pytest.approx(4.8828e-7, rel=1e-4)


def test_qrom_bits_examples():
    assert solve_qrom_bits(1, math.pi / 2) == 1
    assert solve_qrom_bits(11, 1e-3) == 18
    assert solve_qrom_bits(14, 1e-4) == 22


def test_grover_rudolph_angles():
    assert grover_rudolph_angles(TargetVector(1, [1, 0])).ry_levels[0][0] == 0
    a = grover_rudolph_angles(TargetVector(1, [1 / math.sqrt(2)] * 2)).ry_levels[0][0]
    assert a == pytest.approx(math.pi / 2)
    a = grover_rudolph_angles(TargetVector(1, [0.6, 0.8])).ry_levels[0][0]
    assert a == pytest.approx(2 * math.acos(0.6))


def test_mottonen_examples():
    plan, ir = synth_mottonen(TargetVector(1, [1, 0]), budget(0))
    np.testing.assert_allclose(prepared_state(ir)[0], [1, 0], atol=1e-15)
    plan, ir = synth_mottonen(TargetVector(2, [0.5] * 4), budget(0))
    assert plan.resources.rotation_count == 3
    assert np.linalg.norm(prepared_state(ir)[0] - 0.5) < 1e-12
    plan, _ = synth_mottonen(gaussian_state(11), budget(0))
    assert plan.hyperparams["rotations"] == 2047


@pytest.mark.parametrize("complex_valued", [False, True])
def test_mottonen_exact_on_random_targets(rng, complex_valued):
    for n in (1, 3, 6):
        t = random_state(n, rng, complex_valued)
        plan, ir = synth_mottonen(t, budget(0))
        assert verify_plan(plan, ir, t)["achieved_error"] < 1e-10


def test_qrom_single_qubit_lookup():
    plan, ir = synth_qrom_stateprep(TargetVector(1, [0.6, 0.8]), budget(0, math.pi / 2), lowered=True)
    assert plan.hyperparams["m"] == 1
    assert sum(g.kind.value == "QROMLookup" for g in ir.gates) == 2  # lookup and uncompute


@pytest.mark.parametrize("gradient", [True, False])
def test_qrom_lowered_matches_rounded_angle_oracle(rng, gradient):
    """Explicit lookup + rotation stage equals a multiplexer whose angles were rounded to m bits."""
    m = 5
    t = random_state(3, rng)
    plan, ir = synth_qrom_stateprep(t, budget(0, 1.0), use_phase_gradient=gradient, lowered=True, bits=m)
    got, leak = prepared_state(ir)
    assert leak < 1e-12
    step = 4 * math.pi / (1 << m)
    psi = np.zeros(8, dtype=complex)
    psi[0] = 1
    for lv in cascade_levels(grover_rudolph_angles(t), range(3)):
        for s, a in enumerate(lv.angles):
            ar = np.rint(a / step) * step
            ctrl = tuple((q, (s >> (len(lv.selectors) - 1 - i)) & 1) for i, q in enumerate(lv.selectors))
            u = ry(ar) if lv.kind.value == "RY" else rz(ar)
            psi = controlled_matrix(3, lv.target, ctrl, u) @ psi
    np.testing.assert_allclose(up_to_phase(got, psi), psi, atol=1e-12)
    assert np.linalg.norm(got - t.amplitudes) <= plan.hyperparams["truncation_bound"]


def test_qrom_semantic_is_exact(rng):
    t = random_state(4, rng)
    plan, ir = synth_qrom_stateprep(t, budget(0))
    assert verify_plan(plan, ir, t)["pass"]
    assert plan.hyperparams["m"] == solve_qrom_bits(4, 1e-3)


# ------------------------------------------------------------ sparse

def test_sparse_examples():
    a = np.zeros(16)
    a[[1, 4, 9, 15]] = [0.1, 0.7, -0.5, 0.3]
    a /= np.linalg.norm(a)
    tr = sparse_truncation(a, 0.0)
    assert tr.sparsity == 4 and tr.error < 1e-15
    b = np.sqrt([0.97, 0.01, 0.01, 0.01])
    tr = sparse_truncation(b, 0.2)
    assert tr.sparsity == 1
    # renormalized single term vs the target: sqrt((1 - sqrt(.97))^2 + .03)
    assert tr.error == pytest.approx(math.sqrt((1 - math.sqrt(0.97)) ** 2 + 0.03))
    assert tr.error <= 0.2


def test_sparse_truncation_is_brute_force_optimal(rng):
    a = rng.normal(size=16)
    a /= np.linalg.norm(a)
    for eps in (0.05, 0.2, 0.5):
        tr = sparse_truncation(a, eps)
        best = None
        for d in range(1, 17):
            keep = np.argsort(-np.abs(a))[:d]
            v = np.zeros(16)
            v[keep] = a[keep]
            if np.linalg.norm(v / np.linalg.norm(v) - a) <= eps:
                best = d
                break
        assert tr.sparsity == best


def test_sparse_dense_target_keeps_everything(rng):
    t = random_state(3, rng)
    plan, ir = synth_sparse_sos(t, budget(0))
    assert plan.hyperparams["D"] == 8 and plan.feasible
    assert verify_plan(plan, ir, t)["pass"]


def test_sparse_circuit_realizes_fixture():
    t = TargetVector(2, np.sqrt([0.97, 0.01, 0.01, 0.01]))
    plan, ir = synth_sparse_sos(t, budget(0.2))
    r = verify_plan(plan, ir, t)
    assert r["pass"] and r["achieved_error"] == pytest.approx(0.17386, abs=1e-5)


# ------------------------------------------------------------ MPS

def test_mps_examples():
    prod = np.zeros(16)
    prod[0] = 1
    assert mps_compress(TargetVector(4, prod), 1).error < 1e-12
    bell = TargetVector(2, np.array([1, 0, 0, 1]) / math.sqrt(2))
    assert mps_compress(bell, 1).error > 0.2
    assert mps_compress(bell, 2).error < 1e-12


def test_mps_delta_examples():
    assert solve_mps_delta([1], 0.01) == pytest.approx(0.005)
    assert solve_mps_delta([2] * 11, 1e-3) == pytest.approx(1e-3 / math.sqrt(176))
    assert solve_mps_delta([32] * 11, 1e-3) == pytest.approx(1e-3 / math.sqrt(4 * 11 * 1024))
    with pytest.raises(Exception):
        solve_mps_delta([], 1e-3)


def svd_oracle_error(v, chi):
    """Independent left-to-right truncated SVD sweep."""
    n = int(math.log2(v.size))
    rest = v.reshape(1, -1)
    cores = []
    for _ in range(n - 1):
        left = rest.shape[0]
        m = rest.reshape(left * 2, -1)
        u, s, vh = np.linalg.svd(m, full_matrices=False)
        k = min(chi, s.size)
        cores.append(u[:, :k])
        rest = (s[:k, None] * vh[:k])
    out = rest
    for u in reversed(cores):
        out = (u @ out.reshape(u.shape[1], -1)).reshape(-1)
    out = out.reshape(-1)
    out /= np.linalg.norm(out)
    return np.linalg.norm(out - v)


def test_mps_matches_svd_oracle(rng):
    for chi in (1, 2, 4):
        t = random_state(6, rng)
        assert mps_compress(t, chi).error == pytest.approx(svd_oracle_error(t.amplitudes.real, chi), abs=1e-10)
    t = smooth_family(11)
    assert mps_compress(t, 2).error == pytest.approx(svd_oracle_error(t.amplitudes.real, 2), abs=1e-10)


def test_mps_product_and_ghz():
    prod = TargetVector(5, np.eye(32)[0])
    plan, ir = synth_mps(prod, budget(0))
    assert plan.hyperparams["chi"] == 1
    assert len(ir.gates) == 5
    ghz = np.zeros(32)
    ghz[[0, 31]] = 1 / math.sqrt(2)
    plan, ir = synth_mps(TargetVector(5, ghz), budget(0))
    assert plan.hyperparams["chi"] == 2
    assert verify_plan(plan, ir, TargetVector(5, ghz))["achieved_error"] < 1e-10


def test_mps_circuit_realizes_prediction(rng):
    t = random_state(6, rng, complex_valued=True)
    plan, ir = synth_mps(t, budget(0.3))
    r = verify_plan(plan, ir, t)
    assert r["pass"] and r["achieved_error"] == pytest.approx(plan.eps_a_predicted, abs=1e-10)


# ------------------------------------------------------------ FSL

def test_fsl_examples():
    u = TargetVector(8, np.full(256, 1 / 16))
    plan, ir = synth_fsl(u, budget(0))
    assert plan.hyperparams["d"] == 1 and plan.eps_a_predicted < 1e-12
    x = np.arange(256) / 256
    c = np.cos(2 * np.pi * x)
    c /= np.linalg.norm(c)
    plan, ir = synth_fsl(TargetVector(8, c), budget(0))
    assert plan.hyperparams["d"] == 2 and plan.eps_a_predicted < 1e-12


def test_fsl_gaussian_thirty_two_coefficients_at_total_budget():
    # eps = 1e-3 split 5% / 95%: 32 coefficients leave 9.1e-4
    plan, _ = synth_fsl(gaussian_state(11), ErrorBudget.split(1e-3, 0.05))
    assert plan.hyperparams["d"] <= 32 and plan.eps_a_predicted <= 9.5e-4


@pytest.mark.xfail(strict=True, reason="the periodic extension of the sigma=0.5 Gaussian is discontinuous; "
                   "4e-4 needs 56 coefficients, rounded up to 64, on the [0, 1) grid")
def test_fsl_gaussian_coefficients_at_tight_split():
    plan, _ = synth_fsl(gaussian_state(11), budget(4e-4))
    assert plan.hyperparams["d"] <= 32 and plan.eps_a_predicted <= 4e-4


def test_fsl_truncation_matches_inverse_dft_oracle():
    x = np.arange(64) / 64
    v = np.exp(-((x - 0.4) ** 2) / 0.05)
    v /= np.linalg.norm(v)
    t = TargetVector(6, v)
    tr = truncate_fourier(t, 8)
    spec = np.fft.fft(v, norm="ortho")
    keep = np.argsort(-np.abs(spec), kind="stable")[:8]
    s = np.zeros(64, dtype=complex)
    s[keep] = spec[keep]
    rec = np.fft.ifft(s, norm="ortho")
    rec /= np.linalg.norm(rec)
    assert tr.error == pytest.approx(np.linalg.norm(rec - v), abs=1e-12)


def test_fsl_circuit_equals_prediction():
    x = np.arange(64) / 64
    v = np.exp(-((x - 0.4) ** 2) / 0.05)
    t = TargetVector(6, v / np.linalg.norm(v))
    plan, ir = synth_fsl(t, budget(0.05))
    r = verify_plan(plan, ir, t)
    assert r["pass"] and abs(r["achieved_error"] - plan.eps_a_predicted) < 1e-10


# ------------------------------------------------------------ alias

def test_alias_mu_examples():
    assert solve_alias_mu(0.5) == 1
    assert solve_alias_mu(1e-3) == 10
    assert solve_alias_mu(2.0**-15) == 15


def test_alias_table_examples():
    t = build_alias_table(np.full(4, 0.25), 2)
    assert list(t.thresholds) == [4, 4, 4, 4]
    t = build_alias_table(np.array([0.75, 0.25]), 2)
    assert list(t.thresholds) == [4, 2] and t.destinations[1] == 0
    np.testing.assert_allclose(t.reconstructed(), [6 / 8, 2 / 8])


def block_count_oracle(table):
    """Walk every (index, block) pair and credit the outcome it lands on."""
    full = 1 << table.mu
    hits = np.zeros(table.size)
    for i in range(table.size):
        for b in range(full):
            hits[i if b < table.thresholds[i] else table.destinations[i]] += 1
    return hits / (table.size * full)


def test_alias_random_reconstruction(rng):
    for _ in range(10):
        p = rng.dirichlet(np.ones(8))
        t = build_alias_table(p, 10)
        rec = block_count_oracle(t)
        np.testing.assert_allclose(rec, t.reconstructed(), atol=1e-15)
        assert np.linalg.norm(rec - p) <= 2.0**-10 * math.sqrt(8)


def test_alias_simulated_marginals(rng):
    u = TargetVector(2, np.full(4, 0.5))
    plan, ir = synth_alias(u, ErrorBudget.split(0.5, 1.0))
    np.testing.assert_allclose(system_marginal(ir), 0.25, atol=1e-12)
    two = TargetVector(1, np.sqrt([0.75, 0.25]))
    plan, ir = synth_alias(two, ErrorBudget.split(0.25, 1.0))
    assert plan.hyperparams["mu"] == 2
    np.testing.assert_allclose(system_marginal(ir), [0.75, 0.25], atol=1e-12)
    p = rng.dirichlet(np.ones(16))
    t = TargetVector(4, np.sqrt(p))
    plan, ir = synth_alias(t, ErrorBudget.split(1e-3, 1.0))
    r = verify_plan(plan, ir, t)
    assert r["pass"] and r["achieved_error"] <= 1e-3


def test_alias_rejects_signed_amplitudes():
    with pytest.raises(UnsupportedTargetError):
        synth_alias(TargetVector(1, [0.6, -0.8]), ErrorBudget.split(1e-3, 1.0))
    with pytest.raises(UnsupportedTargetError):
        synth_alias(TargetVector(1, [0.6, 0.8j]), ErrorBudget.split(1e-3, 1.0))


def test_mps_smooth_family_bond_and_simulation():
    # SVD oracle: chi=2 leaves 3.6e-2 on this family, chi=4 leaves 3.0e-5 (see the decisions ledger)
    t = smooth_family(11)
    assert svd_oracle_error(t.amplitudes.real, 2) == pytest.approx(3.607e-2, rel=1e-3)
    plan, ir = synth_mps(t, budget(3e-4))
    assert plan.hyperparams["chi"] == 4
    r = verify_plan(plan, ir, t)
    assert r["pass"] and r["achieved_error"] <= 3e-4
