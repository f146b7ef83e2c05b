import warnings

import numpy as np
import pytest

from qdlc.core import DomainError, InfeasibleError, Method, TargetVector, Task
from qdlc.planner import (
    PlanRequest,
    hybrid_circuit,
    hybrid_plan,
    omega_grid,
    omega_tradeoff_curve,
    plan_circuit,
    sweep,
)
from qdlc.simulator import verify_plan
from qdlc.workloads import gaussian_state, sparse_state, split_state


def test_omega_grid():
    g = omega_grid(0.05)
    assert len(g) == 20 and g[0] == 0.05 and g[-1] == 1.0
    assert omega_grid(0.3) == [0.3, 0.6, 0.9, 1.0]
    with pytest.raises(DomainError):
        omega_grid(0)


def test_basis_state_selection():
    # a single zero-angle rotation is still charged at the synthesis tolerance (32 T), while a
    # one-term sparse loader needs one lookup Toffoli; see the decisions ledger
    r = sweep(PlanRequest(TargetVector(1, [1, 0]), 1e-3))
    assert all(e.plan.feasible for e in r.per_method_per_omega if e.plan.method is not Method.AliasSampling)
    assert r.selected.method is Method.SparseSOS
    mott = [e.plan for e in r.per_method_per_omega if e.plan.method is Method.Mottonen]
    assert all(p.hyperparams["rotations"] == 1 for p in mott)
    assert r.selected.resources.t_count < min(p.resources.t_count for p in mott)


def test_gaussian_selects_fsl():
    r = sweep(PlanRequest(gaussian_state(11), 1e-3))
    assert r.selected.method is Method.FSL
    best = {}
    for e in r.per_method_per_omega:
        if e.plan.feasible:
            t = e.plan.resources.t_count
            best[e.plan.method] = min(best.get(e.plan.method, t), t)
    assert all(best[Method.FSL] < best[m] for m in (Method.Mottonen, Method.QromStatePrep, Method.SparseSOS))


def test_sparse_selected_at_twenty_qubits():
    r = sweep(PlanRequest(sparse_state(20, 16), 1e-3))
    assert r.selected.method is Method.SparseSOS


def test_selected_plan_meets_budget(rng):
    from qdlc.workloads import random_state

    for _ in range(3):
        t = random_state(5, rng)
        r = sweep(PlanRequest(t, 0.2))
        p = r.selected
        assert p.eps_a_predicted <= p.budget.eps_a + 1e-12
        assert p.budget.eps_a + p.budget.eps_p == pytest.approx(0.2)
        assert verify_plan(p, plan_circuit(p, t), t)["pass"]


def test_methods_restriction():
    r = sweep(PlanRequest(gaussian_state(6), 1e-3, methods=(Method.Mottonen,)))
    assert {e.plan.method for e in r.per_method_per_omega} == {Method.Mottonen}
    assert len(r.per_method_per_omega) == 20


def test_wrong_task_rejected():
    with pytest.raises(DomainError):
        sweep(PlanRequest(gaussian_state(3), 1e-3, methods=(Method.WalshDiag,)))


def test_infeasible_report_names_each_method(rng):
    t = TargetVector(6, rng.uniform(-1, 1, 64), Task.DIAGONAL)
    with pytest.raises(InfeasibleError) as exc:
        sweep(PlanRequest(t, 1e-9, methods=(Method.QspDiag,)))
    assert "diag-qsp" in str(exc.value)


def test_omega_curve_invariants():
    req = PlanRequest(gaussian_state(8), 1e-3)
    rows = omega_tradeoff_curve(req, Method.Mottonen)
    assert rows[-1]["omega"] == 1.0 and rows[-1]["eps_a"] == 0
    t = [r["t_count"] for r in rows]
    assert all(a >= b for a, b in zip(t, t[1:]))
    fsl = omega_tradeoff_curve(req, Method.FSL)
    assert len(fsl) == 20
    # at omega = 1 no approximation error is allowed, so FSL must keep every coefficient
    assert fsl[-1]["eps_a_predicted"] == 0


def test_omega_curve_fixture():
    """14-qubit sigma=0.9 Gaussian, eps=5e-3: pinned by direct sweep."""
    rows = omega_tradeoff_curve(PlanRequest(gaussian_state(14, sigma=0.9), 5e-3), Method.FSL)
    feasible = [r for r in rows if r["feasible"]]
    assert feasible
    best = min(feasible, key=lambda r: r["t_count"])
    assert best["omega"] < 1.0


def test_determinism_with_workers():
    req1 = PlanRequest(gaussian_state(7), 1e-3)
    req4 = PlanRequest(gaussian_state(7), 1e-3, workers=4)
    a, b = sweep(req1), sweep(req4)
    assert a.to_json() == b.to_json()


def test_hybrid_splits_heterogeneous_target():
    t = split_state(10)
    r = hybrid_plan(PlanRequest(t, 1e-3, hybrid_max_depth=1))
    assert r.selected.method is Method.Hybrid
    segs = {s["prefix"]: s["method"] for s in r.selected.hyperparams["segments"]}
    assert segs["0"] == "sparse"
    assert segs["1"] in ("fsl", "mps")
    flat = sweep(PlanRequest(t, 1e-3))
    assert r.selected.resources.t_count < flat.selected.resources.t_count
    ir = hybrid_circuit(r.selected, t)
    v = verify_plan(r.selected, ir, t)
    assert v["pass"] and v["achieved_error"] <= 1e-3


def test_hybrid_keeps_flat_fsl_on_gaussian():
    r = hybrid_plan(PlanRequest(gaussian_state(10), 1e-3, hybrid_max_depth=1))
    assert r.selected.method is Method.FSL


def test_hybrid_depth_zero_is_sweep():
    req = PlanRequest(gaussian_state(6), 1e-3)
    assert hybrid_plan(req).to_json() == sweep(req).to_json()


def test_hybrid_depth_clamped():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        hybrid_plan(PlanRequest(split_state(4, nonzeros=2), 1e-2, hybrid_max_depth=5))
    assert any("clamped" in str(x.message) for x in w)
