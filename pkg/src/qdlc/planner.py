"""Budget-split grid search, method selection, and hybrid dyadic partitioning."""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import diagenc, stateprep
from .core import (
    DIAGONAL_METHODS,
    SCHEMA_VERSION,
    CircuitIR,
    DomainError,
    ErrorBudget,
    GateKind,
    GateRecord,
    InfeasibleError,
    Method,
    MethodPlan,
    ResourceEstimate,
    TargetVector,
    Task,
    UnsupportedTargetError,
    validate_target,
)
from .costmodel import DEFAULT_COSTS, CostConfig, estimate_circuit, freeze_rotations
from .stateprep.multiplexer import EXACT_TOL, rotation_tolerance

SYNTHESIZERS = {**stateprep.SYNTHESIZERS, **diagenc.SYNTHESIZERS}

# the alias loader leaves a garbage register, so it is opt-in
DEFAULT_STATE_METHODS = (Method.Mottonen, Method.QromStatePrep, Method.SparseSOS, Method.MPS, Method.FSL)
HYBRID_WEIGHT_SHARE = 0.1


class Metric(enum.Enum):
    TCount = "t-count"
    CnotCount = "cnot-count"
    WeightedSum = "weighted-sum"


def metric_key(res: ResourceEstimate, metric: Metric, weights=(1.0, 1.0)) -> tuple:
    if metric is Metric.TCount:
        return (res.t_count, res.cnot_count)
    if metric is Metric.CnotCount:
        return (res.cnot_count, res.t_count)
    return (weights[0] * res.t_count + weights[1] * res.cnot_count, res.t_count)


def omega_grid(step: float = 0.05) -> list[float]:
    if not 0 < step <= 1:
        raise DomainError("omega step must lie in (0, 1]")
    k = max(1, int(math.floor(1.0 / step + 1e-9)))
    grid = sorted({round(i * step, 12) for i in range(1, k + 1) if round(i * step, 12) <= 1.0} | {1.0})
    return grid


@dataclass(frozen=True, eq=False)
class PlanRequest:
    target: TargetVector
    epsilon: float
    omega_grid_step: float = 0.05
    methods: tuple[Method, ...] | None = None
    hybrid_max_depth: int = 0
    cost_config: CostConfig = DEFAULT_COSTS
    metric: Metric = Metric.TCount
    metric_weights: tuple[float, float] = (1.0, 1.0)
    workers: int = 1

    def allowed(self) -> tuple[Method, ...]:
        if self.methods is not None:
            return tuple(self.methods)
        return DEFAULT_STATE_METHODS if self.target.task is Task.STATE_PREP else DIAGONAL_METHODS


@dataclass(frozen=True, eq=False)
class PlanEntry:
    omega: float
    plan: MethodPlan

    def to_json(self) -> dict:
        return {"omega": self.omega, **self.plan.to_json()}


@dataclass(frozen=True, eq=False)
class PlanReport:
    per_method_per_omega: tuple[PlanEntry, ...]
    selected: MethodPlan
    selected_omega: float
    selection_metric: Metric
    n_qubits: int
    task: Task
    epsilon: float
    segments: tuple = field(default=())  # hybrid leaves, empty for flat plans

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "n_qubits": self.n_qubits,
            "task": self.task.value,
            "epsilon": self.epsilon,
            "selection_metric": self.selection_metric.value,
            "selected_omega": self.selected_omega,
            "selected": self.selected.to_json(),
            "per_method_per_omega": [e.to_json() for e in self.per_method_per_omega],
        }

    def table(self) -> str:
        """Best feasible entry per method: method x (CNOT, T)."""
        best: dict[Method, PlanEntry] = {}
        for e in self.per_method_per_omega:
            if e.plan.feasible:
                cur = best.get(e.plan.method)
                if cur is None or _entry_key(e, self.selection_metric) < _entry_key(cur, self.selection_metric):
                    best[e.plan.method] = e
        rows = [f"{'method':<16}{'omega':>7}{'CNOT':>14}{'T':>14}{'qubits':>8}"]
        for m in sorted(best, key=lambda m: m.order):
            e = best[m]
            r = e.plan.resources
            mark = " *" if e.plan is self.selected else ""
            rows.append(f"{m.value:<16}{e.omega:>7.2f}{r.cnot_count:>14.3e}{r.t_count:>14.3e}{r.total_qubits:>8}{mark}")
        if self.selected.method is Method.Hybrid:
            r = self.selected.resources
            rows.append(f"{'hybrid':<16}{'':>7}{r.cnot_count:>14.3e}{r.t_count:>14.3e}{r.total_qubits:>8} *")
        return "\n".join(rows) + "\n"


def _entry_key(e: PlanEntry, metric: Metric, weights=(1.0, 1.0)) -> tuple:
    r = e.plan.resources
    return metric_key(r, metric, weights) + (r.total_qubits, e.plan.method.order, -e.omega)


# ------------------------------------------------------------ feasibility re-check

def _strict(lhs: float, rhs: float) -> bool:
    return lhs < rhs


def hyperparams_satisfied(plan: MethodPlan, n: int) -> bool:
    """Re-check each solved hyperparameter against its defining inequality."""
    hp = plan.hyperparams
    eps_p = plan.budget.eps_p
    m = plan.method
    if m is Method.Mottonen:
        return hp["delta_g"] <= eps_p / math.sqrt(hp["rotations"])
    if m in (Method.QromStatePrep, Method.SparseSOS, Method.FSL, Method.QromDiag):
        rot = hp.get("rotations", 0)
        if m in (Method.SparseSOS, Method.FSL) and hp.get("m", 0) == 0:
            return rot == 0 or hp["delta_g"] <= eps_p
        share = eps_p if hp.get("phase_gradient", True) else eps_p / 2
        return math.ldexp(math.pi, -hp["m"]) * math.sqrt(rot) <= share
    if m is Method.MPS:
        dims = [1] + list(hp["bond_dims"]) + [1]
        blocks = [max(dims[k], dims[k + 1]) for k in range(len(dims) - 1)]
        return _strict(hp["delta_g"], eps_p / math.sqrt(4 * sum(c * c for c in blocks)))
    if m is Method.AliasSampling:
        return math.ldexp(1.0, -hp["mu"]) <= eps_p
    if m is Method.MottonenDiag:
        return _strict(hp["delta_g"], eps_p * 2.0 ** (-n / 2))
    if m is Method.QspDiag:
        return hp["delta_g"] <= eps_p / math.sqrt(max(hp["d"], 1))
    if m is Method.WalshDiag:
        return _strict(hp["delta_g"], eps_p / math.sqrt(hp["kappa"]))
    return True


def plan_is_feasible(plan: MethodPlan, n: int) -> bool:
    return (plan.feasible and plan.eps_a_predicted <= plan.budget.eps_a + EXACT_TOL
            and hyperparams_satisfied(plan, n))


# ------------------------------------------------------------ sweep

def synthesize(method: Method, target: TargetVector, budget: ErrorBudget, cfg: CostConfig = DEFAULT_COSTS,
               estimate_only: bool = False) -> tuple[MethodPlan, CircuitIR]:
    if method not in SYNTHESIZERS:
        raise DomainError(f"no synthesizer for {method.value}")
    return SYNTHESIZERS[method](target, budget, cfg=cfg, estimate_only=estimate_only)


def _evaluate(args) -> PlanEntry:
    method, target, budget, cfg = args
    try:
        plan, _ = synthesize(method, target, budget, cfg, estimate_only=True)
    except UnsupportedTargetError as e:
        plan = MethodPlan(method, {}, budget, ResourceEstimate(total_qubits=max(1, target.n_qubits)),
                          False, math.inf, f"unsupported target: {e}")
    if plan.feasible and not plan_is_feasible(plan, target.n_qubits):
        plan = MethodPlan(plan.method, plan.hyperparams, plan.budget, plan.resources, False,
                          plan.eps_a_predicted, "failed independent feasibility re-check")
    return PlanEntry(budget.omega, plan)


def _check_task(method: Method, task: Task) -> None:
    diag = method in DIAGONAL_METHODS
    if diag != (task is Task.DIAGONAL) or method is Method.Hybrid:
        raise DomainError(f"method {method.value} does not handle {task.value} targets")


def sweep(request: PlanRequest) -> PlanReport:
    target = validate_target(request.target)
    methods = request.allowed()
    for m in methods:
        _check_task(m, target.task)
    jobs = [(m, target, ErrorBudget.split(request.epsilon, w), request.cost_config)
            for w in omega_grid(request.omega_grid_step) for m in methods]
    if request.workers > 1:
        with ThreadPoolExecutor(request.workers) as pool:
            entries = tuple(pool.map(_evaluate, jobs))
    else:
        entries = tuple(_evaluate(j) for j in jobs)
    feasible = [e for e in entries if e.plan.feasible]
    if not feasible:
        raise InfeasibleError(_infeasibility_message(entries, request.epsilon), _limits(entries))
    best = min(feasible, key=lambda e: _entry_key(e, request.metric, request.metric_weights))
    return PlanReport(entries, best.plan, best.omega, request.metric, target.n_qubits, target.task,
                      request.epsilon)


def _limits(entries) -> dict:
    """Per method: the smallest approximation error it reached and the budget it had there."""
    out: dict[str, dict] = {}
    for e in entries:
        p = e.plan
        cur = out.get(p.method.value)
        gap = p.eps_a_predicted - p.budget.eps_a
        if cur is None or gap < cur["gap"]:
            out[p.method.value] = {"omega": e.omega, "eps_a_predicted": p.eps_a_predicted,
                                   "eps_a_budget": p.budget.eps_a, "gap": gap, "notes": p.notes}
    return out


def _infeasibility_message(entries, epsilon) -> str:
    lines = [f"no method meets epsilon={epsilon:g} at any omega"]
    for name, d in _limits(entries).items():
        why = d["notes"] or f"approximation error {d['eps_a_predicted']:.3e} > budget {d['eps_a_budget']:.3e}"
        lines.append(f"  {name}: {why} (best at omega={d['omega']:g})")
    return "\n".join(lines)


def omega_tradeoff_curve(request: PlanRequest, method: Method) -> list[dict]:
    """Per-omega cost of one method; rows are CSV-ready."""
    target = validate_target(request.target)
    _check_task(method, target.task)
    rows = []
    for w in omega_grid(request.omega_grid_step):
        e = _evaluate((method, target, ErrorBudget.split(request.epsilon, w), request.cost_config))
        r = e.plan.resources
        rows.append({"omega": w, "eps_p": e.plan.budget.eps_p, "eps_a": e.plan.budget.eps_a,
                     "t_count": r.t_count, "cnot_count": r.cnot_count, "feasible": e.plan.feasible,
                     "eps_a_predicted": e.plan.eps_a_predicted})
    return rows


def plan_circuit(plan: MethodPlan, target: TargetVector, cfg: CostConfig = DEFAULT_COSTS) -> CircuitIR:
    """Re-synthesize the full circuit for a selected flat plan."""
    if plan.method is Method.Hybrid:
        raise DomainError("hybrid plans are rebuilt with hybrid_circuit")
    target = validate_target(target)
    _, ir = synthesize(plan.method, target, plan.budget, cfg)
    return ir


# ------------------------------------------------------------ hybrid

@dataclass(frozen=True, eq=False)
class _Leaf:
    prefix: tuple[int, ...]
    weight: float
    plan: MethodPlan | None  # None for an all-zero segment
    omega: float
    key: tuple


@dataclass(frozen=True, eq=False)
class _Node:
    prefix: tuple[int, ...]
    theta: float
    children: tuple


def _segment_best(v: np.ndarray, prefix: tuple[int, ...], eps: float, request: PlanRequest) -> _Leaf | None:
    c = len(prefix)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return _Leaf(prefix, 0.0, None, 1.0, metric_key(ResourceEstimate(), request.metric))
    seg = TargetVector(int(math.log2(v.size)), v / norm, Task.STATE_PREP)
    methods = [m for m in request.allowed() if m is not Method.AliasSampling]
    best = None
    for w in omega_grid(request.omega_grid_step):
        budget = ErrorBudget.split(eps, w)
        for m in methods:
            try:
                plan, ir = synthesize(m, seg, budget, request.cost_config, estimate_only=True)
            except UnsupportedTargetError:
                continue
            if not plan_is_feasible(plan, seg.n_qubits):
                continue
            delta = plan.hyperparams.get("delta_g") or 1.0
            res = estimate_circuit(ir, request.cost_config, delta, extra_controls=c)
            key = metric_key(res, request.metric, request.metric_weights) + (m.order, -w)
            if best is None or key < best[0]:
                best = (key, plan, w, res)
    if best is None:
        return None
    key, plan, w, res = best
    plan = MethodPlan(plan.method, plan.hyperparams, plan.budget, res, True, plan.eps_a_predicted)
    return _Leaf(prefix, norm, plan, w, key)


def _weight_rotation_cost(c: int, delta: float, cfg: CostConfig) -> ResourceEstimate:
    g = GateRecord(GateKind.RY, (c,), tuple((q, True) for q in range(c)), params=[0.0])
    return estimate_circuit(CircuitIR(c + 1, 0, (g,)), cfg, delta)


def _tree_cost(node) -> ResourceEstimate:
    if isinstance(node, _Leaf):
        return node.plan.resources if node.plan is not None else ResourceEstimate()
    total = node.children[2]
    for ch in node.children[:2]:
        total = total + _tree_cost(ch)
    return total


def _best_tree(v, prefix, depth_left, eps, delta_w, request, n):
    leaf = _segment_best(v, prefix, eps, request)
    if depth_left == 0 or v.size <= 2:
        return leaf
    half = v.size // 2
    kids = []
    for b, part in ((0, v[:half]), (1, v[half:])):
        t = _best_tree(part, prefix + (b,), depth_left - 1, eps, delta_w, request, n)
        if t is None:
            return leaf
        kids.append(t)
    w0, w1 = np.linalg.norm(v[:half]), np.linalg.norm(v[half:])
    theta = 2 * math.atan2(w1, w0)
    rot = _weight_rotation_cost(len(prefix), delta_w, request.cost_config)
    node = _Node(prefix, theta, (kids[0], kids[1], rot))
    if leaf is None:
        return node
    split_key = metric_key(_tree_cost(node), request.metric, request.metric_weights)
    return node if split_key < leaf.key[: len(split_key)] else leaf


def _leaves(node) -> list[_Leaf]:
    if isinstance(node, _Leaf):
        return [node]
    return _leaves(node.children[0]) + _leaves(node.children[1])


def hybrid_plan(request: PlanRequest) -> PlanReport:
    """Flat sweep plus recursive dyadic splits; returns the hybrid plan only if it beats the flat one."""
    target = validate_target(request.target)
    if target.task is not Task.STATE_PREP:
        raise DomainError("hybrid preparation applies to state-prep targets")
    flat = sweep(request)
    depth = request.hybrid_max_depth
    if depth <= 0:
        return flat
    n = target.n_qubits
    if depth >= n:
        warnings.warn(f"hybrid depth {depth} clamped to {n - 1}", stacklevel=2)
        depth = n - 1
    if depth <= 0:
        return flat
    eps = request.epsilon
    seg_eps = (1 - HYBRID_WEIGHT_SHARE) * eps
    delta_w = rotation_tolerance((1 << depth) - 1, HYBRID_WEIGHT_SHARE * eps)
    amps = np.asarray(target.amplitudes)
    tree = _best_tree(amps, (), depth, seg_eps, delta_w, request, n)
    if tree is None or isinstance(tree, _Leaf):
        return flat
    res = _tree_cost(tree)
    flat_key = metric_key(flat.selected.resources, request.metric, request.metric_weights)
    if not metric_key(res, request.metric, request.metric_weights) < flat_key:
        return flat
    leaves = _leaves(tree)
    err = math.sqrt(sum((lf.weight * lf.plan.eps_a_predicted) ** 2 for lf in leaves if lf.plan))
    eps_a = max((lf.plan.budget.eps_a for lf in leaves if lf.plan), default=0.0)
    budget = ErrorBudget(eps, (eps - eps_a) / eps, eps - eps_a, eps_a)
    segs = [{"prefix": "".join(map(str, lf.prefix)), "weight": lf.weight, "omega": lf.omega,
             "method": lf.plan.method.value if lf.plan else None,
             "hyperparams": lf.plan.hyperparams if lf.plan else {},
             "eps_a_predicted": lf.plan.eps_a_predicted if lf.plan else 0.0} for lf in leaves]
    hp = {"depth": max(len(lf.prefix) for lf in leaves), "segments": segs, "delta_g": delta_w,
          "segment_epsilon": seg_eps}
    plan = MethodPlan(Method.Hybrid, hp, budget, res, True, err)
    return PlanReport(flat.per_method_per_omega, plan, budget.omega, request.metric, n, target.task,
                      eps, tuple(leaves))


def hybrid_circuit(plan: MethodPlan, target: TargetVector, cfg: CostConfig = DEFAULT_COSTS) -> CircuitIR:
    """Weight rotations on the prefix qubits, then each segment loader controlled on its prefix."""
    target = validate_target(target)
    amps = np.asarray(target.amplitudes)
    n = target.n_qubits
    segs = {s["prefix"]: s for s in plan.hyperparams["segments"]}
    delta_w = plan.hyperparams["delta_g"]
    seg_eps = plan.hyperparams["segment_epsilon"]
    gates: list[GateRecord] = []
    anc = 0

    def build(prefix: str):
        nonlocal anc
        c = len(prefix)
        lo = int(prefix, 2) << (n - c) if c else 0
        v = amps[lo: lo + (1 << (n - c))]
        ctrl = tuple((q, b == "1") for q, b in enumerate(prefix))
        if prefix in segs:
            s = segs[prefix]
            if s["method"] is None:
                return
            seg = TargetVector(n - c, v / np.linalg.norm(v), Task.STATE_PREP)
            method = Method(s["method"])
            budget = ErrorBudget.split(seg_eps, s["omega"])
            p, ir = synthesize(method, seg, budget, cfg)
            ir = freeze_rotations(ir, p.hyperparams.get("delta_g") or 1.0, cfg)
            mapping = [c + q for q in range(n - c)] + [n + q for q in range(ir.num_ancilla_qubits)]
            anc = max(anc, ir.num_ancilla_qubits)
            gates.extend(g.remapped(mapping).with_controls(ctrl) for g in ir.gates)
            return
        half = 1 << (n - c - 1)
        theta = 2 * math.atan2(np.linalg.norm(v[half:]), np.linalg.norm(v[:half]))
        g = GateRecord(GateKind.RY, (c,), ctrl, params=[theta])
        gates.append(replace_cost(g, delta_w, cfg))
        build(prefix + "0")
        build(prefix + "1")

    build("")
    return CircuitIR(n, anc, tuple(gates), {"hybrid": True})


def replace_cost(g: GateRecord, delta: float, cfg: CostConfig) -> GateRecord:
    return freeze_rotations(CircuitIR(max(g.qubits) + 1, 0, (g,)), delta, cfg).gates[0]


def plan(request: PlanRequest) -> PlanReport:
    """Flat sweep, or the hybrid search when a depth is requested."""
    if request.hybrid_max_depth > 0 and request.target.task is Task.STATE_PREP:
        return hybrid_plan(request)
    return sweep(request)


__all__ = [
    "Metric", "PlanEntry", "PlanReport", "PlanRequest", "hybrid_circuit", "hybrid_plan",
    "hyperparams_satisfied", "omega_grid", "omega_tradeoff_curve", "plan", "plan_circuit",
    "plan_is_feasible", "sweep", "synthesize",
]
