"""Command-line frontend: plan, synthesize, verify, bench.

Exit codes: 0 ok, 1 usage or IO error, 2 infeasible, 3 unverified at scale,
4 simulated error above the bound.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    Method,
    MethodPlan,
    QdlcError,
    SCHEMA_VERSION,
    InfeasibleError,
    Task,
    TargetVector,
    ValidationError,
    circuit_from_json,
    circuit_to_json,
    dumps,
    loads,
    target_from_json,
    validate_target,
)
from .costmodel import DEFAULT_COSTS, CostConfig

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_UNVERIFIED, EXIT_FAILED = 0, 1, 2, 3, 4

BENCH_KINDS = ("omega-curve", "mps-chi", "walsh-kappa", "kl-shots", "method-table")


class UsageError(QdlcError):
    pass


# ------------------------------------------------------------ file helpers

def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc


def read_json(path: str):
    return loads(read_bytes(path).decode("utf-8"), source=path)


def read_target(path: str, task: str | None = None) -> tuple[TargetVector, str]:
    raw = read_bytes(path)
    t = target_from_json(loads(raw.decode("utf-8"), source=path))
    if task is not None and t.task.value != task:
        t = TargetVector(t.n_qubits, t.amplitudes, Task(task), t.scale)
    return t, sha256(raw)


def read_costs(path: str | None) -> CostConfig:
    return DEFAULT_COSTS if path is None else CostConfig.from_json(read_json(path))


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def write_outputs(files: dict[Path, str]) -> None:
    """Write every output only after all of them were produced."""
    for path, text in files.items():
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def manifest(command: str, config: dict, inputs: dict[str, str], outputs: dict[Path, str]) -> str:
    return dumps({
        "schema_version": SCHEMA_VERSION,
        "tool": "qdlc",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": inputs,
        "outputs": {p.name: sha256(t.encode("utf-8")) for p, t in sorted(outputs.items())},
    })


def with_manifest(out: Path, command: str, config: dict, inputs: dict[str, str],
                  files: dict[Path, str]) -> dict[Path, str]:
    files = dict(files)
    files[out.with_name(out.name + ".manifest.json")] = manifest(command, config, inputs, files)
    return files


# ------------------------------------------------------------ plan

def parse_methods(text: str | None) -> tuple[Method, ...] | None:
    if not text:
        return None
    try:
        return tuple(Method(m.strip()) for m in text.split(",") if m.strip())
    except ValueError as exc:
        names = ", ".join(m.value for m in Method if m is not Method.Hybrid)
        raise UsageError(f"{exc}; known methods: {names}") from exc


def cmd_plan(args) -> int:
    from .planner import Metric, PlanRequest, plan

    target, digest = read_target(args.input, args.task)
    cfg = read_costs(args.cost_model)
    request = PlanRequest(target, args.epsilon, args.omega_step, parse_methods(args.methods),
                          args.hybrid_depth, cfg, Metric(args.metric), workers=args.workers)
    try:
        report = plan(request)
    except InfeasibleError as exc:
        print(str(exc), file=sys.stderr)
        print(dumps({"infeasible": True, "limits": exc.report}), file=sys.stderr, end="")
        return EXIT_INFEASIBLE
    out = Path(args.out)
    body = report.to_json()
    body["input_sha256"] = digest
    body["cost_config"] = cfg.to_json()
    body["request"] = {"epsilon": args.epsilon, "omega_step": args.omega_step,
                       "methods": args.methods, "hybrid_depth": args.hybrid_depth, "metric": args.metric}
    files = {out: dumps(body), out.with_suffix(".table.txt"): report.table()}
    config = {"epsilon": args.epsilon, "omega_step": args.omega_step, "methods": args.methods,
              "hybrid_depth": args.hybrid_depth, "metric": args.metric, "task": target.task.value,
              "cost_config": cfg.to_json()}
    write_outputs(with_manifest(out, "plan", config, {"input": digest}, files))
    sel = report.selected
    print(f"selected {sel.method.value} at omega={report.selected_omega:g}: "
          f"T={sel.resources.t_count} CNOT={sel.resources.cnot_count} qubits={sel.resources.total_qubits}")
    return EXIT_OK


# ------------------------------------------------------------ synthesize

def cmd_synthesize(args) -> int:
    from .planner import hybrid_circuit, plan_circuit

    raw_plan = read_bytes(args.plan)
    doc = loads(raw_plan.decode("utf-8"), source=args.plan)
    try:
        selected = MethodPlan.from_json(doc["selected"])
        task = doc["task"]
        cfg = CostConfig.from_json(doc.get("cost_config", DEFAULT_COSTS.to_json()))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"{args.plan}: not a plan file ({exc})") from exc
    target, digest = read_target(args.input, task)
    if doc.get("input_sha256") not in (None, digest):
        raise UsageError(f"{args.input} is not the vector {args.plan} was planned for")
    target = validate_target(target)
    if selected.method is Method.Hybrid:
        ir = hybrid_circuit(selected, target, cfg)
    else:
        ir = plan_circuit(selected, target, cfg)
    body = circuit_to_json(ir)
    body["metadata"]["plan"] = selected.to_json()
    out = Path(args.out)
    files = {out: dumps(body)}
    inputs = {"plan": sha256(raw_plan), "input": digest}
    write_outputs(with_manifest(out, "synthesize", {"method": selected.method.value}, inputs, files))
    print(f"wrote {len(ir.gates)} gates on {ir.num_qubits} qubits")
    return EXIT_OK


# ------------------------------------------------------------ verify

def cmd_verify(args) -> int:
    from .simulator import verify_plan

    raw = read_bytes(args.circuit)
    doc = loads(raw.decode("utf-8"), source=args.circuit)
    ir = circuit_from_json(doc)
    plan_doc = ir.metadata.get("plan")
    if args.plan:
        plan_doc = read_json(args.plan)["selected"]
    if plan_doc is None:
        raise UsageError("circuit carries no plan; pass --plan")
    selected = MethodPlan.from_json(plan_doc)
    task = Task.DIAGONAL if selected.method.value.startswith("diag-") else Task.STATE_PREP
    target, digest = read_target(args.input, task.value)
    if target.n_qubits != ir.num_system_qubits:
        raise ValidationError(f"circuit has {ir.num_system_qubits} system qubits, vector has {target.n_qubits}")
    record = verify_plan(selected, ir, target, max_qubits=args.max_qubits)
    out = Path(args.out)
    files = {out: dumps({"schema_version": SCHEMA_VERSION, **record})}
    inputs = {"circuit": sha256(raw), "input": digest}
    write_outputs(with_manifest(out, "verify", {"max_qubits": args.max_qubits}, inputs, files))
    if record["status"] == "unverified-at-scale":
        print("unverified-at-scale", file=sys.stderr)
        return EXIT_UNVERIFIED
    rel = "<=" if record["pass"] else ">"
    print(f"{'pass' if record['pass'] else 'FAIL'}: {record['norm']} error "
          f"{record['achieved_error']:.3e} {rel} bound {record['bound']:.3e}")
    return EXIT_OK if record["pass"] else EXIT_FAILED


# ------------------------------------------------------------ bench

def _optional_target(path: str | None, default: TargetVector, task: str | None = None):
    if path is None:
        return default, None
    t, digest = read_target(path, task)
    return t, digest


def bench_omega_curve(args):
    from .planner import PlanRequest, omega_tradeoff_curve
    from .workloads import gaussian_state

    target, digest = _optional_target(args.input, gaussian_state(14, sigma=0.9))
    cfg = read_costs(args.cost_model)
    method = Method(args.method)
    rows = omega_tradeoff_curve(PlanRequest(target, args.epsilon, args.omega_step, cost_config=cfg), method)
    header = ["omega", "eps_p", "eps_a", "t_count", "cnot_count", "feasible", "eps_a_predicted", "seed"]
    body = [[r[h] for h in header[:-1]] + [args.seed] for r in rows]
    config = {"method": method.value, "epsilon": args.epsilon, "omega_step": args.omega_step}
    return {"omega_curve.csv": csv_text(header, body)}, config, digest


def bench_mps_chi(args):
    from .stateprep.mps import mps_compress
    from .workloads import smooth_family

    chis = [int(c) for c in args.chis.split(",")]
    rows = []
    for n in range(args.min_qubits, args.max_qubits + 1):
        t = smooth_family(n)
        for chi in chis:
            rows.append([n, chi, float(mps_compress(t, chi).error), args.seed])
    config = {"family": "smooth", "chis": chis, "qubits": [args.min_qubits, args.max_qubits]}
    return {"mps_chi.csv": csv_text(["n_qubits", "chi", "l2_error", "seed"], rows)}, config, None


def bench_walsh_kappa(args):
    from .diagenc import walsh_prefix_errors
    from .workloads import cavity_profile

    target, digest = _optional_target(args.input, cavity_profile(), Task.DIAGONAL.value)
    errs = walsh_prefix_errors(target)
    limit = min(args.max_kappa, errs.size)
    rows = [[k + 1, float(errs[k]), args.seed] for k in range(limit)]
    return {"walsh_kappa.csv": csv_text(["kappa", "linf_phase_error", "seed"], rows)}, \
        {"max_kappa": limit}, digest


def bench_kl_shots(args):
    from .simulator import Transform, run_sampling_study, shots_to_tolerance, smoothing_delta
    from .workloads import kl_state

    target, digest = _optional_target(args.input, kl_state())
    target = validate_target(target)
    grid = [int(float(s)) for s in args.shots.split(",")]
    rows, summary = [], []
    reached = {}
    for tr in (Transform.Identity, Transform.QFT, Transform.Walsh):
        study = run_sampling_study(target.amplitudes, tr, grid, trials=args.trials, seed=args.seed)
        rows += [[tr.value, s, trial, kl, tseed, smoothing_delta(s), args.seed]
                 for s, trial, kl, tseed in study.records]
        summary += [[tr.value, s, study.kl_curve[s], study.kl_stderr[s], smoothing_delta(s), args.seed]
                    for s in grid]
        hit = shots_to_tolerance(study, args.tolerance)
        reached[tr.value] = hit if isinstance(hit, int) else {"beyond_grid": True, "last_mean_kl": hit[1]}
    files = {
        "kl_shots.csv": csv_text(["transform", "shots", "trial", "kl", "trial_seed", "smoothing_delta", "seed"],
                                 rows),
        "kl_summary.csv": csv_text(["transform", "shots", "mean_kl", "stderr", "smoothing_delta", "seed"], summary),
        "shots_to_tolerance.json": dumps({"tolerance": args.tolerance, "seed": args.seed, "shots": reached,
                                          "kl": "true vs empirical, smoothing 1/(10 shots) per empty outcome"}),
    }
    config = {"shots": grid, "trials": args.trials, "tolerance": args.tolerance}
    return files, config, digest


def bench_method_table(args):
    from .planner import PlanRequest, sweep
    from .workloads import gaussian_state

    target, digest = _optional_target(args.input, gaussian_state(11))
    cfg = read_costs(args.cost_model)
    report = sweep(PlanRequest(target, args.epsilon, args.omega_step, parse_methods(args.methods),
                               cost_config=cfg))
    best: dict[Method, tuple] = {}
    for e in report.per_method_per_omega:
        if not e.plan.feasible:
            continue
        r = e.plan.resources
        key = (r.t_count, r.cnot_count, r.total_qubits, -e.omega)
        if e.plan.method not in best or key < best[e.plan.method][0]:
            best[e.plan.method] = (key, e)
    rows = []
    for m in sorted(best, key=lambda m: m.order):
        e = best[m][1]
        r = e.plan.resources
        rows.append([m.value, e.omega, r.cnot_count, r.t_count, r.total_qubits,
                     int(e.plan is report.selected), args.seed])
    header = ["method", "omega", "cnot_count", "t_count", "total_qubits", "selected", "seed"]
    config = {"epsilon": args.epsilon, "omega_step": args.omega_step, "methods": args.methods}
    return {"method_table.csv": csv_text(header, rows), "method_table.txt": report.table()}, config, digest


BENCHES = {
    "omega-curve": bench_omega_curve,
    "mps-chi": bench_mps_chi,
    "walsh-kappa": bench_walsh_kappa,
    "kl-shots": bench_kl_shots,
    "method-table": bench_method_table,
}


def cmd_bench(args) -> int:
    files, config, digest = BENCHES[args.kind](args)
    out = Path(args.out)
    paths = {out / name: text for name, text in files.items()}
    config = {"kind": args.kind, "seed": args.seed, **config}
    inputs = {"input": digest} if digest else {}
    paths[out / "manifest.json"] = manifest(f"bench {args.kind}", config, inputs, paths)
    write_outputs(paths)
    for p in sorted(paths):
        print(p)
    return EXIT_OK


# ------------------------------------------------------------ entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qdlc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"qdlc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pl = sub.add_parser("plan", help="sweep methods and error splits, pick the cheapest feasible plan")
    pl.add_argument("--input", required=True)
    pl.add_argument("--task", choices=[t.value for t in Task], default=None)
    pl.add_argument("--epsilon", type=float, required=True)
    pl.add_argument("--omega-step", type=float, default=0.05)
    pl.add_argument("--methods", default=None, help="comma-separated allowlist")
    pl.add_argument("--hybrid-depth", type=int, default=0)
    pl.add_argument("--metric", choices=["t-count", "cnot-count", "weighted-sum"], default="t-count")
    pl.add_argument("--cost-model", default=None)
    pl.add_argument("--workers", type=int, default=1)
    pl.add_argument("--out", required=True)

    sy = sub.add_parser("synthesize", help="rebuild the circuit for a saved plan")
    sy.add_argument("--plan", required=True)
    sy.add_argument("--input", required=True)
    sy.add_argument("--out", required=True)

    ve = sub.add_parser("verify", help="simulate a circuit against its target")
    ve.add_argument("--circuit", required=True)
    ve.add_argument("--input", required=True)
    ve.add_argument("--plan", default=None, help="plan file, if the circuit does not embed one")
    ve.add_argument("--max-qubits", type=int, default=16)
    ve.add_argument("--out", required=True)

    be = sub.add_parser("bench", help="benchmark sweeps written as CSV")
    be.add_argument("kind", choices=BENCH_KINDS)
    be.add_argument("--out", required=True, help="output directory")
    be.add_argument("--input", default=None, help="vector file; each kind has a built-in default")
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--epsilon", type=float, default=None)
    be.add_argument("--omega-step", type=float, default=0.05)
    be.add_argument("--method", default="fsl")
    be.add_argument("--methods", default=None)
    be.add_argument("--cost-model", default=None)
    be.add_argument("--min-qubits", type=int, default=11)
    be.add_argument("--max-qubits", type=int, default=14)
    be.add_argument("--chis", default="1,2,4,8,16,32,64")
    be.add_argument("--max-kappa", type=int, default=256)
    be.add_argument("--shots", default="1,2,5,10,20,50,100,200,500,1e3,2e3,5e3,1e4,2e4,5e4,1e5")
    be.add_argument("--trials", type=int, default=10)
    be.add_argument("--tolerance", type=float, default=0.1)
    return p


BENCH_EPSILON = {"omega-curve": 5e-3, "method-table": 1e-3}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.command == "bench" and args.epsilon is None:
        args.epsilon = BENCH_EPSILON.get(args.kind, 1e-3)
    handler = {"plan": cmd_plan, "synthesize": cmd_synthesize, "verify": cmd_verify, "bench": cmd_bench}
    try:
        return handler[args.command](args)
    except InfeasibleError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INFEASIBLE
    except (QdlcError, ValueError) as exc:
        print(f"qdlc {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
