"""Command line: generate, solve, exact, kpi, batch, compare."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields, replace
from pathlib import Path
from typing import Optional, Sequence

from .alns import AlnsParams, solve_ensemble, write_trace
from .alns.params import DESK, FULL
from .evaluate import check_feasibility
from .exact import ExactLimits, solve_exact
from .experiment import ExperimentPlan, Mode, compare_report, read_results, run_mode, run_plan, write_compare
from .io import load_instance, load_solution, save_instance, save_solution
from .kpi import compute_kpis
from .model import ModelParams
from .scenario import ScenarioSpec, generate


def _add_alns_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--full-scale", action="store_true", help="use the full-length search settings")
    p.add_argument("--alns-config", type=Path, help="JSON file overriding search parameters")
    for f in fields(AlnsParams):
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f"alns_{f.name}", type=type(f.default), default=None)


def _alns_params(args) -> AlnsParams:
    params = FULL if args.full_scale else DESK
    if args.alns_config:
        base = params.to_dict()
        base.update(json.loads(args.alns_config.read_text()))
        params = AlnsParams.from_dict(base)
    return params.override(**{f.name: getattr(args, f"alns_{f.name}") for f in fields(AlnsParams)})


def cmd_generate(args) -> int:
    if args.spec:
        spec = ScenarioSpec.from_dict(json.loads(args.spec.read_text()))
    else:
        spec = ScenarioSpec()
    overrides = {
        "n_requests": args.n_requests,
        "n_depots": args.n_depots,
        "area_side": args.area_side,
        "spatial": args.spatial,
        "temporal": args.temporal,
        "passenger_share": args.passenger_share,
        "seed": args.seed,
    }
    spec = replace(spec, **{k: v for k, v in overrides.items() if v is not None})
    params = ModelParams.from_dict(json.loads(args.model.read_text())) if args.model else None
    inst = generate(spec, params)
    save_instance(inst, args.out)
    print(f"wrote {args.out}: {inst.n_r} requests, {inst.n_d} depots")
    return 0


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    params = _alns_params(args)
    if args.mode:
        res = run_mode(inst, Mode(args.mode), params)
        if res.solution is None:
            print("separated solution could not be merged into one file", file=sys.stderr)
            return 1
        save_solution(res.solution, inst, args.out, extra={"mode": res.mode.value, "best_obj": res.best_obj})
        print(f"{res.mode.value}: best {res.best_obj:.4f}  mean {res.mean_obj:.4f}")
        return 0
    initial = load_solution(args.initial, inst) if args.initial else None
    ens = solve_ensemble(inst, params, initial=initial)
    save_solution(ens.best.best, inst, args.out, extra={"best_obj": ens.best_cost, "runs": [r.best_cost for r in ens.runs]})
    if args.trace:
        write_trace(ens.best.trace, args.trace)
    print(f"best {ens.best_cost:.4f}  mean {ens.mean_cost:.4f}  runs {len(ens.runs)}")
    return 0


def cmd_exact(args) -> int:
    inst = load_instance(args.instance)
    res = solve_exact(inst, ExactLimits(time_limit=args.time_limit, gap=args.gap))
    save_solution(res.solution, inst, args.out, extra=res.to_dict())
    status = "optimal" if res.proven_optimal else "time limit"
    print(f"{status}: objective {res.objective:.4f}  bound {res.lower_bound:.4f}  nodes {res.nodes_explored}")
    return 0


def cmd_kpi(args) -> int:
    inst = load_instance(args.instance)
    sol = load_solution(args.solution, inst)
    problems = check_feasibility(sol, inst)
    if problems:
        for v in problems:
            print(f"infeasible: {v.kind} {v.detail}", file=sys.stderr)
        return 1
    report = compute_kpis(sol, inst)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def cmd_batch(args) -> int:
    plan = ExperimentPlan.from_file(args.plan)
    changes = {}
    if args.outdir:
        changes["outdir"] = str(args.outdir)
    if args.base_seed is not None:
        changes["base_seed"] = args.base_seed
    if args.workers is not None:
        changes["workers"] = args.workers
    if changes:
        plan = ExperimentPlan.from_dict({**plan.to_dict(), **changes})
    rows = run_plan(plan)
    bad = [r for r in rows if r["status"] != "ok"]
    print(f"{len(rows)} result rows written to {plan.outdir}/results.csv ({len(bad)} failed)")
    return 1 if bad else 0


def cmd_compare(args) -> int:
    rows = read_results(args.results)
    report = compare_report(rows, baseline=args.baseline)
    write_compare(report, args.out)
    for r in report:
        if r["metric"] == "best_obj" and r["mode"] != args.baseline:
            print(f"{r['mode']} vs {r['baseline']} {r['sweep_param']}{r['sweep_value']}: "
                  f"{r['mean_delta_pct']:+.2f}% total cost")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mmpdp", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic scenario instance")
    g.add_argument("out", type=Path)
    g.add_argument("--spec", type=Path, help="JSON scenario spec")
    g.add_argument("--model", type=Path, help="JSON model parameters")
    g.add_argument("--n-requests", type=int)
    g.add_argument("--n-depots", type=int)
    g.add_argument("--area-side", type=float)
    g.add_argument("--spatial", choices=["Clustered", "Distributed"])
    g.add_argument("--temporal", choices=["Even", "Peak"])
    g.add_argument("--passenger-share", type=float)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="heuristic search (one ensemble)")
    s.add_argument("instance", type=Path)
    s.add_argument("out", type=Path)
    s.add_argument("--mode", choices=[m.value for m in Mode])
    s.add_argument("--initial", type=Path, help="starting solution JSON")
    s.add_argument("--trace", type=Path, help="CSV trace of the best run")
    _add_alns_flags(s)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("exact", help="optimal solution of a small instance")
    e.add_argument("instance", type=Path)
    e.add_argument("out", type=Path)
    e.add_argument("--time-limit", type=float, default=ExactLimits.time_limit)
    e.add_argument("--gap", type=float, default=ExactLimits.gap)
    e.set_defaults(func=cmd_exact)

    k = sub.add_parser("kpi", help="indicators of a solution")
    k.add_argument("instance", type=Path)
    k.add_argument("solution", type=Path)
    k.add_argument("--out", type=Path)
    k.set_defaults(func=cmd_kpi)

    b = sub.add_parser("batch", help="run an experiment plan")
    b.add_argument("plan", type=Path)
    b.add_argument("--outdir", type=Path)
    b.add_argument("--base-seed", type=int)
    b.add_argument("--workers", type=int)
    b.set_defaults(func=cmd_batch)

    c = sub.add_parser("compare", help="paired mode deltas from results.csv")
    c.add_argument("results", type=Path)
    c.add_argument("out", type=Path)
    c.add_argument("--baseline", default=Mode.Conventional.value)
    c.set_defaults(func=cmd_compare)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
