"""Operating-mode runs, batch plans and mode comparisons."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Union

from .alns import AlnsParams, solve_ensemble
from .alns.params import DESK
from .evaluate import objective
from .io import save_instance, save_solution
from .kpi import KpiReport, combine_reports, compute_kpis
from .model import (
    FREIGHT,
    PASSENGER,
    Instance,
    ModelParams,
    Platoon,
    Solution,
    _node_map,
    build_instance,
    sub_instance,
)
from .scenario import ScenarioSpec, Spatial, Temporal, generate


class Mode(str, Enum):
    Conventional = "Conventional"
    ModularSeparated = "ModularSeparated"
    ModularConsolidated = "ModularConsolidated"


ALL_MODES = (Mode.Conventional, Mode.ModularSeparated, Mode.ModularConsolidated)
SWEEP_PARAMS = ("capacity", "range", "eta")
DEFAULT_SWEEP = {
    "capacity": [15, 25, 35, 45],
    "range": [50, 100, 150, 200, 250],
    "eta": [0.2, 0.4, 0.6, 0.8, 1.0],
}


def with_params(instance: Instance, params: ModelParams) -> Instance:
    explicit = bool(instance.metadata.get("explicit_distance"))
    return build_instance(
        list(instance.nodes),
        list(instance.requests),
        params,
        distance=instance.distance if explicit else None,
        metadata=dict(instance.metadata),
    )


def apply_sweep(params: ModelParams, name: Optional[str], value) -> ModelParams:
    if name is None:
        return params
    if name == "capacity":
        return params.with_capacity(float(value))
    if name == "range":
        return replace(params, range_limit=float(value))
    if name == "eta":
        return replace(params, eta=float(value))
    raise ValueError(f"unknown sweep parameter {name!r}; expected one of {SWEEP_PARAMS}")


@dataclass
class ModeResult:
    mode: Mode
    best_obj: float
    mean_obj: float
    kpi: KpiReport
    solution: Optional[Solution]
    wall_time_s: float
    run_objs: list[float]
    parts: dict = field(default_factory=dict)  # separated mode: per demand type sub-results


def _merge(instance: Instance, subs: Sequence[tuple[Instance, Sequence[int], Solution]]) -> Optional[Solution]:
    """Express sub-problem solutions in the parent's node ids, one depot copy each."""
    f = instance.fast
    next_copy = [0] * len(f.depot_copies)
    platoons = []
    unserved = set()
    for sub, ids, sol in subs:
        nmap = _node_map(instance, sub, ids)
        for pl in sol.platoons:
            d = sub.fast.depot_of[pl.origin_depot]
            if next_copy[d] >= len(f.depot_copies[d]):
                return None
            origin = f.depot_copies[d][next_copy[d]]
            next_copy[d] += 1
            arrivals = list(pl.arrival_times)
            platoons.append(
                Platoon(pl.config, origin, instance.destination_of(origin), [nmap[v] for v in pl.visits], arrivals,
                        list(pl.loads_per_type))
            )
        unserved |= {ids[r] for r in sol.unserved}
    return Solution(platoons, unserved)


def _conventionalize(solution: Solution, instance: Instance) -> Solution:
    """Keep single-module platoons; requests of longer ones become unserved."""
    f = instance.fast
    keep, unserved = [], set(solution.unserved)
    for pl in solution.platoons:
        if pl.config.total_length <= 1:
            keep.append(pl)
        else:
            unserved |= {f.req_of[v] for v in pl.visits}
    return Solution(keep, unserved)


def _separated(instance: Instance, params: AlnsParams, time_limit_s) -> ModeResult:
    t0 = time.perf_counter()
    prm = instance.params
    reports, subs, parts = [], [], {}
    best_total = mean_total = 0.0
    run_objs = [0.0] * params.ensemble_size
    for k, name in ((PASSENGER, "passenger"), (FREIGHT, "freight")):
        ids = [r.id for r in instance.requests if r.demand_type == k]
        if not ids:
            continue
        caps = tuple(z if j == k else 0 for j, z in enumerate(prm.z_per_type))
        sub = sub_instance(instance, ids, replace(prm, z_per_type=caps))
        ens = solve_ensemble(sub, params, time_limit_s=time_limit_s)
        sol = ens.best.best
        reports.append(compute_kpis(sol, sub))
        subs.append((sub, ids, sol))
        best_total += ens.best_cost
        mean_total += ens.mean_cost
        for i, r in enumerate(ens.runs):
            run_objs[i] += r.best_cost
        parts[name] = {"best_obj": ens.best_cost, "mean_obj": ens.mean_cost, "n_requests": len(ids)}
    if reports:
        kpi = combine_reports(reports)
    else:
        kpi = compute_kpis(Solution([], set()), instance)
    return ModeResult(
        Mode.ModularSeparated, best_total, mean_total, kpi, _merge(instance, subs), time.perf_counter() - t0,
        run_objs, parts,
    )


def run_mode(
    instance: Instance,
    mode: Union[Mode, str],
    alns_params: Optional[AlnsParams] = None,
    separated: Optional[ModeResult] = None,
    time_limit_s: Optional[float] = None,
) -> ModeResult:
    """Solve ``instance`` in one operating mode with an ensemble of searches.

    Conventional runs start from the separated solution with its multi-module
    platoons broken up; pass ``separated`` to reuse an existing result.
    """
    mode = Mode(mode)
    params = alns_params or DESK
    if mode is Mode.ModularSeparated:
        return _separated(instance, params, time_limit_s)
    t0 = time.perf_counter()
    if mode is Mode.ModularConsolidated:
        inst = instance
        initial = None
    else:
        if separated is None:
            separated = _separated(instance, params, time_limit_s)
        inst = with_params(instance, replace(instance.params, z_max=1))
        initial = None
        if separated.solution is not None:
            initial = _conventionalize(separated.solution, inst)
    ens = solve_ensemble(inst, params, initial=initial, time_limit_s=time_limit_s)
    sol = ens.best.best
    return ModeResult(
        mode, ens.best_cost, ens.mean_cost, compute_kpis(sol, inst), sol, time.perf_counter() - t0,
        [r.best_cost for r in ens.runs],
    )


@dataclass
class ExperimentPlan:
    scenarios: list[ScenarioSpec] = field(default_factory=list)
    instances_per_scenario: int = 5
    modes: list[Mode] = field(default_factory=lambda: list(ALL_MODES))
    sweep: Optional[dict] = None
    ensemble_size: int = 5
    base_seed: int = 0
    outdir: str = "results"
    alns: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        self.scenarios = [s if isinstance(s, ScenarioSpec) else ScenarioSpec.from_dict(s) for s in self.scenarios]
        self.modes = [Mode(m) for m in self.modes]
        if not self.modes:
            raise ValueError("plan needs at least one mode")
        if not self.scenarios:
            raise ValueError("plan needs at least one scenario")
        if self.instances_per_scenario < 1 or self.ensemble_size < 1:
            raise ValueError("instances_per_scenario and ensemble_size must be >= 1")
        if self.sweep is not None:
            for name, grid in self.sweep.items():
                if name not in SWEEP_PARAMS:
                    raise ValueError(f"unknown sweep parameter {name!r}")
                if not grid:
                    raise ValueError(f"sweep grid for {name!r} is empty")
        AlnsParams.from_dict(self.alns)
        ModelParams.from_dict(self.model)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown plan fields: {unknown}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ExperimentPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "scenarios": [s.to_dict() for s in self.scenarios],
            "instances_per_scenario": self.instances_per_scenario,
            "modes": [m.value for m in self.modes],
            "sweep": self.sweep,
            "ensemble_size": self.ensemble_size,
            "base_seed": self.base_seed,
            "outdir": self.outdir,
            "alns": self.alns,
            "model": self.model,
            "workers": self.workers,
        }

    def alns_params(self) -> AlnsParams:
        base = DESK.to_dict()
        base.update(self.alns)
        base["ensemble_size"] = self.ensemble_size
        return AlnsParams.from_dict(base)

    def model_params(self, spec: ScenarioSpec) -> ModelParams:
        d = {"planning_period": spec.planning_period}
        d.update(self.model)
        return ModelParams.from_dict(d)

    def sweep_points(self) -> list[tuple[Optional[str], object]]:
        if not self.sweep:
            return [(None, None)]
        return [(name, v) for name in SWEEP_PARAMS if name in self.sweep for v in self.sweep[name]]


def scenario_classes(n_requests: int = 20, n_depots: int = 5) -> list[ScenarioSpec]:
    return [
        ScenarioSpec(n_requests=n_requests, n_depots=n_depots, spatial=sp, temporal=tp)
        for sp in (Spatial.Clustered, Spatial.Distributed)
        for tp in (Temporal.Even, Temporal.Peak)
    ]


def instance_seed(base_seed: int, scenario_index: int, instance_index: int) -> int:
    """Seed of one generated instance; ALNS runs on it use this + run index."""
    return base_seed + 1000 * scenario_index + instance_index


RESULT_KEYS = ("scenario", "scenario_index", "instance_index", "instance_seed", "sweep_param", "sweep_value", "mode")


def _cell_name(label, ii, sweep_name, sweep_value) -> str:
    name = f"{label}-{ii:02d}"
    if sweep_name is not None:
        name += f"-{sweep_name}{sweep_value}"
    return name


def _run_cell(job) -> tuple[list[dict], dict]:
    """All modes of one (instance, sweep point); returns result rows and timing info."""
    plan_d, si, ii, sweep_name, sweep_value = job
    plan = ExperimentPlan.from_dict(plan_d)
    spec = replace(plan.scenarios[si], seed=instance_seed(plan.base_seed, si, ii))
    base = generate(spec, plan.model_params(spec))
    inst = with_params(base, apply_sweep(base.params, sweep_name, sweep_value))
    out = Path(plan.outdir)
    cell = _cell_name(spec.label, ii, sweep_name, sweep_value)
    save_instance(inst, out / "instances" / f"{cell}.json")
    params = replace(plan.alns_params(), seed=spec.seed)
    rows, timing = [], {}
    separated = None
    order = sorted(plan.modes, key=lambda m: 0 if m is Mode.ModularSeparated else 1)
    for mode in order:
        key = {
            "scenario": spec.label,
            "scenario_index": si,
            "instance_index": ii,
            "instance_seed": spec.seed,
            "sweep_param": sweep_name or "",
            "sweep_value": "" if sweep_value is None else sweep_value,
            "mode": mode.value,
        }
        try:
            if mode is Mode.Conventional and separated is None:
                separated = run_mode(inst, Mode.ModularSeparated, params)
            res = run_mode(inst, mode, params, separated=separated)
            if mode is Mode.ModularSeparated:
                separated = res
            row = {**key, "status": "ok", "best_obj": res.best_obj, "mean_obj": res.mean_obj, **res.kpi.flat_row()}
            timing[f"{cell}/{mode.value}"] = res.wall_time_s
            if res.solution is not None:
                save_solution(res.solution, inst, out / "solutions" / f"{cell}-{mode.value}.json",
                              extra={"mode": mode.value, "best_obj": res.best_obj})
        except Exception as exc:  # recorded per cell, the batch goes on
            row = {**key, "status": f"error: {type(exc).__name__}: {exc}"}
        rows.append(row)
    return rows, timing


def run_plan(plan: ExperimentPlan) -> list[dict]:
    """Run every cell, write results.csv and summary.json, return the rows."""
    t0 = time.perf_counter()
    out = Path(plan.outdir)
    out.mkdir(parents=True, exist_ok=True)
    plan_d = plan.to_dict()
    jobs = [
        (plan_d, si, ii, name, value)
        for si in range(len(plan.scenarios))
        for ii in range(plan.instances_per_scenario)
        for name, value in plan.sweep_points()
    ]
    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            outputs = list(pool.map(_run_cell, jobs))
    else:
        outputs = [_run_cell(j) for j in jobs]
    rows, timing = [], {}
    for r, t in outputs:
        rows.extend(r)
        timing.update(t)
    mode_rank = {m.value: i for i, m in enumerate(ALL_MODES)}
    rows.sort(key=lambda r: (r["scenario_index"], r["instance_index"], r["sweep_param"], str(r["sweep_value"]),
                             mode_rank[r["mode"]]))
    write_results(rows, out / "results.csv")
    summary = {
        "plan": plan_d,
        "cells": len(rows),
        "failures": [r for r in rows if r["status"] != "ok"],
        "wall_time_s": {"total": time.perf_counter() - t0, "per_cell": timing},
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results(rows: list[dict], path) -> Path:
    path = Path(path)
    cols: list[str] = []
    for r in rows:
        for c in r:
            if c not in cols:
                cols.append(c)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in cols])
    path.write_text(buf.getvalue())
    return path


def read_results(path) -> list[dict]:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k, v in r.items():
            if k in ("scenario", "mode", "status", "sweep_param"):
                continue
            try:
                r[k] = float(v)
            except (TypeError, ValueError):
                pass
    return rows


COMPARE_METRICS = (
    "best_obj",
    "cost_distance",
    "cost_fleet",
    "cost_duration",
    "cost_unserved",
    "empty_km",
    "platoon_km",
    "request_km",
    "request_min",
    "fill_rate",
    "avg_platoon_length",
    "n_platoons",
)


def compare_report(rows: list[dict], baseline: str = Mode.Conventional.value,
                   metrics: Sequence[str] = COMPARE_METRICS) -> list[dict]:
    """Mean paired percentage change of each metric relative to ``baseline``.

    Pairs are matched on scenario, instance and sweep point; every compared
    mode must cover exactly the baseline's cells.
    """
    ok = [r for r in rows if r.get("status", "ok") == "ok"]

    def key(r):
        return (r["scenario"], r["scenario_index"], r["instance_index"], r["sweep_param"], str(r["sweep_value"]))

    by_mode: dict[str, dict] = {}
    for r in ok:
        by_mode.setdefault(r["mode"], {})[key(r)] = r
    if baseline not in by_mode:
        raise ValueError(f"baseline mode {baseline!r} not in results")
    base = by_mode[baseline]
    out = []
    for mode in sorted(by_mode, key=lambda m: [x.value for x in ALL_MODES].index(m) if m in Mode.__members__ else 9):
        cells = by_mode[mode]
        if set(cells) != set(base):
            raise ValueError(f"mode {mode!r} covers different instances than {baseline!r}")
        sweep_groups: dict[tuple, list] = {}
        for k in sorted(cells):
            sweep_groups.setdefault((k[3], k[4]), []).append(k)
        for (sp, sv), keys in sorted(sweep_groups.items()):
            for m in metrics:
                deltas = []
                for k in keys:
                    b, o = float(base[k][m]), float(cells[k][m])
                    if b == 0.0:
                        if o == 0.0:
                            deltas.append(0.0)
                        continue
                    deltas.append((o - b) / abs(b) * 100.0)
                out.append({
                    "mode": mode,
                    "baseline": baseline,
                    "sweep_param": sp,
                    "sweep_value": sv,
                    "metric": m,
                    "mean_delta_pct": sum(deltas) / len(deltas) if deltas else math.nan,
                    "n_pairs": len(deltas),
                })
    return out


def write_compare(report: list[dict], path) -> Path:
    return write_results(report, path)
