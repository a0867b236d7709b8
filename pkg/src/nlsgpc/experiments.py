"""Experiment pipelines behind the command line, and their file outputs.

Every run writes ``effective_config.ini`` plus ``results.json`` and/or
``results.csv`` into the output directory. Floats are written with ``repr`` so
identical runs produce identical bytes; wall times are only recorded when
``output.record_timing`` is set.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
import warnings
from pathlib import Path

import numpy as np

from .bisection import bisect_critical, find_bracket
from .config import SCHEMA_VERSION, RunConfig
from .errors import BracketError, InconclusiveError, ValidationError
from .gpc import (
    BracketWarning,
    convergence_study,
    critical_velocity,
    mean_mode,
    run_ensemble,
)
from .grid import Grid
from .models import PdeModel, StepSurrogate
from .quadrature import gauss_rule
from .soliton import DefectParams, SolitonParams, initial_soliton
from .ssfm import SolverConfig, classify, propagate

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("epsilon", "V_a", "V_b", "N", "L_prime", "E_L", "E_Lprime", "R", "V_c",
                  "wall_time_s")


def build_model(cfg: RunConfig, strength: float | None = None):
    g = Grid(cfg.grid.half_width, cfg.grid.n_points)
    if cfg.model.kind == "step":
        return StepSurrogate(g, cfg.model.threshold)
    p = cfg.physics
    return PdeModel(
        grid=g,
        defect=DefectParams(p.epsilon if strength is None else strength),
        soliton=SolitonParams(p.amplitude, p.velocity, p.phase, p.x0),
        solver=SolverConfig(
            dt=cfg.solver.dt,
            t_final=cfg.solver.t_final or 0.0,
            splitting=cfg.solver.splitting,
            checkpoint_stride=cfg.solver.checkpoint_stride or None,
        ),
        window=cfg.classify.window,
        margin=cfg.classify.margin,
        check_influence=p.check_influence,
    )


# -- writers ---------------------------------------------------------------


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            values = [row.get(c) for c in columns] if isinstance(row, dict) else row
            w.writerow([_cell(v) for v in values])


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_json(path: Path, payload: dict):
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


class Writer:
    """Single writer for one output directory."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.root = Path(cfg.output.directory)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def _path(self, name: str) -> Path:
        self.files.append(name)
        return self.root / name

    def config(self):
        self._path("effective_config.ini").write_text(self.cfg.to_ini())

    def results(self, records: list[dict], columns=RESULT_COLUMNS, extra: dict | None = None):
        if "json" in self.cfg.output.formats:
            payload = {"schema_version": SCHEMA_VERSION, "kind": self.cfg.kind,
                       "records": records}
            payload.update(extra or {})
            write_json(self._path("results.json"), payload)
        if "csv" in self.cfg.output.formats:
            write_csv(self._path("results.csv"), columns, records)

    def table(self, name: str, columns, rows):
        write_csv(self._path(name), columns, rows)

    def error(self, exc: BaseException):
        write_json(self._path("error.json"), {
            "schema_version": SCHEMA_VERSION,
            "kind": self.cfg.kind,
            "error": type(exc).__name__,
            "message": str(exc),
        })


# -- pipelines -------------------------------------------------------------


def _timed(cfg: RunConfig, start: float) -> float | None:
    return time.perf_counter() - start if cfg.output.record_timing else None


def _mean_mode_rows(ens):
    g = ens.grid
    amp = mean_mode(ens).modulus()
    return [(float(x), float(a)) for x, a in zip(g.x, amp)]


def run_single(cfg: RunConfig, out: Writer) -> dict:
    model = build_model(cfg)
    p = model.soliton
    t_final = cfg.solver.t_final
    if t_final is None:
        t_final = model.clearance_time(p.velocity) * (1 + 1e-9)
    start = time.perf_counter()
    f0 = initial_soliton(p, model.grid, check_influence=model.check_influence)
    traj = propagate(f0, model.defect, model.solver.with_final_time(t_final),
                     amplitude=p.amplitude)
    try:
        outcome = classify(traj, model.window).value
    except InconclusiveError:
        outcome = "inconclusive"
    record = {
        "epsilon": model.defect.strength,
        "V": p.velocity,
        "t_final": traj.t_final,
        "outcome": outcome,
        "mass_drift": traj.mass_drift(),
        "hamiltonian_drift": traj.hamiltonian_drift(),
        "wrap_warnings": len(traj.wrap_warnings),
        "wall_time_s": _timed(cfg, start),
    }
    out.results([record], columns=tuple(record))
    out.table("checkpoints.csv", ("t", "mass", "hamiltonian"),
              zip(traj.times, traj.mass, traj.hamiltonian))
    if cfg.output.trajectory:
        x = model.grid.x.tolist()
        rows = ((t, xi, r) for t, f in zip(traj.times, traj.fields)
                for xi, r in zip(x, f.density().tolist()))
        out.table("trajectory.csv", ("t", "x", "density"), rows)
    return record


def _ensemble(cfg: RunConfig, model, v_a, v_b, n_nodes):
    rule = gauss_rule(cfg.chaos.family, n_nodes).on_interval(v_a, v_b, cfg.chaos.sd)
    return run_ensemble(rule, model, t_final=cfg.solver.t_final, workers=cfg.run.workers)


def run_ensemble_kind(cfg: RunConfig, out: Writer) -> dict:
    model = build_model(cfg)
    start = time.perf_counter()
    ens = _ensemble(cfg, model, cfg.chaos.v_a, cfg.chaos.v_b, cfg.chaos.nodes)
    records = [{"V": float(v), "outcome": o, "wrapped": w}
               for v, o, w in zip(ens.velocities, ens.outcomes, ens.wrapped)]
    out.results(records, columns=("V", "outcome", "wrapped"),
                extra={"t_final": ens.t_final, "wall_time_s": _timed(cfg, start)})
    out.table("mean_mode.csv", ("x", "abs_u0"), _mean_mode_rows(ens))
    return {"nodes": len(records)}


def _critical(cfg: RunConfig, model, v_a, v_b, out: Writer | None = None):
    start = time.perf_counter()
    ens = _ensemble(cfg, model, v_a, v_b, cfg.chaos.nodes)
    with warnings.catch_warnings():
        warnings.simplefilter("always", BracketWarning)
        res = critical_velocity(ens, cfg.chaos.l_prime, threshold=cfg.chaos.threshold,
                                min_gap=cfg.chaos.min_gap)
    res.wall_time_s = _timed(cfg, start)
    if out is not None:
        out.table("mean_mode.csv", ("x", "abs_u0"), _mean_mode_rows(ens))
    return res


def run_critical(cfg: RunConfig, out: Writer) -> dict:
    res = _critical(cfg, build_model(cfg), cfg.chaos.v_a, cfg.chaos.v_b, out)
    rec = res.record()
    rec["solver_runs"] = res.n_nodes
    out.results([rec], columns=RESULT_COLUMNS + ("solver_runs",))
    return rec


def run_convergence(cfg: RunConfig, out: Writer) -> dict:
    rows = convergence_study(
        build_model(cfg), (cfg.chaos.v_a, cfg.chaos.v_b), cfg.chaos.n_list,
        family=cfg.chaos.family, sd=cfg.chaos.sd, l_prime=cfg.chaos.l_prime,
        threshold=cfg.chaos.threshold, min_gap=cfg.chaos.min_gap,
        t_final=cfg.solver.t_final, workers=cfg.run.workers, timed=cfg.output.record_timing,
    )
    records = []
    for r in rows:
        rec = r.result.record()
        rec["error"] = r.error
        records.append(rec)
    out.results(records, columns=RESULT_COLUMNS + ("error",))
    return {"V_c": rows[-1].v_c}


def run_oracle(cfg: RunConfig, out: Writer) -> dict:
    start = time.perf_counter()
    res = bisect_critical(build_model(cfg), cfg.oracle.v_lo, cfg.oracle.v_hi, cfg.oracle.tol)
    res.wall_time_s = _timed(cfg, start)
    rec = res.record()
    out.results([rec], columns=("epsilon", "V_a", "V_b", "V_lo", "V_hi", "tol", "V_c",
                                "calls", "solver_runs", "wall_time_s"))
    return rec


def predict_next(history: list[tuple[float, float]], eps: float) -> float | None:
    """Extrapolated V_c at ``eps`` from earlier (eps, V_c) pairs.

    Linear in (log eps, log V_c) through the last two points; a single point
    is carried over unchanged.
    """
    if not history:
        return None
    if len(history) == 1:
        return history[0][1]
    (e1, v1), (e2, v2) = history[-2:]
    slope = (math.log(v2) - math.log(v1)) / (math.log(e2) - math.log(e1))
    return math.exp(math.log(v2) + slope * (math.log(eps) - math.log(e2)))


def _sweep_bracket(cfg: RunConfig, model, guess: float | None):
    """Bracket seeded by ``guess``; falls back to a geometric endpoint scan."""
    s = cfg.sweep
    if guess is not None:
        lo, hi = guess * (1 - s.bracket_width), guess * (1 + s.bracket_width)
        try:
            if model.classify_velocity(lo)[0].captured and \
                    not model.classify_velocity(hi)[0].captured:
                return lo, hi, "extrapolated"
        except InconclusiveError:
            pass
    scan = np.geomspace(s.scan_min, s.scan_max, s.scan_points)
    lo, hi, _ = find_bracket(model, scan)
    return lo, hi, "scan"


def run_sweep(cfg: RunConfig, out: Writer) -> dict:
    records, history = [], []
    for eps in sorted(cfg.sweep.epsilons):
        model = build_model(cfg, strength=eps)
        guess = predict_next(history, eps) if history else None
        if guess is None and cfg.chaos.v_a is not None and cfg.chaos.v_b is not None:
            lo, hi, source = cfg.chaos.v_a, cfg.chaos.v_b, "config"
        else:
            lo, hi, source = _sweep_bracket(cfg, model, guess)
        res = _critical(cfg, model, lo, hi)
        rec = res.record()
        rec["bracket_source"] = source
        records.append(rec)
        history.append((eps, res.v_c))
        log.info("eps=%g V_c=%.8g (%s bracket)", eps, res.v_c, source)
    out.results(records, columns=RESULT_COLUMNS + ("bracket_source",))
    out.table("sweep.csv", ("epsilon", "V_c"), [(r["epsilon"], r["V_c"]) for r in records])
    return {"points": len(records)}


PIPELINES = {
    "single": run_single,
    "ensemble": run_ensemble_kind,
    "critical": run_critical,
    "convergence": run_convergence,
    "oracle": run_oracle,
    "sweep": run_sweep,
}


def run_experiment(cfg: RunConfig) -> tuple[dict, list[str]]:
    """Run the configured pipeline; returns its summary and the files written."""
    out = Writer(cfg)
    out.config()
    try:
        summary = PIPELINES[cfg.kind](cfg, out)
    except (ValidationError, ArithmeticError, BracketError) as exc:
        out.error(exc)
        raise
    return summary, out.files
