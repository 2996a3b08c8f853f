"""Run a SweepSpec over its grid and write the result table.

Each distinct (run, effective scenario) pair is evaluated once; grid points
that differ only in parameters irrelevant to a run (for example the GS density
for a terrestrial-BS run) reuse that result.  Tasks go to a bounded process
pool and rows are assembled in grid order, so the output never depends on
scheduling.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import logging
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .analytic import backhaul_probability
from .config import RunSpec, SweepSpec, antenna_label
from .montecarlo import DeploymentKind, estimate_coverage

log = logging.getLogger(__name__)

COLUMNS = (
    "preset", "antenna_kind", "deployment", "density_per_km2", "uav_height_m",
    "threshold_db", "method", "probability", "std_error", "n_trials", "status", "wall_ms",
)

_METHOD = {"analytic": "analytic", "mc": "monte-carlo"}


@dataclass
class Row:
    preset: str
    antenna_kind: str
    deployment: str
    density_per_km2: float
    uav_height_m: float
    threshold_db: float
    method: str
    probability: float | None
    std_error: float | None
    n_trials: int
    status: str
    wall_ms: float | None


def _task_key(run: RunSpec, point):
    if run.deployment == "gs":
        return (run.label, point.scenario)
    return (run.label, point.terrestrial.resolve(point.scenario), point.terrestrial.association)


def _evaluate(task):
    """Worker entry point: returns (probability, std_error, n_trials, status, wall_ms)."""
    run, scn, kind, trial, quad = task
    start = time.perf_counter()
    try:
        if run.engine == "analytic":
            res = backhaul_probability(scn, quad)
        else:
            res = estimate_coverage(scn, kind, trial)
        out = (res.probability, res.std_error, res.n_trials, "ok")
    except Exception as exc:  # recorded in-row, the sweep carries on
        log.debug("point failed\n%s", traceback.format_exc())
        msg = " ".join(f"{type(exc).__name__}: {exc}".split())
        out = (None, None, 0, f"error: {msg}")
    return out + ((time.perf_counter() - start) * 1e3,)


def run_sweep(spec: SweepSpec) -> list[Row]:
    """Evaluate every grid point for every run; rows come back in grid-major order."""
    trial = spec.trial
    if spec.workers > 1:
        # the pool already spreads the grid over the cores
        trial = replace(trial, workers=1)

    keys = {}
    tasks = []
    layout = []
    for point in spec.points:
        for run in spec.runs:
            key = _task_key(run, point)
            if key not in keys:
                keys[key] = len(tasks)
                kind = DeploymentKind.dedicated_gs() if run.deployment == "gs" else point.terrestrial
                tasks.append((run, point.scenario, kind, trial, spec.quadrature))
            layout.append((point, run, keys[key]))

    log.info("sweep: %d rows, %d distinct evaluations, %d worker(s)",
             len(layout), len(tasks), spec.workers)
    if spec.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_evaluate, tasks))
    else:
        results = [_evaluate(t) for t in tasks]

    rows = []
    for point, run, idx in layout:
        p, se, n, status, ms = results[idx]
        gs = run.deployment == "gs"
        net = point.scenario.net if gs else point.terrestrial.network
        rows.append(Row(
            preset=spec.preset,
            antenna_kind=antenna_label(point.scenario.antenna),
            deployment=point.gs_label if gs else point.bs_label,
            density_per_km2=net.density_per_km2,
            uav_height_m=point.scenario.uav_height_m,
            threshold_db=point.threshold_db,
            method=_METHOD[run.engine],
            probability=p,
            std_error=se,
            n_trials=n,
            status=status,
            wall_ms=round(ms, 1) if spec.timing else None,
        ))
        log.info("%s %s %s lam=%g gamma=%g: %s", run.label, rows[-1].antenna_kind,
                 rows[-1].deployment, rows[-1].density_per_km2, rows[-1].uav_height_m,
                 status if p is None else f"{p:.5f} ({ms:.0f} ms)")
    return rows


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        # 12 significant digits trims the per-m^2 <-> per-km^2 round-trip noise
        return format(value, ".12g")
    return str(value)


def format_csv(rows: list[Row]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, c)) for c in COLUMNS])
    return buf.getvalue()


def _json_value(value):
    if isinstance(value, float):
        return float(format(value, ".12g"))
    return value


def _result_config(raw: dict) -> dict:
    """The merged config minus settings that cannot change the results
    (output destination, worker counts), so reruns produce identical files."""
    cfg = copy.deepcopy(raw)
    cfg.pop("output", None)
    for section in ("sweep", "montecarlo"):
        cfg.get(section, {}).pop("workers", None)
    return cfg


def format_json(rows: list[Row], spec: SweepSpec) -> str:
    doc = {
        "columns": list(COLUMNS),
        "config": _result_config(spec.raw),
        "axes": [{"path": p, "values": v} for p, v in spec.axes],
        "runs": [r.label for r in spec.runs],
        "rows": [{c: _json_value(getattr(row, c)) for c in COLUMNS} for row in rows],
    }
    return json.dumps(doc, indent=2) + "\n"


def render(rows: list[Row], spec: SweepSpec, fmt: str | None = None) -> str:
    fmt = fmt or spec.output_format
    return format_csv(rows) if fmt == "csv" else format_json(rows, spec)
