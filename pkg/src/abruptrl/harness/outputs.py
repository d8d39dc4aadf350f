"""Summary JSON and CSV emission.

Files written to the output directory:

``summary.json``
    ``schema_version``, the full config, and per agent every metric plus
    the mean resolved absolute threshold.
``series.csv``
    ``step`` (steps since the change point, starting at 0) and one column
    per agent holding the mean cumulative post-change reward.
``runs.csv``
    one row per (agent, run): ``agent, run_index, seed, detection_time,
    classification, delay, total_reward, post_change_reward, mu0, sd0,
    threshold_abs``. Empty cells mean "not applicable".
``table.csv``
    detection tables only: ``rate_pre, rate_post, eta, policy, threshold,
    delay, false_alarm, miss, n_runs``.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from pathlib import Path

from .config import ExperimentConfig
from .montecarlo import MetricsTable
from .tables import TableRow

SCHEMA_VERSION = "1.0"

RUN_COLUMNS = ("agent", "run_index", "seed", "detection_time", "classification", "delay",
               "total_reward", "post_change_reward", "mu0", "sd0", "threshold_abs")


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return repr(x)
    return str(x)


def _json_number(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return x


def summary_record(table: MetricsTable, cfg: ExperimentConfig) -> dict:
    agents = {}
    for name, m in table.agents.items():
        agents[name] = {
            "rwd_post": _json_number(m.rwd_post),
            "rwd_total": _json_number(m.rwd_total),
            "rwd_total_se": _json_number(m.rwd_total_se),
            "avg_delay": _json_number(m.avg_delay),
            "true_detect_pct": _json_number(m.true_detect_pct),
            "miss_pct": _json_number(m.miss_pct),
            "false_alarm_pct": _json_number(m.false_alarm_pct),
            "n_runs": m.n_runs,
            "n_included": m.n_included,
            "mean_threshold_abs": _json_number(m.mean_threshold_abs),
        }
    return {"schema_version": SCHEMA_VERSION, "scenario": table.scenario,
            "config": cfg.to_mapping(), "agents": agents}


def emit_outputs(table: MetricsTable, cfg: ExperimentConfig, out_dir: str | Path | None = None) -> list[Path]:
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    summary = out / "summary.json"
    summary.write_text(json.dumps(summary_record(table, cfg), indent=2) + "\n")
    written.append(summary)
    if not table.agents:
        return written

    series = out / "series.csv"
    names = list(table.agents)
    with open(series, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", *names])
        columns = [table.agents[n].series for n in names]
        for k in range(len(columns[0])):
            w.writerow([k, *(_cell(float(c[k])) for c in columns)])
    written.append(series)

    runs = out / "runs.csv"
    with open(runs, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_COLUMNS)
        for r in table.runs:
            w.writerow([r.agent, r.run_index, cfg.seed, _cell(r.detection_time),
                        _cell(r.classification), _cell(r.delay if math.isfinite(r.delay) else None),
                        _cell(r.total_reward), _cell(r.post_change_reward), _cell(r.mu0),
                        _cell(r.sd0), _cell(r.threshold_abs if math.isfinite(r.threshold_abs) else None)])
    written.append(runs)
    return written


def emit_table(rows: list[TableRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = [f.name for f in dataclasses.fields(TableRow)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([_cell(getattr(row, f)) for f in fields])
    return path
