"""Aggregate tables and plot-ready series from a directory of run summaries.

Outputs (all CSV):

- ``fidelity.csv``  model, K, N_l, method, n_runs, n_failed, max_F, med_F, med_F_err
- ``gain.csv``      model, K, N_l, method, G_med, G_med_err, G_min (against VQE at equal N_l)
- ``delta_f.csv``   model, K, N_l, method, max_dF, med_dF, med_dF_err, med_dF_upper80
- ``cost_series.csv``     one row per recorded iteration of every run
- ``fidelity_bands.csv``  best / 25th / 50th / 75th percentile infidelity per iteration
- ``ci_grid.csv``         cumulative-infidelity grids of runs that recorded them

Fidelities are H_trc fidelities of the end-of-run estimate; medians carry
bootstrap errors with a fixed seed, so reports are reproducible.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path

import numpy as np

from ..errors import DomainError
from ..metrics import DEFAULT_RESAMPLES, bootstrap_median_error, bootstrap_median_upper, gain_factors
from .io import fmt, write_csv
from .runner import CI_FILE, SUMMARY_FILE, TRACE_FILE

BOOTSTRAP_SEED = 0
FIDELITY_COLUMNS = ("model", "K", "N_l", "method", "n_runs", "n_failed", "max_F", "med_F", "med_F_err")
GAIN_COLUMNS = ("model", "K", "N_l", "method", "G_med", "G_med_err", "G_min")
DELTA_COLUMNS = ("model", "K", "N_l", "method", "max_dF", "med_dF", "med_dF_err", "med_dF_upper80")
COST_COLUMNS = ("model", "K", "N_l", "method", "run", "iter", "iter_per_param", "cost", "energy", "norm_cost")
BAND_COLUMNS = ("model", "K", "N_l", "method", "iter", "iter_per_param", "n_runs", "best", "p25", "p50", "p75")
CI_COLUMNS = ("model", "K", "N_l", "method", "run", "iter", "threshold_index", "mu", "weight_above", "ci", "clamped")
METHOD_ORDER = {"vqe": 0, "hard_ortho": 1, "soft_ortho": 2}


class NoDataError(DomainError):
    """The report directory holds no run summaries."""


def _group_key(summary: dict) -> tuple:
    g = summary["group"]
    return (g["model"], int(g["K"]), int(g["N_l"]), g["method"])


def _sort_key(key: tuple):
    model, K, n_l, method = key
    return (model, n_l, METHOD_ORDER.get(method, 99), K)


def collect_runs(root) -> dict:
    """Summaries grouped by (model, K, N_l, method), each list ordered by run index."""
    root = Path(root)
    groups = defaultdict(list)
    for path in sorted(root.rglob(SUMMARY_FILE)):
        doc = json.loads(path.read_text())
        if "group" not in doc:
            continue
        doc["_dir"] = path.parent
        groups[_group_key(doc)].append(doc)
    if not groups:
        raise NoDataError(f"no run summaries under {root}")
    for runs in groups.values():
        runs.sort(key=lambda d: d["run_index"])
    return dict(sorted(groups.items(), key=lambda kv: _sort_key(kv[0])))


def _ok(runs):
    return [r for r in runs if r.get("status") == "ok"]


def _median_stats(values):
    if len(values) >= 2:
        return bootstrap_median_error(values, DEFAULT_RESAMPLES, BOOTSTRAP_SEED)
    if len(values) == 1:
        return float(values[0]), float("nan")
    return float("nan"), float("nan")


def fidelity_table(groups: dict) -> list:
    rows = []
    for key, runs in groups.items():
        f = [r["fidelity"]["f_trc"] for r in _ok(runs)]
        med, err = _median_stats(f)
        rows.append((*key, len(f), len(runs) - len(f), fmt(max(f) if f else None), fmt(med), fmt(err)))
    return rows


def gain_table(groups: dict) -> list:
    """Gain of every method against VQE of the same model and depth; VQE rows are 1 by definition."""
    rows = []
    for (model, K, n_l, method), runs in groups.items():
        base = groups.get((model, 1, n_l, "vqe"))
        if base is None:
            continue
        vqe_f = [r["fidelity"]["f_trc"] for r in _ok(base)]
        algo_f = [r["fidelity"]["f_trc"] for r in _ok(runs)]
        if not vqe_f or not algo_f:
            continue
        report = gain_factors(vqe_f, algo_f, DEFAULT_RESAMPLES, BOOTSTRAP_SEED)
        rows.append((model, K, n_l, method, fmt(report.g_med), fmt(report.g_med_err), fmt(report.g_min)))
    return rows


def delta_f_table(groups: dict) -> list:
    rows = []
    for key, runs in groups.items():
        d = [r["fidelity"]["delta_f"] for r in _ok(runs)]
        if not d:
            continue
        med, err = _median_stats(d)
        upper = bootstrap_median_upper(d, 0.8, DEFAULT_RESAMPLES, BOOTSTRAP_SEED) if len(d) >= 2 else None
        rows.append((*key, fmt(max(d)), fmt(med), fmt(err), fmt(upper)))
    return rows


def _read_trace(run_dir: Path) -> list:
    path = run_dir / TRACE_FILE
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def cost_series(groups: dict) -> list:
    rows = []
    for key, runs in groups.items():
        for run in _ok(runs):
            n = run["num_parameters"]
            for rec in _read_trace(run["_dir"]):
                it = int(rec["iter"])
                rows.append(
                    (*key, run["run_index"], it, fmt((it + 1) / n), rec["cost"], rec["energy"], rec["norm_cost"])
                )
    return rows


def fidelity_bands(groups: dict) -> list:
    """Order statistics of 1 - F_trc across runs at each iteration every run recorded."""
    rows = []
    for key, runs in groups.items():
        ok = _ok(runs)
        if not ok:
            continue
        per_run = []
        for run in ok:
            per_run.append({int(r["iter"]): float(r["f_trc"]) for r in _read_trace(run["_dir"]) if r["f_trc"] != ""})
        common = sorted(set.intersection(*(set(p) for p in per_run)))
        n = ok[0]["num_parameters"]
        for it in common:
            infid = np.array([1.0 - p[it] for p in per_run])
            p25, p50, p75 = np.percentile(infid, [25, 50, 75])
            rows.append((*key, it, fmt((it + 1) / n), len(per_run), fmt(infid.min()), fmt(p25), fmt(p50), fmt(p75)))
    return rows


def ci_grids(groups: dict) -> list:
    rows = []
    for key, runs in groups.items():
        for run in _ok(runs):
            path = run["_dir"] / CI_FILE
            if not path.exists():
                continue
            with open(path, newline="") as fh:
                for rec in csv.DictReader(fh):
                    rows.append(
                        (*key, run["run_index"], rec["iter"], rec["threshold_index"], rec["mu"],
                         rec["weight_above"], rec["ci"], rec["clamped"])
                    )
    return rows


def write_report(root, out_dir=None) -> Path:
    root = Path(root)
    out_dir = Path(out_dir) if out_dir is not None else root / "report"
    groups = collect_runs(root)
    write_csv(out_dir / "fidelity.csv", FIDELITY_COLUMNS, fidelity_table(groups))
    write_csv(out_dir / "gain.csv", GAIN_COLUMNS, gain_table(groups))
    write_csv(out_dir / "delta_f.csv", DELTA_COLUMNS, delta_f_table(groups))
    write_csv(out_dir / "cost_series.csv", COST_COLUMNS, cost_series(groups))
    write_csv(out_dir / "fidelity_bands.csv", BAND_COLUMNS, fidelity_bands(groups))
    write_csv(out_dir / "ci_grid.csv", CI_COLUMNS, ci_grids(groups))
    return out_dir
