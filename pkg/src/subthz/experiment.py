"""Parameter sweeps, result files, figures and latency-target tables."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .channel import Condition, Scenario
from .config import SCHEMA_VERSION, SimConfig, SweepSpec
from .mac import run_realization
from .montecarlo import (CampaignResult, CampaignSpec, derive_stream, draw_channel,
                         run_campaign)
from .svgplot import Series, ecdf, line_plot

log = logging.getLogger(__name__)

METRIC_COLUMNS = ("index", "seed", "snr_db", "mcs", "delivered_mbps", "drop_pct",
                  "mean_latency_ms", "p95_latency_ms", "offered_mbps", "generated",
                  "delivered", "dropped", "resident")
CURVE_METRICS = {
    "throughput": ("delivered_mbps", "Average throughput (Mbps)"),
    "drop": ("drop_pct", "Average packet drop (%)"),
    "latency": ("mean_latency_ms", "Average latency (ms)"),
}
OUTDOOR = (Scenario.UMi, Scenario.RMa)
INDOOR = (Scenario.InH, Scenario.InF)


def campaign_spec(cfg: SimConfig, scenario, condition, pairing_label: str, rate: float,
                  realizations: int | None = None) -> CampaignSpec:
    return CampaignSpec(
        params=cfg.scenario_params(scenario, condition),
        pairing=cfg.pairing(pairing_label),
        app_rate_mbps=float(rate),
        distance_m=cfg.distance_m,
        realizations=realizations or cfg.realizations,
        master_seed=cfg.master_seed,
        confidence_level=cfg.confidence_level,
        stack=cfg.stack_config,
        link=cfg.link_model,
        ci_method=cfg.ci_method,
    )


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_clean(x) for x in v]
    return v


def _cell(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def campaign_dirname(spec: CampaignSpec) -> str:
    return spec.label


def write_campaign(result: CampaignResult, directory) -> Path:
    """Per-realization CSV plus a versioned JSON summary."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with (d / "metrics.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METRIC_COLUMNS)
        for rec in result.records:
            row = rec.as_row()
            row["snr_db"] = row.pop("mean_snr_db")
            w.writerow([_cell(row[c]) for c in METRIC_COLUMNS])
    spec = result.spec
    summary = {
        "schema_version": SCHEMA_VERSION,
        "campaign": {
            "scenario": spec.params.scenario.value,
            "condition": spec.params.condition.value,
            "pairing": spec.pairing.label,
            "app_rate_mbps": spec.app_rate_mbps,
            "distance_m": spec.distance_m,
            "freq_ghz": spec.freq_ghz,
            "realizations": spec.realizations,
            "master_seed": spec.master_seed,
            "confidence_level": spec.confidence_level,
            "ci_method": spec.ci_method,
        },
        "stats": result.stats.summary(),
    }
    (d / "summary.json").write_text(json.dumps(_clean(summary), indent=2) + "\n")
    return d


def read_metrics_csv(path) -> list[dict]:
    with Path(path).open() as fh:
        return list(csv.DictReader(fh))


# --------------------------------------------------------------------------- figures

def _group_label(res: CampaignResult, with_condition: bool) -> str:
    p = res.spec.params
    parts = [p.scenario.value] + ([p.condition.value] if with_condition else []) + [res.spec.pairing.label]
    return " ".join(parts)


def emit_snr_cdf(campaigns: list[CampaignResult], out) -> Path:
    """Empirical SNR CDF per (scenario, condition, pairing).

    The channel draw does not depend on the application rate, so the first
    campaign seen for each cell supplies its SNR sample.
    """
    if not campaigns:
        raise ValueError("no campaigns to plot")
    cells = {}
    for res in campaigns:
        key = (res.spec.params.scenario, res.spec.params.condition, res.spec.pairing.label)
        cells.setdefault(key, res)
    multi_cond = len({k[1] for k in cells}) > 1
    series = []
    for key, res in cells.items():
        snr = res.column("mean_snr_db")
        snr = snr[np.isfinite(snr)]
        if snr.size == 0:
            raise ValueError(f"campaign {res.spec.label} has no SNR data")
        x, y = ecdf(snr)
        series.append(Series(_group_label(res, multi_cond), x, y))
    return line_plot(series, out, "CDF of SNR at the UE", "SNR (dB)", "CDF", ylim=(0.0, 1.0))


def _curve_table(campaigns, metric):
    """{series label: {rate: CampaignResult}} for a metric-vs-rate figure."""
    multi_cond = len({r.spec.params.condition for r in campaigns}) > 1
    table = defaultdict(dict)
    for res in campaigns:
        table[_group_label(res, multi_cond)][res.spec.app_rate_mbps] = res
    rates = {tuple(sorted(v)) for v in table.values()}
    if len(rates) != 1:
        raise ValueError("campaigns do not share a common rate sweep")
    return table, list(next(iter(rates)))


def emit_metric_curves(campaigns: list[CampaignResult], metric: str, out) -> Path:
    if not campaigns:
        raise ValueError("no campaigns to plot")
    if metric not in CURVE_METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {sorted(CURVE_METRICS)}")
    name, ylabel = CURVE_METRICS[metric]
    table, rates = _curve_table(campaigns, metric)
    series = []
    for label, by_rate in table.items():
        stats = [by_rate[r].stats.metrics[name] for r in rates]
        y = np.array([s.mean for s in stats])
        hw = np.array([s.half_width for s in stats])
        series.append(Series(label, np.array(rates, float), y, y - hw, y + hw))
    return line_plot(series, out, f"{ylabel} vs. application rate", "Application rate (Mbps)", ylabel)


def emit_convergence(result: CampaignResult, out) -> Path:
    pts = result.stats.convergence_series
    if not pts:
        raise ValueError("campaign has no convergence series")
    n = np.array([p.n for p in pts], float)
    m = np.array([p.running_mean for p in pts])
    hw = np.array([p.ci_half_width for p in pts])
    s = Series(f"mean +/- {result.spec.confidence_level:.0%} CI", n, m, m - hw, m + hw)
    name = result.spec.convergence_metric
    return line_plot([s], out, f"{result.spec.label}: {name} vs. realizations",
                     "Number of realizations", name)


# --------------------------------------------------------------------------- tables

@dataclass(frozen=True)
class TargetCell:
    scenario: str
    condition: str
    pairing: str
    target_ms: float
    rate: str
    throughput_mbps: float | None
    drop_pct: float | None


@dataclass
class LatencyTargetReport:
    targets_ms: tuple[float, ...]
    cells: list[TargetCell]

    def as_dicts(self) -> list[dict]:
        return [dict(c.__dict__) for c in self.cells]

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "latency_targets.csv"
        with csv_path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(TargetCell.__dataclass_fields__))
            w.writeheader()
            for row in self.as_dicts():
                w.writerow({k: ("" if v is None else v) for k, v in row.items()})
        json_path = out / "latency_targets.json"
        json_path.write_text(json.dumps(_clean({"schema_version": SCHEMA_VERSION,
                                                "targets_ms": list(self.targets_ms),
                                                "cells": self.as_dicts()}), indent=2) + "\n")
        self._write_wide(out)
        return csv_path, json_path

    def _write_wide(self, out: Path):
        """Throughput/drop tables laid out per environment group and condition."""
        for group, scenarios in (("outdoor", OUTDOOR), ("indoor", INDOOR)):
            names = {s.value for s in scenarios}
            for cond in sorted({c.condition for c in self.cells}):
                cells = [c for c in self.cells if c.scenario in names and c.condition == cond]
                if not cells:
                    continue
                cols = sorted({(c.pairing, c.scenario) for c in cells},
                              key=lambda k: (k[0], [s.value for s in scenarios].index(k[1])))
                lookup = {(c.target_ms, c.pairing, c.scenario): c for c in cells}
                with (out / f"table_{group}_{cond}.csv").open("w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(["latency_target_ms"]
                               + [f"throughput_{p}_{s}" for p, s in cols]
                               + [f"drop_{p}_{s}" for p, s in cols])
                    for t in self.targets_ms:
                        row = [f"< {t:g} ms"]
                        for p, s in cols:
                            row.append(lookup[(t, p, s)].rate)
                        for p, s in cols:
                            d = lookup[(t, p, s)].drop_pct
                            row.append("" if d is None else f"{d:.1f}")
                        w.writerow(row)


def emit_latency_target_report(campaigns: list[CampaignResult], targets_ms=(5.0, 10.0),
                               out_dir=None) -> LatencyTargetReport:
    """Largest swept rate whose mean latency stays below each target, per cell.

    Cells with no qualifying rate report ``"< {min rate}"``.
    """
    cells = defaultdict(dict)
    for res in campaigns:
        p = res.spec.params
        cells[(p.scenario.value, p.condition.value, res.spec.pairing.label)][res.spec.app_rate_mbps] = res
    out = []
    for (scen, cond, pair), by_rate in cells.items():
        rates = sorted(by_rate)
        for t in targets_ms:
            ok = [r for r in rates
                  if math.isfinite(by_rate[r].stats.metrics["mean_latency_ms"].mean)
                  and by_rate[r].stats.metrics["mean_latency_ms"].mean < t]
            if ok:
                r = max(ok)
                st = by_rate[r].stats.metrics
                out.append(TargetCell(scen, cond, pair, t, f"{r:g}",
                                      st["delivered_mbps"].mean, st["drop_pct"].mean))
            else:
                # the drop column shows the bound at the lowest rate, as "< x" in the tables
                st = by_rate[rates[0]].stats.metrics
                out.append(TargetCell(scen, cond, pair, t, f"< {rates[0]:g}", None, st["drop_pct"].mean))
    report = LatencyTargetReport(tuple(targets_ms), out)
    if out_dir is not None:
        report.write(out_dir)
    return report


# --------------------------------------------------------------------------- sweep

def write_aggregate(campaigns: list[CampaignResult], path) -> Path:
    path = Path(path)
    names = ("delivered_mbps", "drop_pct", "mean_latency_ms", "p95_latency_ms", "mean_snr_db")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "condition", "pairing", "app_rate_mbps", "n"]
                   + [f"{n}_{k}" for n in names for k in ("mean", "ci_half_width")])
        for res in campaigns:
            p = res.spec.params
            row = [p.scenario.value, p.condition.value, res.spec.pairing.label,
                   _cell(res.spec.app_rate_mbps), res.stats.n]
            for n in names:
                iv = res.stats.metrics[n]
                row += [_cell(iv.mean), _cell(iv.half_width)]
            w.writerow(row)
    return path


def sweep_specs(cfg: SimConfig, sweep: SweepSpec | None = None):
    sweep = sweep or cfg.sweep
    for s in sweep.scenarios:
        for c in sweep.conditions:
            for p in sweep.pairings:
                for r in sweep.app_rates_mbps:
                    yield campaign_spec(cfg, s, c, p, r)


def run_sweep(cfg: SimConfig, out_dir, figures=("snr-cdf", "curves", "ci", "tables"),
              workers: int | None = None, trace: bool = False,
              sweep: SweepSpec | None = None) -> list[CampaignResult]:
    """Run one campaign per cell of the sweep and write the result tree under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = workers or cfg.workers
    results = []
    for spec in sweep_specs(cfg, sweep):
        log.info("campaign %s (%d realizations)", spec.label, spec.realizations)
        res = run_campaign(spec, workers=workers)
        d = write_campaign(res, out / "campaigns" / campaign_dirname(spec))
        if trace:
            write_trace(spec, 0, d / "trace_r0.csv")
        results.append(res)
    write_aggregate(results, out / "aggregate.csv")
    emit_figures(cfg, results, out, figures, workers)
    return results


def write_trace(spec: CampaignSpec, index: int, path) -> Path:
    real, rng = draw_channel(spec, index)
    link = spec.link_override or spec.link.link_state(real, spec.pairing)
    _, tr = run_realization(link, spec.stack_config, rng, trace=True)
    return tr.write_csv(path)


def emit_figures(cfg: SimConfig, results: list[CampaignResult], out: Path, figures, workers=1):
    fig_dir = out / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    by_cond = defaultdict(list)
    for r in results:
        by_cond[r.spec.params.condition].append(r)
    for cond, rs in by_cond.items():
        for group, scen in (("outdoor", OUTDOOR), ("indoor", INDOOR)):
            sub = [r for r in rs if r.spec.params.scenario in scen]
            if not sub:
                continue
            if "snr-cdf" in figures:
                emit_snr_cdf(sub, fig_dir / f"snr_cdf_{group}_{cond.value}.svg")
            if "curves" in figures:
                for metric in CURVE_METRICS:
                    emit_metric_curves(sub, metric, fig_dir / f"{metric}_{group}_{cond.value}.svg")
    if "tables" in figures and results:
        emit_latency_target_report(results, cfg.latency_targets_ms, out / "tables")
    if "ci" in figures:
        cv = cfg.convergence
        spec = campaign_spec(cfg, cv.scenario, cv.condition, cv.pairing, cv.app_rate_mbps,
                             realizations=cv.realizations)
        res = run_campaign(spec, workers=workers)
        write_campaign(res, out / "convergence" / campaign_dirname(spec))
        emit_convergence(res, fig_dir / "confidence_intervals.svg")
