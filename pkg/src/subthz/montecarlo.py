"""Monte-Carlo campaigns: per-realization seeding, parallel runs, confidence intervals."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .beamforming import AntennaPairing
from .channel import ChannelRealization, ScenarioParams, draw_realization
from .link import LinkModel, LinkState
from .mac import RunMetrics, StackConfig, run_realization

log = logging.getLogger(__name__)

METRICS = ("offered_mbps", "delivered_mbps", "drop_pct", "mean_latency_ms",
           "p95_latency_ms", "mean_snr_db")


def derive_stream(master_seed: int, realization_index: int) -> np.random.Generator:
    """Independent generator for one realization, keyed only by (seed, index)."""
    if realization_index < 0:
        raise ValueError("realization index must be non-negative")
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(realization_index),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class Interval:
    mean: float
    half_width: float
    sample_std: float = 0.0
    n: int = 0

    @property
    def low(self):
        return self.mean - self.half_width

    @property
    def high(self):
        return self.mean + self.half_width


def confidence_interval(samples, level: float = 0.95, method: str = "t") -> Interval:
    """Two-sided interval for the mean: ``mean +/- q * s / sqrt(n)``.

    ``method`` is ``"t"`` (Student-t quantile, n - 1 dof) or ``"normal"``.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError(f"need at least 2 samples for a confidence interval, got {n}")
    if not 0.0 < level < 1.0:
        raise ValueError("confidence level must lie in (0, 1)")
    mean = float(x.mean())
    s = float(x.std(ddof=1))
    if method == "t":
        q = stats.t.ppf(0.5 + level / 2.0, n - 1)
    elif method == "normal":
        q = stats.norm.ppf(0.5 + level / 2.0)
    else:
        raise ValueError(f"unknown interval method {method!r}")
    return Interval(mean, float(q * s / math.sqrt(n)), s, n)


def geometric_checkpoints(n: int, start: int = 50) -> list[int]:
    """``start, 2*start, 4*start, ...`` capped by and always ending at ``n``."""
    pts = []
    c = start
    while c < n:
        pts.append(c)
        c *= 2
    pts.append(n)
    return [p for p in pts if p >= 2]


@dataclass(frozen=True)
class ConvergencePoint:
    n: int
    running_mean: float
    ci_half_width: float


def convergence_analysis(values, checkpoints, level: float = 0.95,
                         method: str = "t") -> list[ConvergencePoint]:
    """Running mean and CI half-width over the first ``n`` realizations, per checkpoint.

    NaN entries (e.g. latency of a run that delivered nothing) are skipped
    within each prefix.
    """
    x = np.asarray(values, dtype=float)
    out = []
    for n in sorted(set(int(c) for c in checkpoints)):
        if n > x.size:
            raise ValueError(f"checkpoint {n} exceeds the {x.size} available realizations")
        prefix = x[:n]
        prefix = prefix[~np.isnan(prefix)]
        if prefix.size < 2:
            out.append(ConvergencePoint(n, float(prefix.mean()) if prefix.size else math.nan, math.nan))
            continue
        ci = confidence_interval(prefix, level, method)
        out.append(ConvergencePoint(n, ci.mean, ci.half_width))
    return out


@dataclass(frozen=True)
class CampaignSpec:
    params: ScenarioParams
    pairing: AntennaPairing
    app_rate_mbps: float
    distance_m: float = 100.0
    realizations: int = 2500
    master_seed: int = 2023
    confidence_level: float = 0.95
    stack: StackConfig = field(default_factory=StackConfig)
    link: LinkModel = field(default_factory=LinkModel)
    ci_method: str = "t"
    # forces every realization onto this link instead of the channel draw
    link_override: LinkState | None = None
    convergence_metric: str = "delivered_mbps"

    def __post_init__(self):
        if self.realizations < 2:
            raise ValueError("a campaign needs at least 2 realizations")
        if not 0.5 < self.confidence_level < 1.0:
            raise ValueError("confidence level must lie in (0.5, 1)")
        if not self.app_rate_mbps > 0:
            raise ValueError("application rate must be positive")

    @property
    def freq_ghz(self) -> float:
        return self.link.budget.freq_ghz

    @property
    def stack_config(self) -> StackConfig:
        return self.stack.with_rate(self.app_rate_mbps)

    @property
    def label(self) -> str:
        p = self.params
        return f"{p.scenario.value}_{p.condition.value}_{self.pairing.label}_{self.app_rate_mbps:g}Mbps"


@dataclass(frozen=True)
class RealizationRecord:
    index: int
    seed: int
    metrics: RunMetrics

    def as_row(self) -> dict:
        return {"index": self.index, "seed": self.seed, **self.metrics.as_row()}


@dataclass
class CampaignStats:
    metrics: dict[str, Interval]
    convergence_series: list[ConvergencePoint]
    n: int
    valid: bool = True

    def summary(self) -> dict:
        return {
            "n": self.n,
            "valid": self.valid,
            "metrics": {k: {"mean": v.mean, "sample_std": v.sample_std,
                            "ci_half_width": v.half_width, "n": v.n}
                        for k, v in self.metrics.items()},
            "convergence_series": [{"n": c.n, "running_mean": c.running_mean,
                                    "ci_half_width": c.ci_half_width}
                                   for c in self.convergence_series],
        }


@dataclass
class CampaignResult:
    spec: CampaignSpec
    records: list[RealizationRecord]
    stats: CampaignStats

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r.metrics, name) for r in self.records], dtype=float)


class CampaignError(RuntimeError):
    def __init__(self, message, partial: CampaignResult | None = None):
        super().__init__(message)
        self.partial = partial


def realization_seed(master_seed: int, index: int) -> int:
    """Printable 64-bit summary of the stream used for ``index`` (for the CSV)."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def draw_channel(spec: CampaignSpec, index: int) -> tuple[ChannelRealization, np.random.Generator]:
    rng = derive_stream(spec.master_seed, index)
    return draw_realization(spec.params, spec.distance_m, spec.freq_ghz, rng), rng


def simulate_one(spec: CampaignSpec, index: int) -> RealizationRecord:
    real, rng = draw_channel(spec, index)
    link = spec.link_override or spec.link.link_state(real, spec.pairing)
    metrics = run_realization(link, spec.stack_config, rng)
    return RealizationRecord(index, realization_seed(spec.master_seed, index), metrics)


def _simulate_chunk(spec: CampaignSpec, indices: list[int]) -> list[RealizationRecord]:
    return [simulate_one(spec, i) for i in indices]


def aggregate(spec: CampaignSpec, records: list[RealizationRecord], valid: bool = True) -> CampaignStats:
    records = sorted(records, key=lambda r: r.index)
    n = len(records)
    out = {}
    for name in METRICS:
        x = np.array([getattr(r.metrics, name) for r in records], dtype=float)
        x = x[np.isfinite(x)]
        if x.size >= 2:
            out[name] = confidence_interval(x, spec.confidence_level, spec.ci_method)
        elif x.size == 1:
            out[name] = Interval(float(x[0]), math.nan, math.nan, 1)
        else:
            out[name] = Interval(math.nan, math.nan, math.nan, 0)
    series = []
    if n >= 2:
        values = [getattr(r.metrics, spec.convergence_metric) for r in records]
        series = convergence_analysis(values, geometric_checkpoints(n), spec.confidence_level,
                                      spec.ci_method)
    return CampaignStats(out, series, n, valid)


def run_campaign(spec: CampaignSpec, workers: int = 1, chunk_size: int = 64) -> CampaignResult:
    """Run every realization of ``spec``; results do not depend on ``workers``."""
    indices = list(range(spec.realizations))
    if workers <= 1:
        records = _simulate_chunk(spec, indices)
    else:
        chunks = [indices[i:i + chunk_size] for i in range(0, len(indices), chunk_size)]
        records = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_simulate_chunk, spec, c) for c in chunks]
            for fut in futures:
                try:
                    records.extend(fut.result())
                except Exception as exc:
                    for f in futures:
                        f.cancel()
                    partial = CampaignResult(spec, sorted(records, key=lambda r: r.index),
                                             aggregate(spec, records, valid=False))
                    raise CampaignError(f"campaign {spec.label} aborted: {exc!r}", partial) from exc
    records.sort(key=lambda r: r.index)
    log.debug("campaign %s: %d realizations", spec.label, len(records))
    return CampaignResult(spec, records, aggregate(spec, records))
