"""Campaign configuration: YAML file <-> dataclasses."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import yaml

from .beamforming import AntennaPairing, pairing
from .channel import Condition, Scenario, ScenarioParams
from .link import LinkBudget, LinkModel, McsTable
from .mac import StackConfig

SCHEMA_VERSION = 1
ENV_PREFIX = "SUBTHZ_"

_PARAM_KEYS = ("ple", "shadow_sigma_db", "cluster_rate", "cluster_decay_ns",
               "per_cluster_shadow_db", "rice_k_db", "max_clusters")
_STACK_KEYS = ("rlc_buffer_bytes", "harq_processes", "harq_max_retx", "harq_rtt_slots",
               "harq_enabled", "packet_bytes", "run_duration_s", "transport_delay_s")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    scenarios: tuple[Scenario, ...]
    conditions: tuple[Condition, ...]
    pairings: tuple[str, ...]
    app_rates_mbps: tuple[float, ...] = tuple(range(250, 3001, 250))
    fine_rates_mbps: tuple[float, ...] = ()

    def __post_init__(self):
        if not (self.scenarios and self.conditions and self.pairings and self.app_rates_mbps):
            raise ConfigError("sweep sets must be non-empty")
        rates = list(self.app_rates_mbps)
        if any(r <= 0 for r in rates) or any(b <= a for a, b in zip(rates, rates[1:])):
            raise ConfigError("application rates must be positive and strictly ascending")
        for p in self.pairings:
            pairing(p)

    @property
    def n_campaigns(self) -> int:
        return len(self.scenarios) * len(self.conditions) * len(self.pairings) * len(self.app_rates_mbps)


@dataclass(frozen=True)
class ConvergenceSpec:
    scenario: Scenario = Scenario.UMi
    condition: Condition = Condition.NLOS
    pairing: str = "Ant3"
    app_rate_mbps: float = 50.0
    realizations: int = 2000


@dataclass(frozen=True)
class SimConfig:
    scenarios: dict
    freq_ghz: float = 140.0
    distance_m: float = 100.0
    budget: LinkBudget = field(default_factory=LinkBudget)
    slot_s: float = 250e-6
    utilization: float = 0.3237619
    mcs_margin_db: float = 3.0
    spectral_efficiency: tuple[float, ...] = ()
    stack: StackConfig = field(default_factory=StackConfig)
    realizations: int = 100
    master_seed: int = 2023
    confidence_level: float = 0.95
    ci_method: str = "t"
    workers: int = 1
    sweep: SweepSpec | None = None
    convergence: ConvergenceSpec = field(default_factory=ConvergenceSpec)
    latency_targets_ms: tuple[float, ...] = (5.0, 10.0)

    def scenario_params(self, scenario, condition) -> ScenarioParams:
        key = (Scenario.parse(scenario) if isinstance(scenario, str) else scenario,
               Condition.parse(condition) if isinstance(condition, str) else condition)
        try:
            return self.scenarios[key]
        except KeyError:
            raise ConfigError(f"no channel parameters for {key[0].value} {key[1].value}") from None

    def pairing(self, label: str) -> AntennaPairing:
        return pairing(label)

    @property
    def link_model(self) -> LinkModel:
        table = McsTable.from_spectral_efficiency(self.spectral_efficiency, self.mcs_margin_db)
        return LinkModel(self.budget, table, self.slot_s, self.utilization)

    @property
    def stack_config(self) -> StackConfig:
        return replace(self.stack, slot_s=self.slot_s)

    def with_overrides(self, **kw) -> "SimConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self

    def to_dict(self) -> dict:
        scen = {}
        for (s, c), p in self.scenarios.items():
            scen.setdefault(s.value, {})[c.value] = {k: getattr(p, k) for k in _PARAM_KEYS}
        stack = {k: getattr(self.stack, k) for k in _STACK_KEYS}
        sw = self.sweep
        return {
            "schema_version": SCHEMA_VERSION,
            "channel": {"freq_ghz": self.freq_ghz, "distance_m": self.distance_m, "scenarios": scen},
            "link": {
                "tx_power_dbm": self.budget.tx_power_dbm,
                "bandwidth_hz": self.budget.bandwidth_hz,
                "noise_figure_db": self.budget.noise_figure_db,
                "slot_s": self.slot_s,
                "utilization": self.utilization,
                "mcs": {"margin_db": self.mcs_margin_db,
                        "spectral_efficiency": list(self.spectral_efficiency)},
            },
            "stack": stack,
            "campaign": {"realizations": self.realizations, "master_seed": self.master_seed,
                         "confidence_level": self.confidence_level, "ci_method": self.ci_method,
                         "workers": self.workers},
            "sweep": {
                "scenarios": [s.value for s in sw.scenarios],
                "conditions": [c.value for c in sw.conditions],
                "pairings": list(sw.pairings),
                "app_rates_mbps": list(sw.app_rates_mbps),
                "fine_rates_mbps": list(sw.fine_rates_mbps),
            },
            "convergence": {
                "scenario": self.convergence.scenario.value,
                "condition": self.convergence.condition.value,
                "pairing": self.convergence.pairing,
                "app_rate_mbps": self.convergence.app_rate_mbps,
                "realizations": self.convergence.realizations,
            },
            "report": {"latency_targets_ms": list(self.latency_targets_ms)},
        }

    def dump(self, path) -> Path:
        path = Path(path)
        path.write_text(yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None))
        return path


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name)
    if not isinstance(sec, dict):
        raise ConfigError(f"missing or malformed section {name!r}")
    return sec


def from_dict(doc: dict) -> SimConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a mapping")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    try:
        ch = _section(doc, "channel")
        scenarios = {}
        for sname, by_cond in ch["scenarios"].items():
            s = Scenario.parse(sname)
            for cname, vals in by_cond.items():
                c = Condition.parse(cname)
                unknown = set(vals) - set(_PARAM_KEYS)
                if unknown:
                    raise ConfigError(f"unknown channel keys {sorted(unknown)} for {sname} {cname}")
                scenarios[(s, c)] = ScenarioParams(s, c, **vals)

        ln = _section(doc, "link")
        budget = LinkBudget(float(ln["tx_power_dbm"]), float(ln["bandwidth_hz"]),
                            float(ln["noise_figure_db"]), float(ch["freq_ghz"]))
        mcs = ln["mcs"]
        st = _section(doc, "stack")
        unknown = set(st) - set(_STACK_KEYS)
        if unknown:
            raise ConfigError(f"unknown stack keys {sorted(unknown)}")
        stack = StackConfig(slot_s=float(ln["slot_s"]), **st)

        cp = _section(doc, "campaign")
        sw = _section(doc, "sweep")
        sweep = SweepSpec(
            tuple(Scenario.parse(s) for s in sw["scenarios"]),
            tuple(Condition.parse(c) for c in sw["conditions"]),
            tuple(sw["pairings"]),
            tuple(sw["app_rates_mbps"]),
            tuple(sw.get("fine_rates_mbps", ())),
        )
        cv = doc.get("convergence", {})
        conv = ConvergenceSpec(
            Scenario.parse(cv.get("scenario", "UMi")),
            Condition.parse(cv.get("condition", "NLOS")),
            cv.get("pairing", "Ant3"),
            cv.get("app_rate_mbps", 50.0),
            int(cv.get("realizations", 2000)),
        )
        cfg = SimConfig(
            scenarios=scenarios,
            freq_ghz=ch["freq_ghz"],
            distance_m=ch["distance_m"],
            budget=budget,
            slot_s=ln["slot_s"],
            utilization=ln["utilization"],
            mcs_margin_db=mcs["margin_db"],
            spectral_efficiency=tuple(mcs["spectral_efficiency"]),
            stack=stack,
            realizations=int(cp["realizations"]),
            master_seed=int(cp["master_seed"]),
            confidence_level=cp["confidence_level"],
            ci_method=cp["ci_method"],
            workers=int(cp["workers"]),
            sweep=sweep,
            convergence=conv,
            latency_targets_ms=tuple(doc.get("report", {}).get("latency_targets_ms", (5.0, 10.0))),
        )
    except KeyError as exc:
        raise ConfigError(f"missing configuration key {exc}") from None
    except (TypeError, AttributeError) as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None
    for s in cfg.sweep.scenarios:
        for c in cfg.sweep.conditions:
            cfg.scenario_params(s, c)
    try:
        cfg.link_model  # validates the table (29 monotone entries)
    except ValueError as exc:
        raise ConfigError(f"invalid MCS table: {exc}") from None
    return cfg


def load_config(path=None) -> SimConfig:
    """Load a YAML config; ``None`` loads the packaged default."""
    if path is None:
        text = resources.files("subthz").joinpath("data/default_config.yaml").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    return from_dict(doc)


def default_config() -> SimConfig:
    return load_config(None)


def env_overrides(environ=None) -> dict:
    """Flag defaults from ``SUBTHZ_*`` environment variables."""
    env = os.environ if environ is None else environ
    out = {}
    for key in ("config", "out", "realizations", "seed", "workers", "figure", "trace"):
        val = env.get(ENV_PREFIX + key.upper())
        if val is not None:
            out[key] = val
    return out
