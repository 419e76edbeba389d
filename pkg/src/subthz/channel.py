"""Drop-based statistical channel for a single gNB-UE link.

Large-scale loss follows the close-in (1 m free-space reference) model with
log-normal shadowing. Small-scale structure is a short list of time clusters,
each reduced to one directional path. A realization is drawn once and held
fixed for the duration of a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

SPEED_OF_LIGHT = 2.99792458e8


class Scenario(str, Enum):
    UMi = "UMi"
    RMa = "RMa"
    InH = "InH"
    InF = "InF"

    @classmethod
    def parse(cls, name: str) -> "Scenario":
        # UMa results track UMi closely, so it shares the UMi parameter set.
        if name.strip().lower() == "uma":
            return cls.UMi
        for member in cls:
            if member.value.lower() == name.strip().lower():
                return member
        raise ValueError(f"unknown scenario {name!r}")


class Condition(str, Enum):
    LOS = "LOS"
    NLOS = "NLOS"

    @classmethod
    def parse(cls, name: str) -> "Condition":
        try:
            return cls(name.strip().upper())
        except ValueError:
            raise ValueError(f"unknown channel condition {name!r}") from None


@dataclass(frozen=True)
class ScenarioParams:
    scenario: Scenario
    condition: Condition
    ple: float
    shadow_sigma_db: float
    cluster_rate: float = 3.0
    cluster_decay_ns: float = 30.0
    per_cluster_shadow_db: float = 3.0
    rice_k_db: float = 9.0
    max_clusters: int = 6

    def __post_init__(self):
        if self.ple < 1.0:
            raise ValueError(f"path-loss exponent must be >= 1, got {self.ple}")
        if self.shadow_sigma_db < 0:
            raise ValueError("shadow_sigma_db must be non-negative")
        if not 1 <= self.max_clusters <= 10:
            raise ValueError("max_clusters must lie in [1, 10]")
        if self.cluster_decay_ns <= 0:
            raise ValueError("cluster_decay_ns must be positive")
        if self.cluster_rate < 1.0:
            raise ValueError("cluster_rate must be >= 1 (count is 1 + Poisson(rate - 1))")
        if self.per_cluster_shadow_db < 0:
            raise ValueError("per_cluster_shadow_db must be non-negative")

    @property
    def key(self) -> tuple[Scenario, Condition]:
        return (self.scenario, self.condition)


@dataclass(frozen=True)
class MultipathComponent:
    delay_ns: float
    power_frac: float
    aod_az_deg: float
    aod_el_deg: float
    aoa_az_deg: float
    aoa_el_deg: float


@dataclass(frozen=True)
class ChannelRealization:
    params: ScenarioParams
    distance_m: float
    freq_ghz: float
    path_loss_db: float
    shadow_draw_db: float
    paths: tuple[MultipathComponent, ...] = field(default_factory=tuple)

    @property
    def strongest(self) -> MultipathComponent:
        return self.paths[0]


def fspl_1m(freq_ghz: float) -> float:
    """Free-space path loss in dB at the 1 m close-in reference distance."""
    if not freq_ghz > 0:
        raise ValueError(f"frequency must be positive, got {freq_ghz} GHz")
    wavelength = SPEED_OF_LIGHT / (freq_ghz * 1e9)
    return 20.0 * math.log10(4.0 * math.pi / wavelength)


def path_loss_db(params: ScenarioParams, distance_m: float, freq_ghz: float,
                 shadow_draw_db: float = 0.0) -> float:
    """Close-in path loss ``FSPL(1 m) + 10 n log10(d) + X`` in dB."""
    if distance_m < 1.0:
        raise ValueError(f"distance must be >= 1 m for the close-in model, got {distance_m}")
    return fspl_1m(freq_ghz) + 10.0 * params.ple * math.log10(distance_m) + shadow_draw_db


def _cluster_count(params: ScenarioParams, rng: np.random.Generator) -> int:
    n = 1 + rng.poisson(params.cluster_rate - 1.0)
    return int(min(max(n, 1), params.max_clusters))


def _uniform_angles(rng: np.random.Generator, n: int) -> np.ndarray:
    # columns: aod_az, aod_el, aoa_az, aoa_el
    az = rng.uniform(0.0, 360.0, size=(n, 2))
    el = rng.uniform(-90.0, 90.0, size=(n, 2))
    return np.column_stack([az[:, 0], el[:, 0], az[:, 1], el[:, 1]])


def draw_realization(params: ScenarioParams, distance_m: float, freq_ghz: float,
                     rng: np.random.Generator) -> ChannelRealization:
    """Draw one channel drop.

    The draw order is fixed (shadowing, cluster count, delays, cluster
    shadowing, angles) so that a given stream always yields the same drop.
    """
    if distance_m < 1.0:
        raise ValueError(f"distance must be >= 1 m for the close-in model, got {distance_m}")

    shadow = float(rng.normal(0.0, params.shadow_sigma_db)) if params.shadow_sigma_db > 0 else 0.0
    pl = path_loss_db(params, distance_m, freq_ghz, shadow)

    n_clusters = _cluster_count(params, rng)
    delays = rng.exponential(params.cluster_decay_ns, size=n_clusters)
    z = rng.normal(0.0, 1.0, size=n_clusters) * params.per_cluster_shadow_db
    powers = np.exp(-delays / params.cluster_decay_ns) * 10.0 ** (z / 10.0)
    powers /= powers.sum()

    if params.condition is Condition.LOS:
        k_lin = 10.0 ** (params.rice_k_db / 10.0)
        los_frac = k_lin / (k_lin + 1.0)
        delays = np.concatenate([[0.0], delays])
        powers = np.concatenate([[los_frac], powers * (1.0 - los_frac)])

    angles = _uniform_angles(rng, len(powers))
    # stable sort keeps the LOS path first on exact ties
    order = np.argsort(-powers, kind="stable")
    paths = tuple(
        MultipathComponent(
            delay_ns=float(delays[i]),
            power_frac=float(powers[i]),
            aod_az_deg=float(angles[i, 0]),
            aod_el_deg=float(angles[i, 1]),
            aoa_az_deg=float(angles[i, 2]),
            aoa_el_deg=float(angles[i, 3]),
        )
        for i in order
    )
    return ChannelRealization(params, float(distance_m), float(freq_ghz), pl, shadow, paths)
