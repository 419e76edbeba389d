"""Uniform planar arrays and analog single-stream beamforming gain.

Arrays lie in the y-z plane with isotropic elements: ``cols`` elements along
y, ``rows`` along z. Both ends steer at the strongest path of a realization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization


@dataclass(frozen=True)
class ArrayConfig:
    rows: int
    cols: int
    spacing_wavelengths: float = 0.5

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("array must have at least one row and one column")
        if not self.spacing_wavelengths > 0:
            raise ValueError("element spacing must be positive")

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols

    def __str__(self):
        return f"{self.rows}x{self.cols}"


@dataclass(frozen=True)
class AntennaPairing:
    gnb: ArrayConfig
    ue: ArrayConfig
    label: str = "custom"


PAIRINGS = {
    "Ant1": AntennaPairing(ArrayConfig(8, 8), ArrayConfig(4, 4), "Ant1"),
    "Ant2": AntennaPairing(ArrayConfig(16, 16), ArrayConfig(4, 4), "Ant2"),
    "Ant3": AntennaPairing(ArrayConfig(64, 64), ArrayConfig(8, 8), "Ant3"),
}


def pairing(label: str) -> AntennaPairing:
    try:
        return PAIRINGS[label]
    except KeyError:
        raise ValueError(f"unknown antenna pairing {label!r}; expected one of {sorted(PAIRINGS)}") from None


def boresight_gain_db(cfg: ArrayConfig) -> float:
    return 10.0 * math.log10(cfg.n_elements)


def _direction_yz(az_deg, el_deg):
    az = np.radians(az_deg)
    el = np.radians(el_deg)
    return np.cos(el) * np.sin(az), np.sin(el)


def _ula_power(n: int, psi):
    """|sum_{k<n} exp(j k psi)|^2, evaluated stably near psi = 2 pi m."""
    half = 0.5 * np.asarray(psi, dtype=float)
    den = np.sin(half)
    small = np.abs(den) < 1e-12
    ratio = np.sin(n * half) / np.where(small, 1.0, den)
    return np.where(small, float(n) ** 2, ratio ** 2)


def array_factor_gain(cfg: ArrayConfig, steer_az_deg, steer_el_deg, path_az_deg, path_el_deg):
    """Linear array gain ``|AF|^2 / N`` toward a path when steered elsewhere.

    Accepts scalars or broadcastable arrays. Separable in the two array axes.
    """
    sy, sz = _direction_yz(steer_az_deg, steer_el_deg)
    py, pz = _direction_yz(path_az_deg, path_el_deg)
    k = 2.0 * math.pi * cfg.spacing_wavelengths
    power = _ula_power(cfg.cols, k * (py - sy)) * _ula_power(cfg.rows, k * (pz - sz))
    return power / cfg.n_elements


def array_factor_gain_db(cfg: ArrayConfig, steer_az_deg: float, steer_el_deg: float,
                         path_az_deg: float, path_el_deg: float) -> float:
    g = float(array_factor_gain(cfg, steer_az_deg, steer_el_deg, path_az_deg, path_el_deg))
    return 10.0 * math.log10(g) if g > 0 else -math.inf


def effective_gain_db(pair: AntennaPairing, real: ChannelRealization) -> float:
    """Combined tx/rx beamforming gain over all paths, steering at the strongest one."""
    if not real.paths:
        raise ValueError("realization has no paths")
    top = real.paths[0]
    p = np.array([m.power_frac for m in real.paths])
    g_tx = array_factor_gain(pair.gnb, top.aod_az_deg, top.aod_el_deg,
                             np.array([m.aod_az_deg for m in real.paths]),
                             np.array([m.aod_el_deg for m in real.paths]))
    g_rx = array_factor_gain(pair.ue, top.aoa_az_deg, top.aoa_el_deg,
                             np.array([m.aoa_az_deg for m in real.paths]),
                             np.array([m.aoa_el_deg for m in real.paths]))
    return 10.0 * math.log10(float(np.sum(p * g_tx * g_rx)))
