"""SNR to MCS link abstraction.

Maps a beamformed channel realization to the per-slot link state the MAC
engine consumes: SNR, MCS (or outage), transport-block size and BLER.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .beamforming import AntennaPairing, effective_gain_db
from .channel import ChannelRealization

# 64QAM-family spectral efficiencies (bits/s/Hz), MCS 0..28. Entries 16 and 17
# are stored in ascending order so the column is strictly increasing.
DEFAULT_SPECTRAL_EFFICIENCY = (
    0.2344, 0.3066, 0.3770, 0.4902, 0.6016, 0.7402, 0.8770, 1.0273, 1.1758, 1.3262,
    1.3281, 1.4766, 1.6953, 1.9141, 2.1602, 2.4063, 2.5664, 2.5703, 2.7305, 3.0293,
    3.3223, 3.6094, 3.9023, 4.2129, 4.5234, 4.8164, 5.1152, 5.3320, 5.5547,
)
DEFAULT_MARGIN_DB = 3.0
# Calibration constant: makes MCS 28 at 1 GHz / 250 us carry exactly 56200 bytes.
DEFAULT_UTILIZATION = 0.3237619
DEFAULT_SLOT_S = 250e-6
BLER_TARGET = 0.1


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float = 30.0
    bandwidth_hz: float = 1e9
    noise_figure_db: float = 10.0
    freq_ghz: float = 140.0

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth must be positive")
        if not math.isfinite(self.tx_power_dbm):
            raise ValueError("transmit power must be finite")


@dataclass(frozen=True)
class McsEntry:
    mcs_index: int
    spectral_efficiency: float
    snr_threshold_db: float


@dataclass(frozen=True)
class McsTable:
    entries: tuple[McsEntry, ...]

    def __post_init__(self):
        if len(self.entries) != 29:
            raise ValueError(f"MCS table needs 29 entries (0..28), got {len(self.entries)}")
        for i, e in enumerate(self.entries):
            if e.mcs_index != i:
                raise ValueError("MCS entries must be indexed 0..28 in order")
        se = np.array([e.spectral_efficiency for e in self.entries])
        th = np.array([e.snr_threshold_db for e in self.entries])
        if np.any(np.diff(se) <= 0) or np.any(np.diff(th) <= 0):
            raise ValueError("spectral efficiency and SNR thresholds must be strictly increasing")

    @classmethod
    def from_spectral_efficiency(cls, se=DEFAULT_SPECTRAL_EFFICIENCY, margin_db=DEFAULT_MARGIN_DB):
        """Shannon-gap thresholds: ``10 log10(2^SE - 1) + margin``."""
        return cls(tuple(
            McsEntry(i, float(s), 10.0 * math.log10(2.0 ** s - 1.0) + margin_db)
            for i, s in enumerate(se)
        ))

    @property
    def max_index(self) -> int:
        return len(self.entries) - 1

    def __getitem__(self, mcs: int) -> McsEntry:
        if mcs is None or not 0 <= mcs <= self.max_index:
            raise ValueError(f"invalid MCS index {mcs!r}")
        return self.entries[mcs]


DEFAULT_MCS_TABLE = McsTable.from_spectral_efficiency()


@dataclass(frozen=True)
class LinkState:
    """Link seen by the MAC for a whole run. ``mcs is None`` means outage."""
    snr_db: float
    mcs: int | None
    tb_bytes: int
    bler: float
    max_phy_mbps: float
    slot_s: float = DEFAULT_SLOT_S

    def __post_init__(self):
        if self.mcs is None:
            if self.tb_bytes != 0 or self.max_phy_mbps != 0:
                raise ValueError("outage link must carry zero TB size and throughput")
        elif self.tb_bytes <= 0:
            raise ValueError("non-outage link needs a positive TB size")
        if not 0.0 <= self.bler <= 1.0:
            raise ValueError("bler must be a probability")

    @property
    def outage(self) -> bool:
        return self.mcs is None

    @classmethod
    def ideal(cls, tb_bytes: int, slot_s: float = DEFAULT_SLOT_S, bler: float = 0.0,
              mcs: int = 28, snr_db: float = math.inf) -> "LinkState":
        """Hand-built link with a fixed TB size and forced BLER."""
        return cls(snr_db, mcs, tb_bytes, bler, max_phy_throughput_mbps(tb_bytes, slot_s), slot_s)

    @classmethod
    def outage_link(cls, snr_db: float = -math.inf, slot_s: float = DEFAULT_SLOT_S) -> "LinkState":
        return cls(snr_db, None, 0, 0.0, 0.0, slot_s)


def noise_floor_dbm(budget: LinkBudget) -> float:
    return -174.0 + 10.0 * math.log10(budget.bandwidth_hz) + budget.noise_figure_db


def snr_db(budget: LinkBudget, real: ChannelRealization, pair: AntennaPairing) -> float:
    if not math.isclose(budget.freq_ghz, real.freq_ghz, rel_tol=1e-9):
        raise ValueError(f"budget frequency {budget.freq_ghz} GHz does not match "
                         f"realization frequency {real.freq_ghz} GHz")
    return budget.tx_power_dbm + effective_gain_db(pair, real) - real.path_loss_db - noise_floor_dbm(budget)


def select_mcs(table: McsTable, snr: float) -> int | None:
    """Highest MCS whose threshold does not exceed ``snr``; None for outage."""
    chosen = None
    for e in table.entries:
        if e.snr_threshold_db <= snr:
            chosen = e.mcs_index
        else:
            break
    return chosen


def tb_bytes(table: McsTable, mcs: int, budget: LinkBudget, slot_s: float = DEFAULT_SLOT_S,
             utilization: float = DEFAULT_UTILIZATION) -> int:
    if not slot_s > 0:
        raise ValueError("slot duration must be positive")
    if not 0.0 < utilization <= 1.0:
        raise ValueError("utilization must lie in (0, 1]")
    se = table[mcs].spectral_efficiency
    return int(math.floor(se * budget.bandwidth_hz * utilization * slot_s / 8.0))


def max_phy_throughput_mbps(tb: int, slot_s: float = DEFAULT_SLOT_S) -> float:
    if not slot_s > 0:
        raise ValueError("slot duration must be positive")
    return tb * 8.0 / slot_s / 1e6


def bler(table: McsTable, mcs: int, snr: float) -> float:
    """One decade of BLER per dB above the MCS threshold, capped at the 10% target."""
    th = table[mcs].snr_threshold_db
    if snr < th:
        raise ValueError(f"SNR {snr:.2f} dB is below the MCS {mcs} threshold {th:.2f} dB")
    return min(BLER_TARGET, BLER_TARGET * 10.0 ** (-(snr - th)))


@dataclass(frozen=True)
class LinkModel:
    """Bundle of budget, MCS table and frame calibration."""
    budget: LinkBudget = field(default_factory=LinkBudget)
    table: McsTable = DEFAULT_MCS_TABLE
    slot_s: float = DEFAULT_SLOT_S
    utilization: float = DEFAULT_UTILIZATION

    def state_for_snr(self, snr: float) -> LinkState:
        mcs = select_mcs(self.table, snr)
        if mcs is None:
            return LinkState.outage_link(snr, self.slot_s)
        tb = tb_bytes(self.table, mcs, self.budget, self.slot_s, self.utilization)
        if tb == 0:
            return LinkState.outage_link(snr, self.slot_s)
        return LinkState(snr, mcs, tb, bler(self.table, mcs, snr),
                         max_phy_throughput_mbps(tb, self.slot_s), self.slot_s)

    def link_state(self, real: ChannelRealization, pair: AntennaPairing) -> LinkState:
        return self.state_for_snr(snr_db(self.budget, real, pair))
