"""Slot-level downlink engine: CBR source, RLC buffer, HARQ, latency accounting.

The RLC buffer is a byte stream. Admitted packet ``k`` owns bytes
``[k * P, (k + 1) * P)``, so the fresh part of the buffer is always one
contiguous range. Payloads that exhaust their HARQ attempts go back to the
head of the buffer as separate ranges. A packet is delivered when its last
byte is decoded, and dropped as soon as any of its bytes is discarded.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numba as nb
import numpy as np

from .link import DEFAULT_SLOT_S, LinkState

# packet states
_RESIDENT, _DELIVERED, _DROPPED = 0, 1, 2
# HARQ process states
_IDLE, _WAIT_FEEDBACK, _WAIT_RETX = 0, 1, 2

_REQUEUE_CAPACITY = 4096


@dataclass(frozen=True)
class StackConfig:
    app_rate_mbps: float = 1000.0
    rlc_buffer_bytes: int = 10_000_000
    harq_processes: int = 8
    harq_max_retx: int = 3
    harq_rtt_slots: int = 4
    packet_bytes: int = 1400
    run_duration_s: float = 9.0
    transport_delay_s: float = 1e-3
    slot_s: float = DEFAULT_SLOT_S
    harq_enabled: bool = True

    def __post_init__(self):
        for name in ("app_rate_mbps", "rlc_buffer_bytes", "harq_processes", "harq_rtt_slots",
                     "packet_bytes", "run_duration_s", "slot_s"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.harq_max_retx < 0 or self.transport_delay_s < 0:
            raise ValueError("harq_max_retx and transport_delay_s must be non-negative")
        if self.packet_bytes > self.rlc_buffer_bytes:
            raise ValueError("packet larger than the RLC buffer")

    def with_rate(self, app_rate_mbps: float) -> "StackConfig":
        return replace(self, app_rate_mbps=app_rate_mbps)

    @property
    def n_slots(self) -> int:
        return int(math.ceil(self.run_duration_s / self.slot_s - 1e-9))

    @property
    def packet_interval_s(self) -> float:
        return self.packet_bytes * 8.0 / (self.app_rate_mbps * 1e6)

    @property
    def packets_generated(self) -> int:
        """Packets generated up to the start of the last simulated slot."""
        horizon = (self.n_slots - 1) * self.slot_s
        return int(math.floor(horizon / self.packet_interval_s + 1e-9)) + 1


@dataclass(frozen=True)
class RunMetrics:
    offered_mbps: float
    delivered_mbps: float
    drop_pct: float
    mean_latency_ms: float
    p95_latency_ms: float
    mean_snr_db: float
    mcs: int | None
    slots_simulated: int
    generated: int
    delivered: int
    dropped: int
    resident: int
    max_buffer_bytes: int

    def as_row(self) -> dict:
        row = asdict(self)
        row["mcs"] = "outage" if self.mcs is None else self.mcs
        return row


@dataclass(frozen=True)
class SlotTrace:
    buffer_bytes: np.ndarray
    tx_bytes: np.ndarray
    harq_active: np.ndarray
    drops: np.ndarray
    deliveries: np.ndarray

    COLUMNS = ("slot", "buffer_bytes", "tx_bytes", "harq_active", "drops", "deliveries")

    def write_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for s in range(len(self.buffer_bytes)):
                w.writerow((s, int(self.buffer_bytes[s]), int(self.tx_bytes[s]),
                            int(self.harq_active[s]), int(self.drops[s]), int(self.deliveries[s])))
        return path


@nb.njit(cache=True)
def _mark_dropped(a, b, pkt, pstate):
    n = 0
    for k in range(a // pkt, (b - 1) // pkt + 1):
        if pstate[k] == _RESIDENT:
            pstate[k] = _DROPPED
            n += 1
    return n


@nb.njit(cache=True)
def _deliver(a, b, pkt, remaining, pstate, latency, adm_gen, t_done, interval, transport):
    n = 0
    for k in range(a // pkt, (b - 1) // pkt + 1):
        lo = max(a, k * pkt)
        hi = min(b, (k + 1) * pkt)
        remaining[k] -= hi - lo
        if remaining[k] == 0 and pstate[k] == _RESIDENT:
            pstate[k] = _DELIVERED
            latency[k] = t_done - adm_gen[k] * interval + transport
            n += 1
    return n


@nb.njit(cache=True)
def _engine(n_slots, slot_s, interval, n_gen, pkt, cap, tb, bler, uniforms,
            nproc, max_retx, rtt, harq_enabled, transport):
    adm_gen = np.empty(n_gen, np.int64)
    remaining = np.full(n_gen, pkt, np.int64)
    pstate = np.zeros(n_gen, np.int8)
    latency = np.full(n_gen, np.nan)

    tr_buf = np.zeros(n_slots, np.int64)
    tr_tx = np.zeros(n_slots, np.int64)
    tr_harq = np.zeros(n_slots, np.int64)
    tr_drop = np.zeros(n_slots, np.int64)
    tr_deliv = np.zeros(n_slots, np.int64)

    # requeued ranges, ring buffer, front at rq_head
    rqc = _REQUEUE_CAPACITY
    rq_a = np.zeros(rqc, np.int64)
    rq_b = np.zeros(rqc, np.int64)
    rq_head = 0
    rq_len = 0
    rq_bytes = 0

    main_head = 0
    main_tail = 0
    n_adm = 0
    n_seen = 0
    arrival_drops = 0
    max_occ = 0

    maxr = tb // pkt + 4 if tb > 0 else 1
    h_state = np.zeros(nproc, np.int8)
    h_fb = np.zeros(nproc, np.int64)
    h_fail = np.zeros(nproc, np.bool_)
    h_tx = np.zeros(nproc, np.int64)
    h_n = np.zeros(nproc, np.int64)
    h_a = np.zeros((nproc, maxr), np.int64)
    h_b = np.zeros((nproc, maxr), np.int64)

    for s in range(n_slots):
        t0 = s * slot_s
        drops = 0
        delivs = 0

        # 1) CBR arrivals generated by the start of this slot
        target = min(n_gen, int(math.floor(t0 / interval + 1e-9)) + 1)
        while n_seen < target:
            occ = main_tail - main_head + rq_bytes
            if occ + pkt > cap:
                arrival_drops += 1
                drops += 1
            else:
                adm_gen[n_adm] = n_seen
                n_adm += 1
                main_tail += pkt
            n_seen += 1

        # 2) HARQ feedback due this slot
        for p in range(nproc):
            if h_state[p] != _WAIT_FEEDBACK or h_fb[p] != s:
                continue
            if not h_fail[p]:
                h_state[p] = _IDLE
            elif harq_enabled and h_tx[p] <= max_retx:
                h_state[p] = _WAIT_RETX
            else:
                h_state[p] = _IDLE
                if not harq_enabled:
                    for r in range(h_n[p]):
                        drops += _mark_dropped(h_a[p, r], h_b[p, r], pkt, pstate)
                    continue
                # exhausted: back to the buffer head, dropped only if it no longer fits
                nbytes = 0
                for r in range(h_n[p]):
                    nbytes += h_b[p, r] - h_a[p, r]
                occ = main_tail - main_head + rq_bytes
                if occ + nbytes > cap or rq_len + h_n[p] > rqc:
                    for r in range(h_n[p]):
                        drops += _mark_dropped(h_a[p, r], h_b[p, r], pkt, pstate)
                else:
                    for r in range(h_n[p] - 1, -1, -1):
                        rq_head = (rq_head - 1) % rqc
                        rq_a[rq_head] = h_a[p, r]
                        rq_b[rq_head] = h_b[p, r]
                        rq_len += 1
                    rq_bytes += nbytes
                h_n[p] = 0

        # 3) one transmission per slot, retransmissions first
        txp = -1
        for p in range(nproc):
            if h_state[p] == _WAIT_RETX and (txp < 0 or h_fb[p] < h_fb[txp]):
                txp = p
        if txp < 0 and tb > 0 and (main_tail > main_head or rq_len > 0):
            for p in range(nproc):
                if h_state[p] == _IDLE:
                    txp = p
                    break
            if txp >= 0:
                space = tb
                n = 0
                while space > 0 and rq_len > 0 and n < maxr:
                    a = rq_a[rq_head]
                    b = rq_b[rq_head]
                    take = min(space, b - a)
                    h_a[txp, n] = a
                    h_b[txp, n] = a + take
                    n += 1
                    space -= take
                    rq_bytes -= take
                    if a + take == b:
                        rq_head = (rq_head + 1) % rqc
                        rq_len -= 1
                    else:
                        rq_a[rq_head] = a + take
                if space > 0 and main_tail > main_head and n < maxr:
                    take = min(space, main_tail - main_head)
                    h_a[txp, n] = main_head
                    h_b[txp, n] = main_head + take
                    n += 1
                    space -= take
                    main_head += take
                h_n[txp] = n
                h_tx[txp] = 0
        if txp >= 0:
            h_tx[txp] += 1
            h_fail[txp] = uniforms[s] < bler
            h_fb[txp] = s + rtt
            h_state[txp] = _WAIT_FEEDBACK
            nbytes = 0
            for r in range(h_n[txp]):
                nbytes += h_b[txp, r] - h_a[txp, r]
            tr_tx[s] = nbytes
            if not h_fail[txp]:
                t_done = (s + 1) * slot_s
                for r in range(h_n[txp]):
                    delivs += _deliver(h_a[txp, r], h_b[txp, r], pkt, remaining, pstate,
                                       latency, adm_gen, t_done, interval, transport)

        occ = main_tail - main_head + rq_bytes
        if occ > max_occ:
            max_occ = occ
        active = 0
        for p in range(nproc):
            if h_state[p] != _IDLE:
                active += 1
        tr_buf[s] = occ
        tr_harq[s] = active
        tr_drop[s] = drops
        tr_deliv[s] = delivs

    return (n_seen, n_adm, arrival_drops, max_occ, pstate[:n_adm], latency[:n_adm],
            tr_buf, tr_tx, tr_harq, tr_drop, tr_deliv)


def run_realization(link: LinkState, cfg: StackConfig, rng: np.random.Generator,
                    trace: bool = False):
    """Simulate one realization and return ``RunMetrics`` (and a ``SlotTrace`` if asked).

    Draws exactly one uniform per slot from ``rng`` for HARQ decoding outcomes.
    """
    n_slots = cfg.n_slots
    n_gen = cfg.packets_generated
    uniforms = rng.random(n_slots)
    (n_seen, n_adm, arrival_drops, max_occ, pstate, latency,
     tr_buf, tr_tx, tr_harq, tr_drop, tr_deliv) = _engine(
        n_slots, cfg.slot_s, cfg.packet_interval_s, n_gen, cfg.packet_bytes,
        cfg.rlc_buffer_bytes, int(link.tb_bytes), float(link.bler), uniforms,
        cfg.harq_processes, cfg.harq_max_retx, cfg.harq_rtt_slots, bool(cfg.harq_enabled),
        cfg.transport_delay_s)

    delivered = int(np.count_nonzero(pstate == _DELIVERED))
    dropped = arrival_drops + int(np.count_nonzero(pstate == _DROPPED))
    resident = int(np.count_nonzero(pstate == _RESIDENT))
    lat = latency[pstate == _DELIVERED]
    if lat.size:
        mean_lat = float(lat.mean()) * 1e3
        p95_lat = float(np.percentile(lat, 95)) * 1e3
    else:
        mean_lat = p95_lat = math.nan

    bits = 8.0 * cfg.packet_bytes / cfg.run_duration_s / 1e6
    metrics = RunMetrics(
        offered_mbps=n_seen * bits,
        delivered_mbps=delivered * bits,
        drop_pct=100.0 * dropped / n_seen if n_seen else 0.0,
        mean_latency_ms=mean_lat,
        p95_latency_ms=p95_lat,
        mean_snr_db=float(link.snr_db),
        mcs=link.mcs,
        slots_simulated=n_slots,
        generated=int(n_seen),
        delivered=delivered,
        dropped=dropped,
        resident=resident,
        max_buffer_bytes=int(max_occ),
    )
    if trace:
        return metrics, SlotTrace(tr_buf, tr_tx, tr_harq, tr_drop, tr_deliv)
    return metrics


def saturation_threshold_mbps(link: LinkState, cfg: StackConfig | None = None) -> float:
    """Sustainable goodput: PHY ceiling less the payload share that exhausts HARQ."""
    if link.outage:
        return 0.0
    max_retx = (cfg or StackConfig()).harq_max_retx
    residual = link.bler ** (1 + max_retx)
    return link.max_phy_mbps * (1.0 - residual)
