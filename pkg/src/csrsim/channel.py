"""TGax enterprise path loss, SINR and MCS success model."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .network import Pair, Topology, TransmissionSet, distance, wall_count


@dataclass(frozen=True)
class ChannelParams:
    carrier_freq: float = 5.0  # GHz
    breakpoint: float = 10.0  # m
    tx_power: float = 16.0206  # dBm
    noise_floor: float = -93.97  # dBm
    sinr_noise_std: float = 2.0  # dB
    wall_penalty: float = 7.0  # dB per wall

    def __post_init__(self):
        if self.breakpoint <= 0:
            raise ValueError("breakpoint must be positive")
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be positive")
        if self.sinr_noise_std < 0:
            raise ValueError("sinr_noise_std must be nonnegative")

    @property
    def noise_mw(self) -> float:
        return 10.0 ** (self.noise_floor / 10.0)


def path_loss(dist: float, n_walls: int, p: ChannelParams) -> float:
    """TGax enterprise path loss in dB; distances below 1 m are clamped."""
    delta = max(dist, 1.0)
    pl = 40.05 + 20.0 * math.log10(min(delta, p.breakpoint) * p.carrier_freq / 2.4)
    if delta > p.breakpoint:
        pl += 35.0 * math.log10(delta / p.breakpoint)
    return pl + p.wall_penalty * n_walls


def rx_power(tx_dbm: float, pl: float) -> float:
    return tx_dbm - pl


def link_loss(tx, rx, topo: Topology, p: ChannelParams) -> float:
    return path_loss(distance(tx, rx), wall_count(tx, rx, topo.walls), p)


def sinr(link: Pair, active: TransmissionSet, topo: Topology,
         p: ChannelParams, noise_draw: float = 0.0) -> float:
    """SINR in dB at link's station given every other pair in `active`.

    `noise_draw` is the caller's sample of the Gaussian dB perturbation.
    """
    if link not in active:
        raise ValueError(f"{link} is not part of the active set")
    rx = topo.sta_pos[link.station]
    signal = rx_power(p.tx_power, link_loss(topo.ap_pos[link.ap], rx, topo, p))
    interference = 0.0
    for q in active:
        if q == link:
            continue
        dbm = rx_power(p.tx_power, link_loss(topo.ap_pos[q.ap], rx, topo, p))
        interference += 10.0 ** (dbm / 10.0)
    return signal - 10.0 * math.log10(interference + p.noise_mw) + noise_draw


class LinkBudget:
    """Received power of every AP at every station, cached per topology.

    Same arithmetic as :func:`sinr`, precomputed so a TXOP costs a few
    array lookups.
    """

    def __init__(self, topo: Topology, p: ChannelParams):
        self.topo = topo
        self.params = p
        self.ap_index = {a: i for i, a in enumerate(topo.ap_ids)}
        self.sta_index = {s: j for j, s in enumerate(topo.station_ids)}
        dbm = np.empty((len(topo.ap_ids), len(topo.station_ids)))
        for a, i in self.ap_index.items():
            for s, j in self.sta_index.items():
                dbm[i, j] = rx_power(
                    p.tx_power, link_loss(topo.ap_pos[a], topo.sta_pos[s], topo, p))
        self.rx_dbm = dbm
        self.rx_mw = 10.0 ** (dbm / 10.0)
        self._dbm = dbm.tolist()
        self._mw = self.rx_mw.tolist()

    def sinr(self, pairs, noise_draws) -> list[float]:
        """SINR (dB) of each pair in the ordered list `pairs`."""
        ai = [self.ap_index[q.ap] for q in pairs]
        sj = [self.sta_index[q.station] for q in pairs]
        mw, dbm, noise = self._mw, self._dbm, self.params.noise_mw
        out = []
        for n, (a, s) in enumerate(zip(ai, sj)):
            interference = noise
            for m, b in enumerate(ai):
                if m != n:
                    interference += mw[b][s]
            out.append(dbm[a][s] - 10.0 * math.log10(interference) + noise_draws[n])
        return out


class McsRow(NamedTuple):
    mcs: int
    width: int
    streams: int
    gi: int
    rate_bps: float
    midpoint_db: float
    steepness: float


class McsTable:
    """Data rates keyed by (mcs, width, streams, gi) plus logistic success curves."""

    def __init__(self, rows):
        self.rows = [McsRow(*r) for r in rows]
        self.rates = {(r.mcs, r.width, r.streams, r.gi): float(r.rate_bps) for r in self.rows}
        self.curves: dict[int, tuple[float, float]] = {}
        for r in self.rows:
            curve = (float(r.midpoint_db), float(r.steepness))
            if self.curves.setdefault(r.mcs, curve) != curve:
                raise ValueError(f"conflicting success curves for MCS {r.mcs}")
        self._check()

    def _check(self):
        groups: dict[tuple, list[tuple[int, float]]] = {}
        for (m, w, s, g), rate in self.rates.items():
            groups.setdefault((w, s, g), []).append((m, rate))
        for key, items in groups.items():
            items.sort()
            rates = [r for _, r in items]
            if any(b <= a for a, b in zip(rates, rates[1:])):
                raise ValueError(f"rates not increasing in MCS for {key}")
        mids = [self.curves[m][0] for m in sorted(self.curves)]
        if any(b <= a for a, b in zip(mids, mids[1:])):
            raise ValueError("success-curve midpoints not increasing in MCS")
        if any(k <= 0 for _, k in self.curves.values()):
            raise ValueError("steepness must be positive")

    @classmethod
    def load(cls, path=None) -> "McsTable":
        """Read a comma-separated table; '#' lines are comments.

        Columns: mcs, width_mhz, streams, gi_ns, rate_bps, midpoint_db, steepness.
        With no path, the bundled 802.11ax 20 MHz / 1 SS / 800 ns table is used.
        """
        if path is None:
            text = resources.files("csrsim.data").joinpath("mcs_ax.csv").read_text()
        else:
            text = Path(path).read_text()
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        rows = []
        for rec in csv.DictReader(lines):
            rows.append((
                int(rec["mcs"]), int(rec["width_mhz"]), int(rec["streams"]), int(rec["gi_ns"]),
                float(rec["rate_bps"]), float(rec["midpoint_db"]), float(rec["steepness"]),
            ))
        return cls(rows)

    def with_curve(self, midpoints=None, steepness=None) -> "McsTable":
        """Copy with success-curve parameters overridden per MCS."""
        midpoints = midpoints or {}
        rows = []
        for r in self.rows:
            k = steepness if steepness is not None else r.steepness
            rows.append(r._replace(midpoint_db=midpoints.get(r.mcs, r.midpoint_db), steepness=k))
        return McsTable(rows)


def _logistic(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def success_probability(sinr_db: float, mcs: int, table: McsTable) -> float:
    try:
        mid, k = table.curves[mcs]
    except KeyError:
        raise KeyError(f"MCS not in table: {mcs}") from None
    if sinr_db == -math.inf:
        return 0.0
    return _logistic(k * (sinr_db - mid))


def data_rate(mcs: int, width: int, streams: int, gi: int, table: McsTable) -> float:
    try:
        return table.rates[(mcs, width, streams, gi)]
    except KeyError:
        raise KeyError(f"no data rate for MCS {mcs}, {width} MHz, {streams} SS, {gi} ns GI") from None
