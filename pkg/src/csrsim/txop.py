"""One transmission opportunity: A-MPDU sizing, reception draws, effective rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import ChannelParams, LinkBudget, McsTable, data_rate, success_probability
from .network import Pair, Topology, TransmissionSet


@dataclass(frozen=True)
class TxopConfig:
    duration: float = 5.484e-3  # s
    subframe_size: int = 1500  # bytes
    mcs: int = 11
    width: int = 20  # MHz
    streams: int = 1
    gi: int = 800  # ns

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("TXOP duration must be positive")
        if self.subframe_size <= 0:
            raise ValueError("subframe size must be positive")

    @property
    def subframe_bits(self) -> int:
        return 8 * self.subframe_size


def n_ampdu(rate: float, cfg: TxopConfig) -> int:
    """Sub-frames that fit in one TXOP at `rate` bits/s, rounded up."""
    if rate <= 0:
        raise ValueError("data rate must be positive")
    q = rate * cfg.duration / cfg.subframe_bits
    nearest = round(q)
    # an exactly integral quotient must not be pushed up by rounding error
    if abs(q - nearest) <= 1e-9 * max(1.0, q):
        return max(1, int(nearest))
    return math.ceil(q)


def max_effective_rate(table: McsTable, cfg: TxopConfig) -> float:
    """Effective rate of one link that delivers every sub-frame."""
    n = n_ampdu(data_rate(cfg.mcs, cfg.width, cfg.streams, cfg.gi, table), cfg)
    return n * cfg.subframe_bits / cfg.duration


def binomial_inverse(n: int, p: float, u: float) -> int:
    """Inverse-CDF draw: the smallest k with P(X <= k) >= u, X ~ Bin(n, p).

    The pmf is walked from the likelier tail so typical draws (p near 0 or
    1) stop after a step or two.
    """
    if p <= 0.0 or n == 0:
        return 0
    if p >= 1.0:
        return n
    q = 1.0 - p
    if p < 0.5:
        ratio = p / q
        pmf = q ** n
        cdf = pmf
        k = 0
        while cdf < u and k < n:
            pmf *= ratio * (n - k) / (k + 1)
            k += 1
            cdf += pmf
        return k
    ratio = q / p
    pmf = p ** n
    tail = pmf  # P(X >= k)
    k = n
    while k > 0 and tail <= 1.0 - u:
        pmf *= ratio * k / (n - k + 1)
        k -= 1
        tail += pmf
    return k


class LinkRecord(NamedTuple):
    pair: Pair
    sinr: float
    p_success: float
    sent: int
    received: int


@dataclass(frozen=True)
class TxopResult:
    links: tuple[LinkRecord, ...]
    effective_rate: float  # bits/s


def simulate_txop(p_set: TransmissionSet, topo: Topology, ch: ChannelParams,
                  table: McsTable, cfg: TxopConfig, rng: np.random.Generator,
                  noise_rng: np.random.Generator | None = None,
                  budget: LinkBudget | None = None) -> TxopResult:
    """Run one TXOP for the pairs in `p_set`.

    Binomial draws come from `rng`, SINR perturbations from `noise_rng`
    (defaults to `rng`). Pass a `LinkBudget` built for `topo` to skip the
    geometry.
    """
    noise_rng = rng if noise_rng is None else noise_rng
    if budget is None or budget.topo is not topo:
        budget = LinkBudget(topo, ch)
    pairs = p_set.ordered()
    m = len(pairs)
    eps = (noise_rng.standard_normal(m) * ch.sinr_noise_std).tolist()
    sinrs = budget.sinr(pairs, eps)
    probs = [success_probability(x, cfg.mcs, table) for x in sinrs]
    sent = n_ampdu(data_rate(cfg.mcs, cfg.width, cfg.streams, cfg.gi, table), cfg)
    received = [binomial_inverse(sent, pr, u) for pr, u in zip(probs, rng.random(m).tolist())]
    links = tuple(map(LinkRecord, pairs, sinrs, probs, [sent] * m, received))
    rate = sum(received) * cfg.subframe_bits / cfg.duration
    return TxopResult(links, rate)
