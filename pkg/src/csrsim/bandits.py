"""Discounted finite-arm bandit agents.

Every agent keeps exponentially discounted per-arm counts and reward sums:
on each update all statistics are multiplied by ``gamma`` before the new
reward is added to the played arm. ``gamma=1`` gives plain running means.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

ALGORITHMS = ("egreedy", "softmax", "ucb", "ts")


@dataclass(frozen=True)
class Hyperparams:
    kind: str = "ucb"
    epsilon: float = 0.1
    epsilon_decay: float = 1.0
    temperature: float = 0.1
    ucb_c: float = 0.5
    ts_prior_mean: float = 0.0
    ts_prior_var: float = 1.0
    ts_obs_var: float = 0.1
    gamma: float = 1.0
    reward_scale: float | None = None  # bits/s; None -> single-link maximum

    def __post_init__(self):
        if self.kind not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.kind!r}; expected one of {ALGORITHMS}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ValueError("epsilon_decay must lie in (0, 1]")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.ucb_c < 0:
            raise ValueError("ucb_c must be nonnegative")
        if self.ts_prior_var <= 0 or self.ts_obs_var <= 0:
            raise ValueError("TS variances must be positive")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.reward_scale is not None and self.reward_scale <= 0:
            raise ValueError("reward_scale must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown hyperparameters: {sorted(extra)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_scale(self, scale: float) -> "Hyperparams":
        return self if self.reward_scale is not None else replace(self, reward_scale=scale)


def normalize_reward(raw: float, theta: Hyperparams) -> float:
    if theta.reward_scale is None:
        raise ValueError("reward_scale is unset")
    return raw / theta.reward_scale


def argmax_random(values: np.ndarray, rng: np.random.Generator) -> int:
    """Index of the maximum, ties broken uniformly at random."""
    best = np.flatnonzero(values == values.max())
    if len(best) == 1:
        return int(best[0])
    return int(best[rng.integers(len(best))])


class Agent:
    kind = ""

    def __init__(self, n_arms: int, theta: Hyperparams):
        if n_arms < 1:
            raise ValueError("an agent needs at least one arm")
        self.n_arms = n_arms
        self.theta = theta
        self.gamma = theta.gamma
        self.counts = np.zeros(n_arms)  # discounted
        self.sums = np.zeros(n_arms)  # discounted
        self.values = np.zeros(n_arms)
        self.played = np.zeros(n_arms, dtype=bool)
        self.t = 0

    def sample(self, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def update(self, arm: int, reward: float) -> None:
        if not 0 <= arm < self.n_arms:
            raise IndexError(f"arm {arm} out of range for {self.n_arms} arms")
        if not math.isfinite(reward):
            raise ValueError("reward must be finite")
        if self.gamma != 1.0:
            self.counts *= self.gamma
            self.sums *= self.gamma
        self.counts[arm] += 1.0
        self.sums[arm] += reward
        self.values[arm] = self.sums[arm] / self.counts[arm]
        self.played[arm] = True
        self.t += 1

    def __repr__(self):
        return f"{type(self).__name__}(n_arms={self.n_arms}, t={self.t})"


class EpsilonGreedy(Agent):
    kind = "egreedy"

    def __init__(self, n_arms, theta):
        super().__init__(n_arms, theta)
        self.epsilon = theta.epsilon

    def sample(self, rng):
        if self.n_arms == 1:
            return 0
        if self.epsilon > 0 and rng.random() < self.epsilon:
            return int(rng.integers(self.n_arms))
        return argmax_random(self.values, rng)

    def update(self, arm, reward):
        super().update(arm, reward)
        self.epsilon *= self.theta.epsilon_decay


class Softmax(Agent):
    kind = "softmax"

    def probabilities(self) -> np.ndarray:
        z = (self.values - self.values.max()) / self.theta.temperature
        w = np.exp(z)
        return w / w.sum()

    def sample(self, rng):
        if self.n_arms == 1:
            return 0
        cdf = np.cumsum(self.probabilities())
        arm = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        return min(arm, self.n_arms - 1)


class UCB(Agent):
    kind = "ucb"

    def indices(self) -> np.ndarray:
        """Upper confidence index per arm; unplayed arms get +inf."""
        log_total = max(math.log(self.counts.sum()), 0.0) if self.t else 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            idx = self.values + self.theta.ucb_c * np.sqrt(log_total / self.counts)
        idx[~self.played] = np.inf
        return idx

    def sample(self, rng):
        if self.n_arms == 1:
            return 0
        # unplayed arms tie at +inf, so the initial sweep is uniform over them
        return argmax_random(self.indices(), rng)


class ThompsonSampling(Agent):
    """Normal-Normal conjugate model with known observation variance."""

    kind = "ts"

    def posterior(self) -> tuple[np.ndarray, np.ndarray]:
        th = self.theta
        precision = 1.0 / th.ts_prior_var + self.counts / th.ts_obs_var
        mean = (th.ts_prior_mean / th.ts_prior_var + self.sums / th.ts_obs_var) / precision
        return mean, 1.0 / precision

    def sample(self, rng):
        if self.n_arms == 1:
            return 0
        mean, var = self.posterior()
        draws = mean + np.sqrt(var) * rng.standard_normal(self.n_arms)
        return argmax_random(draws, rng)


_AGENTS = {cls.kind: cls for cls in (EpsilonGreedy, Softmax, UCB, ThompsonSampling)}


def new_agent(n_arms: int, theta: Hyperparams) -> Agent:
    return _AGENTS[theta.kind](n_arms, theta)
