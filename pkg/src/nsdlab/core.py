"""Problem definition for non-stationary delayed bandits with intermediate signals.

Actions and signals are 0-based indices; rounds are 1-based (1..T).
"""
from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence, Union

import numpy as np

ROW_TOL = 1e-9


@dataclass(frozen=True)
class ConstantDelay:
    delay: int = 0

    def __post_init__(self):
        if int(self.delay) != self.delay or self.delay < 0:
            raise ValueError(f"constant delay must be a non-negative integer, got {self.delay}")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.full(n, int(self.delay), dtype=np.int64)

    def to_json(self) -> dict:
        return {"constant": int(self.delay)}


@dataclass(frozen=True)
class GeometricDelay:
    """I.i.d. delays on {0, 1, 2, ...}: failures before the first success."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"geometric success parameter must be in (0, 1], got {self.p}")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.geometric(self.p, size=n).astype(np.int64) - 1

    def to_json(self) -> dict:
        return {"geometric": float(self.p)}


DelayModel = Union[ConstantDelay, GeometricDelay]


@dataclass(frozen=True)
class Mixture:
    """Misspecification: with prob. alpha the signal is uniform and the reward
    is Bernoulli(mu[segment, action]) instead of following the factored model."""

    alpha: float
    mu: np.ndarray  # (n_segments, K)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        mu = np.atleast_2d(np.asarray(self.mu, dtype=float))
        if np.any(mu < 0) or np.any(mu > 1):
            raise ValueError("mixture means must lie in [0, 1]")
        object.__setattr__(self, "mu", mu)


@dataclass(frozen=True)
class Segment:
    start: int
    P: np.ndarray  # (K, S), rows in the simplex


def _check_row(row: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(row)) or np.any(row < 0):
        raise ValueError(f"{where}: transition row has negative or non-finite entries: {row.tolist()}")
    if abs(row.sum() - 1.0) > ROW_TOL:
        raise ValueError(f"{where}: transition row sums to {row.sum():.12g}, not 1: {row.tolist()}")


@dataclass(frozen=True)
class NsdInstance:
    num_actions: int
    num_signals: int
    horizon: int
    segments: tuple[Segment, ...]
    theta: np.ndarray
    delay_model: DelayModel = field(default_factory=ConstantDelay)
    mixture: Mixture | None = None
    bernoulli_rewards: bool = True

    def __post_init__(self):
        K, S, T = self.num_actions, self.num_signals, self.horizon
        if K < 2 or S < 1 or T < 1:
            raise ValueError(f"need K >= 2, S >= 1, T >= 1 (got K={K}, S={S}, T={T})")
        theta = np.asarray(self.theta, dtype=float)
        if theta.shape != (S,):
            raise ValueError(f"theta must have length S={S}, got shape {theta.shape}")
        if np.any(theta < 0) or np.any(theta > 1):
            raise ValueError("theta entries must lie in [0, 1]")
        object.__setattr__(self, "theta", theta)
        if not self.segments:
            raise ValueError("at least one segment is required")
        segs = []
        prev = 0
        for i, seg in enumerate(self.segments):
            P = np.asarray(seg.P, dtype=float)
            if P.shape != (K, S):
                raise ValueError(f"segment {i}: transition matrix must be {K}x{S}, got {P.shape}")
            for a in range(K):
                _check_row(P[a], f"segment {i}, action {a}")
            if i == 0 and seg.start != 1:
                raise ValueError("first segment must start at round 1")
            if seg.start <= prev or seg.start > T:
                raise ValueError(f"segment starts must be strictly increasing and within [1, T]: {seg.start}")
            prev = seg.start
            segs.append(Segment(int(seg.start), P))
        object.__setattr__(self, "segments", tuple(segs))
        if self.mixture is not None:
            mu = self.mixture.mu
            if mu.shape[0] == 1 and len(segs) > 1:
                mu = np.repeat(mu, len(segs), axis=0)
                object.__setattr__(self, "mixture", Mixture(self.mixture.alpha, mu))
            if mu.shape != (len(segs), K):
                raise ValueError(f"mixture mu must be {len(segs)}x{K}, got {mu.shape}")

    @property
    def starts(self) -> list[int]:
        return [seg.start for seg in self.segments]

    @property
    def change_rounds(self) -> list[int]:
        return self.starts[1:]

    @property
    def alpha(self) -> float:
        return 0.0 if self.mixture is None else self.mixture.alpha

    def segment_index(self, round: int) -> int:
        if not 1 <= round <= self.horizon:
            raise ValueError(f"round {round} outside [1, {self.horizon}]")
        return bisect.bisect_right(self.starts, round) - 1

    def segment_values(self) -> np.ndarray:
        """Expected reward of every action in every segment, shape (n_segments, K)."""
        rho = np.stack([seg.P @ self.theta for seg in self.segments])
        if self.mixture is not None:
            a = self.mixture.alpha
            rho = a * self.mixture.mu + (1.0 - a) * rho
        return rho

    def to_json(self) -> dict:
        return {
            "K": self.num_actions,
            "S": self.num_signals,
            "T": self.horizon,
            "theta": self.theta.tolist(),
            "segments": [{"start": s.start, "P": s.P.tolist()} for s in self.segments],
            "delay": self.delay_model.to_json(),
            "mixture": None if self.mixture is None
            else {"alpha": self.mixture.alpha, "mu": self.mixture.mu.tolist()},
            "deterministic_rewards": not self.bernoulli_rewards,
        }


def instance_from_json(data: dict[str, Any]) -> NsdInstance:
    try:
        delay = data.get("delay") or {"constant": 0}
        if "constant" in delay:
            delay_model: DelayModel = ConstantDelay(int(delay["constant"]))
        elif "geometric" in delay:
            delay_model = GeometricDelay(float(delay["geometric"]))
        else:
            raise ValueError(f"unknown delay model {delay}")
        mix = data.get("mixture")
        mixture = None if mix is None else Mixture(float(mix["alpha"]), np.asarray(mix["mu"], dtype=float))
        segments = tuple(Segment(int(s["start"]), np.asarray(s["P"], dtype=float)) for s in data["segments"])
        return NsdInstance(
            num_actions=int(data["K"]),
            num_signals=int(data["S"]),
            horizon=int(data["T"]),
            segments=segments,
            theta=np.asarray(data["theta"], dtype=float),
            delay_model=delay_model,
            mixture=mixture,
            bernoulli_rewards=not data.get("deterministic_rewards", False),
        )
    except KeyError as e:
        raise ValueError(f"instance JSON is missing field {e}") from None


def load_instance(path: str | Path) -> NsdInstance:
    with open(path) as f:
        return instance_from_json(json.load(f))


def save_instance(instance: NsdInstance, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(instance.to_json(), f, indent=1)


def _check_action(instance: NsdInstance, action: int) -> None:
    if not 0 <= action < instance.num_actions:
        raise ValueError(f"action {action} outside [0, {instance.num_actions})")


def expected_reward(instance: NsdInstance, round: int, action: int) -> float:
    """alpha * mu[a] + (1 - alpha) * p_t(a)^T theta for the segment active at `round`."""
    _check_action(instance, action)
    k = instance.segment_index(round)
    value = float(instance.segments[k].P[action] @ instance.theta)
    if instance.mixture is not None:
        a = instance.mixture.alpha
        value = a * float(instance.mixture.mu[k, action]) + (1.0 - a) * value
    return value


def optimal_value(instance: NsdInstance, round: int) -> tuple[float, int]:
    """Best expected reward at `round` and the lowest-index action achieving it."""
    values = [expected_reward(instance, round, a) for a in range(instance.num_actions)]
    best = int(np.argmax(values))
    return values[best], best


# Reward means and transition rows of the paper's experimental instance. The
# published table prints action 3's row as (0.8, 0.1, 0.8); (0.1, 0.1, 0.8) is
# the only fix consistent with the printed value 0.28.
TABLE1_THETA = (0.8, 0.4, 0.2)
TABLE1_P = (
    (0.8, 0.1, 0.1),
    (0.1, 0.8, 0.1),
    (0.1, 0.1, 0.8),
    (0.1, 0.4, 0.5),
)
TABLE1_RHO = (0.70, 0.42, 0.28, 0.34)


def table1_instance(
    horizon: int = 8000,
    delay: int | DelayModel = 0,
    *,
    actions: Sequence[int] | None = None,
    mixture: tuple[float, Sequence[float]] | None = None,
) -> NsdInstance:
    """Single-segment instance built from the reference table.

    `actions` selects a subset of rows (e.g. ``(0, 1)`` for the two-arm
    misspecification study); `mixture` is ``(alpha, mu)``.
    """
    P = np.asarray(TABLE1_P, dtype=float)
    if actions is not None:
        P = P[list(actions)]
    delay_model = ConstantDelay(delay) if isinstance(delay, int) else delay
    mix = None if mixture is None else Mixture(mixture[0], np.asarray(mixture[1], dtype=float))
    return NsdInstance(
        num_actions=P.shape[0],
        num_signals=P.shape[1],
        horizon=horizon,
        segments=(Segment(1, P),),
        theta=np.asarray(TABLE1_THETA, dtype=float),
        delay_model=delay_model,
        mixture=mix,
    )


@dataclass(frozen=True)
class RoundFeedback:
    """What a policy sees after acting at `round`: the signal, plus every
    (origin_round, signal, reward) whose delay expires now."""

    round: int
    signal: int
    due_rewards: tuple[tuple[int, int, float], ...] = ()


@dataclass
class RegretTrace:
    per_round_regret: np.ndarray

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.per_round_regret)

    @property
    def final(self) -> float:
        return float(self.per_round_regret.sum())
