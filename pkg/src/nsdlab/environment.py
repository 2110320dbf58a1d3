"""Trajectory simulation: signal draws, delayed reward delivery, switching."""
from __future__ import annotations

import bisect
import csv
import heapq
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Mixture, NsdInstance, RegretTrace, RoundFeedback, Segment


@dataclass(frozen=True)
class SwitchSchedule:
    """Change rounds and the cyclic shift r in {1..K-1} applied at each."""

    change_rounds: tuple[int, ...]
    shift_draws: tuple[int, ...]

    def __post_init__(self):
        if len(self.change_rounds) != len(self.shift_draws):
            raise ValueError("one shift draw is needed per change round")
        if list(self.change_rounds) != sorted(set(self.change_rounds)):
            raise ValueError("change rounds must be strictly increasing")


def random_schedule(num_actions: int, change_rounds: Sequence[int], rng: np.random.Generator) -> SwitchSchedule:
    if num_actions < 2:
        raise ValueError("shifting needs at least two actions")
    draws = rng.integers(1, num_actions, size=len(change_rounds))
    return SwitchSchedule(tuple(int(c) for c in change_rounds), tuple(int(r) for r in draws))


def generate_shifted_instance(base: NsdInstance, schedule: SwitchSchedule) -> NsdInstance:
    """Append one segment per change; at each change the action rows are
    cyclically shifted so that action i takes over the row of i - r (mod K),
    i.e. the old row of action i moves to action (i + r) mod K."""
    K = base.num_actions
    if K < 2:
        raise ValueError("shifting needs at least two actions")
    if len(base.segments) != 1:
        raise ValueError("base instance must have exactly one segment")
    for r in schedule.shift_draws:
        if not 1 <= r <= K - 1:
            raise ValueError(f"shift {r} outside [1, {K - 1}]")
    P = base.segments[0].P
    mu = None if base.mixture is None else base.mixture.mu[0]
    segments = [Segment(1, P)]
    mus = [mu]
    total = 0
    for start, r in zip(schedule.change_rounds, schedule.shift_draws):
        total = (total + r) % K
        segments.append(Segment(start, np.roll(P, total, axis=0)))
        if mu is not None:
            mus.append(np.roll(mu, total))
    mixture = None if mu is None else Mixture(base.mixture.alpha, np.stack(mus))
    return NsdInstance(
        num_actions=K,
        num_signals=base.num_signals,
        horizon=base.horizon,
        segments=tuple(segments),
        theta=base.theta,
        delay_model=base.delay_model,
        mixture=mixture,
        bernoulli_rewards=base.bernoulli_rewards,
    )


class Environment:
    """One realization of the process.

    All randomness (mixture branch, signal, reward, delay) is drawn up front
    from `rng`, so replaying the same generator state against different
    policies yields common random numbers: round t's outcome depends only on
    the action taken at t.
    """

    def __init__(self, instance: NsdInstance, rng: np.random.Generator, *, zero_delay: bool = False):
        self.instance = instance
        T, S = instance.horizon, instance.num_signals
        u = rng.random((T, 3))
        delays = instance.delay_model.sample(rng, T)
        if zero_delay:
            delays = np.zeros(T, dtype=np.int64)
        self.delays = delays
        self._u_mix = u[:, 0].tolist()
        self._u_sig = u[:, 1].tolist()
        self._u_rew = u[:, 2].tolist()
        self._delays = delays.tolist()
        self._starts = instance.starts
        self._cdf = [np.cumsum(seg.P, axis=1).tolist() for seg in instance.segments]
        values = instance.segment_values()
        self._values = values.tolist()
        self._best = values.max(axis=1).tolist()
        self._alpha = instance.alpha
        self._mu = None if instance.mixture is None else instance.mixture.mu.tolist()
        self._theta = instance.theta.tolist()
        self._S = S
        self.current_round = 1
        self.pending: list[tuple[int, int, int, float]] = []  # heap of (due, origin, signal, reward)
        self.regret: list[float] = []
        self.actions: list[int] = []
        self.signals: list[int] = []
        self.rewards: list[float] = []
        self._drained = False

    @property
    def max_delay(self) -> int:
        return int(self.delays.max()) if len(self.delays) else 0

    def step(self, action: int) -> RoundFeedback:
        inst = self.instance
        t = self.current_round
        if t > inst.horizon:
            raise RuntimeError(f"environment stepped past the horizon T={inst.horizon}")
        if not 0 <= action < inst.num_actions:
            raise ValueError(f"action {action} outside [0, {inst.num_actions})")
        i = t - 1
        k = bisect.bisect_right(self._starts, t) - 1
        if self._u_mix[i] < self._alpha:
            signal = min(int(self._u_sig[i] * self._S), self._S - 1)
            mean = self._mu[k][action]
        else:
            cdf = self._cdf[k][action]
            signal = min(bisect.bisect_right(cdf, self._u_sig[i]), self._S - 1)
            # skip zero-probability signals hit by rounding at the top of the cdf
            while signal > 0 and cdf[signal] == cdf[signal - 1]:
                signal -= 1
            mean = self._theta[signal]
        if inst.bernoulli_rewards:
            reward = 1.0 if self._u_rew[i] < mean else 0.0
        else:
            reward = mean
        heapq.heappush(self.pending, (t + self._delays[i], t, signal, reward))
        due = []
        while self.pending and self.pending[0][0] <= t:
            _, origin, s, r = heapq.heappop(self.pending)
            due.append((origin, s, r))
        self.regret.append(self._best[k] - self._values[k][action])
        self.actions.append(action)
        self.signals.append(signal)
        self.rewards.append(reward)
        self.current_round = t + 1
        return RoundFeedback(t, signal, tuple(due))

    def drain_remaining(self) -> list[tuple[int, int, float]]:
        """Rewards still in flight at the end of the horizon, in due order."""
        if self.current_round <= self.instance.horizon:
            raise RuntimeError("drain_remaining called before the horizon was reached")
        if self._drained:
            return []
        out = []
        while self.pending:
            _, origin, s, r = heapq.heappop(self.pending)
            out.append((origin, s, r))
        self._drained = True
        return out

    def trace(self) -> RegretTrace:
        return RegretTrace(np.asarray(self.regret, dtype=float))


TRAJECTORY_COLUMNS = ("round", "action", "signal", "reward_origin", "reward_value", "regret")


class TrajectoryWriter:
    """Per-round CSV dump. The first row of a round carries action, signal and
    regret; further rewards delivered in the same round get extra rows with
    those columns blank. Rewards flushed after the horizon are logged at their
    due round."""

    def __init__(self, path):
        self._f = open(path, "w", newline="")
        self._w = csv.writer(self._f)
        self._w.writerow(TRAJECTORY_COLUMNS)

    def round(self, t: int, action: int, signal: int, regret: float, due) -> None:
        if not due:
            self._w.writerow([t, action, signal, "", "", repr(regret)])
            return
        for j, (origin, _, r) in enumerate(due):
            if j == 0:
                self._w.writerow([t, action, signal, origin, repr(r), repr(regret)])
            else:
                self._w.writerow([t, "", "", origin, repr(r), ""])

    def drained(self, env: Environment, items) -> None:
        for origin, _, r in items:
            self._w.writerow([origin + int(env.delays[origin - 1]), "", "", origin, repr(r), ""])

    def close(self) -> None:
        self._f.close()

