"""Sliding-window transition counts, delayed reward statistics and confidence radii."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np


class WindowStats:
    """Counts of (action, signal) pairs over the last `window_size` rounds.

    The raw pairs are kept in a ring buffer so the counts can always be
    rebuilt from scratch; `counts` and `action_counts` are updated
    incrementally.
    """

    def __init__(self, num_actions: int, num_signals: int, window_size: int):
        if window_size < 1:
            raise ValueError(f"window size must be >= 1, got {window_size}")
        self.num_actions = num_actions
        self.num_signals = num_signals
        self.window_size = window_size
        self.buffer: deque[tuple[int, int]] = deque()
        self.counts = [[0] * num_signals for _ in range(num_actions)]
        self.action_counts = [0] * num_actions
        self.ever_pulled = [False] * num_actions

    def push(self, action: int, signal: int) -> None:
        if len(self.buffer) == self.window_size:
            old_a, old_s = self.buffer.popleft()
            self.counts[old_a][old_s] -= 1
            self.action_counts[old_a] -= 1
        self.buffer.append((action, signal))
        self.counts[action][signal] += 1
        self.action_counts[action] += 1
        self.ever_pulled[action] = True

    def recount(self) -> np.ndarray:
        out = np.zeros((self.num_actions, self.num_signals), dtype=np.int64)
        for a, s in self.buffer:
            out[a, s] += 1
        return out

    def count_matrix(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)


def transition_estimate(stats: WindowStats, action: int) -> np.ndarray:
    """Windowed empirical signal distribution of `action`.

    Uniform before the action's first pull; afterwards N(a, s) / max(1, N(a)),
    which is the zero vector when the action has left the window.
    """
    S = stats.num_signals
    if not stats.ever_pulled[action]:
        return np.full(S, 1.0 / S)
    n = max(1, stats.action_counts[action])
    return np.asarray(stats.counts[action], dtype=float) / n


class DelayedRewardStats:
    """Per-signal count and sum of the rewards delivered so far."""

    def __init__(self, num_signals: int):
        self.num_signals = num_signals
        self.counts = [0] * num_signals
        self.sums = [0.0] * num_signals
        self.emitted = [0] * num_signals

    def record_signal(self, signal: int) -> None:
        self.emitted[signal] += 1

    def add(self, signal: int, reward: float) -> None:
        self.counts[signal] += 1
        self.sums[signal] += reward

    def mean(self, signal: int) -> float:
        return self.sums[signal] / max(1, self.counts[signal])

    def missing(self) -> list[int]:
        """Signals observed but whose rewards are still in flight."""
        return [e - c for e, c in zip(self.emitted, self.counts)]


@dataclass(frozen=True)
class ConfidenceConfig:
    delta: float
    horizon: int
    window: int
    num_actions: int
    num_signals: int

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.horizon < 1 or self.window < 1:
            raise ValueError("horizon and window must be positive")

    @property
    def reward_const(self) -> float:
        """2 log(2 T S / delta)."""
        return 2.0 * math.log(2 * self.horizon * self.num_signals / self.delta)

    @property
    def transition_const(self) -> float:
        """2 S log(K W T / delta)."""
        return 2.0 * self.num_signals * math.log(self.num_actions * self.window * self.horizon / self.delta)


def reward_ucb(stats: DelayedRewardStats, cfg: ConfidenceConfig, signal: int) -> float:
    n = max(1, stats.counts[signal])
    return min(1.0, stats.sums[signal] / n + math.sqrt(cfg.reward_const / n))


def transition_radius(cfg: ConfidenceConfig, count: int) -> float:
    return math.sqrt(cfg.transition_const / max(1, count))


def weissman_radius(num_signals: int, n: int, delta: float) -> float:
    """L1 deviation exceeded by an n-sample empirical distribution with probability <= delta."""
    return math.sqrt(2.0 * num_signals * math.log(2.0 / delta) / n)
