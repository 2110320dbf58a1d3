"""Decision rules: optimistic and posterior-sampling NSD policies, signal-agnostic
UCB baselines, and the change-point oracles built on top of them."""
from __future__ import annotations

import heapq
import math
from typing import Callable

import numpy as np

from .core import RoundFeedback
from .estimators import ConfidenceConfig, DelayedRewardStats, WindowStats
from .optimism import _solve, value_order


class PolicyDesyncError(RuntimeError):
    pass


class Policy:
    """Base class. Subclasses implement `_select` and `_observe`.

    The runner calls select_action(t) then observe(feedback for t), once per
    round. Oracle variants set `knows_changes` and get reset_segment() right
    before the first round of every new segment; `no_delay` asks the runner
    for an undelayed copy of the environment.
    """

    name = "policy"
    knows_changes = False
    no_delay = False

    def __init__(self, num_actions: int):
        if num_actions < 1:
            raise ValueError("need at least one action")
        self.num_actions = num_actions
        self._next_round = 1
        self._awaiting = False
        self._last_action = -1

    def select_action(self, round: int) -> int:
        if self._awaiting:
            raise PolicyDesyncError(f"{self.name}: select_action({round}) before observing round {round - 1}")
        if round != self._next_round:
            raise PolicyDesyncError(f"{self.name}: expected round {self._next_round}, got {round}")
        action = self._select(round)
        self._awaiting = True
        self._last_action = action
        return action

    def observe(self, feedback: RoundFeedback) -> None:
        if not self._awaiting or feedback.round != self._next_round:
            raise PolicyDesyncError(f"{self.name}: unexpected feedback for round {feedback.round}")
        self._observe(feedback, self._last_action)
        self._awaiting = False
        self._next_round += 1

    def reset_segment(self) -> None:
        pass

    def reseed(self, rng: np.random.Generator) -> None:
        pass

    def _select(self, round: int) -> int:
        raise NotImplementedError

    def _observe(self, feedback: RoundFeedback, action: int) -> None:
        raise NotImplementedError


def _argmax(values) -> int:
    best, best_v = 0, values[0]
    for i in range(1, len(values)):
        if values[i] > best_v:
            best, best_v = i, values[i]
    return best


class NsdUcrl2(Policy):
    """Optimistic policy over windowed transition estimates and delayed,
    full-history reward estimates.

    With ``record=True`` the reward upper bounds and optimistic values
    computed at every non-forced round are kept in `history` as
    ``(round, U, rho_plus)``.
    """

    name = "nsd-ucrl2"

    def __init__(self, num_actions: int, num_signals: int, horizon: int, window: int | None = None,
                 delta: float = 0.05, record: bool = False):
        super().__init__(num_actions)
        self.num_signals = num_signals
        window = horizon if window is None else window
        self.cfg = ConfidenceConfig(delta, horizon, window, num_actions, num_signals)
        self._c_w = self.cfg.transition_const
        self._c_r = self.cfg.reward_const
        self.window_stats = WindowStats(num_actions, num_signals, window)
        self.reward_stats = DelayedRewardStats(num_signals)
        self._forced = list(range(num_actions))
        self.record = record
        self.history: list[tuple[int, list[float], list[float]]] = []

    def reset_segment(self) -> None:
        # transition statistics only: reward means do not change at switches
        self.window_stats = WindowStats(self.num_actions, self.num_signals, self.window_stats.window_size)
        self._forced = list(range(self.num_actions))

    def upper_bounds(self) -> list[float]:
        rs = self.reward_stats
        out = []
        for s in range(self.num_signals):
            n = rs.counts[s] if rs.counts[s] > 1 else 1
            out.append(min(1.0, rs.sums[s] / n + math.sqrt(self._c_r / n)))
        return out

    def optimistic_values(self) -> tuple[list[float], list[float]]:
        u = self.upper_bounds()
        order = value_order(u)
        ws = self.window_stats
        S = self.num_signals
        rho = []
        for a in range(self.num_actions):
            n = ws.action_counts[a]
            if not ws.ever_pulled[a]:
                p = [1.0 / S] * S
            else:
                d = n if n > 1 else 1
                p = [c / d for c in ws.counts[a]]
            v, _ = _solve(p, math.sqrt(self._c_w / (n if n > 1 else 1)), u, order)
            rho.append(v)
        return u, rho

    def _select(self, round: int) -> int:
        if self._forced:
            return self._forced.pop(0)
        u, rho = self.optimistic_values()
        if self.record:
            self.history.append((round, u, rho))
        return _argmax(rho)

    def _observe(self, feedback: RoundFeedback, action: int) -> None:
        self.window_stats.push(action, feedback.signal)
        rs = self.reward_stats
        rs.record_signal(feedback.signal)
        for _, s, r in feedback.due_rewards:
            rs.add(s, r)


def psrl_sample_action(rng: np.random.Generator, transition_counts, successes, failures) -> int:
    """Draw p(a) ~ Dirichlet(1 + counts[a]) and theta(s) ~ Beta(1 + succ, 1 + fail);
    return the action with the largest sampled value."""
    g = rng.standard_gamma(np.asarray(transition_counts, dtype=float) + 1.0)
    p = g / g.sum(axis=1, keepdims=True)
    theta = rng.beta(np.asarray(successes, dtype=float) + 1.0, np.asarray(failures, dtype=float) + 1.0)
    return int(np.argmax(p @ theta))


class NsdPsrl(Policy):
    """Posterior sampling on the same windowed transition counts and delayed
    reward statistics as NsdUcrl2. No forced initial round-robin."""

    name = "nsd-psrl"

    def __init__(self, num_actions: int, num_signals: int, horizon: int, window: int | None = None,
                 rng: np.random.Generator | None = None):
        super().__init__(num_actions)
        self.num_signals = num_signals
        window = horizon if window is None else window
        self.window_stats = WindowStats(num_actions, num_signals, window)
        self.reward_stats = DelayedRewardStats(num_signals)
        self.rng = rng if rng is not None else np.random.default_rng()

    def reseed(self, rng: np.random.Generator) -> None:
        self.rng = rng

    def reset_segment(self) -> None:
        self.window_stats = WindowStats(self.num_actions, self.num_signals, self.window_stats.window_size)

    def _select(self, round: int) -> int:
        rs = self.reward_stats
        succ = rs.sums
        fail = [n - x for n, x in zip(rs.counts, rs.sums)]
        return psrl_sample_action(self.rng, self.window_stats.counts, succ, fail)

    def _observe(self, feedback: RoundFeedback, action: int) -> None:
        self.window_stats.push(action, feedback.signal)
        rs = self.reward_stats
        rs.record_signal(feedback.signal)
        for _, s, r in feedback.due_rewards:
            rs.add(s, r)


class Ucb(Policy):
    """Signal-agnostic UCB on delivered rewards, each credited to the action
    played at its origin round. With `window`, only rewards whose origin lies
    in (t - W, t] count (sliding-window UCB)."""

    name = "ucb"

    def __init__(self, num_actions: int, horizon: int, delta: float = 0.05, window: int | None = None,
                 exploration: float | None = None):
        super().__init__(num_actions)
        if not 0.0 < delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {delta}")
        if window is not None and window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        self.window = window
        self.horizon = horizon
        self.exploration = 2.0 * math.log(2 * horizon * num_actions / delta) if exploration is None else exploration
        self.counts = [0] * num_actions
        self.sums = [0.0] * num_actions
        self._played: list[int] = [-1]  # action by round, index 0 unused
        self._live: list[tuple[int, int, float]] = []  # heap of (origin, action, reward) inside the window
        self._epoch_start = 1
        self._forced = list(range(num_actions))

    def reset_segment(self) -> None:
        self.counts = [0] * self.num_actions
        self.sums = [0.0] * self.num_actions
        self._live = []
        self._epoch_start = self._next_round
        self._forced = list(range(self.num_actions))

    def indices(self, round: int) -> list[float]:
        if self.window is not None:
            horizon_start = round - self.window
            live = self._live
            while live and live[0][0] <= horizon_start:
                _, a, r = heapq.heappop(live)
                self.counts[a] -= 1
                self.sums[a] -= r
        c = self.exploration
        out = []
        for n, x in zip(self.counts, self.sums):
            d = n if n > 1 else 1
            out.append(min(1.0, x / d + math.sqrt(c / d)))
        return out

    def _select(self, round: int) -> int:
        idx = self.indices(round)
        if self._forced:
            return self._forced.pop(0)
        return _argmax(idx)

    def _observe(self, feedback: RoundFeedback, action: int) -> None:
        self._played.append(action)
        for origin, _, r in feedback.due_rewards:
            if origin < self._epoch_start:
                continue
            if self.window is not None and origin <= feedback.round - self.window:
                continue
            a = self._played[origin]
            self.counts[a] += 1
            self.sums[a] += r
            if self.window is not None:
                heapq.heappush(self._live, (origin, a, r))


class SwUcb(Ucb):
    name = "sw-ucb"

    def __init__(self, num_actions: int, horizon: int, window: int, delta: float = 0.05,
                 exploration: float | None = None):
        super().__init__(num_actions, horizon, delta=delta, window=window, exploration=exploration)


POLICY_NAMES = ("nsd-ucrl2", "nsd-psrl", "ucb", "sw-ucb", "oracle-ucb", "oracle-nsd", "oracle-ucb-nd", "oracle-nsd-nd")


def make_oracle(inner: str, knows_changes: bool, no_delay: bool, *, num_actions: int, num_signals: int,
                horizon: int, delta: float = 0.05) -> Policy:
    """Oracle-UCB restarts UCB at every change. Oracle-NSD is NsdUcrl2 with an
    unbounded window whose transition counts are reset at every change while
    reward statistics persist. `no_delay` variants see each reward at once."""
    if inner == "ucb":
        policy: Policy = Ucb(num_actions, horizon, delta=delta)
    elif inner == "nsd":
        policy = NsdUcrl2(num_actions, num_signals, horizon, window=horizon, delta=delta)
    else:
        raise ValueError(f"unknown oracle inner policy {inner!r} (expected 'ucb' or 'nsd')")
    policy.knows_changes = knows_changes
    policy.no_delay = no_delay
    policy.name = f"oracle-{inner}" + ("-nd" if no_delay else "") if knows_changes else policy.name
    return policy


def make_policy(name: str, *, num_actions: int, num_signals: int, horizon: int, window: int | None = None,
                delta: float = 0.05, rng: np.random.Generator | None = None) -> Policy:
    factories: dict[str, Callable[[], Policy]] = {
        "nsd-ucrl2": lambda: NsdUcrl2(num_actions, num_signals, horizon, window=window, delta=delta),
        "nsd-psrl": lambda: NsdPsrl(num_actions, num_signals, horizon, window=window, rng=rng),
        "ucb": lambda: Ucb(num_actions, horizon, delta=delta),
        "sw-ucb": lambda: SwUcb(num_actions, horizon, window=window or horizon, delta=delta),
    }
    for inner in ("ucb", "nsd"):
        for nd in (False, True):
            key = f"oracle-{inner}" + ("-nd" if nd else "")
            factories[key] = (lambda i=inner, d=nd: make_oracle(
                i, True, d, num_actions=num_actions, num_signals=num_signals, horizon=horizon, delta=delta))
    if name not in factories:
        raise ValueError(f"unknown policy {name!r}; known: {', '.join(POLICY_NAMES)}")
    return factories[name]()
