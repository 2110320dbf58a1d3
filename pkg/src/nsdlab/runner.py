"""Monte-Carlo harness: replications, common random numbers, regret aggregation."""
from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import NsdInstance, RegretTrace, save_instance
from .environment import Environment, SwitchSchedule, TrajectoryWriter, generate_shifted_instance, random_schedule
from .policies import POLICY_NAMES, Policy, make_policy

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PolicySpec:
    name: str
    window: int | None = None
    delta: float | None = None
    label: str | None = None

    def __post_init__(self):
        if self.name not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.name!r}; known: {', '.join(POLICY_NAMES)}")

    @property
    def key(self) -> str:
        if self.label:
            return self.label
        return self.name if self.window is None else f"{self.name}-W{self.window}"

    def build(self, instance: NsdInstance, default_delta: float) -> Policy:
        return make_policy(
            self.name,
            num_actions=instance.num_actions,
            num_signals=instance.num_signals,
            horizon=instance.horizon,
            window=self.window,
            delta=default_delta if self.delta is None else self.delta,
        )


@dataclass
class ExperimentConfig:
    """`instance` is used as-is when `change_rounds` is empty; otherwise it
    must have a single segment and each replication draws random cyclic
    shifts at `change_rounds` (or uses the pinned `shifts`)."""

    instance: NsdInstance
    policies: list[PolicySpec]
    reps: int = 50
    seed: int = 0
    delta: float = 0.05
    change_rounds: tuple[int, ...] = ()
    shifts: tuple[int, ...] | None = None
    name: str = "custom"
    log_y: bool = False
    description: str = ""

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not self.policies:
            raise ValueError("at least one policy is required")
        keys = [p.key for p in self.policies]
        if len(set(keys)) != len(keys):
            raise ValueError(f"policy labels must be unique: {keys}")
        if self.change_rounds and len(self.instance.segments) != 1:
            raise ValueError("change_rounds requires a single-segment base instance")
        if self.shifts is not None and len(self.shifts) != len(self.change_rounds):
            raise ValueError("pinned shifts must match change_rounds")

    @property
    def horizon(self) -> int:
        return self.instance.horizon

    def replication_instance(self, rep: int) -> NsdInstance:
        sched_rng, _, _ = replication_streams(self.seed, rep)
        if not self.change_rounds:
            return self.instance
        if self.shifts is not None:
            schedule = SwitchSchedule(tuple(self.change_rounds), tuple(self.shifts))
        else:
            schedule = random_schedule(self.instance.num_actions, self.change_rounds, sched_rng)
        return generate_shifted_instance(self.instance, schedule)


def replication_streams(seed: int, rep: int):
    """Independent (schedule, environment, policy) generators for one replication."""
    children = np.random.SeedSequence([int(seed), int(rep)]).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def simulate(instance: NsdInstance, policy: Policy, env_rng: np.random.Generator,
             policy_rng: np.random.Generator | None = None, trajectory: TrajectoryWriter | None = None) -> Environment:
    """Play rounds 1..T; return the finished (drained) environment."""
    if policy_rng is not None:
        policy.reseed(policy_rng)
    env = Environment(instance, env_rng, zero_delay=policy.no_delay)
    resets = set(instance.change_rounds) if policy.knows_changes else set()
    for t in range(1, instance.horizon + 1):
        if t in resets:
            policy.reset_segment()
        action = policy.select_action(t)
        fb = env.step(action)
        policy.observe(fb)
        if trajectory is not None:
            trajectory.round(t, action, fb.signal, env.regret[-1], fb.due_rewards)
    rest = env.drain_remaining()
    if trajectory is not None:
        trajectory.drained(env, rest)
    return env


def run_one(instance: NsdInstance, policy: Policy, seed: int) -> RegretTrace:
    _, env_rng, pol_rng = replication_streams(seed, 0)
    return simulate(instance, policy, env_rng, pol_rng).trace()


@dataclass
class AggregateResult:
    labels: list[str]
    cumulative: dict[str, np.ndarray]  # label -> (R, T)
    actions: dict[str, np.ndarray] = field(default_factory=dict)  # label -> (R, T), when kept
    instances: list[NsdInstance] = field(default_factory=list)

    @property
    def reps(self) -> int:
        return next(iter(self.cumulative.values())).shape[0]

    def mean(self, label: str) -> np.ndarray:
        return self.cumulative[label].mean(axis=0)

    def ci_halfwidth(self, label: str) -> np.ndarray:
        m = self.cumulative[label]
        if m.shape[0] < 2:
            return np.zeros(m.shape[1])
        return 1.96 * m.std(axis=0, ddof=1) / np.sqrt(m.shape[0])

    def final(self, label: str) -> float:
        return float(self.mean(label)[-1])

    def finals(self) -> dict[str, float]:
        return {k: self.final(k) for k in self.labels}


def _replication(cfg: ExperimentConfig, rep: int, keep_actions: bool, dump_dir: str | None):
    inst = cfg.replication_instance(rep)
    _, env_rng, pol_rng = replication_streams(cfg.seed, rep)
    env_state = env_rng.bit_generator.state
    pol_state = pol_rng.bit_generator.state
    out = {}
    if dump_dir is not None:
        save_instance(inst, Path(dump_dir) / f"instance-rep{rep}.json")
    for spec in cfg.policies:
        env_rng.bit_generator.state = env_state
        pol_rng.bit_generator.state = pol_state
        policy = spec.build(inst, cfg.delta)
        writer = None
        if dump_dir is not None:
            writer = TrajectoryWriter(Path(dump_dir) / f"trajectory-{spec.key}-rep{rep}.csv")
        try:
            env = simulate(inst, policy, env_rng, pol_rng, writer)
        finally:
            if writer is not None:
                writer.close()
        out[spec.key] = (
            np.cumsum(np.asarray(env.regret)),
            np.asarray(env.actions, dtype=np.int16) if keep_actions else None,
        )
    return rep, inst, out


def _replication_star(args):
    return _replication(*args)


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("NSD_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig, *, threads: int | None = None, keep_actions: bool = False,
                   dump_dir: str | Path | None = None) -> AggregateResult:
    """Run every policy on every replication. Within a replication all
    policies face the same switch schedule and the same environment draws."""
    threads = default_threads() if threads is None else max(1, threads)
    dump = None if dump_dir is None else str(dump_dir)
    if dump is not None:
        Path(dump).mkdir(parents=True, exist_ok=True)
    jobs = [(cfg, rep, keep_actions, dump) for rep in range(cfg.reps)]
    if threads == 1 or cfg.reps == 1:
        results = [_replication_star(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_replication_star, jobs))
    results.sort(key=lambda r: r[0])
    labels = [p.key for p in cfg.policies]
    cumulative = {k: np.stack([r[2][k][0] for r in results]) for k in labels}
    actions = {}
    if keep_actions:
        actions = {k: np.stack([r[2][k][1] for r in results]) for k in labels}
    log.info("finished %s: %d reps x %d policies", cfg.name, cfg.reps, len(labels))
    return AggregateResult(labels, cumulative, actions, [r[1] for r in results])


RESULT_COLUMNS = ("policy", "round", "mean_cum_regret", "ci_low", "ci_high")


def write_results_csv(result: AggregateResult, path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(RESULT_COLUMNS)
        for label in result.labels:
            mean = result.mean(label)
            half = result.ci_halfwidth(label)
            for t in range(mean.shape[0]):
                w.writerow([label, t + 1, f"{mean[t]:.10g}", f"{mean[t] - half[t]:.10g}", f"{mean[t] + half[t]:.10g}"])


def write_raw_csv(result: AggregateResult, path: str | Path) -> None:
    """Final cumulative regret of every replication."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(("policy", "rep", "final_cum_regret"))
        for label in result.labels:
            for rep, v in enumerate(result.cumulative[label][:, -1]):
                w.writerow([label, rep, f"{v:.10g}"])


def recompute_regret(instance: NsdInstance, actions: Sequence[int]) -> np.ndarray:
    """Per-round regret from the action sequence alone."""
    values = instance.segment_values()
    starts = np.asarray(instance.starts)
    rounds = np.arange(1, len(actions) + 1)
    seg = np.searchsorted(starts, rounds, side="right") - 1
    acts = np.asarray(actions)
    return values[seg].max(axis=1) - values[seg, acts]
