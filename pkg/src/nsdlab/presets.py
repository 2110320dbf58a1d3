"""Experiment presets reproducing the reference experiments, and JSON configs."""
from __future__ import annotations

import json
from pathlib import Path

from .core import NsdInstance, instance_from_json, table1_instance
from .runner import ExperimentConfig, PolicySpec

HORIZON = 8000
CHANGES = (2000, 4000, 6000)
REPS = 50
WINDOW = 800
DELTA = 0.05

ALL_POLICIES = [
    PolicySpec("nsd-ucrl2", WINDOW),
    PolicySpec("nsd-psrl", WINDOW),
    PolicySpec("ucb"),
    PolicySpec("sw-ucb", WINDOW),
    PolicySpec("oracle-ucb"),
    PolicySpec("oracle-nsd"),
    PolicySpec("oracle-ucb-nd"),
    PolicySpec("oracle-nsd-nd"),
]


def _fig2() -> ExperimentConfig:
    """Window sweep at D = 0. The comparison baseline is the oracle that knows
    the change points and sees rewards without delay, i.e. oracle-nsd-nd."""
    policies = [PolicySpec("nsd-ucrl2", w) for w in (400, 800, 2000)] + [PolicySpec("oracle-nsd-nd")]
    return ExperimentConfig(table1_instance(HORIZON, 0), policies, REPS, change_rounds=CHANGES, name="fig2",
                            description="window sweep, D=0")


def _fig3(delay: int, log_y: bool, name: str) -> ExperimentConfig:
    return ExperimentConfig(table1_instance(HORIZON, delay), list(ALL_POLICIES), REPS, change_rounds=CHANGES,
                            name=name, log_y=log_y, description=f"all policies, D={delay}, W={WINDOW}")


def _stationary_mixed(alpha: float, mu: tuple[float, float], name: str) -> ExperimentConfig:
    inst = table1_instance(HORIZON, 0, actions=(0, 1), mixture=(alpha, mu))
    policies = [PolicySpec("nsd-ucrl2"), PolicySpec("ucb")]
    return ExperimentConfig(inst, policies, REPS, name=name,
                            description=f"stationary two-arm mixture, alpha={alpha}, mu={mu}, D=0, W=T")


def _switching_mixed(alpha: float, mu: tuple[float, ...], name: str) -> ExperimentConfig:
    inst = table1_instance(HORIZON, 500, mixture=(alpha, mu))
    policies = [PolicySpec("nsd-ucrl2", WINDOW), PolicySpec("ucb"), PolicySpec("sw-ucb", WINDOW)]
    return ExperimentConfig(inst, policies, REPS, change_rounds=CHANGES, name=name,
                            description=f"switching mixture, alpha={alpha}, mu={mu}, D=500, W={WINDOW}")


BAD_MU4 = (0.1, 0.1, 0.1, 0.9)
GOOD_MU4 = (0.9, 0.1, 0.1, 0.1)

_BUILDERS = {"fig2": _fig2}
for _d in (100, 500, 1000):
    _BUILDERS[f"fig3-d{_d}"] = (lambda d=_d: _fig3(d, True, f"fig3-d{d}"))
    _BUILDERS[f"figA-d{_d}"] = (lambda d=_d: _fig3(d, False, f"figA-d{d}"))
for _fig, _alpha in (("fig4", 0.1), ("fig5", 0.3)):
    _BUILDERS[f"{_fig}-favorable"] = (lambda a=_alpha, f=_fig: _stationary_mixed(a, (0.9, 0.1), f"{f}-favorable"))
    _BUILDERS[f"{_fig}-bad"] = (lambda a=_alpha, f=_fig: _stationary_mixed(a, (0.1, 0.9), f"{f}-bad"))
for _alpha in (0.1, 0.3, 0.5):
    _BUILDERS[f"fig6-a{_alpha}"] = (lambda a=_alpha: _switching_mixed(a, BAD_MU4, f"fig6-a{a}"))
    _BUILDERS[f"fig8-a{_alpha}"] = (lambda a=_alpha: _switching_mixed(a, GOOD_MU4, f"fig8-a{a}"))

GROUPS = {
    "fig3": ["fig3-d100", "fig3-d500", "fig3-d1000"],
    "figA": ["figA-d100", "figA-d500", "figA-d1000"],
    "fig4": ["fig4-favorable", "fig4-bad"],
    "fig5": ["fig5-favorable", "fig5-bad"],
    "fig6": ["fig6-a0.1", "fig6-a0.3", "fig6-a0.5"],
    "fig8": ["fig8-a0.1", "fig8-a0.3", "fig8-a0.5"],
}


class UnknownPreset(ValueError):
    pass


def preset_names() -> list[str]:
    return sorted(set(_BUILDERS) | set(GROUPS))


def preset(name: str) -> ExperimentConfig:
    if name not in _BUILDERS:
        if name in GROUPS:
            raise UnknownPreset(f"{name!r} has several panels: {', '.join(GROUPS[name])}")
        raise UnknownPreset(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return _BUILDERS[name]()


def expand_preset(name: str) -> list[ExperimentConfig]:
    """A single panel, or every panel of a grouped preset."""
    if name in GROUPS:
        return [preset(p) for p in GROUPS[name]]
    return [preset(name)]


def config_from_json(data: dict, name: str = "custom") -> ExperimentConfig:
    """Either a bare instance document, or
    ``{"instance": {...}, "policies": [...], "reps", "seed", "delta", "change_rounds", "shifts"}``.
    A bare instance runs nsd-ucrl2 (W = T) against ucb."""
    if "instance" in data:
        instance: NsdInstance = instance_from_json(data["instance"])
        raw = data.get("policies") or [{"name": "nsd-ucrl2"}, {"name": "ucb"}]
    else:
        instance = instance_from_json(data)
        raw = [{"name": "nsd-ucrl2"}, {"name": "ucb"}]
    policies = []
    for p in raw:
        if isinstance(p, str):
            p = {"name": p}
        policies.append(PolicySpec(p["name"], p.get("W", p.get("window")), p.get("delta"), p.get("label")))
    shifts = data.get("shifts")
    return ExperimentConfig(
        instance,
        policies,
        reps=int(data.get("reps", REPS)),
        seed=int(data.get("seed", 0)),
        delta=float(data.get("delta", DELTA)),
        change_rounds=tuple(data.get("change_rounds", ())),
        shifts=None if shifts is None else tuple(shifts),
        name=name,
        log_y=bool(data.get("log_y", False)),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    with open(path) as f:
        data = json.load(f)
    return config_from_json(data, name=Path(path).stem)
