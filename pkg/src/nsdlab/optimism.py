"""Optimistic transition vector: max q.u over the simplex intersected with an L1 ball."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def value_order(u: Sequence[float]) -> list[int]:
    """Signal indices by decreasing value, ties to the lower index."""
    return sorted(range(len(u)), key=lambda s: (-u[s], s))


def _solve(p: Sequence[float], radius: float, u: Sequence[float], order: Sequence[int]) -> tuple[float, list[float]]:
    q = list(p)
    best = order[0]
    q[best] = min(1.0, p[best] + radius / 2.0)
    excess = sum(q) - 1.0
    if excess < 0.0:
        # sub-normalized estimate (action absent from the window)
        q[best] += -excess
        excess = 0.0
    j = len(order) - 1
    while excess > 0.0 and j > 0:
        s = order[j]
        take = q[s] if q[s] < excess else excess
        q[s] -= take
        excess -= take
        j -= 1
    value = 0.0
    for s in range(len(q)):
        value += q[s] * u[s]
    return value, q


def optimistic_value(p_hat, radius: float, u) -> tuple[float, np.ndarray]:
    """Maximize q.u over distributions q with ||p_hat - q||_1 <= radius.

    Greedy solution: push up to radius/2 extra mass onto the highest-valued
    signal, then remove the surplus starting from the lowest-valued one.
    `p_hat` may be sub-normalized (all zeros for an action with no data in
    the window); the missing mass then goes to the best signal.
    """
    p = np.asarray(p_hat, dtype=float)
    uu = np.asarray(u, dtype=float)
    if p.shape != uu.shape or p.ndim != 1:
        raise ValueError(f"p_hat and u must be vectors of equal length, got {p.shape} and {uu.shape}")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(uu)) and math.isfinite(radius)):
        raise ValueError("optimistic_value received non-finite input")
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    if np.any(p < 0) or p.sum() > 1.0 + 1e-9:
        raise ValueError("p_hat must be non-negative with total mass <= 1")
    ul = uu.tolist()
    value, q = _solve(p.tolist(), float(radius), ul, value_order(ul))
    return value, np.asarray(q)
