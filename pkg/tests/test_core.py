import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsdlab.core import (
    TABLE1_P, TABLE1_RHO, TABLE1_THETA, ConstantDelay, GeometricDelay, Mixture, NsdInstance, Segment,
    expected_reward, instance_from_json, optimal_value, table1_instance,
)
from nsdlab.environment import SwitchSchedule, generate_shifted_instance


@pytest.mark.parametrize("action,rho", list(enumerate(TABLE1_RHO)))
def test_table1_values(action, rho):
    inst = table1_instance()
    assert expected_reward(inst, 1, action) == pytest.approx(rho, abs=1e-9)


def test_table1_rows_match_printed_values():
    theta = np.array(TABLE1_THETA)
    for row, rho in zip(TABLE1_P, TABLE1_RHO):
        assert sum(row) == pytest.approx(1.0, abs=1e-12)
        assert np.dot(row, theta) == pytest.approx(rho, abs=1e-9)


def test_printed_typo_row_rejected():
    P = np.array(TABLE1_P)
    P[2] = (0.8, 0.1, 0.8)
    with pytest.raises(ValueError, match="sums to"):
        NsdInstance(4, 3, 100, (Segment(1, P),), np.array(TABLE1_THETA))


def test_zero_theta():
    inst = NsdInstance(2, 2, 10, (Segment(1, np.array([[0.3, 0.7], [1.0, 0.0]])),), np.zeros(2))
    assert expected_reward(inst, 5, 1) == 0.0


def test_mixture_value():
    inst = table1_instance(mixture=(0.5, (0.1, 0.1, 0.1, 0.9)))
    assert expected_reward(inst, 1, 3) == pytest.approx(0.62, abs=1e-12)


def test_mixture_value_matches_simulated_pulls():
    # empirical mean reward of action 4 under the mixture, 10^6 pulls
    from nsdlab.environment import Environment
    inst = table1_instance(horizon=1_000_000, mixture=(0.5, (0.1, 0.1, 0.1, 0.9)))
    env = Environment(inst, np.random.default_rng(3))
    for _ in range(inst.horizon):
        env.step(3)
    rewards = np.asarray(env.rewards)
    sd = np.sqrt(0.62 * 0.38 / inst.horizon)
    assert abs(rewards.mean() - 0.62) < 4 * sd


def test_optimal_value_table1():
    v, a = optimal_value(table1_instance(), 17)
    assert v == pytest.approx(0.70)
    assert a == 0


def test_optimal_value_ties_to_lowest_index():
    P = np.tile([0.2, 0.8], (3, 1))
    inst = NsdInstance(3, 2, 5, (Segment(1, P),), np.array([0.5, 0.25]))
    v, a = optimal_value(inst, 1)
    assert a == 0
    assert v == pytest.approx(0.3)


def test_optimal_value_after_shift():
    inst = generate_shifted_instance(table1_instance(100), SwitchSchedule((50,), (1,)))
    assert optimal_value(inst, 49) == (pytest.approx(0.70), 0)
    assert optimal_value(inst, 50) == (pytest.approx(0.70), 1)
    # every value re-evaluated by hand after the shift
    expected = [0.34, 0.70, 0.42, 0.28]
    assert [expected_reward(inst, 60, a) for a in range(4)] == pytest.approx(expected)


@pytest.mark.parametrize("round,action", [(0, 0), (101, 0), (1, 4), (1, -1)])
def test_range_errors(round, action):
    inst = table1_instance(100)
    with pytest.raises(ValueError):
        expected_reward(inst, round, action)


def test_segment_validation():
    P = np.array(TABLE1_P)
    theta = np.array(TABLE1_THETA)
    with pytest.raises(ValueError):
        NsdInstance(4, 3, 100, (Segment(2, P),), theta)
    with pytest.raises(ValueError):
        NsdInstance(4, 3, 100, (Segment(1, P), Segment(1, P)), theta)
    with pytest.raises(ValueError):
        NsdInstance(4, 3, 100, (Segment(1, P),), np.array([0.8, 0.4, 1.2]))
    with pytest.raises(ValueError):
        Mixture(0.2, np.array([0.5, 1.5]))


def test_json_round_trip():
    inst = generate_shifted_instance(
        table1_instance(500, GeometricDelay(0.1), mixture=(0.2, (0.1, 0.2, 0.3, 0.9))),
        SwitchSchedule((100, 300), (2, 1)),
    )
    back = instance_from_json(json.loads(json.dumps(inst.to_json())))
    assert back.to_json() == inst.to_json()
    assert isinstance(back.delay_model, GeometricDelay)


def test_json_schema_example():
    doc = {"K": 2, "S": 2, "T": 10, "theta": [1.0, 0.0],
           "segments": [{"start": 1, "P": [[0.5, 0.5], [0.9, 0.1]]}],
           "delay": {"constant": 3}, "mixture": None}
    inst = instance_from_json(doc)
    assert inst.delay_model == ConstantDelay(3)
    assert optimal_value(inst, 1) == (pytest.approx(0.9), 1)


simplex_rows = st.integers(2, 5).flatmap(
    lambda S: st.tuples(
        st.lists(st.lists(st.floats(0.01, 1.0), min_size=S, max_size=S), min_size=2, max_size=6),
        st.lists(st.floats(0.0, 1.0), min_size=S, max_size=S),
    )
)


@settings(max_examples=60, deadline=None)
@given(simplex_rows, st.randoms())
def test_optimum_dominates_and_permutation_invariance(data, rnd):
    rows, theta = data
    P = np.array(rows)
    P /= P.sum(axis=1, keepdims=True)
    P[:, -1] = 1.0 - P[:, :-1].sum(axis=1)
    P = np.clip(P, 0, None)
    K, S = P.shape
    inst = NsdInstance(K, S, 3, (Segment(1, P),), np.array(theta))
    best, _ = optimal_value(inst, 2)
    for a in range(K):
        assert best >= expected_reward(inst, 2, a)
    perm = list(range(S))
    rnd.shuffle(perm)
    permuted = NsdInstance(K, S, 3, (Segment(1, P[:, perm]),), np.array(theta)[perm])
    for a in range(K):
        assert expected_reward(permuted, 1, a) == pytest.approx(expected_reward(inst, 1, a), abs=1e-12)


def test_exhaustive_optimum_small_instances():
    rng = np.random.default_rng(0)
    for K in range(2, 11):
        P = rng.dirichlet(np.ones(3), size=K)
        inst = NsdInstance(K, 3, 1, (Segment(1, P),), rng.random(3))
        best, arg = optimal_value(inst, 1)
        vals = [expected_reward(inst, 1, a) for a in range(K)]
        assert all(best >= v for v in vals)
        assert arg == min(a for a, v in enumerate(vals) if v == best)
