import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_lap
from shoaltrack.assign import matched_cost, solve_lap
from shoaltrack.geometry import iou_matrix


def test_diagonal_example():
    res = solve_lap(np.array([[0.0, 1.0], [1.0, 0.0]]), 0.5)
    assert set(res.matches) == {(0, 0), (1, 1)}
    assert res.unmatched_rows == () and res.unmatched_columns == ()


def test_all_infinite():
    res = solve_lap(np.full((3, 2), np.inf), 10.0)
    assert res.matches == ()
    assert res.unmatched_rows == (0, 1, 2) and res.unmatched_columns == (0, 1)


@pytest.mark.parametrize("shape", [(0, 0), (0, 3), (4, 0)])
def test_empty(shape):
    res = solve_lap(np.zeros(shape), 1.0)
    assert res.matches == ()
    assert len(res.unmatched_rows) == shape[0] and len(res.unmatched_columns) == shape[1]


def test_gate_blocks_expensive_pairs():
    res = solve_lap(np.array([[0.9, 0.2], [0.1, 0.95]]), 0.5)
    assert set(res.matches) == {(0, 1), (1, 0)}
    res = solve_lap(np.array([[0.9, 0.2], [0.1, 0.95]]), 0.15)
    assert set(res.matches) == {(1, 0)}


def test_cardinality_before_cost():
    # Matching (0,0) alone is cheaper, but two pairs are possible.
    cost = np.array([[0.0, 0.4], [0.45, np.inf]])
    assert set(solve_lap(cost, 1.0).matches) == {(0, 1), (1, 0)}


def test_nan_never_matched():
    res = solve_lap(np.array([[np.nan, 0.3]]), 1.0)
    assert res.matches == ((0, 1),)


@pytest.mark.parametrize("seed", range(40))
def test_random_5x5_equals_permutation_oracle(seed):
    rng = np.random.default_rng(seed)
    cost = rng.random((5, 5))
    k, total, pairs = brute_lap(cost.tolist(), np.inf)
    res = solve_lap(cost)
    assert len(res.matches) == k == 5
    assert matched_cost(cost, res) == total
    assert tuple(sorted(res.matches)) == pairs


def _rand_instance(rng):
    r, c = rng.integers(1, 7, size=2)
    if rng.random() < 0.5:
        cost = rng.integers(0, 5, (r, c)).astype(float)
    else:
        cost = rng.random((r, c))
    cost[rng.random((r, c)) < 0.2] = np.inf
    gate = float(rng.choice([np.inf, 0.5, 2.0, 3.0]))
    return cost, gate


def test_partition_and_gate_invariants():
    rng = np.random.default_rng(11)
    for _ in range(300):
        cost, gate = _rand_instance(rng)
        res = solve_lap(cost, gate)
        rows = [r for r, _ in res.matches] + list(res.unmatched_rows)
        cols = [c for _, c in res.matches] + list(res.unmatched_columns)
        assert sorted(rows) == list(range(cost.shape[0]))
        assert sorted(cols) == list(range(cost.shape[1]))
        assert all(cost[r, c] <= gate for r, c in res.matches)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_row_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    cost = rng.random((int(rng.integers(1, 6)), int(rng.integers(1, 6))))
    perm = rng.permutation(cost.shape[0])
    base = solve_lap(cost, 0.7)
    permuted = solve_lap(cost[perm], 0.7)
    assert {(int(perm[r]), c) for r, c in permuted.matches} == set(base.matches)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5))
def test_constant_shift_with_gate(seed, shift):
    rng = np.random.default_rng(seed)
    cost = rng.random((int(rng.integers(1, 6)), int(rng.integers(1, 6))))
    cost[rng.random(cost.shape) < 0.2] = np.inf
    a = solve_lap(cost, 0.6)
    b = solve_lap(cost + shift, 0.6 + shift)
    assert matched_cost(cost, a) == pytest.approx(matched_cost(cost, b), abs=1e-9)
    assert len(a.matches) == len(b.matches)


def test_iou_distance_usage():
    a = np.array([[0, 0, 10, 10], [50, 50, 10, 10]], dtype=float)
    b = np.array([[51, 50, 10, 10], [1, 0, 10, 10]], dtype=float)
    res = solve_lap(1 - iou_matrix(a, b), 0.8)
    assert set(res.matches) == {(0, 1), (1, 0)}
