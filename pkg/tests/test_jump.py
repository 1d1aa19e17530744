import math

import numpy as np
import pytest
from scipy import stats as sps

from shotnoise_sbd import jump, sheriff
from shotnoise_sbd.domain import PairOracle, PointSet, Window, sample_rain
from shotnoise_sbd.response import ResponseFunction


def test_single_point_no_events(window, rf):
    tr = jump.jump_run(window, rf, 0.0, [[1.0, 1.0]], 50.0, 1)
    assert len(tr.event_time) == 0
    assert tr.counts[-1] == 1


def test_two_point_race(window, rf):
    survivors = []
    for s in range(400):
        tr = jump.jump_run(window, rf, 0.0, [[1.0, 1.0], [1.5, 1.0]], 100.0, s)
        assert tr.event_kind.tolist() == [jump.EV_DEATH]
        survivors.append(int(tr.point[0] & np.uint64(0xFFFF)))
    p = np.mean(survivors)
    assert abs(p - 0.5) < 3 * 0.5 / math.sqrt(400)


def test_victim_selection_is_proportional_to_pressure(window, rf):
    # pressures 1, 2, 1 -> first victim probabilities 1/4, 1/2, 1/4
    z0 = [[0.0 + 3, 3.0], [0.5 + 3, 3.0], [1.5 + 3, 3.0]]
    first = np.zeros(3, int)
    n = 2000
    for s in range(n):
        tr = jump.jump_run(window, rf, 0.0, z0, 100.0, 10_000 + s)
        first[int(tr.point[0] & np.uint64(0xFFFF))] += 1
    assert sps.chisquare(first, np.array([0.25, 0.5, 0.25]) * n).pvalue > 0.001


def test_pure_birth_when_kernel_vanishes(window):
    zero = ResponseFunction.indicator(0.0, 1.0, 2)
    grid = [0.5, 1.0]
    counts = [jump.jump_run(window, zero, 1.0, None, 1.0, s, grid=grid).counts for s in range(100)]
    m = np.mean(counts, axis=0)
    assert abs(m[1] - 100.0) < 3 * math.sqrt(100.0 / 100)
    # Sheriff with a vanishing kernel keeps every rain point
    rain = sample_rain(window, 1.0, 0.0, 1.0, 3)
    out = sheriff.resolve(rain, PairOracle(1, zero, window), 1.0)
    assert int(sheriff.death_counts(out, [1.0])[0]) == len(rain)


def test_incremental_rates_track_recomputation(window, rf):
    tr = jump.jump_run(window, rf, 1.0, None, 10.0, 5, recompute_every=50)
    assert tr.n_recomputes > 5
    assert tr.max_drift < 1e-9


def test_grid_snapshots_are_consistent(window, rf):
    grid = np.linspace(0.0, 5.0, 11)
    tr = jump.jump_run(window, rf, 1.0, None, 5.0, 8, grid=grid, keep_snapshots=True)
    assert tr.counts[0] == 0
    assert [len(s) for s in tr.snapshots] == tr.counts.tolist()
    births = np.cumsum(tr.event_kind == jump.EV_BIRTH) - np.cumsum(tr.event_kind == jump.EV_DEATH)
    k = np.searchsorted(tr.event_time, grid[-1], side="right")
    assert births[k - 1] == tr.counts[-1]


def test_initial_points_at_time_zero(window, rf):
    z0 = np.random.default_rng(1).uniform(0, 10, (30, 2))
    tr = jump.jump_run(window, rf, 1.0, z0, 1.0, 2, grid=[0.0])
    assert tr.counts[0] == 30


def test_rejects_negative_intensity(window, rf):
    with pytest.raises(ValueError):
        jump.jump_run(window, rf, -1.0, None, 1.0, 1)


@pytest.mark.slow
def test_engines_agree_in_distribution(window, rf):
    rep = jump.compare_to_sheriff(window, rf, 1.0, 10.0, [1.0, 10.0], 60, 42)
    assert rep["max_abs_z_count"] < 3.0
    assert rep["max_abs_z_pressure"] < 3.0
