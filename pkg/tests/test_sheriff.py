import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shotnoise_sbd import sheriff
from shotnoise_sbd.domain import (Namespace, NondistinctDuelTimesError, PairOracle, PairTable, PointId,
                                  PointSet, Window, sample_poisson_initial, sample_rain)
from shotnoise_sbd.response import ResponseFunction


def points(n, births=None):
    b = np.zeros(n) if births is None else np.asarray(births, float)
    return PointSet(np.zeros(n, int), np.arange(n), np.zeros((n, 2)), b)


def table(rows):
    """rows of (i, j, T, dies_i)."""
    i, j, T, d = zip(*rows) if rows else ((), (), (), ())
    return PairTable(np.array(i, np.int64), np.array(j, np.int64), np.array(T, float), np.array(d, np.int8))


def instance(seed, horizon=5.0, lam=1.0, L=10.0):
    w = Window(2, L, "torus")
    rf = ResponseFunction.indicator(1.0, 1.0, 2)
    return sample_rain(w, lam, 0.0, horizon, seed), PairOracle(seed + 1, rf, w)


def test_single_point_survives():
    out = sheriff.resolve_pairs(points(1), table([]), 3.0)
    assert out.alive_at_horizon == {PointId(Namespace.RAIN, 0)}


def test_two_points():
    out = sheriff.resolve_pairs(points(2), table([(0, 1, 1.0, 1)]), 3.0)
    assert out.death[0] == 1.0 and out.killer[0] == 1
    assert np.isinf(out.death[1]) and out.killer[1] == -1


def test_three_point_chain():
    # p=0, q=1, r=2: T_qr = 0.5 with q the victim, T_pq = 1.0 with p the victim
    pairs = table([(1, 2, 0.5, 1), (0, 1, 1.0, 1)])
    for variant in ("single", "double"):
        for order in ("canonical", ("shuffled", 1), ("shuffled", 2)):
            out = sheriff.resolve_pairs(points(3), pairs, 2.0, variant, order)
            assert out.death[1] == 0.5 and out.killer[1] == 2
            assert np.isinf(out.death[0]) and np.isinf(out.death[2])


def test_duels_beyond_horizon_are_dropped():
    out = sheriff.resolve_pairs(points(2), table([(0, 1, 5.0, 1)]), 3.0)
    assert np.all(np.isinf(out.death))


def test_nondistinct_times_raise():
    with pytest.raises(NondistinctDuelTimesError):
        sheriff.resolve_pairs(points(3), table([(0, 1, 1.0, 1), (1, 2, 1.0, 0)]), 3.0)


def test_noncanonical_points_raise():
    p = PointSet([0, 0], [1, 0], np.zeros((2, 2)), [0.0, 0.0])
    with pytest.raises(ValueError):
        sheriff.resolve_pairs(p, table([]), 1.0)


@given(seed=st.integers(0, 10_000), n_orders=st.integers(1, 4))
def test_order_independence_property(seed, n_orders):
    rain, oracle = instance(seed, horizon=3.0)
    prep = sheriff.prepare(rain, oracle, 3.0)
    ref = prep.run()
    for k in range(n_orders):
        got = prep.run(("shuffled", seed * 10 + k))
        assert got.death.tobytes() == ref.death.tobytes()
        assert got.killer.tobytes() == ref.killer.tobytes()


@given(seed=st.integers(0, 10_000))
def test_variants_agree_and_match_sweep(seed):
    rain, oracle = instance(seed, horizon=3.0)
    single = sheriff.resolve(rain, oracle, 3.0, "single")
    double = sheriff.resolve(rain, oracle, 3.0, "double", ("shuffled", 3))
    assert single.death.tobytes() == double.death.tobytes()
    assert single.killer.tobytes() == double.killer.tobytes()
    pairs = oracle.pairs(single.points, t_max=3.0)
    d, k = sheriff.chronological_sweep(len(single.points), pairs)
    np.testing.assert_array_equal(d, single.death)
    np.testing.assert_array_equal(k, single.killer)


@given(seed=st.integers(0, 10_000))
def test_outcome_invariants(seed):
    rain, oracle = instance(seed, horizon=4.0)
    out = sheriff.resolve(rain, oracle, 4.0)
    assert sheriff.killer_liveness_violations(out, oracle) == []
    assert sheriff.equation_residuals(out, oracle) == 0
    fin = np.isfinite(out.death)
    assert np.all(out.death[fin] < 4.0)
    assert np.all(out.death[fin] > out.points.birth[fin])
    assert np.all((out.killer >= 0) == fin)


def test_fixed_point_iteration_reaches_output():
    for seed in range(10):
        rain, oracle = instance(seed, horizon=1.5)
        pts = rain.canonical()
        pairs = oracle.pairs(pts, t_max=1.5)
        d, k, _ = sheriff.fixed_point_iteration(pts, pairs)
        out = sheriff.resolve_pairs(pts, pairs, 1.5)
        np.testing.assert_array_equal(d, out.death)
        np.testing.assert_array_equal(k, out.killer)


def test_frozen_instance():
    # values produced by the chronological sweep on this instance, frozen
    rain, oracle = instance(2024, horizon=5.0)
    out = sheriff.resolve(rain, oracle, 5.0)
    assert len(out.points) == 509
    assert int(np.isfinite(out.death).sum()) == 442
    assert float(np.nansum(np.where(np.isfinite(out.death), out.death, 0.0))) == pytest.approx(
        1238.1491535619964, rel=1e-12)


def test_resolve_with_empty_initial_equals_resolve():
    rain, oracle = instance(5)
    a = sheriff.resolve(rain, oracle, 5.0)
    b = sheriff.resolve_with_initial(PointSet.empty(2), rain, oracle, 5.0)
    assert a.death.tobytes() == b.death.tobytes() and a.killer.tobytes() == b.killer.tobytes()


def test_isolated_initial_point_survives():
    w = Window(2, 10.0, "plain")
    rf = ResponseFunction.indicator(1.0, 1.0, 2)
    rain = sample_rain(w, 1.0, 0.0, 3.0, 8)
    rain = rain.take(np.all(rain.x > 3.0, axis=1))
    z = PointSet([1], [0], np.array([[0.5, 0.5]]), [0.0])
    out = sheriff.resolve_with_initial(z, rain, PairOracle(1, rf, w), 3.0)
    assert PointId(Namespace.AUGMENTATION, 0) in out.alive_at_horizon


def test_snapshot_examples():
    out = sheriff.resolve_pairs(points(2, [0.5, 0.7]), table([(0, 1, 1.0, 1)]), 3.0)
    assert out.snapshot(0.0) == set()
    assert PointId(Namespace.RAIN, 0) in out.snapshot(np.nextafter(1.0, 0.0))
    assert PointId(Namespace.RAIN, 0) not in out.snapshot(1.0)
    with pytest.raises(ValueError):
        out.snapshot(4.0)
    counts = sheriff.death_counts(out, [0.0, 0.5, 0.7, 0.99, 1.0, 2.0])
    np.testing.assert_array_equal(counts, [0, 1, 2, 2, 1, 1])


def test_extend_matches_one_pass():
    w = Window(2, 10.0, "torus")
    rf = ResponseFunction.indicator(1.0, 1.0, 2)
    oracle = PairOracle(77, rf, w)
    r1 = sample_rain(w, 1.0, 0.0, 2.0, 1)
    r2 = sample_rain(w, 1.0, 2.0, 4.0, 2, first_index=len(r1))
    r3 = sample_rain(w, 1.0, 4.0, 5.0, 3, first_index=len(r1) + len(r2))
    one = sheriff.resolve(PointSet.concat(r1, r2, r3), oracle, 5.0)
    assert 400 < len(one.points) < 600
    step = sheriff.extend(sheriff.extend(sheriff.resolve(r1, oracle, 2.0), oracle, 4.0, r2), oracle, 5.0, r3)
    assert step.death.tobytes() == one.death.tobytes()
    assert step.killer.tobytes() == one.killer.tobytes()
    once = sheriff.extend(sheriff.resolve(r1, oracle, 2.0), oracle, 5.0, PointSet.concat(r2, r3))
    assert once.death.tobytes() == one.death.tobytes()
    same = sheriff.extend(one, oracle, 5.0)
    assert same is one
    with pytest.raises(ValueError):
        sheriff.extend(one, oracle, 4.0)


def test_budget_exceeded():
    rain, oracle = instance(3, horizon=20.0)
    with pytest.raises(sheriff.InvestigationBudgetExceeded):
        sheriff.resolve(rain, oracle, 20.0, budget_factor=0.0)


def test_enumeration_order():
    np.testing.assert_array_equal(sheriff.enumeration_order(4), [0, 1, 2, 3])
    o = sheriff.enumeration_order(50, ("shuffled", 3))
    assert sorted(o.tolist()) == list(range(50))
    with pytest.raises(ValueError):
        sheriff.enumeration_order(3, "random")


def test_deaths_ledger_and_csv(tmp_path):
    rain, oracle = instance(9, horizon=2.0)
    out = sheriff.resolve(rain, oracle, 2.0)
    out.write_deaths_ledger(tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "victim,killer,time"
    assert len(lines) - 1 == int(np.isfinite(out.death).sum())
    times = [float(l.split(",")[2]) for l in lines[1:]]
    assert times == sorted(times)
    out.write_csv(tmp_path / "p.csv")
    dm = out.death_map()
    assert len(dm) == len(out.points)
