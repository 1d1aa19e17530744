import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from shotnoise_sbd.domain import (CellGrid, Namespace, NondistinctDuelTimesError, PairOracle, PointId,
                                  PointRecord, PointSet, RainOverflowError, Window, check_distinct,
                                  neighbors_within_support, read_snapshot_csv, sample_poisson_initial,
                                  sample_rain, write_snapshot_csv)
from shotnoise_sbd.response import ResponseFunction

coords = st.floats(0.0, 9.999, allow_nan=False)
pt = st.tuples(coords, coords)


@given(x=pt, y=pt, z=pt)
def test_torus_distance_properties(x, y, z):
    tor, plain = Window(2, 10.0, "torus"), Window(2, 10.0, "plain")
    dxy = tor.distance(x, y)
    assert dxy == tor.distance(y, x)
    assert dxy <= plain.distance(x, y) + 1e-12
    assert dxy <= 10.0 * math.sqrt(2) / 2 + 1e-12
    assert tor.distance(x, z) <= dxy + tor.distance(y, z) + 1e-9


@given(x=pt, y=pt, v=pt)
def test_torus_translation_invariance(x, y, v):
    w = Window(2, 10.0, "torus")
    xs = w.wrap(np.add(x, v))
    ys = w.wrap(np.add(y, v))
    assert w.distance(xs, ys) == pytest.approx(w.distance(x, y), abs=1e-9)


def test_window_rejects_bad_input():
    with pytest.raises(ValueError):
        Window(2, -1.0)
    with pytest.raises(ValueError):
        Window(2, 1.0, "sphere")
    assert Window(3, 2.0).volume == 8.0


def test_rain_zero_intensity(window):
    assert len(sample_rain(window, 0.0, 0.0, 5.0, 1)) == 0


def test_rain_is_deterministic(window):
    a = sample_rain(window, 1.0, 0.0, 2.0, 7)
    b = sample_rain(window, 1.0, 0.0, 2.0, 7)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.birth, b.birth)
    assert np.all(np.diff(a.birth) >= 0)
    assert np.all(a.namespace == Namespace.RAIN)


def test_rain_mean_count(window):
    counts = [len(sample_rain(window, 2.0, 0.0, 5.0, s)) for s in range(200)]
    assert abs(np.mean(counts) - 1000) < 3 * math.sqrt(1000 / 200)


def test_rain_subbox_counts_are_poisson(window):
    lo, hi = window.central_box(2.5)
    counts = []
    for s in range(400):
        r = sample_rain(window, 1.0, 0.0, 1.0, 1000 + s)
        counts.append(int(np.sum(np.all((r.x >= lo) & (r.x < hi), axis=1))))
    counts = np.array(counts)
    mean = 6.25
    # chi-square goodness of fit on pooled classes
    edges = [0, 3, 5, 6, 7, 8, 10, 100]
    obs = np.histogram(counts, bins=edges)[0]
    cdf = sps.poisson.cdf(np.array(edges) - 1, mean)
    exp = np.diff(cdf) * len(counts)
    exp[-1] += len(counts) - exp.sum()
    assert sps.chisquare(obs, exp).pvalue > 0.001


def test_rain_overflow(window):
    with pytest.raises(RainOverflowError):
        sample_rain(window, 1e9, 0.0, 10.0, 1)


def test_poisson_initial_namespace(window):
    z = sample_poisson_initial(window, 0.5, 0.0, 3)
    assert np.all(z.namespace == Namespace.AUGMENTATION)
    assert np.all(z.birth == 0.0)


def _rec(ns, i, x, b=0.0):
    return PointRecord(PointId(ns, i), tuple(x), b)


def test_duel_beyond_support_is_infinite(window, rf):
    o = PairOracle(1, rf, window)
    p, q = _rec(Namespace.RAIN, 0, (1.0, 1.0)), _rec(Namespace.RAIN, 1, (2.5, 1.0))
    assert o.duel_time(p, q) == math.inf


def test_duel_symmetry_and_direction(window, rf):
    o = PairOracle(3, rf, window)
    for k in range(50):
        p = _rec(Namespace.RAIN, k, (1.0, 1.0), 0.1 * k)
        q = _rec(Namespace.AUGMENTATION, k, (1.5, 1.2))
        assert o.duel_time(p, q) == o.duel_time(q, p)
        assert o.duel_direction(p, q) + o.duel_direction(q, p) == 1
        assert o.duel_direction(p, q) == o.duel_direction(p, q)
        with pytest.raises(ValueError):
            o.duel_time(p, p)


def test_duel_time_and_direction_moments(window, rf):
    o = PairOracle(11, rf, window)
    n = 100_000
    a = np.arange(n, dtype=np.uint64)
    b = a + np.uint64(n)
    T = o._times(a, b, np.zeros(n), np.zeros(n), np.full(n, 0.5))
    assert abs(T.mean() - 0.5) < 3 * 0.5 / math.sqrt(n)
    bit = o._dies_first(a, b)
    assert abs(bit.mean() - 0.5) < 3 * 0.5 / math.sqrt(n)


def test_pairs_are_query_order_independent(window, rf, rng):
    pts = sample_rain(window, 1.0, 0.0, 3.0, 5)
    o = PairOracle(9, rf, window)
    base = o.pairs(pts)
    perm = rng.permutation(len(pts))
    shuf = o.pairs(pts.take(perm))
    key = pts.keys
    ref = {(int(min(key[i], key[j])), int(max(key[i], key[j]))): (t, int(key[i] if d else key[j]))
           for i, j, t, d in zip(base.i, base.j, base.T, base.dies_i)}
    k2 = key[perm]
    got = {(int(min(k2[i], k2[j])), int(max(k2[i], k2[j]))): (t, int(k2[i] if d else k2[j]))
           for i, j, t, d in zip(shuf.i, shuf.j, shuf.T, shuf.dies_i)}
    assert ref == got


def test_neighbors_examples(window, rf):
    single = [_rec(Namespace.RAIN, 0, (5.0, 5.0))]
    assert neighbors_within_support(single, single[0], window, rf) == []
    two = [_rec(Namespace.RAIN, 0, (5.0, 5.0)), _rec(Namespace.RAIN, 1, (6.0 + 1e-9, 5.0))]
    assert neighbors_within_support(two, two[0], window, rf) == []


def test_neighbors_match_brute_force(window, rf, rng):
    x = rng.uniform(0, 10, (1000, 2))
    pts = PointSet(np.zeros(1000, int), np.arange(1000), x, np.zeros(1000))
    for k in (0, 17, 999):
        got = neighbors_within_support(pts, PointId(Namespace.RAIN, k), window, rf)
        d = window.distance(x[k], x)
        want = [PointId(Namespace.RAIN, int(j)) for j in np.nonzero((d <= 1.0) & (np.arange(1000) != k))[0]]
        assert got == want


def test_cell_grid_pairs_match_brute_force(rng):
    for w in (Window(2, 10.0, "torus"), Window(2, 10.0, "plain"), Window(1, 7.0, "torus")):
        x = rng.uniform(0, w.L, (300, w.d))
        i, j, dist = CellGrid(w, x, 1.3).pairs()
        got = {(int(a), int(b)) for a, b in zip(i, j)}
        want = {(a, b) for a in range(300) for b in range(a + 1, 300) if w.distance(x[a], x[b]) <= 1.3}
        assert got == want


def test_check_distinct():
    check_distinct(np.array([1.0, 2.0]))
    with pytest.raises(NondistinctDuelTimesError):
        check_distinct(np.array([1.0, 2.0, 1.0]))


def test_point_record_invariants():
    with pytest.raises(ValueError):
        PointRecord(PointId(Namespace.RAIN, 0), (0.0,), 1.0, 0.5, PointId(Namespace.RAIN, 1))
    with pytest.raises(ValueError):
        PointRecord(PointId(Namespace.RAIN, 0), (0.0,), 1.0, 2.0, None)


def test_snapshot_csv_roundtrip(tmp_path, window):
    pts = sample_rain(window, 0.2, 0.0, 1.0, 2)
    n = len(pts)
    death = np.where(np.arange(n) % 2 == 0, np.inf, 1.5)
    kns = np.zeros(n, int)
    kidx = np.zeros(n, int)
    write_snapshot_csv(tmp_path / "s.csv", pts, death, kns, kidx)
    back, d2, kn2, ki2 = read_snapshot_csv(tmp_path / "s.csv")
    np.testing.assert_array_equal(back.x, pts.x)
    np.testing.assert_array_equal(back.birth, pts.birth)
    np.testing.assert_array_equal(d2, death)
    assert np.all(kn2[np.isinf(death)] == -1)
