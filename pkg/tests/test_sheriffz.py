import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shotnoise_sbd import sheriff, sheriffz
from shotnoise_sbd._pykernels import (ANTIZOMBIE, EV_ANTIZOMBIE_DIES, EV_BECOMES_ANTIZOMBIE, EV_BECOMES_ZOMBIE,
                                      EV_NOOP, EV_ZOMBIE_DIES, REGULAR, ZOMBIE)
from shotnoise_sbd.domain import PairOracle, PairTable, PointSet, Window, sample_poisson_initial, sample_rain
from shotnoise_sbd.response import ResponseFunction

INF = np.inf


def table(rows):
    i, j, T, d = zip(*rows)
    return PairTable(np.array(i, np.int64), np.array(j, np.int64), np.array(T, float), np.array(d, np.int8))


def coupled_instance(seed, horizon=6.0, beta=0.5642, L=10.0, topology="torus"):
    w = Window(2, L, topology)
    rf = ResponseFunction.indicator(1.0, 1.0, 2)
    rain = sample_rain(w, 1.0, 0.0, horizon, seed)
    z0 = sample_poisson_initial(w, beta, 0.0, seed + 7)
    oracle = PairOracle(seed + 1, rf, w)
    return z0, rain, oracle


def test_hand_resolved_four_point_scenario():
    # rain a=0, b=1, c=2 and one augmentation point z=3
    pts = PointSet([0, 0, 0, 1], [0, 1, 2, 0], np.zeros((4, 2)), [0.1, 0.2, 0.3, 0.0])
    pairs = table([
        (0, 3, 1.0, 1),  # z kills a: a lives only without z -> antizombie
        (0, 1, 2.0, 0),  # antizombie a kills b: b lives only with z -> zombie
        (1, 2, 3.0, 0),  # zombie b kills c -> antizombie
        (0, 2, 4.0, 0),  # antizombie a kills antizombie c in the empty process
        (1, 3, 5.0, 0),  # zombie b kills zombie z in the augmented process
    ])
    for order in ("canonical", ("shuffled", 1), ("shuffled", 2)):
        c = sheriffz.resolve_coupled_pairs(pts, pairs, 10.0, order)
        np.testing.assert_array_equal(c.e, [INF, 2.0, 4.0, 0.0])
        np.testing.assert_array_equal(c.e_aug, [1.0, INF, 3.0, 5.0])
        np.testing.assert_array_equal(c.kind, [ANTIZOMBIE, ZOMBIE, ANTIZOMBIE, ZOMBIE])
        np.testing.assert_array_equal(c.family, [3, 3, 3, 3])
        np.testing.assert_array_equal(c.special_start, [1.0, 2.0, 3.0, 0.0])
        np.testing.assert_array_equal(c.special_end, [INF, INF, 4.0, 5.0])
        assert c.event_code.tolist() == [EV_BECOMES_ANTIZOMBIE, EV_BECOMES_ZOMBIE, EV_BECOMES_ANTIZOMBIE,
                                         EV_ANTIZOMBIE_DIES, EV_ZOMBIE_DIES]
        assert sheriffz.audit_azconds(c) == []
        anti, zomb = c.rosters(3, 3.5)
        assert anti == {0, 2} and zomb == {1, 3}


def test_zombie_meets_antizombie_is_noop():
    # rain a=0; augmentation z1=1, z2=2
    pts = PointSet([0, 1, 1], [0, 0, 1], np.zeros((3, 2)), [0.1, 0.0, 0.0])
    c = sheriffz.resolve_coupled_pairs(pts, table([(0, 1, 1.0, 1), (0, 2, 2.0, 1)]), 10.0)
    assert c.events()[-1][1] == "noop" and c.event_code[-1] == EV_NOOP
    np.testing.assert_array_equal(c.e_aug, [1.0, INF, INF])
    np.testing.assert_array_equal(c.family, [1, 1, 2])
    stats = sheriffz.family_stats(c)
    assert stats[1]["size"] == 2 and stats[2]["size"] == 1


def test_empty_augmentation_reduces_to_plain():
    _, rain, oracle = coupled_instance(4)
    c = sheriffz.resolve_coupled(PointSet.empty(2), rain, oracle, 6.0)
    np.testing.assert_array_equal(c.e, c.e_aug)
    assert np.all(c.kind == REGULAR)
    plain = sheriff.resolve(rain, oracle, 6.0, "double")
    np.testing.assert_array_equal(c.e, plain.death)
    assert sheriffz.consistency_check(c, oracle, rain, PointSet.empty(2)) == []


def test_isolated_augmentation_point_stays_zombie():
    w = Window(2, 10.0, "plain")
    rf = ResponseFunction.indicator(1.0, 1.0, 2)
    rain = sample_rain(w, 1.0, 0.0, 5.0, 3)
    rain = rain.take(np.all(rain.x > 3.0, axis=1))
    z0 = PointSet([1], [0], np.array([[0.5, 0.5]]), [0.0])
    c = sheriffz.resolve_coupled(z0, rain, PairOracle(2, rf, w), 5.0)
    z = int(np.nonzero(c.is_aug)[0][0])
    assert c.kind[z] == ZOMBIE and np.isinf(c.special_end[z])
    assert np.all(c.kind[~c.is_aug] == REGULAR)
    assert sheriffz.family_stats(c)[z]["size"] == 1
    # far from the centre: the central box never sees a special
    lo, hi = w.central_box(2.5)
    assert sheriffz.coupling_time(c, lo, hi) == (0.0, False)


@given(seed=st.integers(0, 5000))
def test_consistency_audit_and_order_independence(seed):
    z0, rain, oracle = coupled_instance(seed, horizon=4.0)
    c = sheriffz.resolve_coupled(z0, rain, oracle, 4.0)
    assert sheriffz.consistency_check(c, oracle, rain, z0) == []
    assert sheriffz.audit_azconds(c) == []
    d = sheriffz.resolve_coupled(z0, rain, oracle, 4.0, ("shuffled", seed))
    for name in ("e", "e_aug", "kind", "family", "special_start", "special_end", "killer", "killer_aug"):
        assert getattr(c, name).tobytes() == getattr(d, name).tobytes()


def test_families_are_disjoint_and_contain_ancestor():
    for seed in range(20):
        z0, rain, oracle = coupled_instance(seed, horizon=5.0)
        c = sheriffz.resolve_coupled(z0, rain, oracle, 5.0)
        special = c.kind != REGULAR
        assert np.all(c.is_aug[c.family[special]])
        for z in np.nonzero(c.is_aug)[0]:
            assert c.family[z] == z


def test_specials_series_starts_at_initial_intensity():
    z0, rain, oracle = coupled_instance(11)
    c = sheriffz.resolve_coupled(z0, rain, oracle, 6.0)
    w = oracle.window
    s = sheriffz.specials_intensity_series([c], w, [0.0, 1.0])
    assert s.mean[0] == len(z0) / w.volume


def test_coupling_time_means_agreement():
    for seed in range(10):
        z0, rain, oracle = coupled_instance(seed, horizon=12.0)
        c = sheriffz.resolve_coupled(z0, rain, oracle, 12.0)
        lo, hi = oracle.window.central_box(2.5)
        tau, censored = sheriffz.coupling_time(c, lo, hi)
        if not censored:
            for t in np.linspace(tau, 12.0, 7):
                assert sheriffz.snapshots_agree_after(c, lo, hi, t)


def test_marked_masks_partition_alive_points():
    z0, rain, oracle = coupled_instance(21)
    c = sheriffz.resolve_coupled(z0, rain, oracle, 6.0)
    for t in (0.0, 1.0, 3.0):
        R, Z, A = c.marked_masks(t)
        assert not np.any(R & Z) and not np.any(R & A) and not np.any(Z & A)
        np.testing.assert_array_equal(R | Z, c.augmented_mask(t))
        np.testing.assert_array_equal(R | A, c.empty_mask(t))


def test_episodes_csv(tmp_path):
    z0, rain, oracle = coupled_instance(5, horizon=3.0)
    c = sheriffz.resolve_coupled(z0, rain, oracle, 3.0)
    c.write_episodes_csv(tmp_path / "ep.csv")
    lines = (tmp_path / "ep.csv").read_text().splitlines()
    assert lines[0] == "point,tag,start,end,ancestor"
    tags = {l.split(",")[1] for l in lines[1:]}
    assert tags <= {"regular", "zombie", "antizombie"}
    assert "zombie" in tags


def test_rejects_bad_namespaces():
    z0, rain, oracle = coupled_instance(1, horizon=2.0)
    with pytest.raises(ValueError):
        sheriffz.resolve_coupled(rain, rain, oracle, 2.0)
