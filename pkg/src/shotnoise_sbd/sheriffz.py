"""Coupled resolution of the empty-start and augmented-start processes.

Both processes are driven by the same duel oracle.  A zombie is alive in
the augmented process but already dead in the empty one; an antizombie is
the reverse.  Specials descend from one augmentation point, their ancestor.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import sheriff
from ._backend import get_kernels
from ._pykernels import (
    ANTIZOMBIE,
    BROKEN_TWIN,
    BUDGET_EXCEEDED,
    EV_ANTIZOMBIE_DIES,
    EV_BECOMES_ANTIZOMBIE,
    EV_BECOMES_ZOMBIE,
    EV_KILL,
    EV_NOOP,
    EV_ZOMBIE_DIES,
    REGULAR,
    ZOMBIE,
)
from .domain import Namespace, PairOracle, PairTable, PointId, PointSet, Window, check_distinct, id_label

EVENT_NAMES = {
    EV_KILL: "kill",
    EV_ZOMBIE_DIES: "zombie_dies",
    EV_BECOMES_ANTIZOMBIE: "becomes_antizombie",
    EV_ANTIZOMBIE_DIES: "antizombie_dies",
    EV_BECOMES_ZOMBIE: "becomes_zombie",
    EV_NOOP: "noop",
}
KIND_NAMES = {REGULAR: "regular", ZOMBIE: "zombie", ANTIZOMBIE: "antizombie"}


@dataclass
class CoupledOutcome:
    """Per-point death times in both processes plus the special episodes.

    ``e``: death in the empty-start process (``t0`` for augmentation points,
    which never live there); ``e_aug``: death in the augmented process.
    ``kind`` is the special kind a point took, if any; it is special on
    ``[special_start, special_end)``.  ``family`` indexes the ancestor.
    Event arrays are in resolution order; ``event_a`` is the victim or the
    converted point and ``event_b`` the killer or converter.
    """

    points: PointSet
    is_aug: np.ndarray
    e: np.ndarray
    e_aug: np.ndarray
    killer: np.ndarray
    killer_aug: np.ndarray
    kind: np.ndarray
    family: np.ndarray
    special_start: np.ndarray
    special_end: np.ndarray
    event_time: np.ndarray
    event_code: np.ndarray
    event_a: np.ndarray
    event_b: np.ndarray
    t0: float
    t1: float
    investigation_steps: int = 0
    max_stack_depth: int = 0
    _ids: list = field(default=None, repr=False)

    def ids(self) -> list[PointId]:
        if self._ids is None:
            self._ids = self.points.ids()
        return self._ids

    # -- views at a time -------------------------------------------------
    def empty_mask(self, t: float) -> np.ndarray:
        """Alive at t in the empty-start process."""
        return ~self.is_aug & (self.points.birth <= t) & (t < self.e)

    def augmented_mask(self, t: float) -> np.ndarray:
        return (self.points.birth <= t) & (t < self.e_aug)

    def marked_masks(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(regular, zombie, antizombie) membership at t, read off e and e'."""
        born = self.points.birth <= t
        regular = born & (t < np.minimum(self.e, self.e_aug))
        zombie = born & (self.e <= t) & (t < self.e_aug)
        anti = born & (self.e_aug <= t) & (t < self.e)
        return regular, zombie, anti

    def special_mask(self, t: float) -> np.ndarray:
        return (self.kind != REGULAR) & (self.special_start <= t) & (t < self.special_end)

    # -- episodes --------------------------------------------------------
    def episodes(self) -> list[tuple[int, str, float, float, int]]:
        """``(point, tag, start, end, ancestor)`` intervals; ancestor -1 for
        regular stretches.  Each point is special in at most one interval."""
        out = []
        for k in range(len(self.points)):
            b = float(self.points.birth[k])
            kd = int(self.kind[k])
            if kd == REGULAR:
                out.append((k, "regular", b, float(self.e[k]), -1))
                continue
            s0 = float(self.special_start[k])
            if s0 > b:
                out.append((k, "regular", b, s0, -1))
            out.append((k, KIND_NAMES[kd], s0, float(self.special_end[k]), int(self.family[k])))
        return out

    def write_episodes_csv(self, path: str | Path) -> None:
        ns, idx = self.points.namespace, self.points.index
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["point", "tag", "start", "end", "ancestor"])
            for k, tag, s, e, anc in self.episodes():
                w.writerow([id_label(ns[k], idx[k]), tag, repr(s), "" if math.isinf(e) else repr(e),
                            id_label(ns[anc], idx[anc]) if anc >= 0 else ""])

    def rosters(self, z: int, t: float) -> tuple[set[int], set[int]]:
        """(A_t(z), Z_t(z)) as index sets."""
        live = self.special_mask(t) & (self.family == z)
        anti = set(np.nonzero(live & (self.kind == ANTIZOMBIE))[0].tolist())
        zomb = set(np.nonzero(live & (self.kind == ZOMBIE))[0].tolist())
        return anti, zomb

    def events(self) -> list[tuple[float, str, int, int]]:
        return [(float(t), EVENT_NAMES[int(c)], int(a), int(b))
                for t, c, a, b in zip(self.event_time, self.event_code, self.event_a, self.event_b)]


def _coupled_core(points: PointSet, pairs: PairTable, t0: float, t1: float, ordering,
                  budget_factor: float, backend: str | None) -> CoupledOutcome:
    check_distinct(pairs.T)
    n = len(points)
    is_aug = points.namespace == int(Namespace.AUGMENTATION)
    stacks = sheriff.build_stacks(n, pairs, "double")
    order = sheriff.enumeration_order(n, ordering)
    budget = int(max(budget_factor * max(stacks.n_cards, 1), 1000))
    res = get_kernels(backend).resolve_coupled(
        stacks.start, stacks.end, stacks.owner, stacks.other, stacks.time, stacks.dies_owner,
        order, is_aug.astype(np.int8), float(t0), budget, stacks.n_cards + 1)
    if res["error"] == BUDGET_EXCEEDED:
        raise sheriff.InvestigationBudgetExceeded(
            f"more than {budget} investigation steps for {stacks.n_cards} cards")
    if res["error"] == BROKEN_TWIN:
        raise sheriff.StackInvariantError("duel card twin missing from the opponent's stack")
    return CoupledOutcome(
        points, is_aug, res["e"], res["e_aug"], res["killer"], res["killer_aug"], res["status"],
        res["family"], res["special_start"], res["special_end"], res["event_time"],
        res["event_code"], res["event_a"], res["event_b"], float(t0), float(t1),
        res["steps"], res["max_depth"])


def resolve_coupled(z0, rain, oracle: PairOracle, t1: float, ordering="canonical", *,
                    t0: float = 0.0, budget_factor: float = sheriff.DEFAULT_BUDGET_FACTOR,
                    backend: str | None = None) -> CoupledOutcome:
    """Jointly resolve the rain alone and the rain augmented by ``z0``."""
    d = oracle.window.d
    z0 = PointSet.coerce(z0, d)
    rain = PointSet.coerce(rain, d)
    if len(z0):
        if np.any(z0.namespace != int(Namespace.AUGMENTATION)):
            raise ValueError("augmentation points must use the augmentation namespace")
        if np.any(z0.birth != t0):
            raise ValueError("augmentation points must be born at t0")
    if len(rain) and np.any(rain.namespace != int(Namespace.RAIN)):
        raise ValueError("rain points must use the rain namespace")
    pts = PointSet.concat(rain, z0) if len(z0) else rain
    if len(pts) == 0:
        pts = PointSet.empty(d)
    pts = pts.canonical()
    if len(pts) and np.any(pts.birth >= t1):
        raise ValueError("all birth times must be below the horizon")
    return _coupled_core(pts, oracle.pairs(pts, t_max=t1), t0, t1, ordering, budget_factor,
                         backend)


def resolve_coupled_pairs(points: PointSet, pairs: PairTable, t1: float, ordering="canonical",
                          *, t0: float = 0.0, budget_factor: float = sheriff.DEFAULT_BUDGET_FACTOR,
                          backend: str | None = None) -> CoupledOutcome:
    """Coupled resolution of an explicit duel table over canonically ordered
    points; augmentation points are those in the augmentation namespace."""
    keep = pairs.T < t1
    pairs = PairTable(pairs.i[keep], pairs.j[keep], pairs.T[keep], pairs.dies_i[keep])
    return _coupled_core(points, pairs, t0, t1, ordering, budget_factor, backend)


# -- audits -----------------------------------------------------------------

def consistency_check(coupled: CoupledOutcome, oracle: PairOracle, rain, z0,
                      variant: sheriff.Variant = "single", backend: str | None = None) -> list:
    """Compare against two plain Sheriff runs on the same oracle.

    Returns ``(point id, field, coupled value, plain value)`` mismatches;
    empty when e = d on the rain and e' = d' everywhere, killers included.
    """
    t0, t1 = coupled.t0, coupled.t1
    plain = sheriff.resolve(rain, oracle, t1, variant, t0=t0, backend=backend)
    aug = sheriff.resolve_with_initial(z0, rain, oracle, t1, variant, t0=t0, backend=backend)
    ids = coupled.ids()
    keys = coupled.points.keys
    out = []

    def compare(ref: sheriff.ResolutionOutcome, mine_t, mine_k, label, sel):
        pos = {int(k): i for i, k in enumerate(ref.points.keys)}
        if len(pos) != int(sel.sum()):
            out.append((None, f"{label}:size", int(sel.sum()), len(pos)))
        for c in np.nonzero(sel)[0]:
            r = pos.get(int(keys[c]))
            if r is None:
                out.append((ids[c], f"{label}:missing", None, None))
                continue
            if mine_t[c] != ref.death[r]:
                out.append((ids[c], f"{label}:death", float(mine_t[c]), float(ref.death[r])))
            mk = int(keys[mine_k[c]]) if mine_k[c] >= 0 else None
            rk = int(ref.points.keys[ref.killer[r]]) if ref.killer[r] >= 0 else None
            if mk != rk:
                out.append((ids[c], f"{label}:killer", mk, rk))

    compare(plain, coupled.e, coupled.killer, "empty", ~coupled.is_aug)
    compare(aug, coupled.e_aug, coupled.killer_aug, "augmented", np.ones(len(ids), bool))
    return out


def audit_azconds(c: CoupledOutcome) -> list[str]:
    """Exhaustive check of the episode bookkeeping against the death times.

    * regular points have e = e'; zombies have e < e' and are special on
      exactly [e, e'); antizombies have e' < e and are special on [e', e);
    * every family traces back through conversion events to an augmentation
      point, and each point is converted at most once;
    * every event is consistent with the kinds of both parties at its time,
      in particular zombies and antizombies never kill each other.
    """
    bad: list[str] = []
    ids = c.ids()
    n = len(ids)
    e, e2 = c.e, c.e_aug
    for k in range(n):
        kd = int(c.kind[k])
        tag = str(ids[k])
        if c.is_aug[k]:
            if kd != ZOMBIE or c.family[k] != k or c.special_start[k] != c.t0 or e[k] != c.t0:
                bad.append(f"{tag}: augmentation point not a zombie from t0")
        if kd == REGULAR:
            if e[k] != e2[k]:
                bad.append(f"{tag}: regular with e != e'")
            if c.family[k] != -1:
                bad.append(f"{tag}: regular point in a family")
            continue
        if kd == ZOMBIE and not (e[k] < e2[k] and c.special_start[k] == e[k]
                                 and c.special_end[k] == e2[k]):
            bad.append(f"{tag}: zombie interval is not [e, e')")
        if kd == ANTIZOMBIE and not (e2[k] < e[k] and c.special_start[k] == e2[k]
                                     and c.special_end[k] == e[k]):
            bad.append(f"{tag}: antizombie interval is not [e', e)")
        f = int(c.family[k])
        if not (0 <= f < n and c.is_aug[f]):
            bad.append(f"{tag}: ancestor is not an augmentation point")

    def kind_at(x, t, strict_before=False):
        """Kind of x just before t (the state in which the duel is met)."""
        if c.points.birth[x] > t:
            return None
        if c.kind[x] != REGULAR and c.special_start[x] < t and t <= c.special_end[x]:
            return int(c.kind[x])
        if c.is_aug[x] and t <= c.special_end[x]:
            return ZOMBIE
        if t <= min(e[x], e2[x]):
            return REGULAR
        return None

    converted = np.zeros(n, dtype=np.int64)
    for T, code, a, b in zip(c.event_time, c.event_code, c.event_a, c.event_b):
        T = float(T)
        ka, kb = kind_at(a, T), kind_at(b, T)
        where = f"t={T!r} {EVENT_NAMES[int(code)]} {ids[a]} {ids[b]}"
        if code == EV_KILL:
            ok = ka == REGULAR and kb == REGULAR and e[a] == T and e2[a] == T \
                and e[b] > T and e2[b] > T
        elif code == EV_ZOMBIE_DIES:
            ok = ka == ZOMBIE and kb in (REGULAR, ZOMBIE) and e2[a] == T and e2[b] > T
        elif code == EV_ANTIZOMBIE_DIES:
            ok = ka == ANTIZOMBIE and kb in (REGULAR, ANTIZOMBIE) and e[a] == T and e[b] > T
        elif code == EV_BECOMES_ANTIZOMBIE:
            ok = kb == ZOMBIE and c.kind[a] == ANTIZOMBIE and c.special_start[a] == T \
                and e2[a] == T and c.family[a] == c.family[b] and e2[b] > T
            converted[a] += 1
        elif code == EV_BECOMES_ZOMBIE:
            ok = kb == ANTIZOMBIE and c.kind[a] == ZOMBIE and c.special_start[a] == T \
                and e[a] == T and c.family[a] == c.family[b] and e[b] > T
            converted[a] += 1
        elif code == EV_NOOP:
            ok = {ka, kb} == {ZOMBIE, ANTIZOMBIE}
        else:
            ok = False
        if not ok:
            bad.append(f"inconsistent event {where}")
    special_rain = (c.kind != REGULAR) & ~c.is_aug
    if np.any(converted[special_rain] != 1) or np.any(converted[~special_rain] != 0):
        bad.append("conversion count differs from one per special rain point")
    # killers of specials are never specials of the opposite kind
    for k in np.nonzero(c.kind != REGULAR)[0]:
        for kill_arr, t_arr in ((c.killer, e), (c.killer_aug, e2)):
            q = kill_arr[k]
            if q >= 0 and math.isfinite(t_arr[k]):
                kq = kind_at(q, float(t_arr[k]))
                if kq is not None and kq != REGULAR and kq != c.kind[k] and \
                        c.special_start[k] < t_arr[k]:
                    bad.append(f"{ids[k]}: killed by a special of the opposite kind")
    return bad


def family_stats(c: CoupledOutcome) -> dict[int, dict]:
    """Per ancestor: family size |O(z)|, zombie/antizombie counts and the
    extinction time (last instant any member is special; inf if a member
    is still special at the horizon)."""
    out = {}
    for z in np.nonzero(c.is_aug)[0]:
        members = np.nonzero(c.family == z)[0]
        ends = c.special_end[members]
        out[int(z)] = {
            "size": int(len(members)),
            "zombies": int(np.sum(c.kind[members] == ZOMBIE)),
            "antizombies": int(np.sum(c.kind[members] == ANTIZOMBIE)),
            "extinction_time": float(np.max(ends)) if len(ends) else c.t0,
        }
    return out


def specials_counts(c: CoupledOutcome, grid) -> np.ndarray:
    """Number of specials alive at each grid time."""
    grid = np.asarray(grid, float)
    sel = c.kind != REGULAR
    s0 = np.sort(c.special_start[sel])
    s1 = np.sort(c.special_end[sel])
    return np.searchsorted(s0, grid, side="right") - np.searchsorted(s1, grid, side="right")


def specials_intensity_series(outcomes: list[CoupledOutcome], window: Window, grid):
    """Replicate-averaged intensity of specials on the grid."""
    from .stats import EstimateSeries

    rows = np.array([specials_counts(c, grid) / window.volume for c in outcomes], dtype=float)
    return EstimateSeries.from_samples(grid, rows)


def in_box(x: np.ndarray, lo, hi) -> np.ndarray:
    return np.all((x >= lo) & (x < hi), axis=1)


def coupling_time(c: CoupledOutcome, lo, hi) -> tuple[float, bool]:
    """Last time a special lives in the box ``[lo, hi)``; ``t0`` if none
    ever does.  The flag is True when a special in the box outlives the
    horizon, in which case the value is censored at ``t1``."""
    sel = (c.kind != REGULAR) & in_box(c.points.x, lo, hi)
    if not np.any(sel):
        return c.t0, False
    ends = c.special_end[sel]
    censored = bool(np.any(~np.isfinite(ends)))
    return float(min(np.max(ends), c.t1)), censored


def snapshots_agree_after(c: CoupledOutcome, lo, hi, t: float) -> bool:
    """Empty-side and augmented-side configurations coincide inside the box at t."""
    box = in_box(c.points.x, lo, hi)
    return bool(np.array_equal(c.empty_mask(t) & box, c.augmented_mask(t) & box))


__all__ = [
    "CoupledOutcome",
    "audit_azconds",
    "consistency_check",
    "coupling_time",
    "family_stats",
    "resolve_coupled",
    "resolve_coupled_pairs",
    "snapshots_agree_after",
    "specials_counts",
    "specials_intensity_series",
]
