"""Exact pathwise construction of the death process on a finite horizon.

Every point owns a stack of cards sorted by time; an investigation stack
chases the earliest pending duel of each would-be killer until each point
either holds a death certificate or survives to the horizon.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from . import _rng
from ._backend import get_kernels
from ._pykernels import BROKEN_TWIN, BUDGET_EXCEEDED
from .domain import (
    PairOracle,
    PairTable,
    PointId,
    PointRecord,
    PointSet,
    check_distinct,
    id_label,
    write_snapshot_csv,
)

# investigation steps allowed per card before giving up
DEFAULT_BUDGET_FACTOR = 1000


class InvestigationBudgetExceeded(RuntimeError):
    """The investigation loop exceeded its step cap."""


class StackInvariantError(RuntimeError):
    """A duel card's twin was not where the algorithm requires it."""


Variant = Literal["single", "double"]


@dataclass(frozen=True)
class Stacks:
    """CSR card stacks: cards of point ``p`` are ``[start[p], end[p])``."""

    start: np.ndarray
    end: np.ndarray
    owner: np.ndarray
    other: np.ndarray
    time: np.ndarray
    dies_owner: np.ndarray

    @property
    def n_cards(self) -> int:
        return len(self.time)


def build_stacks(n: int, pairs: PairTable, variant: Variant) -> Stacks:
    """Single: one death sentence per duel, in the victim's stack.
    Double: one card per duel in each duellist's stack."""
    if variant == "single":
        owner = np.where(pairs.dies_i == 1, pairs.i, pairs.j)
        other = np.where(pairs.dies_i == 1, pairs.j, pairs.i)
        time = pairs.T
        dies = np.ones(len(time), dtype=np.int8)
    elif variant == "double":
        owner = np.concatenate([pairs.i, pairs.j])
        other = np.concatenate([pairs.j, pairs.i])
        time = np.concatenate([pairs.T, pairs.T])
        dies = np.concatenate([pairs.dies_i, 1 - pairs.dies_i]).astype(np.int8)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    order = np.lexsort((time, owner))
    owner = owner[order].astype(np.int64)
    counts = np.bincount(owner, minlength=n)
    end = np.cumsum(counts).astype(np.int64)
    start = (end - counts).astype(np.int64)
    return Stacks(start, end, owner, other[order].astype(np.int64), time[order].astype(np.float64),
                  dies[order])


def enumeration_order(n: int, ordering="canonical") -> np.ndarray:
    """Sheriff's predefined point ordering: ``"canonical"`` (by id) or
    ``("shuffled", seed)``."""
    if ordering == "canonical":
        return np.arange(n, dtype=np.int64)
    if not (isinstance(ordering, tuple) and len(ordering) == 2 and ordering[0] == "shuffled"):
        raise ValueError(f"unknown ordering {ordering!r}")
    return _rng.substream(ordering[1], _rng.TAG_ORDER).permutation(n).astype(np.int64)


@dataclass
class ResolutionOutcome:
    """Death time and killer of every point over ``(t0, t1)``.

    ``points`` is in canonical id order; ``killer`` holds indices into it
    (-1 for points alive at the horizon).
    """

    points: PointSet
    death: np.ndarray
    killer: np.ndarray
    t0: float
    t1: float
    investigation_steps: int = 0
    max_stack_depth: int = 0
    variant: str = "single"
    n_cards: int = 0
    _id_cache: dict = field(default=None, repr=False)

    @property
    def alive_at_horizon(self) -> set[PointId]:
        ids = self.points.ids()
        return {ids[k] for k in np.nonzero(~np.isfinite(self.death))[0]}

    @property
    def records(self) -> list[PointRecord]:
        kns, kidx = self.killer_ids()
        return self.points.to_records(self.death, kns, kidx)

    def killer_ids(self) -> tuple[np.ndarray, np.ndarray]:
        k = self.killer
        safe = np.where(k >= 0, k, 0)
        kns = np.where(k >= 0, self.points.namespace[safe], -1)
        kidx = np.where(k >= 0, self.points.index[safe], -1)
        return kns, kidx

    def index_of(self, pid: PointId) -> int:
        if self._id_cache is None:
            self._id_cache = {int(k): i for i, k in enumerate(self.points.keys)}
        return self._id_cache[pid.key]

    def death_map(self) -> dict[PointId, tuple[float, PointId | None]]:
        """``id -> (death time, killer id)``, the object compared across orderings."""
        ids = self.points.ids()
        return {ids[k]: (float(self.death[k]), ids[self.killer[k]] if self.killer[k] >= 0 else None)
                for k in range(len(ids))}

    def alive_mask(self, t: float) -> np.ndarray:
        return (self.points.birth <= t) & (t < self.death)

    def snapshot(self, t: float) -> set[PointId]:
        return snapshot(self, t)

    def write_csv(self, path: str | Path) -> None:
        kns, kidx = self.killer_ids()
        write_snapshot_csv(path, self.points, self.death, kns, kidx)

    def write_deaths_ledger(self, path: str | Path) -> None:
        """Deaths ledger: victim,killer,time, one row per realised execution, by time."""
        kns, kidx = self.killer_ids()
        dead = np.nonzero(np.isfinite(self.death))[0]
        dead = dead[np.argsort(self.death[dead], kind="stable")]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["victim", "killer", "time"])
            for k in dead:
                w.writerow([id_label(self.points.namespace[k], self.points.index[k]),
                            id_label(kns[k], kidx[k]), repr(float(self.death[k]))])


@dataclass
class PreparedInstance:
    """Card stacks of one instance, built once and reusable for any
    enumeration order or backend."""

    points: PointSet
    stacks: Stacks
    variant: str
    t0: float
    t1: float

    def run(self, ordering="canonical", *, budget_factor: float = DEFAULT_BUDGET_FACTOR,
            backend: str | None = None) -> ResolutionOutcome:
        st = self.stacks
        n = len(self.points)
        if n == 0:
            return ResolutionOutcome(self.points, np.zeros(0), np.zeros(0, dtype=np.int64),
                                     self.t0, self.t1, variant=self.variant)
        order = enumeration_order(n, ordering)
        budget = int(max(budget_factor * max(st.n_cards, 1), 1000))
        k = get_kernels(backend)
        if self.variant == "single":
            death, killer, steps, depth, status = k.resolve_single(
                st.start, st.end, st.owner, st.other, st.time, order, budget)
        else:
            death, killer, steps, depth, status = k.resolve_double(
                st.start, st.end, st.owner, st.other, st.time, st.dies_owner, order, budget)
        if status == BUDGET_EXCEEDED:
            raise InvestigationBudgetExceeded(
                f"more than {budget} investigation steps for {st.n_cards} cards")
        if status == BROKEN_TWIN:
            raise StackInvariantError("duel card twin missing from the opponent's stack")
        return ResolutionOutcome(self.points, death, killer, self.t0, self.t1, steps, depth,
                                 self.variant, st.n_cards)


def prepare(points, oracle: PairOracle, t1: float, variant: Variant = "single", *,
            t0: float = 0.0) -> PreparedInstance:
    """Canonicalise the points, draw every duel below ``t1`` and build the stacks."""
    pts = PointSet.coerce(points, oracle.window.d).canonical()
    if len(pts) == 0:
        pts = PointSet.empty(oracle.window.d)
    if len(pts) and np.any(pts.birth >= t1):
        raise ValueError("all birth times must be below the horizon")
    return prepare_pairs(pts, oracle.pairs(pts, t_max=t1), t1, variant, t0=t0)


def prepare_pairs(points: PointSet, pairs: PairTable, t1: float, variant: Variant = "single", *,
                  t0: float = 0.0) -> PreparedInstance:
    """Stacks for an explicit duel table; ``pairs`` indexes ``points``, which
    must be in canonical id order.  Duels at or beyond ``t1`` are dropped."""
    if len(points) > 1 and np.any(np.diff(points.keys.astype(np.int64)) <= 0):
        raise ValueError("points must be in canonical id order")
    keep = pairs.T < t1
    pairs = PairTable(pairs.i[keep], pairs.j[keep], pairs.T[keep], pairs.dies_i[keep])
    check_distinct(pairs.T)
    return PreparedInstance(points, build_stacks(len(points), pairs, variant), variant, t0, t1)


def resolve(points, oracle: PairOracle, t1: float, variant: Variant = "single",
            ordering="canonical", *, t0: float = 0.0,
            budget_factor: float = DEFAULT_BUDGET_FACTOR, backend: str | None = None
            ) -> ResolutionOutcome:
    """Resolve every duel with time below ``t1`` among ``points``.

    ``points`` may be a :class:`PointSet` or a list of :class:`PointRecord`;
    birth times must lie below ``t1``.  Points whose every remaining card is
    at or beyond ``t1`` are alive at the horizon (death = inf).
    """
    return prepare(points, oracle, t1, variant, t0=t0).run(
        ordering, budget_factor=budget_factor, backend=backend)


def resolve_pairs(points: PointSet, pairs: PairTable, t1: float, variant: Variant = "single",
                  ordering="canonical", *, t0: float = 0.0,
                  budget_factor: float = DEFAULT_BUDGET_FACTOR, backend: str | None = None
                  ) -> ResolutionOutcome:
    """Resolve an explicit duel table (see :func:`prepare_pairs`)."""
    return prepare_pairs(points, pairs, t1, variant, t0=t0).run(
        ordering, budget_factor=budget_factor, backend=backend)


def resolve_with_initial(initial, rain, oracle: PairOracle, t1: float, variant: Variant = "single",
                         ordering="canonical", *, t0: float = 0.0, **kw) -> ResolutionOutcome:
    """Resolve with an initial configuration born at ``t0`` plus the rain."""
    d = oracle.window.d
    init = PointSet.coerce(initial, d)
    rain = PointSet.coerce(rain, d)
    if len(init):
        if np.any(init.birth != t0):
            raise ValueError("initial points must be born at t0")
        if len(rain) and set(np.unique(init.namespace)) & set(np.unique(rain.namespace)):
            raise ValueError("initial and rain id namespaces must be disjoint")
    return resolve(PointSet.concat(init, rain) if len(init) else rain, oracle, t1, variant,
                   ordering, t0=t0, **kw)


def snapshot(outcome: ResolutionOutcome, t: float) -> set[PointId]:
    """Ids alive at time t: ``b_p <= t < d_p``."""
    if not outcome.t0 <= t <= outcome.t1:
        raise ValueError(f"t={t} outside [{outcome.t0}, {outcome.t1}]")
    ids = outcome.points.ids()
    return {ids[k] for k in np.nonzero(outcome.alive_mask(t))[0]}


def extend(outcome: ResolutionOutcome, oracle: PairOracle, t2: float, new_rain=None,
           variant: Variant | None = None, ordering="canonical", **kw) -> ResolutionOutcome:
    """Continue a resolved run from its horizon ``t1`` to ``t2``.

    Survivors keep their birth times, so their pending duels are re-drawn
    identically from the oracle; ``new_rain`` holds the arrivals in
    ``[t1, t2)``.  The result equals a one-pass resolve over ``(t0, t2)``.
    """
    if t2 < outcome.t1:
        raise ValueError("extension must move the horizon forward")
    variant = variant or outcome.variant
    d = oracle.window.d
    new_rain = PointSet.coerce(new_rain, d)
    if t2 == outcome.t1:
        if len(new_rain):
            raise ValueError("no room for new arrivals when t2 == t1")
        return outcome
    if len(new_rain) and (np.any(new_rain.birth < outcome.t1) or np.any(new_rain.birth >= t2)):
        raise ValueError("new arrivals must be born in [t1, t2)")
    alive = ~np.isfinite(outcome.death)
    active = PointSet.concat(outcome.points.take(alive), new_rain) if len(new_rain) else \
        outcome.points.take(alive)
    sub = resolve(active, oracle, t2, variant, ordering, t0=outcome.t0, **kw)
    pts = PointSet.concat(outcome.points, new_rain) if len(new_rain) else outcome.points
    order = np.argsort(pts.keys, kind="stable")
    pts = pts.take(order)
    death = np.concatenate([outcome.death, np.full(len(new_rain), np.inf)])[order]
    # killers are stored as ids while the index space is rebuilt
    old_k = np.where(outcome.killer >= 0, outcome.points.keys[np.maximum(outcome.killer, 0)],
                     np.uint64(0))
    has_k = np.concatenate([outcome.killer >= 0, np.zeros(len(new_rain), bool)])[order]
    kkeys = np.concatenate([old_k, np.zeros(len(new_rain), np.uint64)])[order]
    pos = {int(k): i for i, k in enumerate(pts.keys)}
    sub_keys = sub.points.keys
    for local, key in enumerate(sub_keys):
        i = pos[int(key)]
        death[i] = sub.death[local]
        if sub.killer[local] >= 0:
            has_k[i] = True
            kkeys[i] = sub_keys[sub.killer[local]]
    killer = np.array([pos[int(k)] if h else -1 for k, h in zip(kkeys, has_k)], dtype=np.int64)
    return ResolutionOutcome(pts, death, killer, outcome.t0, t2,
                             outcome.investigation_steps + sub.investigation_steps,
                             max(outcome.max_stack_depth, sub.max_stack_depth), variant,
                             outcome.n_cards + sub.n_cards)


# -- independent references -------------------------------------------------

def fixed_point_iteration(points: PointSet, pairs: PairTable, max_iter: int | None = None):
    """Iterate ``d_p = min{T_pq : I_pq = 1, d_q > T_pq}`` from ``d = inf``.

    Brute force over the pair list; returns ``(death, killer, iterations)``
    once two successive iterates agree exactly.
    """
    n = len(points)
    victims = np.where(pairs.dies_i == 1, pairs.i, pairs.j)
    killers = np.where(pairs.dies_i == 1, pairs.j, pairs.i)
    T = pairs.T
    death = np.full(n, np.inf)
    killer = np.full(n, -1, dtype=np.int64)
    max_iter = max_iter or (n + 2)
    for it in range(1, max_iter + 1):
        ok = death[killers] > T
        new_death = np.full(n, np.inf)
        np.minimum.at(new_death, victims[ok], T[ok])
        new_killer = np.full(n, -1, dtype=np.int64)
        hit = ok & (T == new_death[victims])
        new_killer[victims[hit]] = killers[hit]
        if np.array_equal(new_death, death) and np.array_equal(new_killer, killer):
            return death, killer, it
        death, killer = new_death, new_killer
    raise RuntimeError("fixed-point iteration did not converge")


def chronological_sweep(n: int, pairs: PairTable):
    """Process duels in increasing time; a duel is realised iff both are alive."""
    order = np.argsort(pairs.T, kind="stable")
    death = np.full(n, np.inf)
    killer = np.full(n, -1, dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    for k in order:
        a, b = pairs.i[k], pairs.j[k]
        if alive[a] and alive[b]:
            v, w = (a, b) if pairs.dies_i[k] else (b, a)
            alive[v] = False
            death[v] = pairs.T[k]
            killer[v] = w
    return death, killer


def equation_residuals(outcome: ResolutionOutcome, oracle: PairOracle) -> int:
    """Number of points whose death time differs from one evaluation of
    ``inf{T_pq : I_pq = 1, d_q >= T_pq, T_pq < t1}`` on the outcome itself."""
    pairs = oracle.pairs(outcome.points, t_max=outcome.t1)
    victims = np.where(pairs.dies_i == 1, pairs.i, pairs.j)
    killers = np.where(pairs.dies_i == 1, pairs.j, pairs.i)
    ok = outcome.death[killers] >= pairs.T
    recomputed = np.full(len(outcome.points), np.inf)
    np.minimum.at(recomputed, victims[ok], pairs.T[ok])
    return int(np.sum(recomputed != outcome.death))


def killer_liveness_violations(outcome: ResolutionOutcome, oracle: PairOracle) -> list[int]:
    """Indices whose certificate fails ``d_killer > d_victim`` and ``I = 1``."""
    bad = []
    recs = outcome.points
    ids = recs.keys
    for k in np.nonzero(np.isfinite(outcome.death))[0]:
        q = outcome.killer[k]
        if q < 0 or not outcome.death[q] > outcome.death[k]:
            bad.append(int(k))
            continue
        i_bit = oracle._dies_first(ids[k:k + 1], ids[q:q + 1])[0]
        if i_bit != 1:
            bad.append(int(k))
    return bad


def death_counts(outcome: ResolutionOutcome, grid) -> np.ndarray:
    """Number of alive points at each grid time (vectorised snapshot sizes)."""
    grid = np.asarray(grid, float)
    born = np.searchsorted(np.sort(outcome.points.birth), grid, side="right")
    dead = np.searchsorted(np.sort(outcome.death[np.isfinite(outcome.death)]), grid, side="right")
    return born - dead


__all__ = [
    "InvestigationBudgetExceeded",
    "PreparedInstance",
    "ResolutionOutcome",
    "StackInvariantError",
    "build_stacks",
    "chronological_sweep",
    "death_counts",
    "enumeration_order",
    "equation_residuals",
    "extend",
    "fixed_point_iteration",
    "killer_liveness_violations",
    "prepare",
    "prepare_pairs",
    "resolve",
    "resolve_pairs",
    "resolve_with_initial",
    "snapshot",
]
