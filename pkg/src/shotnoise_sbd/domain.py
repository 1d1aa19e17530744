"""Simulation window, Poisson birth rain, point containers and the pairwise
duel oracle."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _rng
from .response import ResponseFunction

DEFAULT_RAIN_CAP = 10**8
_NS_SHIFT = np.uint64(48)


class RainOverflowError(OverflowError):
    """Expected number of rain points exceeds the configured cap."""


class NondistinctDuelTimesError(RuntimeError):
    """Two duel times collided exactly in floating point."""


class Namespace(IntEnum):
    RAIN = 0
    AUGMENTATION = 1


class PointId(NamedTuple):
    namespace: Namespace
    index: int

    def __str__(self) -> str:
        return f"{Namespace(self.namespace).name.lower()}:{self.index}"

    @property
    def key(self) -> int:
        return (int(self.namespace) << 48) | int(self.index)


@dataclass(frozen=True)
class Window:
    d: int
    L: float
    topology: str = "torus"

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("window side must be positive")
        if self.topology not in ("torus", "plain"):
            raise ValueError(f"unknown topology {self.topology!r}")

    @property
    def volume(self) -> float:
        return self.L**self.d

    @property
    def periodic(self) -> bool:
        return self.topology == "torus"

    def displacement(self, x, y) -> np.ndarray:
        diff = np.asarray(y, float) - np.asarray(x, float)
        if self.periodic:
            diff = diff - self.L * np.round(diff / self.L)
        return diff

    def distance(self, x, y):
        dist = np.sqrt(np.sum(self.displacement(x, y) ** 2, axis=-1))
        return float(dist) if np.ndim(dist) == 0 else dist

    def wrap(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return np.mod(x, self.L) if self.periodic else x

    def central_box(self, side: float) -> tuple[np.ndarray, np.ndarray]:
        lo = np.full(self.d, 0.5 * (self.L - side))
        return lo, lo + side

    def max_distance(self) -> float:
        return self.L * math.sqrt(self.d) / (2.0 if self.periodic else 1.0)


@dataclass(frozen=True)
class PointRecord:
    id: PointId
    x: tuple[float, ...]
    b: float
    d_time: float = math.inf
    killer: PointId | None = None

    def __post_init__(self):
        if math.isfinite(self.d_time):
            if not self.b < self.d_time:
                raise ValueError("death must come after birth")
            if self.killer is None:
                raise ValueError("a finite death time needs a killer")
        elif self.killer is not None:
            raise ValueError("a point alive at the horizon has no killer")


class PointSet:
    """Columnar point storage: namespace, index, location, birth time."""

    __slots__ = ("namespace", "index", "x", "birth")

    def __init__(self, namespace, index, x, birth):
        self.namespace = np.asarray(namespace, dtype=np.int64).reshape(-1)
        self.index = np.asarray(index, dtype=np.int64).reshape(-1)
        self.birth = np.asarray(birth, dtype=np.float64).reshape(-1)
        n = len(self.birth)
        x = np.asarray(x, dtype=np.float64)
        self.x = x.reshape(n, -1) if n else x.reshape(0, x.shape[-1] if x.ndim == 2 else 0)
        if not (len(self.namespace) == len(self.index) == n):
            raise ValueError("column lengths differ")

    @classmethod
    def empty(cls, d: int) -> "PointSet":
        return cls([], [], np.zeros((0, d)), [])

    @classmethod
    def from_records(cls, records: Iterable[PointRecord], d: int | None = None) -> "PointSet":
        records = list(records)
        if not records:
            return cls.empty(d or 0)
        return cls(
            [int(r.id.namespace) for r in records],
            [r.id.index for r in records],
            np.array([r.x for r in records], dtype=float),
            [r.b for r in records],
        )

    @classmethod
    def coerce(cls, points, d: int) -> "PointSet":
        if isinstance(points, PointSet):
            return points
        if points is None:
            return cls.empty(d)
        return cls.from_records(points, d)

    def __len__(self) -> int:
        return len(self.birth)

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def keys(self) -> np.ndarray:
        return (self.namespace.astype(np.uint64) << _NS_SHIFT) | self.index.astype(np.uint64)

    def ids(self) -> list[PointId]:
        return [PointId(Namespace(int(n)), int(i)) for n, i in zip(self.namespace, self.index)]

    def take(self, sel) -> "PointSet":
        return PointSet(self.namespace[sel], self.index[sel], self.x[sel], self.birth[sel])

    def canonical(self) -> "PointSet":
        """Sorted by (namespace, index); raises on duplicate ids."""
        keys = self.keys
        order = np.argsort(keys, kind="stable")
        if len(keys) > 1 and np.any(np.diff(keys[order]) == 0):
            raise ValueError("duplicate point ids")
        return self.take(order)

    def to_records(self, death=None, killer_ns=None, killer_idx=None) -> list[PointRecord]:
        out = []
        for k in range(len(self)):
            dt = math.inf if death is None else float(death[k])
            killer = None
            if death is not None and math.isfinite(dt):
                killer = PointId(Namespace(int(killer_ns[k])), int(killer_idx[k]))
            out.append(PointRecord(
                PointId(Namespace(int(self.namespace[k])), int(self.index[k])),
                tuple(float(v) for v in self.x[k]), float(self.birth[k]), dt, killer))
        return out

    @staticmethod
    def concat(*sets: "PointSet") -> "PointSet":
        sets = [s for s in sets if len(s)]
        if not sets:
            return PointSet.empty(0)
        return PointSet(
            np.concatenate([s.namespace for s in sets]),
            np.concatenate([s.index for s in sets]),
            np.concatenate([s.x for s in sets]),
            np.concatenate([s.birth for s in sets]),
        )


def sample_rain(window: Window, lam: float, t0: float, t1: float, seed: int,
                *, first_index: int = 0, cap: float = DEFAULT_RAIN_CAP) -> PointSet:
    """Poisson rain of intensity ``lam`` on window x (t0, t1), sorted by birth."""
    if not t0 < t1:
        raise ValueError("need t0 < t1")
    if lam < 0:
        raise ValueError("intensity must be >= 0")
    mean = lam * window.volume * (t1 - t0)
    if mean > cap:
        raise RainOverflowError(f"expected {mean:.3g} rain points exceeds cap {cap:.3g}")
    rng = _rng.substream(seed, _rng.TAG_RAIN)
    n = int(rng.poisson(mean)) if mean > 0 else 0
    x = rng.uniform(0.0, window.L, size=(n, window.d))
    birth = np.sort(rng.uniform(t0, t1, size=n))
    return PointSet(np.full(n, Namespace.RAIN), first_index + np.arange(n), x, birth)


def sample_poisson_initial(window: Window, beta: float, t0: float, seed: int,
                           namespace: Namespace = Namespace.AUGMENTATION) -> PointSet:
    """Homogeneous Poisson configuration of intensity ``beta`` born at ``t0``."""
    rng = _rng.substream(seed, _rng.TAG_Z0)
    n = int(rng.poisson(beta * window.volume)) if beta > 0 else 0
    x = rng.uniform(0.0, window.L, size=(n, window.d))
    return PointSet(np.full(n, namespace), np.arange(n), x, np.full(n, float(t0)))


# -- spatial index ----------------------------------------------------------

class CellGrid:
    """Uniform grid with cell side >= ``radius`` for fixed-radius searches."""

    def __init__(self, window: Window, x: np.ndarray, radius: float):
        self.window = window
        self.x = np.asarray(x, float)
        self.radius = float(radius)
        d = window.d
        ncell = int(window.L // radius) if radius > 0 else 1
        if window.periodic:
            # fewer than 3 cells per axis would revisit cells through the wrap
            self.brute = ncell < 3
        else:
            self.brute = ncell < 1
        ncell = max(ncell, 1)
        self.ncell = ncell
        self.cell_side = window.L / ncell
        c = np.floor(self.x / self.cell_side).astype(np.int64)
        c = np.clip(c, 0, ncell - 1)
        self.coords = c
        lin = np.zeros(len(self.x), dtype=np.int64)
        for axis in range(d):
            lin = lin * ncell + c[:, axis]
        self.order = np.argsort(lin, kind="stable")
        counts = np.bincount(lin, minlength=ncell**d)
        self.start = np.concatenate([[0], np.cumsum(counts)[:-1]])
        self.count = counts

    def _neighbor_cells(self, coords: np.ndarray, offset) -> tuple[np.ndarray, np.ndarray]:
        nc = coords + np.asarray(offset)
        if self.window.periodic:
            valid = np.ones(len(nc), dtype=bool)
            nc = np.mod(nc, self.ncell)
        else:
            valid = np.all((nc >= 0) & (nc < self.ncell), axis=1)
            nc = np.clip(nc, 0, self.ncell - 1)
        lin = np.zeros(len(nc), dtype=np.int64)
        for axis in range(nc.shape[1]):
            lin = lin * self.ncell + nc[:, axis]
        return lin, valid

    def pairs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All unordered pairs (i < j) at distance <= radius, with distances."""
        n = len(self.x)
        if n < 2:
            e = np.zeros(0, dtype=np.int64)
            return e, e, np.zeros(0)
        if self.brute:
            i, j = np.triu_indices(n, k=1)
            dist = self.window.distance(self.x[i], self.x[j])
            keep = dist <= self.radius
            return i[keep], j[keep], dist[keep]
        out_i, out_j, out_d = [], [], []
        for offset in itertools.product((-1, 0, 1), repeat=self.window.d):
            lin, valid = self._neighbor_cells(self.coords, offset)
            cnt = np.where(valid, self.count[lin], 0)
            total = int(cnt.sum())
            if total == 0:
                continue
            src = np.repeat(np.arange(n), cnt)
            first = np.repeat(self.start[lin], cnt)
            within = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
            dst = self.order[first + within]
            keep = src < dst
            src, dst = src[keep], dst[keep]
            dist = self.window.distance(self.x[src], self.x[dst])
            keep = dist <= self.radius
            out_i.append(src[keep])
            out_j.append(dst[keep])
            out_d.append(dist[keep])
        if not out_i:
            e = np.zeros(0, dtype=np.int64)
            return e, e, np.zeros(0)
        i = np.concatenate(out_i)
        j = np.concatenate(out_j)
        dist = np.concatenate(out_d)
        order = np.lexsort((j, i))
        return i[order], j[order], dist[order]

    def query(self, y) -> tuple[np.ndarray, np.ndarray]:
        """Indices and distances of stored points within radius of location y."""
        y = np.asarray(y, float).reshape(-1)
        if self.brute or len(self.x) == 0:
            dist = self.window.distance(y, self.x) if len(self.x) else np.zeros(0)
            idx = np.nonzero(dist <= self.radius)[0]
            return idx, dist[idx]
        c = np.clip(np.floor(y / self.cell_side).astype(np.int64), 0, self.ncell - 1)[None, :]
        cand = []
        for offset in itertools.product((-1, 0, 1), repeat=self.window.d):
            lin, valid = self._neighbor_cells(c, offset)
            if valid[0]:
                s = self.start[lin[0]]
                cand.append(self.order[s:s + self.count[lin[0]]])
        idx = np.unique(np.concatenate(cand)) if cand else np.zeros(0, dtype=np.int64)
        dist = self.window.distance(y, self.x[idx])
        keep = dist <= self.radius
        return idx[keep], dist[keep]


def neighbors_within_support(config, p, window: Window, rf: ResponseFunction) -> list[PointId]:
    """Ids of the points q != p with dist(x_p, x_q) <= support radius."""
    pts = PointSet.coerce(config, window.d)
    target = p.id if isinstance(p, PointRecord) else p
    keys = pts.keys
    hit = np.nonzero(keys == np.uint64(target.key))[0]
    if isinstance(p, PointRecord):
        loc = np.asarray(p.x, float)
    elif len(hit):
        loc = pts.x[hit[0]]
    else:
        raise KeyError(f"{target} not in configuration")
    grid = CellGrid(window, pts.x, rf.support_radius)
    idx, _ = grid.query(loc)
    idx = idx[keys[idx] != np.uint64(target.key)]
    idx = idx[np.argsort(keys[idx])]
    return [PointId(Namespace(int(pts.namespace[k])), int(pts.index[k])) for k in idx]


# -- duel randomness --------------------------------------------------------

@dataclass(frozen=True)
class PairTable:
    """Finite-rate duels of a point set: ``i < j`` index the set; ``dies_i``
    is I_ij (1 means the point ``i`` is the one killed at ``T``)."""

    i: np.ndarray
    j: np.ndarray
    T: np.ndarray
    dies_i: np.ndarray

    def __len__(self) -> int:
        return len(self.T)


@dataclass(frozen=True)
class PairOracle:
    """Order-independent source of duel times and directions.

    ``T_pq = max(b_p, b_q) + E`` with ``E ~ Exp(2 f(dist))`` and the
    direction bit are hashed from ``(master_seed, tag, unordered id pair)``.
    """

    master_seed: int
    rf: ResponseFunction
    window: Window

    def _times(self, key_a, key_b, b_a, b_b, dist) -> np.ndarray:
        rate = 2.0 * self.rf.eval(np.asarray(dist, float))
        u = _rng.to_unit_open(_rng.pair_hash(self.master_seed, _rng.TAG_DUEL_TIME, key_a, key_b))
        with np.errstate(divide="ignore"):
            expo = np.where(rate > 0, -np.log(u) / np.where(rate > 0, rate, 1.0), np.inf)
        return np.maximum(np.asarray(b_a, float), np.asarray(b_b, float)) + expo

    def _dies_first(self, key_a, key_b) -> np.ndarray:
        """I_ab for each (a, b): 1 when a is the victim."""
        bit = _rng.top_bit(_rng.pair_hash(self.master_seed, _rng.TAG_DUEL_DIR, key_a, key_b))
        a_is_low = np.asarray(key_a, np.uint64) < np.asarray(key_b, np.uint64)
        return np.where(a_is_low, bit, 1 - bit).astype(np.int8)

    def duel_time(self, p: PointRecord, q: PointRecord) -> float:
        if p.id == q.id:
            raise ValueError("a point does not duel itself")
        dist = self.window.distance(p.x, q.x)
        return float(self._times(p.id.key, q.id.key, p.b, q.b, dist))

    def duel_direction(self, p: PointRecord, q: PointRecord) -> int:
        """I_pq: 1 when p is killed at the duel time."""
        if p.id == q.id:
            raise ValueError("a point does not duel itself")
        return int(self._dies_first(np.uint64(p.id.key), np.uint64(q.id.key)))

    def pairs(self, points: PointSet, t_max: float = math.inf) -> PairTable:
        """All duels with finite rate and ``T < t_max`` among ``points``."""
        grid = CellGrid(self.window, points.x, self.rf.support_radius)
        i, j, dist = grid.pairs()
        keys = points.keys
        T = self._times(keys[i], keys[j], points.birth[i], points.birth[j], dist)
        keep = T < t_max
        i, j, T = i[keep], j[keep], T[keep]
        dies_i = self._dies_first(keys[i], keys[j])
        return PairTable(i, j, T, dies_i)


def check_distinct(times: np.ndarray) -> None:
    if len(times) > 1:
        s = np.sort(times)
        dup = np.nonzero(s[1:] == s[:-1])[0]
        if len(dup):
            raise NondistinctDuelTimesError(f"duel time {s[dup[0]]!r} occurs twice")


# -- CSV export -------------------------------------------------------------

def write_snapshot_csv(path: str | Path, points: PointSet, death=None,
                       killer_ns=None, killer_idx=None) -> None:
    """Snapshot format: id_namespace,id_index,x1..xd,birth,death,killer_namespace,killer_index."""
    d = points.d
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id_namespace", "id_index"] + [f"x{k + 1}" for k in range(d)]
                   + ["birth", "death", "killer_namespace", "killer_index"])
        for k in range(len(points)):
            row = [Namespace(int(points.namespace[k])).name.lower(), int(points.index[k])]
            row += [repr(float(v)) for v in points.x[k]]
            row.append(repr(float(points.birth[k])))
            dt = math.inf if death is None else float(death[k])
            if math.isfinite(dt):
                row += [repr(dt), Namespace(int(killer_ns[k])).name.lower(), int(killer_idx[k])]
            else:
                row += ["", "", ""]
            w.writerow(row)


def read_snapshot_csv(path: str | Path):
    """Inverse of :func:`write_snapshot_csv`; returns (points, death, killer_ns, killer_idx)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return PointSet.empty(0), np.zeros(0), np.zeros(0, int), np.zeros(0, int)
    d = sum(1 for k in rows[0] if k.startswith("x") and k[1:].isdigit())
    ns = [Namespace[r["id_namespace"].upper()] for r in rows]
    idx = [int(r["id_index"]) for r in rows]
    x = [[float(r[f"x{k + 1}"]) for k in range(d)] for r in rows]
    birth = [float(r["birth"]) for r in rows]
    death = np.array([float(r["death"]) if r["death"] else math.inf for r in rows])
    kns = np.array([int(Namespace[r["killer_namespace"].upper()]) if r["killer_namespace"] else -1
                    for r in rows])
    kidx = np.array([int(r["killer_index"]) if r["killer_index"] else -1 for r in rows])
    return PointSet(ns, idx, np.array(x).reshape(len(rows), d), birth), death, kns, kidx


def id_label(ns: int, idx: int) -> str:
    return f"{Namespace(int(ns)).name.lower()}:{int(idx)}"


def parse_id_label(text: str) -> PointId:
    ns, idx = text.split(":")
    return PointId(Namespace[ns.upper()], int(idx))
