"""Markov jump simulation of the birth-death dynamics (next-event scheme).

Births arrive at rate lambda L^d anywhere in the window; the point X dies
at rate pi(X).  Per-point pressures are updated incrementally after every
event and recomputed from scratch every ``recompute_every`` events.  This
engine shares no randomness with the duel oracle and serves as an
independent distributional reference for Sheriff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .domain import Namespace, PairOracle, PointSet, Window, sample_rain
from .response import ResponseFunction
from .stats import mean_se, pressures_at_points

EV_BIRTH = 0
EV_DEATH = 1
DEFAULT_RECOMPUTE_EVERY = 10_000
DRIFT_TOLERANCE = 1e-6


class RateDriftError(RuntimeError):
    """Incrementally maintained and recomputed total rates diverged."""


@dataclass
class JumpTrajectory:
    """Event log and grid snapshots of one jump run.

    ``point`` labels are ``namespace << 48 | index`` keys: births get rain
    indices in order of arrival, initial points keep their own ids.
    """

    event_time: np.ndarray
    event_kind: np.ndarray
    point: np.ndarray
    grid: np.ndarray
    counts: np.ndarray
    sum_pi: np.ndarray
    snapshots: list | None
    max_drift: float
    n_recomputes: int


def _as_initial(z0, d: int) -> PointSet:
    if z0 is None:
        return PointSet.empty(d)
    if isinstance(z0, PointSet):
        return z0
    x = np.asarray(z0, float).reshape(-1, d)
    return PointSet(np.full(len(x), int(Namespace.AUGMENTATION)), np.arange(len(x)), x,
                    np.zeros(len(x)))


def jump_run(window: Window, rf: ResponseFunction, lam: float, z0, t1: float, seed: int, *,
             grid=None, t0: float = 0.0, keep_snapshots: bool = False,
             recompute_every: int = DEFAULT_RECOMPUTE_EVERY,
             drift_tolerance: float = DRIFT_TOLERANCE) -> JumpTrajectory:
    """Simulate on (t0, t1] from the initial points ``z0`` (positions or a
    :class:`PointSet`).  Snapshots on ``grid`` are the state after all
    events at or before each grid time."""
    if lam < 0:
        raise ValueError("intensity must be >= 0")
    d = window.d
    rng = _rng.substream(seed, _rng.TAG_JUMP)
    init = _as_initial(z0, d)
    grid = np.asarray([t1] if grid is None else grid, float)
    cap = max(16, 2 * len(init))
    x = np.zeros((cap, d))
    keys = np.zeros(cap, dtype=np.uint64)
    n = len(init)
    x[:n] = init.x
    keys[:n] = init.keys
    pi = np.zeros(cap)
    pi[:n] = pressures_at_points(init.x, rf, window) if n else 0.0
    total = float(pi[:n].sum())
    birth_rate = lam * window.volume
    next_index = 0
    t = t0
    ev_t, ev_k, ev_p = [], [], []
    counts = np.zeros(len(grid), dtype=np.int64)
    sums = np.zeros(len(grid))
    snaps = [] if keep_snapshots else None
    gi = 0
    n_events = 0
    max_drift = 0.0
    n_recomputes = 0

    def record_until(time_limit):
        nonlocal gi
        while gi < len(grid) and grid[gi] < time_limit:
            counts[gi] = n
            sums[gi] = total
            if snaps is not None:
                snaps.append(x[:n].copy())
            gi += 1

    while True:
        rate = birth_rate + total
        dt = rng.exponential(1.0 / rate) if rate > 0 else math.inf
        t_next = t + dt
        if t_next > t1:
            break
        record_until(t_next)
        t = t_next
        if rng.random() * rate < birth_rate:
            y = rng.uniform(0.0, window.L, size=d)
            if n == cap:
                cap *= 2
                x = np.resize(x, (cap, d))
                keys = np.resize(keys, cap)
                pi = np.resize(pi, cap)
            w = rf.eval(window.distance(y, x[:n])) if n else np.zeros(0)
            pi[:n] += w
            s = float(w.sum())
            x[n] = y
            keys[n] = (np.uint64(int(Namespace.RAIN)) << np.uint64(48)) | np.uint64(next_index)
            pi[n] = s
            total += 2.0 * s
            ev_p.append(int(keys[n]))
            n += 1
            next_index += 1
            ev_k.append(EV_BIRTH)
        else:
            c = np.cumsum(pi[:n])
            v = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
            v = min(v, n - 1)
            if pi[v] <= 0.0:  # rounding landed on a zero-rate point
                v = int(np.flatnonzero(pi[:n] > 0.0)[-1])
            ev_p.append(int(keys[v]))
            last = n - 1
            w = rf.eval(window.distance(x[v], x[:n]))
            pi[:n] -= w
            total -= 2.0 * float(w.sum())
            x[v], keys[v], pi[v] = x[last], keys[last], pi[last]
            n -= 1
            np.maximum(pi[:n], 0.0, out=pi[:n])
            ev_k.append(EV_DEATH)
        ev_t.append(t)
        n_events += 1
        if n_events % recompute_every == 0:
            fresh = pressures_at_points(x[:n], rf, window) if n else np.zeros(0)
            ref = float(fresh.sum())
            drift = abs(ref - total) / max(abs(ref), 1.0)
            max_drift = max(max_drift, drift)
            if drift > drift_tolerance:
                raise RateDriftError(f"relative rate drift {drift:.3g} after {n_events} events")
            pi[:n] = fresh
            total = ref
            n_recomputes += 1
    record_until(math.inf)
    return JumpTrajectory(np.array(ev_t), np.array(ev_k, dtype=np.int8), np.array(ev_p, dtype=np.uint64),
                          grid, counts, sums, snaps, max_drift, n_recomputes)


def sheriff_grid_features(window: Window, rf: ResponseFunction, lam: float, t1: float, seed: int,
                          grid, *, t0: float = 0.0, variant="single"):
    """Counts and pressure sums of one Sheriff replicate at the grid times."""
    from . import sheriff

    rain = sample_rain(window, lam, t0, t1, _rng.substream(seed, _rng.TAG_REPLICATE, 0)
                       .integers(2**63)) if lam > 0 else PointSet.empty(window.d)
    oracle = PairOracle(int(_rng.substream(seed, _rng.TAG_REPLICATE, 1).integers(2**63)), rf, window)
    out = sheriff.resolve(rain, oracle, t1, variant, t0=t0)
    counts = np.zeros(len(grid), dtype=np.int64)
    sums = np.zeros(len(grid))
    for k, t in enumerate(grid):
        m = out.alive_mask(t)
        counts[k] = int(m.sum())
        sums[k] = float(pressures_at_points(out.points.x[m], rf, window).sum()) if m.any() else 0.0
    return counts, sums


def compare_to_sheriff(window: Window, rf: ResponseFunction, lam: float, t1: float, grid,
                       n_replicates: int, seed: int) -> dict:
    """Mean counts and mean total pressures (window sums) from both engines,
    with combined standard errors and z-scores, on a common empty start."""
    grid = np.asarray(grid, float)
    sc, sp, jc, jp = [], [], [], []
    for r in range(n_replicates):
        rs = int(_rng.substream(seed, _rng.TAG_REPLICATE, r, 0).integers(2**63))
        c, p = sheriff_grid_features(window, rf, lam, t1, rs, grid)
        sc.append(c)
        sp.append(p)
        js = int(_rng.substream(seed, _rng.TAG_REPLICATE, r, 1).integers(2**63))
        tr = jump_run(window, rf, lam, None, t1, js, grid=grid)
        jc.append(tr.counts)
        jp.append(tr.sum_pi)
    rows = []
    for k, t in enumerate(grid):
        entry = {"t": float(t)}
        for name, a, b in (("count", sc, jc), ("pressure", sp, jp)):
            ma, sa = mean_se([v[k] for v in a])
            mb, sb = mean_se([v[k] for v in b])
            se = math.hypot(sa, sb)
            z = (ma - mb) / se if se > 0 else (0.0 if ma == mb else math.inf)
            entry[name] = {"sheriff": ma, "sheriff_se": sa, "jump": mb, "jump_se": sb, "z": z}
        rows.append(entry)
    return {"replicates": n_replicates, "grid": grid.tolist(), "rows": rows,
            "max_abs_z_count": max(abs(r["count"]["z"]) for r in rows),
            "max_abs_z_pressure": max(abs(r["pressure"]["z"]) for r in rows)}


__all__ = [
    "EV_BIRTH",
    "EV_DEATH",
    "JumpTrajectory",
    "RateDriftError",
    "compare_to_sheriff",
    "jump_run",
    "sheriff_grid_features",
]
