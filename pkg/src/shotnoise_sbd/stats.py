"""Monte-Carlo estimators and residual checks for the analytic identities.

Palm quantities are always estimated through spatial sums on the torus
(Campbell): beta * E0[g] = E[sum_{X in window} g(X)] / L^d.  Standard
errors come from independent replicates; snapshots inside one replicate
are averaged first, so serial correlation never shrinks the error bars.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import CellGrid, Window
from .response import ResponseFunction, shell_volume


class GridMismatchError(ValueError):
    """Two series on different grids cannot be merged."""


# -- replicate-aggregated series ---------------------------------------------

@dataclass(frozen=True)
class EstimateSeries:
    """Per grid cell: mean, sum of squared deviations ``m2`` and sample count."""

    grid: np.ndarray
    mean: np.ndarray
    m2: np.ndarray
    n: np.ndarray

    @classmethod
    def empty(cls, grid) -> "EstimateSeries":
        g = np.asarray(grid, float)
        z = np.zeros(len(g))
        return cls(g, z, z.copy(), np.zeros(len(g), dtype=np.int64))

    @classmethod
    def from_samples(cls, grid, rows) -> "EstimateSeries":
        """``rows[r, k]`` is replicate r's value at grid point k."""
        g = np.asarray(grid, float)
        rows = np.asarray(rows, float).reshape(-1, len(g))
        if rows.shape[0] == 0:
            return cls.empty(g)
        mean = rows.mean(axis=0)
        m2 = ((rows - mean) ** 2).sum(axis=0)
        return cls(g, mean, m2, np.full(len(g), rows.shape[0], dtype=np.int64))

    @property
    def var(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.n > 1, self.m2 / np.maximum(self.n - 1, 1), 0.0)

    @property
    def stderr(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.n > 0, np.sqrt(self.var / np.maximum(self.n, 1)), 0.0)

    def merge(self, other: "EstimateSeries") -> "EstimateSeries":
        return merge(self, other)

    def rows(self):
        for t, m, s, n in zip(self.grid, self.mean, self.stderr, self.n):
            yield float(t), float(m), float(s), int(n)

    def to_csv(self, path: str | Path, grid_name: str = "grid") -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([grid_name, "mean", "stderr", "n"])
            for t, m, s, n in self.rows():
                w.writerow([repr(t), repr(m), repr(s), n])

    def to_dict(self) -> dict:
        return {"grid": self.grid.tolist(), "mean": self.mean.tolist(),
                "stderr": self.stderr.tolist(), "n": self.n.tolist()}


def merge(a: EstimateSeries, b: EstimateSeries) -> EstimateSeries:
    """Pooled mean and variance (Chan et al. pairwise update).

    The update is symmetric in its arguments, so ``merge(a, b)`` and
    ``merge(b, a)`` agree bit for bit.
    """
    if a.grid.shape != b.grid.shape or np.any(a.grid != b.grid):
        raise GridMismatchError("series grids differ")
    n = a.n + b.n
    with np.errstate(invalid="ignore", divide="ignore"):
        nf = np.maximum(n, 1).astype(float)
        mean = np.where(n > 0, (a.n * a.mean + b.n * b.mean) / nf, 0.0)
        delta = b.mean - a.mean
        m2 = a.m2 + b.m2 + np.where(n > 0, delta * delta * (a.n * b.n) / nf, 0.0)
    return EstimateSeries(a.grid, mean, m2, n)


def mean_se(samples) -> tuple[float, float]:
    x = np.asarray(samples, float)
    if len(x) == 0:
        return math.nan, math.nan
    if len(x) == 1:
        return float(x[0]), math.inf
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def _linearized_se(grad: np.ndarray, samples: np.ndarray) -> float:
    """Delta-method standard error of a smooth function of sample means;
    ``samples`` is (replicates, k), ``grad`` the gradient at the means."""
    z = (samples - samples.mean(axis=0)) @ grad
    if len(z) < 2:
        return math.inf
    return float(z.std(ddof=1) / math.sqrt(len(z)))


# -- pressures ---------------------------------------------------------------

def pressure(points_x, x, rf: ResponseFunction, window: Window) -> float:
    """pi(x) = sum_y f(dist(x, y)) over the configuration.  A configuration
    point contributes f(0) = 0 to itself."""
    pts = np.asarray(points_x, float).reshape(-1, window.d)
    if len(pts) == 0:
        return 0.0
    grid = CellGrid(window, pts, rf.support_radius)
    _, dist = grid.query(np.asarray(x, float))
    return float(np.sum(rf.eval(dist)))


def pressure_brute(points_x, x, rf: ResponseFunction, window: Window) -> float:
    pts = np.asarray(points_x, float).reshape(-1, window.d)
    total = 0.0
    for y in pts:
        total += float(rf.eval(window.distance(np.asarray(x, float), y)))
    return total


def _pair_weights(x: np.ndarray, rf: ResponseFunction, window: Window):
    grid = CellGrid(window, x, rf.support_radius)
    i, j, dist = grid.pairs()
    return i, j, rf.eval(dist) if len(dist) else np.zeros(0)


def pressures_at_points(x, rf: ResponseFunction, window: Window, source=None) -> np.ndarray:
    """pi_S(X_k) for every configuration point, where S is the sub-configuration
    selected by the boolean ``source`` (all points when None)."""
    x = np.asarray(x, float).reshape(-1, window.d)
    n = len(x)
    if n < 2:
        return np.zeros(n)
    i, j, w = _pair_weights(x, rf, window)
    if source is None:
        wi = wj = w
    else:
        src = np.asarray(source, bool)
        wi, wj = w * src[j], w * src[i]
    return np.bincount(i, wi, minlength=n) + np.bincount(j, wj, minlength=n)


@dataclass(frozen=True)
class SnapshotFeatures:
    """Count, sum of pressures and sum of squared pressures of one snapshot."""

    count: int
    sum_pi: float
    sum_pi2: float


def snapshot_features(x, rf: ResponseFunction, window: Window) -> SnapshotFeatures:
    pi = pressures_at_points(x, rf, window)
    return SnapshotFeatures(int(len(pi)), float(pi.sum()), float(np.dot(pi, pi)))


# marked configurations: column order of marked_features
MARKED_COLUMNS = (
    "n_R", "n_Z", "n_A",
    "Z_pi_ZR",  # sum over zombies of pi_{Z+R}
    "R_pi_A",  # sum over regulars of pi_A
    "A_pi_AR",
    "R_pi_Z",
    "R_pi_RZA",
    "Z_pi_Z",
    "A_pi_A",
    "Z_pi_R",
    "A_pi_R",
)


def marked_features(x, regular, zombie, anti, rf: ResponseFunction, window: Window) -> np.ndarray:
    """Counts and cross-pressure sums of a marked snapshot, ordered as
    :data:`MARKED_COLUMNS`.  ``x`` holds all points of the three classes."""
    x = np.asarray(x, float).reshape(-1, window.d)
    R, Z, A = (np.asarray(m, bool) for m in (regular, zombie, anti))
    if len(x) < 2:
        pR = pZ = pA = np.zeros(len(x))
    else:
        i, j, w = _pair_weights(x, rf, window)
        n = len(x)

        def from_src(src):
            return np.bincount(i, w * src[j], minlength=n) + np.bincount(j, w * src[i], minlength=n)

        pR, pZ, pA = from_src(R), from_src(Z), from_src(A)
    return np.array([
        R.sum(), Z.sum(), A.sum(),
        np.sum((pZ + pR)[Z]), np.sum(pA[R]), np.sum((pA + pR)[A]), np.sum(pZ[R]),
        np.sum((pR + pZ + pA)[R]), np.sum(pZ[Z]), np.sum(pA[A]), np.sum(pR[Z]), np.sum(pR[A]),
    ], dtype=float)


def mass_transport_pair(x, a_mask, b_mask, rf: ResponseFunction, window: Window) -> tuple[float, float]:
    """(sum_{a in A} pi_B(a), sum_{b in B} pi_A(b)); equal for any configuration."""
    x = np.asarray(x, float).reshape(-1, window.d)
    a_mask = np.asarray(a_mask, bool)
    b_mask = np.asarray(b_mask, bool)
    lhs = float(np.sum(pressures_at_points(x, rf, window, b_mask)[a_mask]))
    rhs = float(np.sum(pressures_at_points(x, rf, window, a_mask)[b_mask]))
    return lhs, rhs


# -- intensity and pressure series -------------------------------------------

def intensity_series(counts, window: Window, grid) -> EstimateSeries:
    """beta_t = mean count / L^d; ``counts[r, k]`` per replicate and grid time."""
    return EstimateSeries.from_samples(grid, np.asarray(counts, float) / window.volume)


@dataclass(frozen=True)
class PalmPressure:
    """beta E0[pi] per grid time, and E0[pi] = that / beta."""

    beta_pi: EstimateSeries
    e0_pi: np.ndarray
    e0_pi_se: np.ndarray
    degenerate: bool


def palm_pressure(counts, sum_pi, window: Window, grid) -> PalmPressure:
    """``counts`` and ``sum_pi`` are (replicates, grid) arrays of N and
    sum_X pi(X).  The Palm mean is a ratio of means, with a delta-method
    standard error."""
    counts = np.asarray(counts, float).reshape(-1, len(grid))
    sum_pi = np.asarray(sum_pi, float).reshape(-1, len(grid))
    series = EstimateSeries.from_samples(grid, sum_pi / window.volume)
    e0 = np.full(len(grid), math.nan)
    se = np.full(len(grid), math.nan)
    for k in range(len(grid)):
        xbar = counts[:, k].mean() if len(counts) else 0.0
        if xbar > 0:
            ybar = sum_pi[:, k].mean()
            e0[k] = ybar / xbar
            se[k] = _linearized_se(np.array([-ybar / xbar**2, 1.0 / xbar]),
                                   np.column_stack([counts[:, k], sum_pi[:, k]]))
    degenerate = bool(len(counts) == 0 or np.all(counts.sum(axis=0) == 0))
    return PalmPressure(series, e0, se, degenerate)


# -- ODE residuals -------------------------------------------------------------

@dataclass(frozen=True)
class ResidualSeries:
    """Finite-difference residual per grid cell ``[t_k, t_{k+1})``.

    ``bias`` bounds the trapezoid error of the integrated rate term; the
    gate is ``|mean| <= 3 * stderr + bias``.
    """

    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    bias: np.ndarray

    @property
    def z(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.mean / self.stderr

    @property
    def passes(self) -> np.ndarray:
        return np.abs(self.mean) <= 3.0 * self.stderr + self.bias

    def to_dict(self) -> dict:
        return {"t": self.t.tolist(), "mean": self.mean.tolist(), "stderr": self.stderr.tolist(),
                "bias": self.bias.tolist(), "all_pass": bool(np.all(self.passes))}


def _fd_residual(level, gain, loss, grid, volume) -> ResidualSeries:
    """Residual of d level/dt = gain - loss, with ``level``, ``gain`` and
    ``loss`` per replicate and grid time (extensive sums; divided by the
    window volume here).  Rates enter through the trapezoid rule."""
    grid = np.asarray(grid, float)
    h = np.diff(grid)
    level = np.asarray(level, float) / volume
    rate = (np.asarray(gain, float) - np.asarray(loss, float)) / volume
    y = (level[:, 1:] - level[:, :-1]) / h - 0.5 * (rate[:, 1:] + rate[:, :-1])
    mean = y.mean(axis=0)
    se = y.std(axis=0, ddof=1) / math.sqrt(y.shape[0]) if y.shape[0] > 1 else np.full(len(h), math.inf)
    rbar = rate.mean(axis=0)
    bias = 0.5 * np.abs(rbar[1:] - rbar[:-1])
    return ResidualSeries(grid[:-1], mean, se, bias)


def ode_residual_density(counts, sum_pi, lam: float, window: Window, grid) -> ResidualSeries:
    """Residual of d beta/dt = lambda - beta E0[pi] on consecutive grid cells."""
    counts = np.asarray(counts, float)
    gain = np.full(counts.shape, lam * window.volume)
    return _fd_residual(counts, gain, sum_pi, grid, window.volume)


def stationary_density_residual(counts, sum_pi, lam: float, window: Window) -> tuple[float, float]:
    """lambda - beta E0[pi] from per-replicate averages over stationary snapshots."""
    per_rep = lam - np.asarray(sum_pi, float).reshape(len(counts), -1).mean(axis=1) / window.volume
    return mean_se(per_rep)


def ode_residual_marked(features, lam: float, window: Window, grid) -> dict[str, ResidualSeries]:
    """Residuals of the four marked-density equations.

    ``features[r, k, :]`` holds :func:`marked_features` of replicate r at
    grid time k.
    """
    F = np.asarray(features, float)
    c = {name: F[:, :, i] for i, name in enumerate(MARKED_COLUMNS)}
    zero = np.zeros_like(c["n_R"])
    V = window.volume
    return {
        "Z": _fd_residual(c["n_Z"], c["R_pi_A"], c["Z_pi_ZR"], grid, V),
        "A": _fd_residual(c["n_A"], c["R_pi_Z"], c["A_pi_AR"], grid, V),
        "R": _fd_residual(c["n_R"], zero + lam * V, c["R_pi_RZA"], grid, V),
        "S": _fd_residual(c["n_Z"] + c["n_A"], zero, c["Z_pi_Z"] + c["A_pi_A"], grid, V),
    }


# -- second-order structure ----------------------------------------------------

@dataclass(frozen=True)
class PairCorrelationHistogram:
    """rho2(r_i) = ordered pair count in bin i / (snapshots * L^d * shell volume)."""

    edges: np.ndarray
    counts: np.ndarray
    n_snapshots: int
    volume: float
    rho: np.ndarray
    rho_se: np.ndarray

    @property
    def mids(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r_lo", "r_hi", "rho2", "stderr", "pair_count"])
            for lo, hi, r, s, n in zip(self.edges[:-1], self.edges[1:], self.rho, self.rho_se,
                                       self.counts):
                w.writerow([repr(float(lo)), repr(float(hi)), repr(float(r)), repr(float(s)), int(n)])


def _groups(snapshots) -> list[list[np.ndarray]]:
    """Accept one list of snapshots per replicate, or a flat list (one group each)."""
    snaps = list(snapshots)
    if snaps and isinstance(snaps[0], np.ndarray):
        return [[s] for s in snaps]
    return [list(g) for g in snaps]


def pair_distance_histogram(x, window: Window, edges) -> np.ndarray:
    """Ordered pair counts per distance bin."""
    x = np.asarray(x, float).reshape(-1, window.d)
    if len(x) < 2:
        return np.zeros(len(edges) - 1, dtype=np.int64)
    grid = CellGrid(window, x, float(edges[-1]))
    _, _, dist = grid.pairs()
    h, _ = np.histogram(dist, bins=edges)
    return 2 * h


def pair_correlation(snapshots, window: Window, edges) -> PairCorrelationHistogram:
    edges = np.asarray(edges, float)
    if np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must increase")
    if window.periodic and edges[-1] > window.L / 2:
        raise ValueError("pair histogram radius exceeds half the torus side")
    shells = shell_volume(edges[:-1], edges[1:], window.d)
    groups = _groups(snapshots)
    per_group = []
    total = np.zeros(len(edges) - 1, dtype=np.int64)
    n_snap = 0
    for g in groups:
        c = sum((pair_distance_histogram(x, window, edges) for x in g),
                np.zeros(len(edges) - 1, dtype=np.int64))
        total += c
        n_snap += len(g)
        per_group.append(c / (len(g) * window.volume * shells))
    per_group = np.array(per_group)
    rho = total / (max(n_snap, 1) * window.volume * shells)
    se = per_group.std(axis=0, ddof=1) / math.sqrt(len(per_group)) if len(per_group) > 1 \
        else np.full(len(rho), math.inf)
    return PairCorrelationHistogram(edges, total, n_snap, window.volume, rho, se)


def _default_box(window: Window):
    return window.central_box(window.L / 4.0)


def _box_mask(x, box) -> np.ndarray:
    lo, hi = box
    return np.all((x >= lo) & (x < hi), axis=1)


def second_balance_term(x, rf: ResponseFunction, window: Window, lam: float, box1, box2) -> float:
    """Generator of the ordered pair count in (C1, C2) for one configuration:
    lambda (N_C1 |C2| + N_C2 |C1|) - sum_{x1 in C1, x2 in C2, x1 != x2} (pi(x1) + pi(x2))."""
    x = np.asarray(x, float).reshape(-1, window.d)
    v1 = float(np.prod(box1[1] - box1[0]))
    v2 = float(np.prod(box2[1] - box2[0]))
    in1, in2 = _box_mask(x, box1), _box_mask(x, box2)
    n1, n2 = int(in1.sum()), int(in2.sum())
    pi = pressures_at_points(x, rf, window)
    # x1 ranges over C1 and x2 over C2 \ {x1}
    loss = np.sum(pi[in1] * (n2 - in2[in1])) + np.sum(pi[in2] * (n1 - in1[in2]))
    return lam * (n1 * v2 + n2 * v1) - float(loss)


def balance_residuals(snapshots, rf: ResponseFunction, lam: float, window: Window, *,
                      edges=None, box1=None, box2=None) -> dict:
    """First and second balance residuals with replicate standard errors.

    R1 = sum_i rho2(r_i) f(r_mid,i) shellvol_i - lambda, from the pair
    histogram; ``R1_campbell`` is the bin-free form sum pi / L^d - lambda.
    R2 is the mean generator term of :func:`second_balance_term`,
    normalised by |C1||C2|.
    """
    groups = _groups(snapshots)
    if edges is None:
        edges = np.linspace(0.0, rf.support_radius, 201)
    edges = np.asarray(edges, float)
    box1 = box1 or _default_box(window)
    box2 = box2 or box1
    v12 = float(np.prod(box1[1] - box1[0]) * np.prod(box2[1] - box2[0]))
    shells = shell_volume(edges[:-1], edges[1:], window.d)
    fmid = rf.eval(0.5 * (edges[1:] + edges[:-1]))
    r1, r1c, r2 = [], [], []
    for g in groups:
        c = sum((pair_distance_histogram(x, window, edges) for x in g),
                np.zeros(len(edges) - 1, dtype=np.int64))
        rho = c / (len(g) * window.volume * shells)
        r1.append(float(np.sum(rho * fmid * shells)) - lam)
        r1c.append(float(np.mean([pressures_at_points(x, rf, window).sum() for x in g]))
                   / window.volume - lam)
        r2.append(float(np.mean([second_balance_term(x, rf, window, lam, box1, box2) for x in g]))
                  / v12)
    m1, s1 = mean_se(r1)
    m1c, s1c = mean_se(r1c)
    m2, s2 = mean_se(r2)
    return {"R1": m1, "R1_se": s1, "R1_campbell": m1c, "R1_campbell_se": s1c,
            "R2": m2, "R2_se": s2, "n_groups": len(groups),
            "n_snapshots": int(sum(len(g) for g in groups))}


def repulsion_check(snapshots, rf: ResponseFunction, window: Window) -> dict:
    """Compare beta a (f-weight around a location) with E0[pi] (around a
    typical point).  Also reports a beta E0[pi] against E0[pi^2] and the
    empirical Jensen inequality E0[pi^2] >= E0[pi]^2."""
    groups = _groups(snapshots)
    a = rf.integral_a
    V = window.volume
    rows = []
    for g in groups:
        feats = [snapshot_features(x, rf, window) for x in g]
        rows.append([np.mean([f.count for f in feats]), np.mean([f.sum_pi for f in feats]),
                     np.mean([f.sum_pi2 for f in feats])])
    S = np.array(rows, float).reshape(-1, 3)
    n, y, y2 = S.mean(axis=0)
    if n <= 0:
        return {"degenerate": True}
    lhs = a * n / V
    rhs = y / n
    gap = lhs - rhs
    gap_se = _linearized_se(np.array([a / V + y / n**2, -1.0 / n, 0.0]), S)
    e0pi2 = y2 / n
    # a beta E0[pi] - E0[pi^2] = a y / V - y2 / n, zero in the stationary regime
    chain = a * y / V - e0pi2
    chain_se = _linearized_se(np.array([y2 / n**2, a / V, -1.0 / n]), S)
    return {
        "beta_a": lhs, "e0_pi": rhs, "gap": gap, "gap_se": gap_se,
        "z": gap / gap_se if gap_se > 0 else math.inf,
        "passes": bool(gap >= -3.0 * gap_se),
        "e0_pi2": e0pi2, "jensen_holds": bool(e0pi2 >= rhs * rhs),
        "chain_gap": chain, "chain_gap_se": chain_se,
        "degenerate": False,
    }


# -- analytic sanity bounds ------------------------------------------------------

def mutual_service_mean(lam_t: float, mu_t: float, jmax: int = 200) -> float:
    """Stationary mean of the birth-death chain with birth rate lam_t and
    death rate j(j-1) mu_t on {1, 2, ...}: p_j ~ r^(j-1) / (j! (j-1)!)."""
    if mu_t <= 0:
        return math.inf
    r = lam_t / mu_t
    j = np.arange(1, jmax + 1, dtype=float)
    from scipy.special import gammaln

    logw = (j - 1) * math.log(r) - gammaln(j + 1) - gammaln(j) if r > 0 else \
        np.where(j == 1, 0.0, -np.inf)
    w = np.exp(logw - np.max(logw))
    return float(np.sum(j * w) / np.sum(w))


def mutual_service_bound(rf: ResponseFunction, lam: float, b: float | None = None) -> dict:
    """Upper bound on the intensity from the per-cell mutual-service chain:
    cells of side b, lam_t = lam b^d, mu_t = 2 f(b sqrt(d)); the bound is the
    chain's stationary mean divided by b^d.  Without ``b`` the tightest
    value on a grid of admissible sides is returned."""
    d = rf.d
    if b is None:
        top = rf.support_radius / math.sqrt(d)
        cands = np.linspace(top / 40, top, 400)
        cands = np.nextafter(cands, 0.0)
        best = None
        for c in cands:
            out = mutual_service_bound(rf, lam, float(c))
            if math.isfinite(out["bound"]) and (best is None or out["bound"] < best["bound"]):
                best = out
        return best
    fb = float(rf.eval(b * math.sqrt(d)))
    lam_t, mu_t = lam * b**d, 2.0 * fb
    mean = mutual_service_mean(lam_t, mu_t)
    return {"b": b, "lam_tilde": lam_t, "mu_tilde": mu_t, "cell_mean": mean, "bound": mean / b**d}


def lag1_autocorrelation(series) -> float:
    x = np.asarray(series, float)
    if len(x) < 3 or np.var(x) == 0:
        return math.nan
    x = x - x.mean()
    return float(np.dot(x[1:], x[:-1]) / np.dot(x, x))


def loglinear_fit(t, y) -> dict:
    """Least-squares fit of log y = c - alpha t on the positive entries, with
    the slope's standard error and a normal 95% interval."""
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    keep = y > 0
    t, ly = t[keep], np.log(y[keep])
    if len(t) < 3:
        return {"alpha": math.nan, "alpha_se": math.nan, "ci95": [math.nan, math.nan], "r2": math.nan,
                "n": int(len(t))}
    A = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ coef
    dof = len(t) - 2
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    alpha = -float(coef[1])
    se = math.sqrt(cov[1, 1])
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else math.nan
    return {"alpha": alpha, "alpha_se": se, "ci95": [alpha - 1.96 * se, alpha + 1.96 * se],
            "r2": r2, "n": int(len(t))}


# -- reports -------------------------------------------------------------------

def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats
    (written as strings) into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def write_json(path: str | Path, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


__all__ = [
    "EstimateSeries",
    "GridMismatchError",
    "MARKED_COLUMNS",
    "PairCorrelationHistogram",
    "PalmPressure",
    "ResidualSeries",
    "SnapshotFeatures",
    "balance_residuals",
    "intensity_series",
    "jsonable",
    "lag1_autocorrelation",
    "loglinear_fit",
    "marked_features",
    "mass_transport_pair",
    "mean_se",
    "merge",
    "mutual_service_bound",
    "mutual_service_mean",
    "ode_residual_density",
    "ode_residual_marked",
    "pair_correlation",
    "palm_pressure",
    "pressure",
    "pressure_brute",
    "pressures_at_points",
    "repulsion_check",
    "second_balance_term",
    "snapshot_features",
    "stationary_density_residual",
    "write_json",
]
