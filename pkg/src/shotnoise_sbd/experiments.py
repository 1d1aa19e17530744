"""Experiment orchestration: replicate fan-out, the stationary sampler,
transient and coupling experiments, and the acceptance suite.

All randomness descends from one master seed.  Replicate ``r`` of
experiment ``e`` draws its rain, duel oracle and initial points from
``child_seed(seed, e, r, slot)``, so every output is a pure function of
(configuration, seed) regardless of how replicates are scheduled.
"""

from __future__ import annotations

import functools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _rng, approx, jump, sheriff, sheriffz, stats
from .config import RunConfig, default_config
from .domain import (Namespace, PairOracle, PointSet, Window, read_snapshot_csv, sample_poisson_initial,
                     sample_rain)
from .response import ResponseFunction

# experiment stream ids
EXP_SIMULATE = 1
EXP_STATIONARY = 2
EXP_TRANSIENT = 3
EXP_COUPLING = 4
EXP_ORDER = 5
EXP_FIXED_POINT = 6
EXP_ENGINES = 7
EXP_POISSON = 8
EXP_COUPLING_LONG = 9
EXP_SCALING = 10

# slots within a replicate
SLOT_RAIN = 0
SLOT_ORACLE = 1
SLOT_Z0 = 2
SLOT_JUMP = 3
SLOT_CHUNK = 16  # rain chunk k uses SLOT_CHUNK + k


class BurnInTimeoutError(RuntimeError):
    """The stationary sampler did not settle before the time cap."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


class HorizonTooShortWarning(UserWarning):
    """Specials still alive at the coupling horizon."""


def child_seed(seed: int, *path: int) -> int:
    return int(_rng.substream(seed, _rng.TAG_REPLICATE, *path).integers(2**63))


def _map(fn, items, workers: int = 1):
    """Ordered map, optionally over a process pool (results keep input order)."""
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def mean_lifetime(rf: ResponseFunction, lam: float) -> float:
    """1 / (beta2_hat a): expected lifetime under the second-order intensity."""
    return 1.0 / (approx.second_order(rf, lam).beta_hat * rf.integral_a)


def parse_z0(spec: str, window: Window, t0: float, seed: int) -> PointSet:
    """``poisson:<beta>``, ``csv:<path>`` or empty."""
    spec = (spec or "").strip()
    if not spec:
        return PointSet.empty(window.d)
    kind, _, arg = spec.partition(":")
    if kind == "poisson":
        return sample_poisson_initial(window, float(arg), t0, seed)
    if kind == "csv":
        pts = read_snapshot_csv(arg)[0]
        if len(pts) and pts.d != window.d:
            raise ValueError("initial points have the wrong dimension")
        n = len(pts)
        x = pts.x if n else np.zeros((0, window.d))
        return PointSet(np.full(n, int(Namespace.AUGMENTATION)), np.arange(n), x, np.full(n, float(t0)))
    raise ValueError(f"z0 spec must be poisson:<beta> or csv:<path>, got {spec!r}")


def replicate_inputs(cfg: RunConfig, exp: int, r: int, t0: float, t1: float):
    """(rain on (t0, t1), oracle) of one replicate."""
    rain = sample_rain(cfg.window, cfg.lam, t0, t1, child_seed(cfg.seed, exp, r, SLOT_RAIN)) \
        if cfg.lam > 0 else PointSet.empty(cfg.window.d)
    oracle = PairOracle(child_seed(cfg.seed, exp, r, SLOT_ORACLE), cfg.kernel, cfg.window)
    return rain, oracle


def snapshot_sums(x: np.ndarray, cfg: RunConfig) -> tuple[int, float]:
    if len(x) == 0:
        return 0, 0.0
    return len(x), float(stats.pressures_at_points(x, cfg.kernel, cfg.window).sum())


# -- simulate ------------------------------------------------------------------

@dataclass
class SimulationResult:
    grid: np.ndarray
    counts: np.ndarray
    sum_pi: np.ndarray
    outcomes: list
    intensity: stats.EstimateSeries

    def summary(self) -> dict:
        return {"grid": self.grid, "intensity": self.intensity.to_dict(),
                "mean_count": self.counts.mean(axis=0)}


def _simulate_one(args):
    cfg, r = args
    grid = cfg.time_grid
    z0 = parse_z0(cfg.z0, cfg.window, cfg.t0, child_seed(cfg.seed, EXP_SIMULATE, r, SLOT_Z0))
    if cfg.engine == "jump":
        tr = jump.jump_run(cfg.window, cfg.kernel, cfg.lam, z0, cfg.t1,
                           child_seed(cfg.seed, EXP_SIMULATE, r, SLOT_JUMP), grid=grid, t0=cfg.t0,
                           keep_snapshots=True)
        return tr.counts, tr.sum_pi, tr
    rain, oracle = replicate_inputs(cfg, EXP_SIMULATE, r, cfg.t0, cfg.t1)
    out = sheriff.resolve_with_initial(z0, rain, oracle, cfg.t1, cfg.variant, t0=cfg.t0)
    counts = np.zeros(len(grid), dtype=np.int64)
    sums = np.zeros(len(grid))
    for k, t in enumerate(grid):
        counts[k], sums[k] = snapshot_sums(out.points.x[out.alive_mask(t)], cfg)
    return counts, sums, out


def simulate(cfg: RunConfig, workers: int = 1) -> SimulationResult:
    """Independent replicates from ``cfg.z0`` (empty by default) on the grid."""
    res = _map(_simulate_one, [(cfg, r) for r in range(cfg.replicates)], workers)
    grid = cfg.time_grid
    series = functools.reduce(
        stats.merge, [stats.EstimateSeries.from_samples(grid, [c / cfg.window.volume]) for c, _, _ in res])
    return SimulationResult(grid, np.array([c for c, _, _ in res]), np.array([s for _, s, _ in res]),
                            [o for _, _, o in res], series)


def write_simulation(result: SimulationResult, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    from .domain import write_snapshot_csv

    for r, o in enumerate(result.outcomes):
        if isinstance(o, sheriff.ResolutionOutcome):
            o.write_csv(out / f"replicate_{r:03d}_points.csv")
            o.write_deaths_ledger(out / f"replicate_{r:03d}_deaths.csv")
        else:
            x = o.snapshots[-1]
            write_snapshot_csv(out / f"replicate_{r:03d}_final.csv",
                               PointSet(np.zeros(len(x), int), np.arange(len(x)), x,
                                        np.zeros(len(x))))
    result.intensity.to_csv(out / "intensity.csv", "t")
    stats.write_json(out / "summary.json", result.summary())


def resume(cfg: RunConfig, points_csv: str | Path, replicate: int, t2: float, chunk: int = 1
           ) -> sheriff.ResolutionOutcome:
    """Continue an exported Sheriff replicate of :func:`simulate` up to ``t2``.

    The duel oracle is re-derived from the seed; the arrivals in
    ``[t1, t2)`` come from rain chunk ``chunk`` of that replicate.
    """
    pts, death, kns, kidx = read_snapshot_csv(points_csv)
    pts = pts.canonical() if len(pts) else PointSet.empty(cfg.window.d)
    keys = pts.keys
    pos = {int(k): i for i, k in enumerate(keys)}
    # read_snapshot_csv keeps file order; the writer emits canonical order
    killer = np.array([pos[(int(n) << 48) | int(i)] if n >= 0 else -1 for n, i in zip(kns, kidx)],
                      dtype=np.int64)
    t1 = cfg.t1
    out = sheriff.ResolutionOutcome(pts, death, killer, cfg.t0, t1, variant=cfg.variant)
    oracle = PairOracle(child_seed(cfg.seed, EXP_SIMULATE, replicate, SLOT_ORACLE), cfg.kernel, cfg.window)
    n_rain = int(np.sum(pts.namespace == int(Namespace.RAIN)))
    new = sample_rain(cfg.window, cfg.lam, t1, t2,
                      child_seed(cfg.seed, EXP_SIMULATE, replicate, SLOT_CHUNK + chunk),
                      first_index=n_rain)
    return sheriff.extend(out, oracle, t2, new)


# -- stationary sampler ----------------------------------------------------------

@dataclass
class StationaryResult:
    times: np.ndarray  # (replicates, snapshots)
    snapshots: list  # per replicate, list of position arrays
    counts: np.ndarray
    sum_pi: np.ndarray
    burn_in: float
    window_length: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def beta_per_replicate(self) -> np.ndarray:
        return self.counts.mean(axis=1) / self.volume

    volume: float = 1.0

    def beta(self) -> tuple[float, float]:
        return stats.mean_se(self.beta_per_replicate)

    def estimates(self, cfg: RunConfig) -> dict:
        b, se = self.beta()
        res, res_se = stats.stationary_density_residual(self.counts, self.sum_pi, cfg.lam, cfg.window)
        pp = stats.palm_pressure(self.counts.mean(axis=1, keepdims=True),
                                 self.sum_pi.mean(axis=1, keepdims=True), cfg.window, [0.0])
        return {"beta": b, "beta_se": se, "e0_pi": float(pp.e0_pi[0]), "e0_pi_se": float(pp.e0_pi_se[0]),
                "density_residual": res, "density_residual_se": res_se,
                "burn_in": self.burn_in, "window_length": self.window_length,
                "replicates": int(self.counts.shape[0]), "snapshots_per_replicate": int(self.counts.shape[1]),
                "diagnostics": self.diagnostics}


def _window_batches(outcome: sheriff.ResolutionOutcome, a: float, b: float, n_batches: int = 5,
                    per_batch: int = 40) -> np.ndarray:
    grid = np.linspace(a, b, n_batches * per_batch, endpoint=False)
    return sheriff.death_counts(outcome, grid).reshape(n_batches, per_batch).mean(axis=1)


def run_stationary(cfg: RunConfig, *, exp: int = EXP_STATIONARY, workers: int = 1) -> StationaryResult:
    """Burn-in from empty followed by spaced snapshots.

    Replicates advance together in chunks of W = window_lifetimes mean
    lifetimes.  Burn-in ends at the first chunk boundary t where the mean
    counts over [t - 2W, t - W) and [t - W, t) differ by less than one
    standard error (batch means pooled over replicates) and where, for every
    replicate, the coupled run from empty and from Poisson(beta1) agree on
    the central subwindow by time t.  This approximates stationarity; it
    is not an exact perfect sampler.
    """
    if cfg.lam <= 0:
        raise ValueError("the stationary sampler needs lambda > 0")
    rf, w, pol = cfg.kernel, cfg.window, cfg.burnin
    life = mean_lifetime(rf, cfg.lam)
    W = pol.window_lifetimes * life
    spacing = pol.spacing_lifetimes * life
    R = cfg.replicates
    oracles = [PairOracle(child_seed(cfg.seed, exp, r, SLOT_ORACLE), rf, w) for r in range(R)]
    n_rain = [0] * R

    def chunk_rain(r, k, a, b):
        rain = sample_rain(w, cfg.lam, a, b, child_seed(cfg.seed, exp, r, SLOT_CHUNK + k),
                           first_index=n_rain[r])
        n_rain[r] += len(rain)
        return rain

    outs = [sheriff.resolve(chunk_rain(r, 0, 0.0, W), oracles[r], W, cfg.variant) for r in range(R)]
    t, k = W, 0
    beta1 = approx.beta1(cfg.lam, rf.integral_a)
    lo, hi = cfg.subwindow
    history = []
    while True:
        if t >= 2 * W - 1e-12:
            b1 = np.array([_window_batches(o, t - 2 * W, t - W) for o in outs]) / w.volume
            b2 = np.array([_window_batches(o, t - W, t) for o in outs]) / w.volume
            diff = float(b2.mean() - b1.mean())
            se = math.sqrt(b1.var(ddof=1) / b1.size + b2.var(ddof=1) / b2.size)
            plateau = abs(diff) < se
            entry = {"t": t, "beta_prev": float(b1.mean()), "beta_last": float(b2.mean()),
                     "diff": diff, "se": se, "plateau": bool(plateau)}
            if plateau:
                taus, censored = [], 0
                for r, o in enumerate(outs):
                    z0 = sample_poisson_initial(w, beta1, 0.0, child_seed(cfg.seed, exp, r, SLOT_Z0))
                    rain = o.points.take(o.points.birth < t)
                    c = sheriffz.resolve_coupled(z0, rain, oracles[r], t)
                    tau, cens = sheriffz.coupling_time(c, lo, hi)
                    taus.append(tau)
                    censored += int(cens)
                entry["coupling_max_tau"] = float(max(taus))
                entry["coupling_censored"] = censored
                history.append(entry)
                if censored == 0:
                    break
            else:
                history.append(entry)
        if t + W > pol.max_time + 1e-12:
            raise BurnInTimeoutError(f"no plateau with coupling before t={pol.max_time}",
                                     {"history": history, "window_length": W})
        k += 1
        outs = [sheriff.extend(o, oracles[r], t + W, chunk_rain(r, k, t, t + W)) for r, o in enumerate(outs)]
        t += W
    burn = t
    t_end = burn + pol.snapshots * spacing + 0.5 * spacing
    k += 1
    outs = [sheriff.extend(o, oracles[r], t_end, chunk_rain(r, k, burn, t_end)) for r, o in enumerate(outs)]
    times = burn + spacing * np.arange(1, pol.snapshots + 1)
    snaps, counts, sums = [], np.zeros((R, len(times)), dtype=np.int64), np.zeros((R, len(times)))
    for r, o in enumerate(outs):
        rep = []
        for j, s in enumerate(times):
            x = o.points.x[o.alive_mask(s)]
            rep.append(x)
            counts[r, j], sums[r, j] = snapshot_sums(x, cfg)
        snaps.append(rep)
    lag1 = float(np.nanmean([stats.lag1_autocorrelation(c) for c in counts])) if len(times) > 2 else math.nan
    diag = {"history": history, "mean_lifetime": life, "spacing": spacing,
            "lag1_autocorrelation": lag1, "exact": False}
    return StationaryResult(np.tile(times, (R, 1)), snaps, counts, sums, burn, W, diag, w.volume)


def write_stationary(res: StationaryResult, cfg: RunConfig, out_dir: str | Path) -> None:
    import csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "stationary_snapshots.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["replicate", "snapshot", "t"] + [f"x{k + 1}" for k in range(cfg.window.d)])
        for r, rep in enumerate(res.snapshots):
            for j, x in enumerate(rep):
                for row in x:
                    wr.writerow([r, j, repr(float(res.times[r, j]))] + [repr(float(v)) for v in row])
    edges = np.linspace(0.0, min(3.0 * cfg.kernel.support_radius, cfg.window.L / 2), 61)
    stats.pair_correlation(res.snapshots, cfg.window, edges).to_csv(out / "pair_correlation.csv")
    stats.write_json(out / "stationary.json", res.estimates(cfg))


# -- transient density experiment -----------------------------------------------

def _transient_one(args):
    cfg, exp, r, grid = args
    t1 = float(grid[-1] + (grid[1] - grid[0]))
    rain, oracle = replicate_inputs(cfg, exp, r, cfg.t0, t1)
    out = sheriff.resolve(rain, oracle, t1, cfg.variant, t0=cfg.t0)
    counts = np.zeros(len(grid))
    sums = np.zeros(len(grid))
    for k, t in enumerate(grid):
        counts[k], sums[k] = snapshot_sums(out.points.x[out.alive_mask(t)], cfg)
    return counts, sums


def run_transient(cfg: RunConfig, *, n_cells: int = 40, h: float | None = None,
                  exp: int = EXP_TRANSIENT, workers: int = 1) -> dict:
    """Density ODE residual on a fine grid from the empty start; default
    step h = 0.05 mean lifetimes."""
    if h is None:
        h = 0.05 * mean_lifetime(cfg.kernel, cfg.lam)
    grid = cfg.t0 + h * np.arange(n_cells + 1)
    res = _map(_transient_one, [(cfg, exp, r, grid) for r in range(cfg.replicates)], workers)
    counts = np.array([c for c, _ in res])
    sums = np.array([s for _, s in res])
    resid = stats.ode_residual_density(counts, sums, cfg.lam, cfg.window, grid)
    return {"h": h, "grid": grid, "residual": resid, "counts": counts, "sum_pi": sums}


# -- coupling experiment -------------------------------------------------------

def _coupling_one(args):
    cfg, exp, r, grid, fine, beta_z0, check_consistency, mt_every, light = args
    t1 = cfg.t1
    rain, oracle = replicate_inputs(cfg, exp, r, cfg.t0, t1)
    seed_z0 = child_seed(cfg.seed, exp, r, SLOT_Z0)
    if cfg.z0:
        z0 = parse_z0(cfg.z0, cfg.window, cfg.t0, seed_z0)
    else:
        z0 = sample_poisson_initial(cfg.window, beta_z0, cfg.t0, seed_z0)
    c = sheriffz.resolve_coupled(z0, rain, oracle, t1, t0=cfg.t0)
    lo, hi = cfg.subwindow
    tau, cens = sheriffz.coupling_time(c, lo, hi)
    out = {"tau": tau, "censored": cens, "specials": sheriffz.specials_counts(c, grid),
           "audit": sheriffz.audit_azconds(c), "n_points": len(c.points)}
    if check_consistency:
        out["mismatches"] = len(sheriffz.consistency_check(c, oracle, rain, z0))
    if light:
        out["marked"] = np.zeros((len(fine), len(stats.MARKED_COLUMNS)))
        out["mass_transport_worst"] = 0.0
        return out
    feats = []
    for t in fine:
        Rm, Zm, Am = c.marked_masks(t)
        sel = Rm | Zm | Am
        feats.append(stats.marked_features(c.points.x[sel], Rm[sel], Zm[sel], Am[sel], cfg.kernel,
                                           cfg.window))
    out["marked"] = np.array(feats)
    worst = 0.0
    for t in grid[::mt_every]:
        Rm, Zm, Am = c.marked_masks(t)
        sel = Rm | Zm | Am
        x = c.points.x[sel]
        for special in (Zm[sel], Am[sel]):
            lhs, rhs = stats.mass_transport_pair(x, special, Rm[sel], cfg.kernel, cfg.window)
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
    out["mass_transport_worst"] = worst
    return out


def run_coupling(cfg: RunConfig, *, grid=None, exp: int = EXP_COUPLING, beta_z0: float | None = None,
                 n_consistency: int = 0, workers: int = 1, mt_every: int = 4, light: bool = False) -> dict:
    """Coupled runs from empty and from ``z0`` (Poisson(beta1) by default).

    Reports the coupling time tau(C) of the central subwindow per
    replicate, the specials intensity series with its log-linear decay fit,
    marked-density ODE residuals on an early fine grid, mass-transport
    discrepancies and audit counts.  ``light`` skips the marked features
    and mass-transport checks (their entries are then zero).
    """
    import warnings

    rf = cfg.kernel
    if beta_z0 is None:
        beta_z0 = approx.beta1(cfg.lam, rf.integral_a)
    if grid is None:
        grid = np.linspace(cfg.t0, cfg.t1, 61)
    grid = np.asarray(grid, float)
    life = mean_lifetime(rf, cfg.lam)
    fine = cfg.t0 + 0.05 * life * np.arange(41)
    items = [(cfg, exp, r, grid, fine, beta_z0, r < n_consistency, mt_every, light) for r in range(cfg.replicates)]
    res = _map(_coupling_one, items, workers)
    tau = np.array([o["tau"] for o in res])
    censored = int(sum(o["censored"] for o in res))
    if censored:
        warnings.warn(f"{censored} replicate(s) have specials alive at the horizon",
                      HorizonTooShortWarning, stacklevel=2)
    S = np.array([o["specials"] for o in res], float)
    series = stats.EstimateSeries.from_samples(grid, S / cfg.window.volume)
    # fit from two lifetimes on, while at least 20 specials remain over all replicates
    keep = (grid >= cfg.t0 + 2.0 * life) & (S.sum(axis=0) >= 20)
    fit = stats.loglinear_fit(grid[keep], series.mean[keep])
    dS = np.diff(S, axis=1) / cfg.window.volume
    inc_mean = dS.mean(axis=0)
    inc_se = dS.std(axis=0, ddof=1) / math.sqrt(len(dS)) if len(dS) > 1 else np.full(dS.shape[1], math.inf)
    increases = int(np.sum(inc_mean > 3.0 * inc_se))
    marked = stats.ode_residual_marked(np.array([o["marked"] for o in res]), cfg.lam, cfg.window, fine)
    m, se = stats.mean_se(tau)
    return {
        "replicates": cfg.replicates, "horizon": cfg.t1, "beta_z0": beta_z0,
        "tau_mean": m, "tau_se": se, "tau_ci95": [m - 1.96 * se, m + 1.96 * se], "tau_censored": censored,
        "specials": series, "decay_fit": fit, "specials_increases_beyond_3se": increases,
        "marked_residuals": marked,
        "audit_violations": int(sum(len(o["audit"]) for o in res)),
        "audit_examples": [v for o in res for v in o["audit"]][:5],
        "consistency_runs": min(n_consistency, cfg.replicates),
        "consistency_mismatches": int(sum(o.get("mismatches", 0) for o in res)),
        "mass_transport_worst": float(max(o["mass_transport_worst"] for o in res)),
    }


def write_coupling(cfg: RunConfig, out_dir: str | Path) -> dict:
    """CLI entry: episode logs per replicate plus the coupling report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    beta_z0 = approx.beta1(cfg.lam, cfg.kernel.integral_a)
    for r in range(cfg.replicates):
        rain, oracle = replicate_inputs(cfg, EXP_COUPLING, r, cfg.t0, cfg.t1)
        seed_z0 = child_seed(cfg.seed, EXP_COUPLING, r, SLOT_Z0)
        z0 = parse_z0(cfg.z0, cfg.window, cfg.t0, seed_z0) if cfg.z0 else \
            sample_poisson_initial(cfg.window, beta_z0, cfg.t0, seed_z0)
        sheriffz.resolve_coupled(z0, rain, oracle, cfg.t1, t0=cfg.t0).write_episodes_csv(
            out / f"replicate_{r:03d}_episodes.csv")
    rep = run_coupling(cfg, light=True)
    rep["specials"].to_csv(out / "specials.csv", "t")
    stats.write_json(out / "coupling.json", _report(rep))
    return rep


def _report(obj):
    if isinstance(obj, stats.EstimateSeries) or isinstance(obj, stats.ResidualSeries):
        return obj.to_dict()
    if isinstance(obj, dict):
        return {k: _report(v) for k, v in obj.items()}
    return obj


# -- acceptance criteria ---------------------------------------------------------

PROFILES = {
    "full": {
        "L": 10.0, "order_seeds": 20, "order_orderings": 20, "order_tmax": 100.0,
        "fp_instances": 50, "consistency_seeds": 100, "engine_replicates": 200,
        "stationary_replicates": 20, "stationary_snapshots": 25, "transient_replicates": 400,
        "coupling_replicates": 200, "coupling_horizon": 30.0,
    },
    "smoke": {
        "L": 6.0, "order_seeds": 5, "order_orderings": 5, "order_tmax": 20.0,
        "fp_instances": 10, "consistency_seeds": 20, "engine_replicates": 30,
        "stationary_replicates": 6, "stationary_snapshots": 10, "transient_replicates": 80,
        "coupling_replicates": 40, "coupling_horizon": 25.0,
    },
}
RUNTIME_LIMITS = {"1": 120.0, "2": 60.0, "3": 300.0, "5": 600.0}


def _gate(name: str, passed: bool, values: dict, tolerance: str, seeds: dict) -> dict:
    return {"name": name, "pass": bool(passed), "values": values, "tolerance": tolerance, "seeds": seeds}


def criterion_order_independence(cfg: RunConfig, n_seeds: int, n_orderings: int, t_max: float) -> dict:
    """Byte-identical (death, killer) arrays across shuffled enumeration orders."""
    horizons = np.geomspace(max(t_max / 100.0, 0.5), t_max, n_seeds)
    mismatches, sizes = 0, []
    for s, h in enumerate(horizons):
        rain, oracle = replicate_inputs(cfg, EXP_ORDER, s, 0.0, float(h))
        prep = sheriff.prepare(rain, oracle, float(h))
        ref = prep.run("canonical")
        ref_bytes = ref.death.tobytes() + ref.killer.tobytes()
        sizes.append(len(rain))
        for o in range(n_orderings):
            got = prep.run(("shuffled", child_seed(cfg.seed, EXP_ORDER, s, 100 + o)))
            if got.death.tobytes() + got.killer.tobytes() != ref_bytes:
                mismatches += 1
        dbl = sheriff.prepare(rain, oracle, float(h), "double").run(
            ("shuffled", child_seed(cfg.seed, EXP_ORDER, s, 99)))
        if dbl.death.tobytes() + dbl.killer.tobytes() != ref_bytes:
            mismatches += 1
    return _gate("order independence", mismatches == 0,
                 {"mismatches": mismatches, "instances": n_seeds, "orderings": n_orderings,
                  "max_points": int(max(sizes)), "min_points": int(min(sizes))},
                 "zero mismatching byte maps", {"master": cfg.seed, "experiment": EXP_ORDER})


def criterion_fixed_point(cfg: RunConfig, n_instances: int) -> dict:
    """Brute-force iteration of the death-time recursion reaches Sheriff's output."""
    bad, max_n, iters = 0, 0, []
    for s in range(n_instances):
        # horizons keep n <= 200
        h = 0.2 + 1.8 * s / max(n_instances - 1, 1)
        rain, oracle = replicate_inputs(cfg, EXP_FIXED_POINT, s, 0.0, h)
        rain = rain.take(np.arange(min(len(rain), 200)))
        pts = rain.canonical()
        pairs = oracle.pairs(pts, t_max=h)
        out = sheriff.resolve_pairs(pts, pairs, h)
        d, k, it = sheriff.fixed_point_iteration(pts, pairs)
        iters.append(it)
        max_n = max(max_n, len(pts))
        if d.tobytes() != out.death.tobytes() or k.tobytes() != out.killer.tobytes():
            bad += 1
    return _gate("death-time recursion fixed point", bad == 0,
                 {"mismatches": bad, "instances": n_instances, "max_points": max_n,
                  "max_iterations": int(max(iters))},
                 "exact equality", {"master": cfg.seed, "experiment": EXP_FIXED_POINT})


def criterion_engines(cfg: RunConfig, n_replicates: int) -> dict:
    rep = jump.compare_to_sheriff(cfg.window, cfg.kernel, cfg.lam, 20.0, [1.0, 5.0, 20.0], n_replicates,
                                  child_seed(cfg.seed, EXP_ENGINES))
    return _gate("sheriff vs jump engine", rep["max_abs_z_count"] < 3.0, rep, "all |z| < 3 on mean counts",
                 {"master": cfg.seed, "experiment": EXP_ENGINES})


def criterion_density_ode(transient: dict, stationary: StationaryResult, cfg: RunConfig) -> dict:
    resid = transient["residual"]
    res, se = stats.stationary_density_residual(stationary.counts, stationary.sum_pi, cfg.lam, cfg.window)
    ok_t = bool(np.all(resid.passes))
    ok_s = abs(res) <= 3.0 * se
    return _gate("density ODE residual", ok_t and ok_s,
                 {"transient": resid.to_dict(), "transient_cells_failing": int(np.sum(~resid.passes)),
                  "h": transient["h"], "stationary_residual": res, "stationary_residual_se": se,
                  "transient_pass": ok_t, "stationary_pass": bool(ok_s)},
                 "each cell |r| <= 3 se + trapezoid bias; stationary |r| <= 3 se",
                 {"master": cfg.seed, "experiments": [EXP_TRANSIENT, EXP_STATIONARY]})


def criterion_balance(stationary: StationaryResult, cfg: RunConfig) -> dict:
    b = stats.balance_residuals(stationary.snapshots, cfg.kernel, cfg.lam, cfg.window)
    ok1 = abs(b["R1"]) < 3.0 * b["R1_se"]
    ok2 = abs(b["R2"]) < 3.0 * b["R2_se"]
    return _gate("balance relations", ok1 and ok2, {**b, "R1_pass": bool(ok1), "R2_pass": bool(ok2)},
                 "|R1| < 3 se and |R2| < 3 se", {"master": cfg.seed, "experiment": EXP_STATIONARY})


def criterion_repulsion(stationary: StationaryResult, cfg: RunConfig) -> dict:
    rep = stats.repulsion_check(stationary.snapshots, cfg.kernel, cfg.window)
    beta = approx.second_order(cfg.kernel, cfg.lam).beta_hat
    groups = []
    for r in range(len(stationary.snapshots)):
        groups.append([sample_poisson_initial(cfg.window, beta, 0.0,
                                              child_seed(cfg.seed, EXP_POISSON, r, j)).x
                       for j in range(len(stationary.snapshots[r]))])
    ctrl = stats.repulsion_check(groups, cfg.kernel, cfg.window)
    ok_ctrl = abs(ctrl["gap"]) <= 3.0 * ctrl["gap_se"]
    return _gate("f-repulsion", rep["passes"] and ok_ctrl,
                 {"stationary": rep, "poisson_control": ctrl, "poisson_intensity": beta,
                  "control_pass": bool(ok_ctrl)},
                 "beta a >= E0 pi - 3 se; Poisson control |gap| <= 3 se",
                 {"master": cfg.seed, "experiments": [EXP_STATIONARY, EXP_POISSON]})


def criterion_lower_bound(stationary: StationaryResult, cfg: RunConfig) -> dict:
    b, se = stationary.beta()
    b1 = approx.beta1(cfg.lam, cfg.kernel.integral_a)
    ms = stats.mutual_service_bound(cfg.kernel, cfg.lam)
    return _gate("intensity lower bound", b >= b1 - 3.0 * se,
                 {"beta": b, "beta_se": se, "beta1": b1,
                  "beta2": approx.second_order(cfg.kernel, cfg.lam).beta_hat,
                  "mutual_service_bound": ms["bound"], "below_mutual_service_bound": bool(b <= ms["bound"])},
                 "beta >= sqrt(lambda/a) - 3 se", {"master": cfg.seed, "experiment": EXP_STATIONARY})


def criterion_second_order(cfg: RunConfig) -> dict:
    rf = cfg.kernel
    sol = approx.mu2_solve(rf, cfg.lam)
    closed = approx.mu2_indicator_closed_form(rf.K, cfg.lam, rf.integral_a)
    err = abs(sol.mu - closed)
    return _gate("second-order fixed point", err <= 1e-8 and sol.certified,
                 {"mu2": sol.mu, "mu2_closed_form": closed, "abs_error": err, "certified": sol.certified,
                  "beta2": cfg.lam / sol.mu, "beta2_closed_form": cfg.lam / closed},
                 "|mu2 - closed form| <= 1e-8", {})


def criterion_decay(coup: dict, cfg: RunConfig) -> dict:
    fit = coup["decay_fit"]
    ok = fit["alpha"] > 0 and fit["ci95"][0] > 0 and coup["specials_increases_beyond_3se"] == 0
    return _gate("specials decay", ok,
                 {"fit": fit, "specials_increases_beyond_3se": coup["specials_increases_beyond_3se"],
                  "specials": coup["specials"].to_dict(),
                  "marked_residuals": {k: v.to_dict() for k, v in coup["marked_residuals"].items()}},
                 "alpha > 0 with 95% CI excluding 0; no increase beyond 3 se",
                 {"master": cfg.seed, "experiment": EXP_COUPLING})


def criterion_coupling_time(coup: dict, coup2: dict, cfg: RunConfig) -> dict:
    diff = coup2["tau_mean"] - coup["tau_mean"]
    se = math.hypot(coup["tau_se"], coup2["tau_se"])
    ok = abs(diff) <= 2.0 * se and coup["tau_censored"] == 0 and coup2["tau_censored"] == 0
    keys = ("horizon", "replicates", "tau_mean", "tau_se", "tau_ci95", "tau_censored")
    return _gate("coupling time under horizon doubling", ok,
                 {"horizon_T": {k: coup[k] for k in keys}, "horizon_2T": {k: coup2[k] for k in keys},
                  "difference": diff, "difference_se": se},
                 "|mean(2T) - mean(T)| <= 2 combined se, no censoring",
                 {"master": cfg.seed, "experiments": [EXP_COUPLING, EXP_COUPLING_LONG]})


def run_suite(profile: str = "full", seed: int = 20240917, *, workers: int = 1,
              criteria=None) -> tuple[dict, dict]:
    """Run every acceptance gate; returns (verdict, timings).

    The verdict depends only on (profile, seed).  Wall-clock times, and the
    runtime gates that depend on them, live in the separate timings record.
    """
    p = PROFILES[profile]
    base = default_config(seed=seed)
    base = base.with_(window=Window(2, p["L"], "torus"))
    want = set(str(c) for c in (criteria or range(1, 14)))
    verdict = {"profile": profile, "seed": seed,
               "instance": {"d": 2, "L": p["L"], "lambda": base.lam, "kernel": base.kernel.describe()},
               "criteria": {}}
    timings: dict = {"seconds": {}}
    out = verdict["criteria"]

    def timed(key, fn, *a):
        t = time.perf_counter()
        val = fn(*a)
        timings["seconds"][key] = time.perf_counter() - t
        return val

    if "1" in want:
        out["1"] = timed("1", criterion_order_independence, base, p["order_seeds"], p["order_orderings"],
                         p["order_tmax"])
    if "2" in want:
        out["2"] = timed("2", criterion_fixed_point, base, p["fp_instances"])
    if want & {"3", "4", "11", "12", "13"}:
        ccfg = base.with_(replicates=p["coupling_replicates"], t1=p["coupling_horizon"])
        coup = timed("coupling", lambda: run_coupling(ccfg, n_consistency=p["consistency_seeds"],
                                                      workers=workers))
        ccfg2 = ccfg.with_(t1=2.0 * p["coupling_horizon"])
        coup2 = timed("coupling_doubled", lambda: run_coupling(ccfg2, exp=EXP_COUPLING_LONG, workers=workers,
                                                               light=True))
        timings["seconds"]["3"] = timings["seconds"]["coupling"]
        out["3"] = _gate("coupled vs plain resolution", coup["consistency_mismatches"] == 0,
                         {"mismatches": coup["consistency_mismatches"], "runs": coup["consistency_runs"]},
                         "zero mismatches", {"master": seed, "experiment": EXP_COUPLING})
        n_runs = coup["replicates"] + coup2["replicates"]
        viol = coup["audit_violations"] + coup2["audit_violations"]
        out["4"] = _gate("special episode audit", viol == 0,
                         {"violations": viol, "coupled_runs": n_runs,
                          "examples": coup["audit_examples"] + coup2["audit_examples"]},
                         "zero violations", {"master": seed, "experiments": [EXP_COUPLING, EXP_COUPLING_LONG]})
        out["11"] = criterion_decay(coup, ccfg)
        out["12"] = criterion_coupling_time(coup, coup2, ccfg)
        worst = coup["mass_transport_worst"]
        out["13"] = _gate("mass transport identities", worst <= 1e-9,
                          {"worst_relative_discrepancy": worst, "coupled_runs": coup["replicates"]},
                          "relative discrepancy <= 1e-9", {"master": seed})
    if "5" in want:
        out["5"] = timed("5", criterion_engines, base, p["engine_replicates"])
    if want & {"6", "7", "8", "9"}:
        scfg = base.with_(replicates=p["stationary_replicates"],
                          burnin=replace(base.burnin, snapshots=p["stationary_snapshots"]))
        st = timed("stationary", run_stationary, scfg)
        if "6" in want:
            tcfg = base.with_(replicates=p["transient_replicates"])
            tr = timed("transient", run_transient, tcfg)
            out["6"] = criterion_density_ode(tr, st, base)
        out["7"] = criterion_balance(st, base)
        out["8"] = criterion_repulsion(st, base)
        out["9"] = criterion_lower_bound(st, base)
        out["9"]["values"]["burn_in"] = st.burn_in
    if "10" in want:
        out["10"] = criterion_second_order(base)
    verdict["criteria"] = {k: out[k] for k in sorted(out, key=int)}
    verdict["all_pass"] = all(v["pass"] for v in out.values())
    timings["runtime_gates"] = {k: {"seconds": timings["seconds"][k], "limit": lim,
                                    "pass": timings["seconds"][k] < lim}
                                for k, lim in RUNTIME_LIMITS.items() if k in timings["seconds"]}
    return verdict, timings


def write_suite(verdict: dict, timings: dict, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stats.write_json(out / "verdict.json", verdict)
    with open(out / "timings.json", "w") as fh:
        json.dump(stats.jsonable(timings), fh, indent=2, sort_keys=True)
    return out / "verdict.json"


def verdict_lines(verdict: dict) -> list[str]:
    return [f"criterion {k:>2} {'PASS' if v['pass'] else 'FAIL'}  {v['name']}"
            for k, v in verdict["criteria"].items()]


__all__ = [
    "BurnInTimeoutError",
    "HorizonTooShortWarning",
    "PROFILES",
    "SimulationResult",
    "StationaryResult",
    "child_seed",
    "mean_lifetime",
    "parse_z0",
    "resume",
    "run_coupling",
    "run_stationary",
    "run_suite",
    "run_transient",
    "simulate",
    "verdict_lines",
    "write_coupling",
    "write_simulation",
    "write_stationary",
    "write_suite",
]
