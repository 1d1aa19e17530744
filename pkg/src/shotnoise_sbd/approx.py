"""Closure approximations of the stationary intensity and pair correlation.

Order 1 pretends the configuration is Poisson; order 2 closes the second
balance relation with a product form for the third moment; order 3 closes
one level higher and leads to a linear integral equation for g = rho2/beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .response import ResponseFunction, integral_a


class BracketError(RuntimeError):
    """No sign change found while expanding the bisection bracket."""


class GridTooSmallError(ValueError):
    """The radial grid does not reach three support radii."""


@dataclass
class ApproxResult:
    order: int
    beta_hat: float
    mu_hat: float | None = None
    r: np.ndarray | None = None
    g: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"order": self.order, "beta_hat": self.beta_hat, "mu_hat": self.mu_hat,
               "diagnostics": self.diagnostics}
        if self.r is not None:
            out["r"] = self.r.tolist()
            out["g_hat"] = self.g.tolist()
        return out


def beta1(lam: float, a: float) -> float:
    """sqrt(lambda / a)."""
    if lam <= 0 or a <= 0:
        raise ValueError("need lambda > 0 and a > 0")
    return math.sqrt(lam / a)


def mu2_rhs(rf: ResponseFunction, lam: float, mu: float) -> float:
    """lambda * int f / (f + mu) over R^d."""
    return lam * rf.radial_integral(lambda r, fr: fr / (fr + mu), epsrel=1e-11)


@dataclass(frozen=True)
class Mu2Solution:
    mu: float
    bracket: tuple[float, float]
    residual_lo: float
    residual_hi: float
    residual: float
    iterations: int

    @property
    def certified(self) -> bool:
        """LHS - RHS changes sign across the final bracket."""
        return self.residual_lo < 0.0 < self.residual_hi


def mu2_solve(rf: ResponseFunction, lam: float, *, xtol: float = 1e-13) -> Mu2Solution:
    """Unique root of mu = lambda int f/(f + mu) by bisection.

    The left side increases from 0 and the right side decreases, so
    ``mu - rhs(mu)`` has exactly one sign change.  The bracket starts at
    ``[1e-12, lambda a]`` and is widened by factors of 10 as needed.
    """
    if lam <= 0:
        raise ValueError("need lambda > 0")
    a = integral_a(rf)

    def g(mu):
        return mu - mu2_rhs(rf, lam, mu)

    lo, hi = 1e-12, max(lam * a, 1e-11)
    for _ in range(60):
        if g(lo) < 0:
            break
        lo /= 10.0
    else:
        raise BracketError("could not find a lower bracket")
    for _ in range(60):
        if g(hi) > 0:
            break
        hi *= 10.0
    else:
        raise BracketError("could not find an upper bracket")
    mu, info = optimize.bisect(g, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500,
                               full_output=True)
    # final certificate: tiny bracket around the root with opposite signs
    step = max(xtol, 4 * np.finfo(float).eps * mu)
    b_lo, b_hi = max(mu - step, 0.0), mu + step
    return Mu2Solution(mu, (b_lo, b_hi), g(b_lo), g(b_hi), g(mu), info.iterations)


def mu2_indicator_closed_form(K: float, lam: float, a: float) -> float:
    """Indicator kernel: mu (K + mu) = lambda a, so mu = (-K + sqrt(K^2 + 4 lambda a)) / 2."""
    return 0.5 * (-K + math.sqrt(K * K + 4.0 * lam * a))


def g2_curve(rf: ResponseFunction, lam: float, r, mu: float | None = None) -> np.ndarray:
    """g2(r) = lambda / (f(r) + mu2); equals beta2 = lambda / mu2 outside the support."""
    if mu is None:
        mu = mu2_solve(rf, lam).mu
    return lam / (rf.eval(np.asarray(r, float)) + mu)


def second_order(rf: ResponseFunction, lam: float, r=None) -> ApproxResult:
    sol = mu2_solve(rf, lam)
    if r is None:
        r = np.linspace(0.0, 3.0 * rf.support_radius, 301)
    r = np.asarray(r, float)
    return ApproxResult(2, lam / sol.mu, sol.mu, r, g2_curve(rf, lam, r, sol.mu), {
        "bracket": list(sol.bracket), "residual": sol.residual, "certified": sol.certified,
        "iterations": sol.iterations})


# -- third order ---------------------------------------------------------------

def _z_nodes(d: int, s: float, reach: float, n_rad: int, n_ang: int):
    """Quadrature nodes for z around x1 = 0 with x2 = (s, 0, ...).

    Returns distances |x1 - z|, |x2 - z| and weights, covering the ball of
    radius ``s + reach`` around x1 (midpoint rule)."""
    rho_max = s + reach
    rho = (np.arange(n_rad) + 0.5) * rho_max / n_rad
    if d == 1:
        u = np.concatenate([-rho[::-1], rho])
        w = np.full(len(u), rho_max / n_rad)
        return np.abs(u), np.abs(u - s), w
    if d != 2:
        raise ValueError("third-order solver supports d <= 2")
    theta = (np.arange(n_ang) + 0.5) * math.pi / n_ang
    R, T = np.meshgrid(rho, theta, indexing="ij")
    d1 = R.ravel()
    d2 = np.sqrt(np.maximum(R**2 + s * s - 2 * R * s * np.cos(T), 0.0)).ravel()
    # the half-plane theta in (0, pi) is doubled by reflection symmetry
    w = (2.0 * (rho_max / n_rad) * (math.pi / n_ang) * R).ravel()
    return d1, d2, w


def _interp_matrix(grid: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Rows of linear-interpolation weights on ``grid`` (constant beyond the ends)."""
    m = len(grid)
    p = np.clip(pts, grid[0], grid[-1])
    k = np.clip(np.searchsorted(grid, p, side="right") - 1, 0, m - 2)
    t = (p - grid[k]) / (grid[k + 1] - grid[k])
    W = np.zeros((len(pts), m))
    W[np.arange(len(pts)), k] = 1.0 - t
    W[np.arange(len(pts)), k + 1] += t
    return W


def volterra3_solve(rf: ResponseFunction, lam: float, grid=None, *, damping: float = 0.5,
                    max_iter: int = 2000, tol: float = 1e-7, n_rad: int = 160,
                    n_ang: int = 96) -> ApproxResult:
    """Damped Picard iteration for the third-order closure of g = rho2 / beta.

    g(s) = 2 lambda j(s) - lambda j(s) int (g(|x1 - z|) + g(|x2 - z|)) h dz,
    with s = |x1 - x2|, h = (f1z + f2z) / (2 (f12 + f1z + f2z) + 3 mu) and
    j = 1 / (2 f12 + lambda int h dz); mu is the second-order value.
    Both g-terms contribute equally by the reflection swapping x1 and x2.
    Non-convergence is reported in the diagnostics, not raised.
    """
    if rf.d > 2:
        raise ValueError("third-order solver supports d <= 2")
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    reach = rf.support_radius
    if grid is None:
        grid = np.linspace(0.0, 3.0 * reach, 91)
    grid = np.asarray(grid, float)
    if grid[-1] < 3.0 * reach * (1 - 1e-12):
        raise GridTooSmallError("radial grid must reach three support radii")
    sol = mu2_solve(rf, lam)
    mu = sol.mu
    m = len(grid)
    c = np.empty(m)
    M = np.empty((m, m))
    Hs = np.empty(m)
    for i, s in enumerate(grid):
        d1, d2, w = _z_nodes(rf.d, float(s), reach, n_rad, n_ang)
        f1, f2 = rf.eval(d1), rf.eval(d2)
        f12 = float(rf.eval(s))
        h = (f1 + f2) / (2.0 * (f12 + f1 + f2) + 3.0 * mu)
        H = float(np.sum(h * w))
        j = 1.0 / (2.0 * f12 + lam * H)
        Hs[i] = H
        c[i] = 2.0 * lam * j
        M[i] = 2.0 * lam * j * ((h * w) @ _interp_matrix(grid, d1))
    g = g2_curve(rf, lam, grid, mu)
    history = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new = (1.0 - damping) * g + damping * (c - M @ g)
        upd = float(np.max(np.abs(new - g)))
        history.append(upd)
        g = new
        if upd < tol:
            converged = True
            break
    diag = {
        "converged": converged, "iterations": it, "final_update": history[-1] if history else 0.0,
        "update_monotone": bool(np.all(np.diff(history) <= 0)) if len(history) > 1 else True,
        "mu2": mu, "damping": damping, "contraction_norm": float(np.max(np.abs(M).sum(axis=1))),
        "tail_over_beta2": float(g[-1] / (lam / mu)),
    }
    return ApproxResult(3, float(g[-1]), mu, grid, g, diag)


def approximate(rf: ResponseFunction, lam: float, order: int, r=None, **kw) -> ApproxResult:
    if order == 1:
        return ApproxResult(1, beta1(lam, integral_a(rf)))
    if order == 2:
        return second_order(rf, lam, r)
    if order == 3:
        return volterra3_solve(rf, lam, r, **kw)
    raise ValueError("order must be 1, 2 or 3")


__all__ = [
    "ApproxResult",
    "BracketError",
    "GridTooSmallError",
    "Mu2Solution",
    "approximate",
    "beta1",
    "g2_curve",
    "mu2_indicator_closed_form",
    "mu2_rhs",
    "mu2_solve",
    "second_order",
    "volterra3_solve",
]
