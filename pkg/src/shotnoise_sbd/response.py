"""Response functions: the distance kernel that turns a configuration into
per-point death rates."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import integrate, special

SUPPORTED_DIMENSIONS = (1, 2, 3)
# relative cutoff for kernels with unbounded support
TAIL_CUTOFF = 1e-12
MONOTONICITY_GRID = 10_000


class DivergentIntegralError(ValueError):
    """Quadrature of the kernel did not converge (integrability violated)."""


class KernelKind(str, Enum):
    INDICATOR = "indicator"
    TRUNCATED_POWER = "truncated-power"
    EXPONENTIAL = "exponential"
    TABULATED = "tabulated"


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def shell_volume(r_lo, r_hi, d: int):
    """Volume of the spherical shell r_lo <= |x| < r_hi in dimension d."""
    return unit_ball_volume(d) * (np.asarray(r_hi, float) ** d - np.asarray(r_lo, float) ** d)


@dataclass(frozen=True)
class ResponseFunction:
    """Radial kernel ``f`` with bound ``K``, support radius and integral ``a``.

    Use the constructors :meth:`indicator`, :meth:`truncated_power`,
    :meth:`exponential` and :meth:`tabulated` rather than the raw initializer.
    ``params`` is kind specific:

    * indicator: ``(K, R)``; f(r) = K for 0 < r <= R
    * truncated-power: ``(K, R, p)``; f(r) = K (1 - r/R)^p for 0 < r < R
    * exponential: ``(K, rate)``; f(r) = K exp(-rate r)
    * tabulated: ``(r_0, ..., r_m, f_0, ..., f_m)``; linear interpolation,
      zero beyond ``r_m``
    """

    kind: KernelKind
    params: tuple[float, ...]
    d: int
    K: float = field(init=False)
    support_radius: float = field(init=False)

    def __post_init__(self):
        if self.d not in SUPPORTED_DIMENSIONS:
            raise ValueError(f"dimension must be one of {SUPPORTED_DIMENSIONS}, got {self.d}")
        kind = KernelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        if kind is KernelKind.INDICATOR:
            K, R = p
            bound, support = K, R
        elif kind is KernelKind.TRUNCATED_POWER:
            K, R, power = p
            if power < 0:
                raise ValueError("truncated-power exponent must be >= 0")
            bound, support = K, R
        elif kind is KernelKind.EXPONENTIAL:
            K, rate = p
            if rate <= 0:
                raise ValueError("exponential kernel needs rate > 0")
            bound = K
            support = math.log(1.0 / TAIL_CUTOFF) / rate if K > 0 else 0.0
        else:
            r, v = self._table()
            if len(r) < 2 or np.any(np.diff(r) <= 0) or r[0] < 0:
                raise ValueError("tabulated kernel needs >= 2 strictly increasing radii >= 0")
            bound = float(np.max(v))
            support = float(r[-1])
        if bound < 0 or not math.isfinite(bound):
            raise ValueError(f"kernel bound must be finite and >= 0, got {bound}")
        object.__setattr__(self, "K", float(bound))
        object.__setattr__(self, "support_radius", float(support))

    # -- constructors -----------------------------------------------------
    @classmethod
    def indicator(cls, K: float = 1.0, R: float = 1.0, d: int = 2) -> "ResponseFunction":
        return cls(KernelKind.INDICATOR, (K, R), d)

    @classmethod
    def truncated_power(cls, K: float, R: float, power: float, d: int = 2) -> "ResponseFunction":
        return cls(KernelKind.TRUNCATED_POWER, (K, R, power), d)

    @classmethod
    def exponential(cls, K: float, rate: float, d: int = 2) -> "ResponseFunction":
        return cls(KernelKind.EXPONENTIAL, (K, rate), d)

    @classmethod
    def tabulated(cls, radii: Sequence[float], values: Sequence[float], d: int = 2) -> "ResponseFunction":
        radii = [float(r) for r in radii]
        values = [float(v) for v in values]
        if len(radii) != len(values):
            raise ValueError("radii and values differ in length")
        return cls(KernelKind.TABULATED, tuple(radii) + tuple(values), d)

    @classmethod
    def from_csv(cls, path: str | Path, d: int = 2) -> "ResponseFunction":
        """Read a two-column ``r,f`` table (header optional)."""
        radii, values = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    r, v = float(row[0]), float(row[1])
                except ValueError:
                    continue  # header line
                radii.append(r)
                values.append(v)
        return cls.tabulated(radii, values, d)

    def scaled(self, factor: float) -> "ResponseFunction":
        """Return ``factor * f``."""
        p = self.params
        if self.kind is KernelKind.TABULATED:
            m = len(p) // 2
            return ResponseFunction(self.kind, p[:m] + tuple(factor * v for v in p[m:]), self.d)
        return ResponseFunction(self.kind, (factor * p[0],) + p[1:], self.d)

    # -- evaluation -------------------------------------------------------
    def _table(self):
        m = len(self.params) // 2
        return np.asarray(self.params[:m]), np.asarray(self.params[m:])

    def _raw(self, r: np.ndarray) -> np.ndarray:
        kind, p = self.kind, self.params
        if kind is KernelKind.INDICATOR:
            return np.where(r <= p[1], p[0], 0.0)
        if kind is KernelKind.TRUNCATED_POWER:
            K, R, power = p
            inside = r < R
            base = np.where(inside, 1.0 - r / R, 0.0)
            return np.where(inside, K * base**power, 0.0)
        if kind is KernelKind.EXPONENTIAL:
            return p[0] * np.exp(-p[1] * r)
        radii, values = self._table()
        return np.interp(r, radii, values, left=values[0], right=0.0)

    def eval(self, r):
        """f(r); vectorised, and exactly zero at r = 0."""
        arr = np.asarray(r, dtype=np.float64)
        out = np.where(arr > 0.0, self._raw(np.maximum(arr, 0.0)), 0.0)
        if out.ndim == 0:
            return float(out)
        return out

    __call__ = eval

    # -- integrals --------------------------------------------------------
    def radial_integral(self, g, *, epsrel: float = 1e-11) -> float:
        """``d nu_d int_0^inf g(r, f(r)) r^(d-1) dr`` over the truncated support.

        ``g`` receives ``(r, f(r))``.  Tabulated kernels are split at their
        knots so the quadrature never straddles a kink.
        """
        d = self.d
        upper = self.support_radius
        breaks = []
        if self.kind is KernelKind.TABULATED:
            breaks = [float(b) for b in self._table()[0] if 0.0 < b < upper]
        edges = [0.0] + breaks + [upper]
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi <= lo:
                continue
            with warnings.catch_warnings():
                warnings.simplefilter("error", integrate.IntegrationWarning)
                try:
                    val, _ = integrate.quad(
                        lambda r: g(r, self.eval(r)) * r ** (d - 1),
                        lo, hi, epsabs=0.0, epsrel=epsrel, limit=500,
                    )
                except integrate.IntegrationWarning as exc:
                    raise DivergentIntegralError(str(exc)) from exc
            total += val
        return d * unit_ball_volume(d) * total

    @property
    def integral_a(self) -> float:
        return integral_a(self)

    def describe(self) -> dict:
        return {"kind": self.kind.value, "params": list(self.params), "d": self.d,
                "K": self.K, "support_radius": self.support_radius}


def integral_a(rf: ResponseFunction) -> float:
    """``a = int_{R^d} f(|x|) dx``; closed form where one exists."""
    d = rf.d
    if rf.kind is KernelKind.INDICATOR:
        K, R = rf.params
        return K * unit_ball_volume(d) * R**d
    if rf.kind is KernelKind.EXPONENTIAL:
        # truncation at support_radius is ignored here: the tail mass is < 1e-11 relative
        K, rate = rf.params
        return K * d * unit_ball_volume(d) * math.gamma(d) / rate**d
    value = rf.radial_integral(lambda r, fr: fr)
    if not math.isfinite(value):
        raise DivergentIntegralError("kernel integral is not finite")
    return value


def validate(rf: ResponseFunction) -> list[str]:
    """Names of the violated kernel assumptions (empty when all hold).

    Assumption0: f >= 0 and f(0) = 0 for the kernel as specified;
    Assumption1: 0 < a < inf; Assumption2: f non-increasing on (0, inf),
    sampled on a geometric grid of ``MONOTONICITY_GRID`` radii;
    Assumption3: f bounded by a finite K.
    """
    out = []
    radii = np.geomspace(1e-6 * max(rf.support_radius, 1e-300), max(rf.support_radius, 1e-300) * 1.5,
                         MONOTONICITY_GRID)
    if rf.kind is KernelKind.TABULATED:
        knots, values = rf._table()
        radii = np.union1d(radii, knots[knots > 0])
        raw_at_zero = float(np.interp(0.0, knots, values, left=values[0], right=0.0))
        negative = bool(np.any(values < 0))
    else:
        raw_at_zero = 0.0
        negative = rf.params[0] < 0
    vals = rf.eval(radii)
    if negative or raw_at_zero != 0.0 or np.any(vals < 0):
        out.append("Assumption0")
    try:
        a = integral_a(rf)
        if not (0.0 < a < math.inf):
            out.append("Assumption1")
    except DivergentIntegralError:
        out.append("Assumption1")
    if np.any(np.diff(vals) > 1e-12 * max(rf.K, 1.0)):
        out.append("Assumption2")
    if not math.isfinite(rf.K) or np.any(vals > rf.K * (1 + 1e-12)):
        out.append("Assumption3")
    return out
