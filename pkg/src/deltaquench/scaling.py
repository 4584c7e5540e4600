"""Fits of the orthogonalization law ``1 - |nu(t, N)| = beta(t) N^gamma(t)``.

Per time, ``ln(1 - |nu|)`` is linear in ``ln N``; the resulting ``beta(t)`` and
``gamma(t)`` are then fitted to the two time-law shapes used for coherent
(power law) and incoherent (affine ``gamma``) inputs. Growth curves
``a (N^b - 1)`` are fitted by Gauss-Newton.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EPS_FLOOR",
    "EPS_CEILING",
    "FitError",
    "ScalingPoint",
    "ScalingFit",
    "fit_scaling_at_time",
    "fit_scaling",
    "fit_time_laws",
    "fit_growth_curve",
    "default_fit_times",
]

EPS_FLOOR = 1e-6
EPS_CEILING = 1e-3


class FitError(ValueError):
    """Not enough usable data for a fit."""


@dataclass(frozen=True)
class ScalingPoint:
    beta: float
    gamma: float
    r2: float
    n_used: int


def default_fit_times(count: int = 30, tmin: float = 0.01, tmax: float = 1.0) -> np.ndarray:
    return np.geomspace(tmin, tmax, count)


def _linregress(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Intercept, slope and R^2 of an ordinary least-squares line."""
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    slope = float(dx @ dy) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    syy = float(dy @ dy)
    r2 = 1.0 - float(resid @ resid) / syy if syy > 0 else 1.0
    return float(intercept), slope, r2


def _sorted_items(data) -> tuple[np.ndarray, np.ndarray]:
    items = sorted((float(n), float(v)) for n, v in dict(data).items())
    arr = np.asarray(items, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def fit_scaling_at_time(data, *, floor: float = EPS_FLOOR, ceiling: float = EPS_CEILING) -> ScalingPoint:
    """Fit ``1 - |nu| = beta N^gamma`` to a map ``N -> |nu(t, N)|``.

    Points with ``1 - |nu|`` outside ``[floor, 1 - ceiling]`` are dropped.
    """
    ns, nu = _sorted_items(data)
    decay = 1.0 - nu
    keep = (decay >= floor) & (decay <= 1.0 - ceiling) & (ns > 0)
    if np.count_nonzero(~keep):
        warnings.warn(f"{np.count_nonzero(~keep)} point(s) outside the admissible band were dropped", stacklevel=2)
    if np.count_nonzero(keep) < 3:
        raise FitError("fewer than 3 admissible points")
    intercept, slope, r2 = _linregress(np.log(ns[keep]), np.log(decay[keep]))
    return ScalingPoint(math.exp(intercept), slope, r2, int(np.count_nonzero(keep)))


@dataclass
class ScalingFit:
    t_grid: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    r2: np.ndarray
    n_range: tuple[int, int]
    k: float | None = None
    state_family: str = ""
    beta_law: dict | None = None
    gamma_law: dict | None = None
    n_used: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.beta) & np.isfinite(self.gamma)

    def as_dict(self) -> dict:
        def clean(values):
            return [None if not math.isfinite(v) else float(v) for v in np.asarray(values, dtype=float)]

        k = self.k
        return {
            "k": "inf" if k is not None and math.isinf(k) else k,
            "state_family": self.state_family,
            "N_range": [int(self.n_range[0]), int(self.n_range[1])],
            "t_grid": clean(self.t_grid),
            "beta": clean(self.beta),
            "gamma": clean(self.gamma),
            "r2": clean(self.r2),
            "beta_law": self.beta_law,
            "gamma_law": self.gamma_law,
        }


def fit_scaling(t_grid, abs_nu_by_n, *, k=None, state_family: str = "", floor=EPS_FLOOR, ceiling=EPS_CEILING) -> ScalingFit:
    """Per-time fits from ``{N: |nu(t_grid)|}``; failed times hold NaN."""
    t = np.asarray(t_grid, dtype=float)
    ns = sorted(int(n) for n in abs_nu_by_n)
    table = {n: np.asarray(abs_nu_by_n[n], dtype=float) for n in ns}
    beta = np.full(t.size, np.nan)
    gamma = np.full(t.size, np.nan)
    r2 = np.full(t.size, np.nan)
    used = np.zeros(t.size, dtype=int)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i in range(t.size):
            try:
                pt = fit_scaling_at_time({n: table[n][i] for n in ns}, floor=floor, ceiling=ceiling)
            except FitError:
                continue
            beta[i], gamma[i], r2[i], used[i] = pt.beta, pt.gamma, pt.r2, pt.n_used
    return ScalingFit(t, beta, gamma, r2, (ns[0], ns[-1]), k=k, state_family=state_family, n_used=used)


def fit_time_laws(fit: ScalingFit, diagonal_flavor: bool) -> ScalingFit:
    """Fit ``beta = b0 t^b1`` and ``gamma = g0 t^g1`` (coherent) or ``g0 + g1 t`` (diagonal)."""
    t = fit.t_grid
    ok = fit.valid & (t > 0)
    if np.count_nonzero(ok) < 2:
        raise FitError("fewer than 2 valid per-time fits")
    bpos = ok & (fit.beta > 0)
    if np.count_nonzero(ok & ~bpos):
        warnings.warn("non-positive beta values excluded", stacklevel=2)
    b_int, b_slope, b_r2 = _linregress(np.log(t[bpos]), np.log(fit.beta[bpos]))
    beta_law = {"b0": math.exp(b_int), "b1": b_slope, "r2": b_r2}
    if diagonal_flavor:
        g_int, g_slope, g_r2 = _linregress(t[ok], fit.gamma[ok])
        gamma_law = {"form": "affine", "g0": g_int, "g1": g_slope, "r2": g_r2}
    else:
        gpos = ok & (fit.gamma > 0)
        if np.count_nonzero(ok & ~gpos):
            warnings.warn("non-positive gamma values excluded from the power-law fit", stacklevel=2)
        if np.count_nonzero(gpos) < 2:
            raise FitError("fewer than 2 positive gamma values for a power law")
        g_int, g_slope, g_r2 = _linregress(np.log(t[gpos]), np.log(fit.gamma[gpos]))
        gamma_law = {"form": "power", "g0": math.exp(g_int), "g1": g_slope, "r2": g_r2}
    fit.beta_law, fit.gamma_law = beta_law, gamma_law
    return fit


def _endpoint_start(n: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Exact interpolant of ``a (N^b - 1)`` through the two extreme usable points."""
    use = (n > 1) & (y > 0)
    if np.count_nonzero(use) < 2:
        return 1.0, 0.5
    n1, y1 = n[use][0], y[use][0]
    n2, y2 = n[use][-1], y[use][-1]
    target = y2 / y1
    lo, hi = -20.0, 20.0

    def ratio(b):
        if abs(b) < 1e-12:
            return math.log(n2) / math.log(n1)
        return math.expm1(b * math.log(n2)) / math.expm1(b * math.log(n1))

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ratio(mid) < target:
            lo = mid
        else:
            hi = mid
    b = 0.5 * (lo + hi)
    return y2 / math.expm1(b * math.log(n2)), b


def fit_growth_curve(data, *, max_iter: int = 200, tol: float = 1e-14) -> tuple[float, float]:
    """Least-squares fit of ``y = a (N^b - 1)``; returns ``(a, b)``."""
    n, y = _sorted_items(data)
    if n.size < 4:
        raise FitError("need at least 4 points")
    if np.any(y < 0):
        raise FitError("values must be non-negative")
    if np.all(y == y[0]):
        raise FitError("degenerate data (all values equal)")
    if np.any(n <= 0):
        raise FitError("N must be positive")
    a, b = _endpoint_start(n, y)
    logn = np.log(n)

    def sse(a_, b_):
        r = y - a_ * np.expm1(b_ * logn)
        return float(r @ r)

    cur = sse(a, b)
    for _ in range(max_iter):
        g = np.expm1(b * logn)
        jac = np.stack([g, a * logn * np.exp(b * logn)], axis=1)
        resid = y - a * g
        step, *_ = np.linalg.lstsq(jac, resid, rcond=None)
        lam = 1.0
        while lam > 1e-10:
            na, nb = a + lam * step[0], b + lam * step[1]
            new = sse(na, nb)
            if new <= cur:
                break
            lam *= 0.5
        else:
            break
        converged = abs(na - a) <= tol * max(1.0, abs(a)) and abs(nb - b) <= tol * max(1.0, abs(b))
        a, b, cur = na, nb, new
        if converged or cur == 0.0:
            break
    return float(a), float(b)
