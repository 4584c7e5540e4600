"""Work statistics of the quench: MHQ distribution, non-positivity, moments, QSL.

The average work equals ``<V>`` in the initial state, so it is computed from
finite sums over the state's support and never touches the basis cutoff. The
second moment ``<V^2>`` involves ``sum_m psi_m(0)^2``, which diverges; it is
returned at an explicit cutoff together with its measured growth exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import psi0_squared_even, psi_at_origin
from .echo import EchoSeries, QuasiprobTable
from .states import InitialState

__all__ = [
    "WorkReport",
    "nonpositivity",
    "mhq_histogram",
    "average_work_direct",
    "average_work_moment",
    "truncated_variance",
    "variance_growth_exponent",
    "qsl_time",
    "qsl_series",
    "bures_angle",
    "first_local_minimum",
    "work_slope",
]


def nonpositivity(table: QuasiprobTable) -> float:
    """``-1 + sum |Re q|``."""
    return float(np.abs(table.q.real).sum() - 1.0)


def mhq_histogram(table: QuasiprobTable, bin_width: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Sum ``Re q`` into bins of ``bin_width`` centred on multiples of the width.

    Returns ``(centres, sums)`` for the non-empty bin range.
    """
    if not bin_width > 0:
        raise ValueError("bin width must be positive")
    idx = np.rint(table.w.ravel() / bin_width).astype(np.int64)
    lo = int(idx.min())
    sums = np.bincount(idx - lo, weights=table.q.real.ravel())
    centres = (np.arange(sums.size) + lo) * bin_width
    return centres, sums


def _origin_amplitude(levels, coeffs) -> complex:
    return complex(np.dot(coeffs, psi_at_origin(levels)))


def average_work_direct(state: InitialState, k: float) -> float:
    """``<psi|V|psi>`` with ``V = k delta(x)``, from the state's own support.

    Pure single particle: ``k |sum alpha_n psi_n(0)|^2``; diagonal:
    ``k sum p_n psi_n(0)^2``. Two-fermion states ``sum_e alpha_e |0 e>`` get the
    one-body Slater-Condon value ``k psi_0(0)^2 + k |sum alpha_e psi_e(0)|^2``
    (diagonal: the same with populations), assuming the common orbital 0.
    """
    if math.isinf(k) or math.isnan(k):
        raise ValueError("average work diverges at k = inf")
    if state.is_two_fermion:
        pairs = state.levels
        if np.any(pairs[:, 0] != 0):
            raise ValueError("two-fermion average work assumes every pair contains level 0")
        z0 = psi_at_origin(0)
        ze = psi_at_origin(pairs[:, 1])
        if state.is_pure:
            inner = abs(complex(np.dot(state.amplitudes, ze))) ** 2
        else:
            inner = float(np.dot(state.weights, ze**2))
        return float(k * (z0 * z0 + inner))
    if state.is_pure:
        return float(k * abs(_origin_amplitude(state.levels, state.amplitudes)) ** 2)
    return float(k * np.dot(state.weights, psi_at_origin(state.levels) ** 2))


def average_work_moment(table: QuasiprobTable) -> float:
    """First moment ``sum Re(q) w`` of the quasiprobability table."""
    if math.isinf(table.k):
        raise ValueError("first moment diverges at k = inf")
    w = table.final_energies[None, :] - table.init_energies[:, None]
    return float(np.sum(table.q.real * w))


def truncated_variance(state: InitialState, k: float, cutoff: int) -> float:
    """``<V^2>`` with the intermediate sum cut at ``cutoff`` even levels.

    ``<V^2> = k^2 |sum alpha_n psi_n(0)|^2 sum_m psi_m(0)^2`` (pure) or
    ``k^2 sum p_n psi_n(0)^2 sum_m psi_m(0)^2`` (diagonal).
    """
    if state.is_two_fermion:
        raise NotImplementedError("second moment is only provided for single particles")
    if math.isinf(k):
        raise ValueError("variance diverges at k = inf")
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    return float(average_work_direct(state, k) * k * _inner_sum(cutoff))


def _inner_sum(cutoff: int) -> float:
    return float(psi0_squared_even(cutoff).sum())


def variance_growth_exponent(cutoffs) -> float:
    """Log-log slope of ``sum_{m < 2M} psi_m(0)^2`` over the given cutoffs ``M``."""
    cutoffs = np.asarray(sorted(set(int(c) for c in cutoffs)))
    if cutoffs.size < 2:
        raise ValueError("need at least two cutoffs")
    sums = np.cumsum(psi0_squared_even(int(cutoffs.max())))[cutoffs - 1]
    slope, _ = np.polyfit(np.log(cutoffs), np.log(sums), 1)
    return float(slope)


def bures_angle(series: EchoSeries) -> np.ndarray:
    """``arccos |nu(t)|``, with ``|nu|`` clipped to [0, 1] against roundoff."""
    return np.arccos(np.clip(series.abs, 0.0, 1.0))


def qsl_series(series: EchoSeries, avg_work: float) -> np.ndarray:
    """``(1 - |nu(t)|) / |<w>|`` at every grid time."""
    if avg_work == 0:
        raise ValueError("zero average work")
    return (1.0 - series.abs) / abs(avg_work)


def qsl_time(series: EchoSeries, avg_work: float, tau: float) -> float:
    """``tau_QSL = (1 - |nu(tau)|) / |<w>|``; ``tau`` must be a grid time."""
    if avg_work == 0:
        raise ValueError("zero average work")
    i = int(np.argmin(np.abs(series.t - tau)))
    tol = 1e-9 * max(1.0, abs(tau))
    if abs(series.t[i] - tau) > tol:
        raise ValueError(f"tau={tau} is not on the series grid")
    return float((1.0 - abs(series.nu[i])) / abs(avg_work))


def first_local_minimum(series: EchoSeries, tmax: float = math.pi) -> float:
    """First interior local minimum of ``|nu|`` in ``(t0, tmax]``.

    Falls back to the global minimum of the window when ``|nu|`` is monotone.
    """
    a = series.abs
    window = np.nonzero(series.t <= tmax + 1e-12)[0]
    if window.size < 3:
        raise ValueError("window holds fewer than 3 grid points")
    a = a[window]
    interior = np.nonzero((a[1:-1] < a[:-2]) & (a[1:-1] <= a[2:]))[0]
    i = int(interior[0] + 1) if interior.size else int(np.argmin(a))
    return float(series.t[window[i]])


def work_slope(state: InitialState, k: float) -> float:
    """``<w> / (k sqrt(N))`` with ``N`` the number of populated components."""
    return average_work_direct(state, k) / (k * math.sqrt(len(state.levels)))


@dataclass
class WorkReport:
    state: str
    k: float
    cutoff: int
    n_re: float
    avg_work_direct: float
    avg_work_moment: float | None
    slope_fit: float
    variance_value: float | None
    variance_cutoff: int
    variance_growth_exponent: float | None
    tau: float | None
    tau_qsl: float | None
    mhq_bins: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "state": self.state,
            "k": "inf" if math.isinf(self.k) else self.k,
            "cutoff": self.cutoff,
            "n_re": self.n_re,
            "avg_work": {"direct": self.avg_work_direct, "moment": self.avg_work_moment, "slope_fit": self.slope_fit},
            "variance": {
                "value": self.variance_value,
                "cutoff": self.variance_cutoff,
                "growth_exponent": self.variance_growth_exponent,
            },
            "tau_qsl": {"tau": self.tau, "value": self.tau_qsl},
        }
