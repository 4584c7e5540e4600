"""Even-sector spectrum of the trap with a repulsive delta defect at the origin.

Two backends produce a :class:`PerturbedSpectrum`:

* ``strong_coupling`` (``k = inf``): energies ``m + 3/2`` and closed-form
  overlaps, built from the ground-state column in log-Gamma arithmetic and a
  ratio recursion in the unperturbed index.
* ``finite_k``: the rank-one update ``diag(E) + k z z^T`` of the truncated even
  sector, solved root by root from the secular equation. Each root lies in its
  own pole interval, so brackets are exact and the solver works with the offset
  from the lower pole to keep ``E' - E_n`` free of cancellation.

Perturbed eigenvectors of a rank-one update are ``v_n ∝ z_n / (E' - E_n)``,
so the finite backend stores only roots and norms and builds overlap columns on
demand. Rows are sign-fixed so that the component on the parent level
(``n = m``) is positive; the strong-coupling formulas follow the same rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .basis import psi0_squared_even

__all__ = [
    "STRONG",
    "FINITE",
    "DEFAULT_CUTOFF",
    "DEFAULT_STRONG_CUTOFF",
    "ConvergenceError",
    "PerturbedSpectrum",
    "ProbeReport",
    "strong_overlap",
    "strong_overlap_column0",
    "build_strong_spectrum",
    "build_finite_spectrum",
    "build_spectrum",
    "convergence_probe",
    "interlacing_violations",
]

STRONG = "strong_coupling"
FINITE = "finite_k"
DEFAULT_CUTOFF = 4000
DEFAULT_STRONG_CUTOFF = 1_000_000

_ROOT_CHUNK = 256
_MAX_NEWTON = 80


class ConvergenceError(RuntimeError):
    """A spectrum failed its truncation-convergence check."""


def _check_even(*indices: int) -> None:
    for idx in indices:
        if idx < 0 or idx % 2:
            raise ValueError(f"even non-negative index required, got {idx}")


def _eq3_log_abs(m):
    """ln |Lambda_{m,0}| at k = inf, straight from the Gamma-function form."""
    m = np.asarray(m, dtype=float)
    return 0.5 * ((m + 1.0) * math.log(2.0) - gammaln(m + 2.0)) + gammaln((m + 1.0) / 2.0) - math.log(math.pi)


def strong_overlap_column0(m) -> np.ndarray:
    """``Lambda_{m,0}`` at ``k = inf`` for even ``m`` (vectorised)."""
    m = np.asarray(m)
    sign = np.where((m // 2) % 2 == 0, 1.0, -1.0)
    return sign * np.exp(_eq3_log_abs(m))


def _ratio(m, n):
    """``Lambda_{m,n} / Lambda_{m,n-2}``; ``m - n + 1`` is odd, never zero."""
    return -math.sqrt((n - 1) / n) * (m - n + 3.0) / (m - n + 1.0)


def strong_overlap(m: int, n: int) -> float:
    """Strong-coupling overlap ``<psi'_m | psi_n>`` for even ``m, n``."""
    _check_even(m, n)
    log_abs = float(_eq3_log_abs(m))
    sign = 1.0 if (m // 2) % 2 == 0 else -1.0
    value = sign * math.exp(log_abs)
    for nn in range(2, n + 1, 2):
        value *= _ratio(m, nn)
    return value


def _strong_columns(cutoff: int, levels: np.ndarray) -> np.ndarray:
    m = 2 * np.arange(cutoff, dtype=np.int64)
    top = int(levels.max()) if levels.size else 0
    col = strong_overlap_column0(m)
    out = np.empty((cutoff, levels.size))
    wanted = {int(n): i for i, n in enumerate(levels)}
    mf = m.astype(float)
    for n in range(0, top + 1, 2):
        if n:
            col = col * (-math.sqrt((n - 1) / n) * (mf - n + 3.0) / (mf - n + 1.0))
        if n in wanted:
            for i, lev in enumerate(levels):
                if lev == n:
                    out[:, i] = col
    return out


@dataclass(frozen=True, eq=False)
class PerturbedSpectrum:
    """Perturbed even-sector levels ``E'_m`` (``m = 0, 2, ..., 2(cutoff-1)``).

    ``offsets`` holds ``E'_m - E_m`` and ``norms`` the eigenvector norms of the
    finite backend; both are ``None`` for the strong-coupling backend.
    """

    k: float
    cutoff: int
    energies: np.ndarray
    backend: str
    offsets: np.ndarray | None = None
    norms: np.ndarray | None = None
    probe: "ProbeReport | None" = field(default=None, compare=False)

    @property
    def levels(self) -> np.ndarray:
        return 2 * np.arange(self.cutoff, dtype=np.int64)

    @property
    def unperturbed_energies(self) -> np.ndarray:
        return self.levels + 0.5

    def overlaps(self, columns=None) -> np.ndarray:
        """Overlap table ``Lambda[m_index, col] = <psi'_m | psi_n>``.

        ``columns`` are unperturbed even level indices ``n``; ``None`` returns
        the full square table (only sensible for moderate cutoffs).
        """
        if columns is None:
            levels = self.levels
        else:
            levels = np.atleast_1d(np.asarray(columns, dtype=np.int64))
        if levels.size and (levels.min() < 0 or np.any(levels % 2) or levels.max() >= 2 * self.cutoff):
            raise ValueError("overlap columns must be even levels inside the cutoff")
        if self.backend == STRONG:
            return _strong_columns(self.cutoff, levels)
        weights = psi0_squared_even(self.cutoff)
        z = np.sqrt(weights)
        col_idx = levels // 2
        zsign = np.where(col_idx % 2 == 0, 1.0, -1.0)
        rows = np.arange(self.cutoff)
        row_sign = np.where(rows % 2 == 0, 1.0, -1.0)
        # E'_m - E_n = mu_m - 2 (i_n - i_m), exact integer part
        gap = self.offsets[:, None] - 2.0 * (col_idx[None, :] - rows[:, None]).astype(float)
        return (row_sign / self.norms)[:, None] * (zsign * z[col_idx])[None, :] / gap

    def with_probe(self, probe: "ProbeReport") -> "PerturbedSpectrum":
        return PerturbedSpectrum(self.k, self.cutoff, self.energies, self.backend, self.offsets, self.norms, probe)

    def summary(self, levels: int = 20) -> dict:
        nlev = min(levels, self.cutoff)
        return {
            "backend": self.backend,
            "k": "inf" if math.isinf(self.k) else self.k,
            "cutoff": self.cutoff,
            "energies": [float(e) for e in self.energies[:nlev]],
            "ground_overlap": float(self.overlaps([0])[0, 0]),
            "probe": None if self.probe is None else self.probe.as_dict(),
        }


def build_strong_spectrum(cutoff: int = DEFAULT_STRONG_CUTOFF) -> PerturbedSpectrum:
    """Analytic ``k = inf`` spectrum with ``cutoff`` even levels."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    energies = 2.0 * np.arange(cutoff) + 1.5
    return PerturbedSpectrum(math.inf, cutoff, energies, STRONG)


def _solve_bracketed(k: float, w: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """Offsets ``mu`` in (0, 2) for roots ``j`` strictly below the top pole.

    Newton on ``g(mu) = mu (2 - mu) f(mu)``, which is smooth on the bracket,
    with bisection whenever a step leaves the current bracket.
    """
    m = w.size
    a = np.arange(m, dtype=float)
    jj = roots.astype(float)
    pole_gap = 2.0 * (a[None, :] - jj[:, None])
    w_lo = k * w[roots]
    w_hi = k * w[roots + 1]
    lo = np.zeros(roots.size)
    hi = np.full(roots.size, 2.0)
    # two-pole guess: root of -w_lo/mu + w_hi/(2-mu) + 1 = 0 ignoring the rest
    x = np.clip(2.0 * w_lo / (w_lo + w_hi), 1e-300, 2.0 - 1e-15)
    x = np.where((x > 0) & (x < 2), x, 1.0)
    active = np.ones(roots.size, dtype=bool)
    for _ in range(_MAX_NEWTON):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        xa = x[idx]
        den = pole_gap[idx] - xa[:, None]
        inv = 1.0 / den
        s1 = inv @ w
        s2 = (inv * inv) @ w
        ja = roots[idx]
        # drop the two bracketing poles from the smooth remainder
        rest = k * (s1 + w[ja] / xa - w[ja + 1] / (2.0 - xa))
        drest = k * (s2 - w[ja] / xa**2 - w[ja + 1] / (2.0 - xa) ** 2)
        g = xa * (2.0 - xa) * (1.0 + rest) - w_lo[idx] * (2.0 - xa) + w_hi[idx] * xa
        dg = (2.0 - 2.0 * xa) * (1.0 + rest) + xa * (2.0 - xa) * drest + w_lo[idx] + w_hi[idx]
        pos = g > 0
        hi[idx] = np.where(pos, xa, hi[idx])
        lo[idx] = np.where(pos, lo[idx], xa)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = g / dg
        newton = xa - step
        bad = ~np.isfinite(newton) | (newton <= lo[idx]) | (newton >= hi[idx])
        conv = (g == 0) | (np.abs(step) <= 4.0 * np.finfo(float).eps * xa)
        xn = np.where(conv, xa, np.where(bad, 0.5 * (lo[idx] + hi[idx]), newton))
        done = conv | ((hi[idx] - lo[idx]) <= 2.0 * np.finfo(float).eps * np.maximum(lo[idx], 1e-300))
        x[idx] = xn
        active[idx[done]] = False
    return x


def _solve_top(k: float, w: np.ndarray) -> float:
    """Offset of the largest root above the last pole (no upper pole)."""
    m = w.size
    top = m - 1
    gap = 2.0 * (np.arange(m, dtype=float) - top)
    lo, hi = 0.0, k * float(w.sum()) * (1.0 + 1e-12) + 1e-300
    x = min(k * w[top], hi)
    for _ in range(4 * _MAX_NEWTON):
        den = gap[:top] - x
        rest = k * float(np.sum(w[:top] / den))
        drest = k * float(np.sum(w[:top] / den**2))
        g = x * (1.0 + rest) - k * w[top]
        dg = 1.0 + rest + x * drest
        if g == 0 or abs(g) <= 4.0 * np.finfo(float).eps * x * dg:
            break
        if g > 0:
            hi = x
        else:
            lo = x
        xn = x - g / dg
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if hi - lo <= 2.0 * np.finfo(float).eps * hi:
            x = xn
            break
        x = xn
    return x


def build_finite_spectrum(k: float, cutoff: int = DEFAULT_CUTOFF) -> PerturbedSpectrum:
    """Solve the truncated even-sector problem at finite defect strength ``k``."""
    if not (k > 0) or math.isinf(k):
        raise ValueError("finite backend needs 0 < k < inf")
    if cutoff < 2:
        raise ValueError("finite backend needs cutoff >= 2")
    w = psi0_squared_even(cutoff)
    offsets = np.empty(cutoff)
    inner = np.arange(cutoff - 1)
    for start in range(0, inner.size, _ROOT_CHUNK):
        chunk = inner[start : start + _ROOT_CHUNK]
        offsets[chunk] = _solve_bracketed(k, w, chunk)
    offsets[-1] = _solve_top(k, w)
    rows = np.arange(cutoff, dtype=float)
    norms = np.empty(cutoff)
    a = np.arange(cutoff, dtype=float)
    for start in range(0, cutoff, _ROOT_CHUNK):
        sl = slice(start, min(start + _ROOT_CHUNK, cutoff))
        gap = offsets[sl, None] - 2.0 * (a[None, :] - rows[sl, None])
        norms[sl] = np.sqrt((w[None, :] / gap**2).sum(axis=1))
    energies = 2.0 * rows + 0.5 + offsets
    return PerturbedSpectrum(float(k), cutoff, energies, FINITE, offsets, norms)


def build_spectrum(k: float, cutoff: int | None = None) -> PerturbedSpectrum:
    """Dispatch on ``k``: ``inf`` selects the analytic backend."""
    if math.isinf(k) and k > 0:
        return build_strong_spectrum(DEFAULT_STRONG_CUTOFF if cutoff is None else cutoff)
    return build_finite_spectrum(k, DEFAULT_CUTOFF if cutoff is None else cutoff)


@dataclass(frozen=True)
class ProbeReport:
    """Truncation deviations between two cutoffs over the lowest levels."""

    k: float
    cutoff: int
    reference_cutoff: int
    levels_compared: int
    energy_deviation: float
    overlap_deviation: float

    def as_dict(self) -> dict:
        return {
            "k": "inf" if math.isinf(self.k) else self.k,
            "cutoff": self.cutoff,
            "reference_cutoff": self.reference_cutoff,
            "levels_compared": self.levels_compared,
            "energy_deviation": self.energy_deviation,
            "overlap_deviation": self.overlap_deviation,
        }


def convergence_probe(k: float, cutoff: int, reference_cutoff: int, *, tolerance: float | None = None) -> ProbeReport:
    """Compare the lowest ``cutoff // 2`` levels at two cutoffs.

    Overlap deviation is the largest entry change over those rows and the
    ``cutoff`` columns both tables share. Raises :class:`ConvergenceError`
    when ``tolerance`` is given and either deviation exceeds it.
    """
    if reference_cutoff <= cutoff:
        raise ValueError("reference cutoff must exceed the cutoff")
    nlev = max(cutoff // 2, 1)
    if k == 0 or math.isinf(k):
        # unperturbed problem, or closed forms independent of the cutoff
        report = ProbeReport(float(k), cutoff, reference_cutoff, nlev, 0.0, 0.0)
    else:
        small = build_finite_spectrum(k, cutoff)
        big = build_finite_spectrum(k, reference_cutoff)
        e_dev = float(np.max(np.abs(small.energies[:nlev] - big.energies[:nlev])))
        cols = small.levels
        o_dev = 0.0
        for start in range(0, cutoff, 512):
            block = cols[start : start + 512]
            diff = small.overlaps(block)[:nlev] - big.overlaps(block)[:nlev]
            o_dev = max(o_dev, float(np.max(np.abs(diff))))
        report = ProbeReport(float(k), cutoff, reference_cutoff, nlev, e_dev, o_dev)
    if tolerance is not None and max(report.energy_deviation, report.overlap_deviation) > tolerance:
        raise ConvergenceError(
            f"cutoff {cutoff} not converged at k={k}: deviations "
            f"{report.energy_deviation:.3g} (energy), {report.overlap_deviation:.3g} (overlap)"
        )
    return report


def interlacing_violations(spectrum: PerturbedSpectrum) -> np.ndarray:
    """Level indices breaking ``E_m < E'_m < E_m + 2``.

    The top root of a truncated rank-one update has no pole above it, so only
    its lower bound (and the Weyl bound ``E_top + k sum z^2``) is checked.
    """
    e0 = spectrum.unperturbed_energies
    ep = spectrum.energies
    bad = ~(ep > e0)
    upper = ep[:-1] < e0[:-1] + 2.0
    bad[:-1] |= ~upper
    if spectrum.backend == FINITE:
        bound = e0[-1] + spectrum.k * float(psi0_squared_even(spectrum.cutoff).sum())
        bad[-1] |= not (ep[-1] <= bound * (1 + 1e-12))
    else:
        bad[-1] |= not (ep[-1] < e0[-1] + 2.0)
    return np.nonzero(bad)[0]
