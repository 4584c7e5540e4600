"""Work quasiprobabilities and the Loschmidt echo as their Fourier sum.

A :class:`QuasiprobTable` is stored as a grid: rows are initial unperturbed
levels (or fermion pairs), columns are perturbed levels (or pairs), and

    q[s, m] = conj(alpha_s) <s|m'> <m'|psi>          (pure states)
    q[s, m] = p_s |<m'|s>|^2                          (diagonal states)

with work ``w[s, m] = E'_m - E_s``. The echo is

    nu(t) = sum_{s,m} q[s, m] exp(-i w[s, m] t).

At ``k = inf`` every work value sits on a lattice ``w0 + 2d`` with integer
``d``, so the table collapses to Laurent coefficients ``C_d`` and the sum is a
trigonometric polynomial. For single particles the slowly decaying tail
``C_d ~ d^(-3/2)`` is completed analytically with the arcsin series (Kummer's
transformation), which removes the ``M^(-1/2)`` truncation error at the cusps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import central_ratio
from .spectrum import STRONG, PerturbedSpectrum
from .states import InitialState

__all__ = [
    "QuasiprobTable",
    "EchoSeries",
    "kdq_table",
    "echo_series",
    "echo_closed_form_two_level",
    "detect_cusps",
    "default_t_grid",
    "pair_overlap",
    "DEFAULT_PAIR_ORBITALS",
]

DEFAULT_PAIR_ORBITALS = 400
DEFAULT_POINTS = 2000
_TIME_CHUNK = 64


@dataclass(frozen=True, eq=False)
class QuasiprobTable:
    """Kirkwood-Dirac work quasiprobabilities on an (initial x final) grid."""

    q: np.ndarray
    init_labels: np.ndarray
    final_labels: np.ndarray
    init_energies: np.ndarray
    final_energies: np.ndarray
    k: float
    backend: str
    cutoff: int
    state_label: str = ""
    two_fermion: bool = False
    diagonal: bool = False
    meta: dict = field(default_factory=dict)
    factors: "_PairFactors | None" = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.q.shape

    @property
    def w(self) -> np.ndarray:
        return self.final_energies[None, :] - self.init_energies[:, None]

    @property
    def total(self) -> complex:
        return complex(self.q.sum())

    @property
    def lattice_offset(self) -> int | None:
        """``w0`` when all work values are ``w0 + 2d`` with integer ``d``."""
        if self.backend != STRONG:
            return None
        return 2 if self.two_fermion else 1

    def row_sums(self) -> np.ndarray:
        return self.q.sum(axis=1)

    def entries(self, *, min_abs: float = 0.0):
        """Flattened ``(n, m, w, q)`` arrays, dropping entries with ``|q| <= min_abs``."""
        q = self.q.ravel()
        w = self.w.ravel()
        si, mi = np.divmod(np.arange(q.size), self.q.shape[1])
        keep = np.abs(q) > min_abs if min_abs > 0 else np.ones(q.size, dtype=bool)
        return self.init_labels[si[keep]], self.final_labels[mi[keep]], w[keep], q[keep]

    def laurent(self) -> tuple[int, np.ndarray, int]:
        """Aggregate ``q`` over the work lattice: ``(w0, C, dmin)``, ``w = w0 + 2 (dmin + i)``."""
        w0 = self.lattice_offset
        if w0 is None:
            raise ValueError("work values are not on an integer lattice")
        if self.two_fermion:
            d_final = (self.final_labels.sum(axis=1) // 2).astype(np.int64)
            d_init = (self.init_labels.sum(axis=1) // 2).astype(np.int64)
        else:
            d_final = (self.final_labels // 2).astype(np.int64)
            d_init = (self.init_labels // 2).astype(np.int64)
        dmin = int(d_final.min() - d_init.max())
        dmax = int(d_final.max() - d_init.min())
        coeffs = np.zeros(dmax - dmin + 1, dtype=complex)
        order = np.argsort(d_final, kind="stable")
        contiguous = np.array_equal(d_final[order], np.arange(d_final.size) + d_final.min()) and np.array_equal(order, np.arange(order.size))
        for s in range(self.q.shape[0]):
            shift = d_final - d_init[s] - dmin
            if contiguous:
                coeffs[shift[0] : shift[0] + shift.size] += self.q[s]
            else:
                np.add.at(coeffs, shift, self.q[s])
        return w0, coeffs, dmin


@dataclass(frozen=True, eq=False)
class EchoSeries:
    t: np.ndarray
    nu: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def abs(self) -> np.ndarray:
        return np.abs(self.nu)

    @property
    def abs_sq(self) -> np.ndarray:
        return np.abs(self.nu) ** 2

    @property
    def spacing(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0


def default_t_grid(tmax: float = 2.0 * math.pi, points: int = DEFAULT_POINTS, tmin: float = 0.0) -> np.ndarray:
    if points < 1:
        raise ValueError("points must be >= 1")
    return np.linspace(tmin, tmax, points)


def pair_overlap(lam: np.ndarray, a: int, b: int, c: int, d: int) -> float:
    """Determinant overlap between perturbed pair ``(a, b)`` and unperturbed pair ``(c, d)``.

    ``lam`` is indexed by (perturbed row index, unperturbed column index).
    """
    return float(lam[a, c] * lam[b, d] - lam[a, d] * lam[b, c])


@dataclass(frozen=True, eq=False)
class _PairFactors:
    """One-particle data behind a pair table: overlap columns and orbital energies."""

    lam: np.ndarray  # (orbitals, K) columns for the K levels the state uses
    first: np.ndarray  # column of the lower level of each initial pair
    second: np.ndarray  # column of the upper level
    energies: np.ndarray  # (orbitals,)


def _single_table(state: InitialState, spectrum: PerturbedSpectrum) -> QuasiprobTable:
    levels = state.levels
    lam = spectrum.overlaps(levels)  # (P, S)
    if state.is_pure:
        alpha = state.amplitudes
        u = lam @ alpha
        q = (np.conj(alpha)[:, None] * lam.T) * u[None, :]
    else:
        q = state.weights[:, None] * (lam.T**2)
    return QuasiprobTable(
        q=q,
        init_labels=levels.copy(),
        final_labels=spectrum.levels,
        init_energies=levels + 0.5,
        final_energies=np.asarray(spectrum.energies, dtype=float),
        k=spectrum.k,
        backend=spectrum.backend,
        cutoff=spectrum.cutoff,
        state_label=state.label,
        diagonal=not state.is_pure,
    )


def _pair_table(state: InitialState, spectrum: PerturbedSpectrum, orbitals: int) -> QuasiprobTable:
    orbitals = min(orbitals, spectrum.cutoff)
    pairs = state.levels
    needed = np.unique(pairs.ravel())
    if needed.max() >= 2 * orbitals:
        raise ValueError("state lies outside the orbital cutoff")
    lam_cols = spectrum.overlaps(needed)[:orbitals]  # (Mo, len(needed))
    col = {int(n): i for i, n in enumerate(needed)}
    ia, ib = np.triu_indices(orbitals, k=1)
    energies = np.asarray(spectrum.energies[:orbitals], dtype=float)
    final_energies = energies[ia] + energies[ib]

    def det_overlap(c, d):
        lc, ld = lam_cols[:, col[c]], lam_cols[:, col[d]]
        return lc[ia] * ld[ib] - lc[ib] * ld[ia]

    dets = np.stack([det_overlap(int(c), int(d)) for c, d in pairs])  # (S, P)
    if state.is_pure:
        alpha = state.amplitudes
        amp = alpha @ dets  # <Phi'_ab | Psi>
        q = (np.conj(alpha)[:, None] * dets) * amp[None, :]
    else:
        q = state.weights[:, None] * dets**2
    levels = 2 * np.arange(orbitals, dtype=np.int64)
    return QuasiprobTable(
        q=q,
        init_labels=pairs.copy(),
        final_labels=np.stack([levels[ia], levels[ib]], axis=1),
        init_energies=(pairs + 0.5).sum(axis=1).astype(float),
        final_energies=final_energies,
        k=spectrum.k,
        backend=spectrum.backend,
        cutoff=spectrum.cutoff,
        state_label=state.label,
        two_fermion=True,
        diagonal=not state.is_pure,
        meta={"orbitals": orbitals, "amplitudes": state.amplitudes, "weights": state.weights},
        factors=_PairFactors(lam_cols, np.array([col[int(c)] for c in pairs[:, 0]]), np.array([col[int(d)] for d in pairs[:, 1]]), energies),
    )


def kdq_table(state: InitialState, spectrum: PerturbedSpectrum, *, orbitals: int = DEFAULT_PAIR_ORBITALS) -> QuasiprobTable:
    """Quasiprobability table of ``state`` quenched into ``spectrum``.

    Two-fermion tables run over all ordered pairs of the lowest ``orbitals``
    perturbed orbitals, so their size grows as ``orbitals**2 / 2``.
    """
    if state.is_two_fermion:
        return _pair_table(state, spectrum, orbitals)
    if state.max_level >= 2 * spectrum.cutoff:
        raise ValueError("state lies outside the spectrum cutoff")
    return _single_table(state, spectrum)


def _general_sum(table: QuasiprobTable, t: np.ndarray) -> np.ndarray:
    out = np.empty(t.size, dtype=complex)
    qt = np.ascontiguousarray(table.q.T.astype(complex))
    for start in range(0, t.size, _TIME_CHUNK):
        tc = t[start : start + _TIME_CHUNK]
        phase = np.exp(-1j * np.outer(tc, table.final_energies))
        per_row = phase @ qt  # (Tc, S)
        out[start : start + tc.size] = (per_row * np.exp(1j * np.outer(tc, table.init_energies))).sum(axis=1)
    return out


def _pair_sum(table: QuasiprobTable, t: np.ndarray, amplitudes, weights) -> np.ndarray:
    """Pair echo from one-particle sums ``G_xy(t) = sum_a e^{-i E'_a t} lam_a^x lam_a^y``.

    Summing determinant products over ``a < b`` gives
    ``G_{cc'} G_{dd'} - G_{cd'} G_{dc'}`` for initial pairs ``(c,d)``, ``(c',d')``,
    which costs ``O(orbitals K^2)`` per time instead of ``O(orbitals^2)``.
    """
    f = table.factors
    K = f.lam.shape[1]
    products = (f.lam[:, :, None] * f.lam[:, None, :]).reshape(f.lam.shape[0], K * K)
    c, d = f.first, f.second
    out = np.empty(t.size, dtype=complex)
    for start in range(0, t.size, _TIME_CHUNK):
        tc = t[start : start + _TIME_CHUNK]
        g = (np.exp(-1j * np.outer(tc, f.energies)) @ products).reshape(tc.size, K, K)
        back = np.exp(1j * np.outer(tc, table.init_energies))  # (Tc, S)
        if amplitudes is not None:
            m = g[:, c[:, None], c[None, :]] * g[:, d[:, None], d[None, :]] - g[:, c[:, None], d[None, :]] * g[:, d[:, None], c[None, :]]
            out[start : start + tc.size] = np.einsum("ts,tsr,r->t", back * np.conj(amplitudes)[None, :], m, amplitudes)
        else:
            m = g[:, c, c] * g[:, d, d] - g[:, c, d] * g[:, d, c]
            out[start : start + tc.size] = (back * m) @ weights
    return out


def _trig_poly(coeffs: np.ndarray, dmin: int, t: np.ndarray) -> np.ndarray:
    """``sum_i coeffs[i] exp(-2 i (dmin + i) t)`` by a two-level block split."""
    F = coeffs.size
    B = max(1, int(math.isqrt(F - 1)) + 1)
    nb = -(-F // B)
    padded = np.zeros(nb * B, dtype=complex)
    padded[:F] = coeffs
    cmat = padded.reshape(nb, B)
    out = np.empty(t.size, dtype=complex)
    inner_idx = np.arange(B, dtype=float)
    outer_idx = np.arange(nb, dtype=float) * B
    for start in range(0, t.size, 256):
        tc = t[start : start + 256]
        inner = np.exp(-2j * np.outer(inner_idx, tc))  # (B, Tc)
        x = cmat @ inner  # (nb, Tc)
        outer = np.exp(-2j * np.outer(outer_idx, tc))
        out[start : start + tc.size] = (outer * x).sum(axis=0) * np.exp(-2j * dmin * tc)
    return out


def _arcsin_weights(count: int) -> np.ndarray:
    """``(2/pi) C(2d,d) / (4^d (2d+1))``: Taylor weights of ``(2/pi) arcsin``."""
    d = np.arange(count)
    return (2.0 / math.pi) * central_ratio(d) / (2.0 * d + 1.0)


def _lattice_sum(table: QuasiprobTable, t: np.ndarray, tail: bool) -> tuple[np.ndarray, dict]:
    w0, coeffs, dmin = table.laurent()
    info = {"method": "lattice", "terms": int(coeffs.size)}
    if tail and not table.two_fermion and dmin <= 0:
        # keep only coefficients that every row contributes to in full
        d_init_max = int(table.init_labels.max() // 2)
        dc = int(table.final_labels.max() // 2) - d_init_max
        last = dc - dmin
        g = _arcsin_weights(dc + 1)
        kappa = coeffs[last] / g[dc]
        kept = coeffs[: last + 1].copy()
        kept[-dmin:] -= kappa * g
        body = _trig_poly(kept, dmin, t)
        # sum_{d>=0} g_d z^(2d+1) = (2/pi) arcsin(z), z = exp(-i t); w0 = 1 supplies z
        nu = body * np.exp(-1j * w0 * t) + kappa * (2.0 / math.pi) * np.arcsin(np.exp(-1j * t))
        info.update(method="lattice+arcsin-tail", kappa_re=float(kappa.real), kappa_im=float(kappa.imag), complete_terms=int(last + 1))
        return nu, info
    return _trig_poly(coeffs, dmin, t) * np.exp(-1j * w0 * t), info


def echo_series(table: QuasiprobTable, t_grid=None, *, tail: bool = True, method: str = "auto") -> EchoSeries:
    """Evaluate ``nu(t) = sum q exp(-i w t)`` on ``t_grid``.

    ``tail`` enables the analytic arcsin completion for single-particle
    tables at ``k = inf``; it has no effect elsewhere.
    """
    t = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    if t.ndim != 1:
        raise ValueError("t_grid must be one-dimensional")
    if method not in ("auto", "direct"):
        raise ValueError("method must be 'auto' or 'direct'")
    if method == "direct":
        nu, info = _general_sum(table, t), {"method": "direct", "terms": int(table.q.size)}
    elif table.lattice_offset is not None:
        nu, info = _lattice_sum(table, t, tail)
    elif table.factors is not None:
        amps = table.meta.get("amplitudes")
        nu = _pair_sum(table, t, amps, None if amps is not None else table.meta["weights"])
        info = {"method": "pair-factored", "terms": int(table.q.size)}
    else:
        nu, info = _general_sum(table, t), {"method": "direct", "terms": int(table.q.size)}
    info.update(state=table.state_label, k="inf" if math.isinf(table.k) else table.k, cutoff=table.cutoff, backend=table.backend)
    return EchoSeries(t, nu, info)


def echo_closed_form_two_level(theta: float, phi: float, t):
    """Analytic ``k = inf`` echo for ``cos(theta/2)|0> + e^{i phi} sin(theta/2)|2>``.

    ``nu = (2/pi) [arcsin(e^{-it}) - sqrt(1 - e^{-2it}) / 4 * (e^{it} (cos theta - 1)
    - 2 sqrt(2) cos(phi - t) sin theta)]`` on principal branches.
    """
    t = np.asarray(t, dtype=float)
    z = np.exp(-1j * t)
    root = np.sqrt(1.0 - z * z)
    bracket = np.exp(1j * t) * (math.cos(theta) - 1.0) - 2.0 * math.sqrt(2.0) * np.cos(phi - t) * math.sin(theta)
    nu = (2.0 / math.pi) * (np.arcsin(z) - 0.25 * root * bracket)
    return complex(nu) if nu.ndim == 0 else nu


def detect_cusps(series: EchoSeries, threshold: float = 1.0, *, include_start: bool = False) -> np.ndarray:
    """Times where ``|d^2 |nu| | / h`` exceeds ``threshold`` on a uniform grid.

    A kink with slope jump ``J`` gives a second difference of about ``J h``, a
    smooth curve only ``O(h^2)``, so the statistic separates the two as the
    grid is refined. The last point uses a one-sided difference. Adjacent
    flagged points are merged into one cusp at the largest ``|nu|``.
    """
    t = np.asarray(series.t, dtype=float)
    if t.size < 3:
        raise ValueError("need at least 3 grid points")
    h = t[1] - t[0]
    if not (h > 0) or not np.allclose(np.diff(t), h, rtol=1e-9, atol=1e-12):
        raise ValueError("cusp detection needs a uniform increasing grid")
    a = series.abs
    stat = np.zeros(t.size)
    stat[1:-1] = np.abs(a[2:] - 2.0 * a[1:-1] + a[:-2]) / h
    stat[-1] = np.abs(a[-1] - 2.0 * a[-2] + a[-3]) / h
    if include_start:
        stat[0] = np.abs(a[0] - 2.0 * a[1] + a[2]) / h
    flagged = stat > threshold
    times = []
    i = 0
    while i < t.size:
        if flagged[i]:
            j = i
            while j + 1 < t.size and flagged[j + 1]:
                j += 1
            # a kink at t[0] leaks into t[1]; attribute it to the start point
            lo = 0 if i == 1 else i
            best = lo + int(np.argmax(a[lo : j + 1]))
            if best > 0 or include_start:
                times.append(t[best])
            i = j + 1
        else:
            i += 1
    return np.asarray(times)
