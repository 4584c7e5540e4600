"""Independent reference computations used only by the tests.

None of these share code paths with the package beyond the physical
conventions (origin values with prefactor (2 pi)^(-1/4), energies n + 1/2).
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction

import mpmath
import numpy as np

PREF2 = 1.0 / math.sqrt(2.0 * math.pi)  # psi_0(0)^2


def central_ratio_exact(j: int) -> Fraction:
    return Fraction(math.comb(2 * j, j), 4**j)


def psi0_direct(n: int) -> float:
    """Origin value from factorials (exact rationals, then one sqrt)."""
    if n % 2:
        return 0.0
    dfact = math.prod(range(n - 1, 0, -2)) if n > 0 else 1
    ratio = Fraction(dfact * dfact, math.factorial(n))
    return (-1) ** (n // 2) * (2 * math.pi) ** -0.25 * math.sqrt(ratio)


def dense_spectrum(k: float, M: int):
    """Eigen-decomposition of ``diag(E) + k z z^T`` on ``M`` even levels.

    Returns energies and the overlap matrix ``lam[m, n]`` with rows sign-fixed
    so the diagonal entry is positive.
    """
    j = np.arange(M)
    z = np.array([psi0_direct(2 * int(i)) for i in j]) if M <= 200 else _z_fast(M)
    h = np.diag(2.0 * j + 0.5) + k * np.outer(z, z)
    e, v = np.linalg.eigh(h)
    lam = v.T.copy()
    lam *= np.sign(np.diag(lam))[:, None]
    return e, lam


def _z_fast(M: int) -> np.ndarray:
    out = np.empty(M)
    val = mpmath.mpf(1)
    for j in range(M):
        if j:
            val *= mpmath.mpf(2 * j - 1) / (2 * j)
        out[j] = float((-1) ** j * mpmath.sqrt(val)) * (2 * math.pi) ** -0.25
    return out


def strong_overlap_closed(j: int, L: int) -> float:
    """Telescoped strong-coupling overlap ``<psi'_{2j}|psi_{2L}>``."""
    r = float(central_ratio_exact(j)) * float(central_ratio_exact(L))
    return (-1) ** (j + L) * math.sqrt(2.0 / math.pi) * math.sqrt(r) * math.sqrt(2 * j + 1) / (2 * j + 1 - 2 * L)


def strong_overlap_mp(m: int, n: int, dps: int = 40) -> float:
    """Ground column from the Gamma-function form, then the ratio recursion, in mpmath."""
    with mpmath.workdps(dps):
        val = mpmath.sqrt(mpmath.mpf(2) ** (m + 1) / mpmath.factorial(m + 1)) * mpmath.gamma(mpmath.mpf(m + 1) / 2) / mpmath.pi
        val *= (-1) ** (m // 2)
        for nn in range(2, n + 1, 2):
            val *= -mpmath.sqrt(mpmath.mpf(nn - 1) / nn) * (m - nn + 3) / mpmath.mpf(m - nn + 1)
        return float(val)


def _g_h_tables(z: complex, lmax: int):
    """``G_c`` and ``H_c`` for odd ``c`` from 1 down to ``1 - 2 lmax``.

    ``G_c = sum_d g_d z^d / (2d + c)`` and ``H_c = sum_d g_d z^d / (2d + c)^2``
    with ``g_d = C(2d,d)/4^d``, continued analytically on principal branches.
    """
    sz = cmath.sqrt(z)
    root = cmath.sqrt(1 - z)
    asn = cmath.asin(sz)
    G = {1: asn / sz if sz != 0 else 1.0, -1: -root}
    H = {-1: sz * asn + root}
    for c in range(-3, -2 * lmax, -2):
        G[c] = (root + z * (1 + c) * G[c + 2]) / c
        H[c] = (G[c] - z * G[c + 2] + z * (1 + c) * H[c + 2]) / c
    return G, H


def strong_echo_closed(levels, amplitudes, t: float) -> complex:
    """Exact ``k = inf`` echo of ``sum_l alpha_l |2 l>`` (levels given as ``2 l``)."""
    ls = [int(n) // 2 for n in levels]
    beta = [(-1) ** l * math.sqrt(float(central_ratio_exact(l))) * complex(a) for l, a in zip(ls, amplitudes)]
    z = cmath.exp(-2j * t)
    G, H = _g_h_tables(z, max(ls) + 1)
    total = 0j
    for L, bL in zip(ls, beta):
        for l, bl in zip(ls, beta):
            if L == l:
                if L == 0:
                    s = G[1]
                else:
                    s = G[1 - 2 * L] + 2 * L * H[1 - 2 * L]
            else:
                gl = G[1 - 2 * L] if L else G[1]
                gs = G[1 - 2 * l] if l else G[1]
                s = (L / (L - l)) * gl + (l / (l - L)) * gs
            total += bL.conjugate() * bl * z ** (-L) * s
    return (2.0 / math.pi) * cmath.exp(-1j * t) * total


def average_work_bruteforce(N: int, k: float = 1.0, dps: int = 30) -> float:
    """``k |sum_j (-1)^j psi_{2j}(0)|^2 / N`` summed term by term in mpmath."""
    with mpmath.workdps(dps):
        acc = mpmath.mpf(0)
        term = mpmath.mpf(1)
        for j in range(N):
            if j:
                term *= mpmath.mpf(2 * j - 1) / (2 * j)
            acc += mpmath.sqrt(term)
        return float(k * acc**2 / (N * mpmath.sqrt(2 * mpmath.pi)))


def two_fermion_echo_dense(k: float, M: int, pairs, amplitudes, t: float) -> complex:
    """Pair echo from a dense single-particle propagator on ``M`` even levels.

    ``nu = sum conj(a_s) a_r det[[g_cc', g_cd'], [g_dc', g_dd']]`` with
    ``g = e^{iHt} e^{-iH't}`` restricted to the even sector.
    """
    e, lam = dense_spectrum(k, M)
    e0 = 2.0 * np.arange(M) + 0.5
    g = (np.exp(1j * e0 * t)[:, None] * lam.T) @ (np.exp(-1j * e * t)[:, None] * lam)
    total = 0j
    for (c, d), a in zip(pairs, amplitudes):
        for (c2, d2), a2 in zip(pairs, amplitudes):
            i, j, i2, j2 = c // 2, d // 2, c2 // 2, d2 // 2
            det = g[i, i2] * g[j, j2] - g[i, j2] * g[j, i2]
            total += np.conj(a) * a2 * det
    return complex(total)
