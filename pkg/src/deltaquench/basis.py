"""Harmonic-trap conventions at the defect position.

Units are hbar = omega = 1. Only even levels couple to a defect at the origin;
odd levels vanish there. The origin amplitude uses the normalisation

    psi_n(0) = (-1)^(n/2) (n-1)!! / ((2 pi)^(1/4) sqrt(n!)),   n even,

which fixes the units of the defect strength ``k`` everywhere in the package.
Everything is evaluated through ``log_central_ratio`` so that levels up to
10^6 and beyond stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "OMEGA",
    "HBAR",
    "ORIGIN_PREFACTOR",
    "Parity",
    "TrapBasis",
    "log_central_ratio",
    "central_ratio",
    "psi_at_origin",
    "psi0_squared_even",
    "energy_unperturbed",
    "c_coefficient",
]

OMEGA = 1.0
HBAR = 1.0
# (2 pi)^(-1/4)
ORIGIN_PREFACTOR = (2.0 * math.pi) ** -0.25

# Odd Bernoulli-type coefficients of ln Gamma(j+1/2) - ln Gamma(j+1) + (1/2) ln j
_ASYMPTOTIC = (
    (1, -1.0 / 8.0),
    (3, 1.0 / 192.0),
    (5, -1.0 / 640.0),
    (7, 17.0 / 14336.0),
    (9, -31.0 / 18432.0),
    (11, 691.0 / 180224.0),
)
_SMALL_J = 24


def _small_log_ratios() -> np.ndarray:
    out = np.zeros(_SMALL_J)
    acc = 0.0
    for j in range(1, _SMALL_J):
        acc += math.log1p(-0.5 / j)
        out[j] = acc
    return out


_SMALL_TABLE = _small_log_ratios()


def log_central_ratio(j):
    """Natural log of ``C(2j, j) / 4**j`` for integer ``j >= 0``.

    Uses a running sum of ``log1p(-1/(2i))`` below ``j = 24`` and the
    asymptotic expansion of the Gamma ratio above; both are accurate to a few
    ulp. Accepts scalars or integer arrays.
    """
    j_arr = np.asarray(j)
    if np.any(j_arr < 0):
        raise ValueError("j must be non-negative")
    scalar = j_arr.ndim == 0
    j_arr = np.atleast_1d(j_arr).astype(np.int64)
    out = np.empty(j_arr.shape, dtype=float)
    small = j_arr < _SMALL_J
    out[small] = _SMALL_TABLE[j_arr[small]]
    big = ~small
    if np.any(big):
        x = j_arr[big].astype(float)
        inv = 1.0 / x
        inv2 = inv * inv
        series = np.zeros_like(x)
        # Horner in 1/x^2 on the odd powers
        for _, coef in reversed(_ASYMPTOTIC):
            series = series * inv2 + coef
        out[big] = -0.5 * np.log(math.pi * x) + series * inv
    return float(out[0]) if scalar else out


def central_ratio(j):
    """``C(2j, j) / 4**j``, equal to ``c_{2j}**2``."""
    return np.exp(log_central_ratio(j))


class Parity(str, Enum):
    even = "even"
    odd = "odd"
    both = "both"


@dataclass(frozen=True)
class TrapBasis:
    """Unperturbed oscillator with energies ``n + 1/2``."""

    omega: float = OMEGA
    hbar: float = HBAR
    parity_sector: Parity = Parity.even

    def levels(self, count: int) -> np.ndarray:
        """First ``count`` level indices of the selected parity sector."""
        if self.parity_sector is Parity.even:
            return 2 * np.arange(count)
        if self.parity_sector is Parity.odd:
            return 2 * np.arange(count) + 1
        return np.arange(count)

    def energies(self, count: int) -> np.ndarray:
        return self.hbar * self.omega * (self.levels(count) + 0.5)

    def origin_values(self, count: int) -> np.ndarray:
        return psi_at_origin(self.levels(count))


def _check_levels(n) -> np.ndarray:
    n_arr = np.asarray(n)
    if n_arr.dtype.kind not in "iu":
        if not np.all(np.equal(np.mod(n_arr, 1), 0)):
            raise ValueError("level index must be an integer")
        n_arr = n_arr.astype(np.int64)
    if np.any(n_arr < 0):
        raise ValueError("level index must be non-negative")
    return n_arr


def psi_at_origin(n):
    """Oscillator eigenfunction ``psi_n`` at ``x = 0``; zero for odd ``n``."""
    n_arr = _check_levels(n)
    scalar = n_arr.ndim == 0
    n_arr = np.atleast_1d(n_arr)
    out = np.zeros(n_arr.shape, dtype=float)
    even = n_arr % 2 == 0
    j = n_arr[even] // 2
    sign = np.where(j % 2 == 0, 1.0, -1.0)
    out[even] = sign * ORIGIN_PREFACTOR * np.exp(0.5 * log_central_ratio(j))
    return float(out[0]) if scalar else out


def psi0_squared_even(count: int) -> np.ndarray:
    """``psi_{2j}(0)**2`` for ``j = 0 .. count-1``."""
    return ORIGIN_PREFACTOR**2 * central_ratio(np.arange(count))


def energy_unperturbed(n):
    """``E_n = n + 1/2``."""
    n_arr = _check_levels(n)
    out = n_arr + 0.5
    return float(out) if np.ndim(out) == 0 else out


def c_coefficient(n):
    """``(n-1)!! / sqrt(n!)`` for even ``n`` (with ``(-1)!! = 1``)."""
    n_arr = _check_levels(n)
    if np.any(n_arr % 2):
        raise ValueError("c_n is defined for even n only")
    out = np.exp(0.5 * log_central_ratio(n_arr // 2))
    return float(out) if np.ndim(out) == 0 else out
