"""Initial states: single-particle and two-fermion, pure and dephased.

Only even trap levels are populated. Pure states carry complex amplitudes,
diagonal states carry probability weights. Two-fermion states are
superpositions of Slater determinants ``|a b>`` labelled by ordered level pairs
``a < b``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import gammaln

__all__ = [
    "Flavor",
    "InitialState",
    "equal_superposition",
    "dephase",
    "two_level",
    "coherent",
    "two_fermion_superposition",
    "parse_state_spec",
    "state_family",
]

_NORM_TOL = 1e-12


class Flavor(str, Enum):
    pure_single = "pure_single"
    diagonal_single = "diagonal_single"
    pure_two_fermion = "pure_two_fermion"
    diagonal_two_fermion = "diagonal_two_fermion"

    @property
    def is_pure(self) -> bool:
        return self in (Flavor.pure_single, Flavor.pure_two_fermion)

    @property
    def is_two_fermion(self) -> bool:
        return self in (Flavor.pure_two_fermion, Flavor.diagonal_two_fermion)


@dataclass(frozen=True, eq=False)
class InitialState:
    """Immutable initial state.

    ``levels`` is ``(K,)`` for single particles and ``(K, 2)`` ordered pairs for
    two fermions. Exactly one of ``amplitudes`` / ``weights`` is set.
    """

    flavor: Flavor
    levels: np.ndarray
    amplitudes: np.ndarray | None = None
    weights: np.ndarray | None = None
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=np.int64)
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        if np.any(levels < 0) or np.any(levels % 2):
            raise ValueError("states live on even levels only")
        if self.flavor.is_two_fermion:
            if levels.ndim != 2 or levels.shape[1] != 2 or np.any(levels[:, 0] >= levels[:, 1]):
                raise ValueError("two-fermion pairs must be strictly ordered (a < b)")
        elif levels.ndim != 1:
            raise ValueError("single-particle levels must be one-dimensional")
        if self.flavor.is_pure:
            if self.amplitudes is None or self.weights is not None:
                raise ValueError("pure states need amplitudes only")
            amps = np.asarray(self.amplitudes, dtype=complex)
            amps.setflags(write=False)
            object.__setattr__(self, "amplitudes", amps)
            if abs(float(np.sum(np.abs(amps) ** 2)) - 1.0) > _NORM_TOL:
                raise ValueError("amplitudes are not normalised")
        else:
            if self.weights is None or self.amplitudes is not None:
                raise ValueError("diagonal states need weights only")
            wts = np.asarray(self.weights, dtype=float)
            wts.setflags(write=False)
            object.__setattr__(self, "weights", wts)
            if np.any(wts < 0) or abs(float(wts.sum()) - 1.0) > _NORM_TOL:
                raise ValueError("weights must be a probability vector")
        if len(levels) != len(self.amplitudes if self.flavor.is_pure else self.weights):
            raise ValueError("levels and coefficients differ in length")

    @property
    def is_pure(self) -> bool:
        return self.flavor.is_pure

    @property
    def is_two_fermion(self) -> bool:
        return self.flavor.is_two_fermion

    @property
    def max_level(self) -> int:
        return int(self.levels.max())

    @property
    def populations(self) -> np.ndarray:
        """Diagonal of the density matrix in the unperturbed basis."""
        return np.abs(self.amplitudes) ** 2 if self.is_pure else self.weights

    def as_dict(self) -> dict:
        keys = [tuple(int(v) for v in row) for row in self.levels] if self.is_two_fermion else [int(v) for v in self.levels]
        values = self.amplitudes if self.is_pure else self.weights
        return dict(zip(keys, values.tolist()))


def _pure(levels, amps, label, two=False, **meta) -> InitialState:
    flavor = Flavor.pure_two_fermion if two else Flavor.pure_single
    return InitialState(flavor, np.asarray(levels), amplitudes=np.asarray(amps, dtype=complex), label=label, meta=meta)


def equal_superposition(N: int) -> InitialState:
    """``sum_j (-1)^j |2j> / sqrt(N)`` over the ``N`` lowest even levels."""
    if N < 1:
        raise ValueError("N must be >= 1")
    j = np.arange(N)
    amps = np.where(j % 2 == 0, 1.0, -1.0) / math.sqrt(N)
    return _pure(2 * j, amps, f"equal:N={N}")


def dephase(state: InitialState) -> InitialState:
    """Drop all coherences: ``p_n = |alpha_n|^2``."""
    if not state.is_pure:
        raise ValueError("state is already diagonal")
    flavor = Flavor.diagonal_two_fermion if state.is_two_fermion else Flavor.diagonal_single
    weights = np.abs(state.amplitudes) ** 2
    weights = weights / weights.sum()
    return InitialState(flavor, state.levels, weights=weights, label=f"diag-{state.label}", meta=dict(state.meta))


def two_level(theta: float, phi: float) -> InitialState:
    """``cos(theta/2)|0> + e^{i phi} sin(theta/2)|2>``."""
    amps = [math.cos(theta / 2.0), cmath.exp(1j * phi) * math.sin(theta / 2.0)]
    return _pure([0, 2], amps, f"twolevel:theta={theta!r},phi={phi!r}")


def coherent(xi: complex, N: int) -> InitialState:
    """Even part of a coherent state, levels ``0, 2, ..., <= N``, renormalised.

    Amplitudes follow ``(-1)^(n/2) xi^n / sqrt(n!)``; the squared norm of the
    truncated series before renormalisation is kept in ``meta['norm_before']``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    xi = complex(xi)
    n = np.arange(0, N + 1, 2)
    r = abs(xi)
    if r == 0.0:
        amps = np.zeros(n.size, dtype=complex)
        amps[0] = 1.0
        return _pure(n, amps, f"coherent:xi={xi!r},N={N}", norm_before=1.0)
    log_mod = n * math.log(r) - 0.5 * gammaln(n + 1.0) - 0.5 * r * r
    phase = np.exp(1j * n * cmath.phase(xi)) * np.where((n // 2) % 2 == 0, 1.0, -1.0)
    shift = log_mod.max()
    raw = np.exp(log_mod - shift) * phase
    norm2 = float(np.sum(np.abs(raw) ** 2))
    norm_before = norm2 * math.exp(2.0 * shift)
    return _pure(n, raw / math.sqrt(norm2), f"coherent:xi={xi!r},N={N}", norm_before=norm_before)


def two_fermion_superposition(N: int, phase: bool = True) -> InitialState:
    """Antisymmetrised ``sum_{j=1..N} (-1)^(j-1) |0, 2j> / sqrt(N)``.

    With ``phase=False`` every determinant gets ``+1/sqrt(N)``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    j = np.arange(1, N + 1)
    signs = np.where(j % 2 == 1, 1.0, -1.0) if phase else np.ones(N)
    pairs = np.stack([np.zeros(N, dtype=np.int64), 2 * j], axis=1)
    label = f"fermi2:N={N}" if phase else f"fermi2:N={N},phase=0"
    return _pure(pairs, signs / math.sqrt(N), label, two=True)


_FAMILIES = {"equal", "diag-equal", "twolevel", "coherent", "fermi2", "diag-fermi2"}


def _parse_params(text: str) -> dict:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise ValueError(f"malformed state parameter {item!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def parse_state_spec(spec: str) -> InitialState:
    """Build a state from strings such as ``equal:N=10`` or ``coherent:xi=1.5+0i,N=40``."""
    family, _, rest = spec.partition(":")
    family = family.strip()
    if family not in _FAMILIES:
        raise ValueError(f"unknown state family {family!r}")
    params = _parse_params(rest)
    try:
        if family in ("equal", "diag-equal"):
            state = equal_superposition(int(params["N"]))
        elif family == "twolevel":
            state = two_level(float(params["theta"]), float(params.get("phi", 0.0)))
        elif family == "coherent":
            xi = complex(params["xi"].replace("i", "j"))
            state = coherent(xi, int(params["N"]))
        else:
            phase = params.get("phase", "1") not in ("0", "false", "False")
            state = two_fermion_superposition(int(params["N"]), phase=phase)
    except KeyError as exc:
        raise ValueError(f"state spec {spec!r} is missing {exc.args[0]!r}") from None
    if family.startswith("diag-"):
        state = dephase(state)
    return InitialState(state.flavor, state.levels, state.amplitudes, state.weights, label=spec, meta=state.meta)


def state_family(family: str, N: int) -> InitialState:
    """Member ``N`` of a sweep family (``equal``, ``diag-equal``, ``fermi2``, ...)."""
    return parse_state_spec(f"{family}:N={N}")
