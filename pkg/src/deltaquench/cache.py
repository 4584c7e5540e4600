"""On-disk spectrum cache keyed by backend, k, cutoff and convention hash.

Only roots, pole offsets and eigenvector norms are stored; overlap columns are
rebuilt from them exactly, so warm and cold results are bit-identical.
"""

from __future__ import annotations

import io
import math
from pathlib import Path

import numpy as np

from .output import CONVENTION_HASH, atomic_write_bytes
from .spectrum import FINITE, STRONG, PerturbedSpectrum, build_spectrum

__all__ = ["SpectrumCache", "cache_key"]


def cache_key(k: float, cutoff: int) -> str:
    backend = STRONG if math.isinf(k) else FINITE
    ktxt = "inf" if math.isinf(k) else float(k).hex()
    return f"{backend}_k{ktxt}_M{cutoff}_{CONVENTION_HASH}"


class SpectrumCache:
    """Directory of ``.npz`` spectra; ``None`` directory disables caching."""

    def __init__(self, directory=None):
        self.directory = None if directory is None else Path(directory)
        self.hits = 0
        self.misses = 0

    def path(self, k: float, cutoff: int) -> Path | None:
        if self.directory is None:
            return None
        return self.directory / (cache_key(k, cutoff) + ".npz")

    def load(self, k: float, cutoff: int) -> PerturbedSpectrum | None:
        path = self.path(k, cutoff)
        if path is None or not path.exists():
            return None
        with np.load(path, allow_pickle=False) as data:
            if str(data["convention"]) != CONVENTION_HASH:
                return None
            backend = str(data["backend"])
            offsets = data["offsets"] if backend == FINITE else None
            norms = data["norms"] if backend == FINITE else None
            return PerturbedSpectrum(float(data["k"]), int(data["cutoff"]), data["energies"], backend, offsets, norms)

    def store(self, spectrum: PerturbedSpectrum) -> Path | None:
        path = self.path(spectrum.k, spectrum.cutoff)
        if path is None:
            return None
        empty = np.zeros(0)
        buf = io.BytesIO()
        np.savez(
            buf,
            k=np.float64(spectrum.k),
            cutoff=np.int64(spectrum.cutoff),
            backend=np.str_(spectrum.backend),
            convention=np.str_(CONVENTION_HASH),
            energies=spectrum.energies,
            offsets=empty if spectrum.offsets is None else spectrum.offsets,
            norms=empty if spectrum.norms is None else spectrum.norms,
        )
        return atomic_write_bytes(path, buf.getvalue())

    def get(self, k: float, cutoff: int) -> PerturbedSpectrum:
        spectrum = self.load(k, cutoff)
        if spectrum is not None:
            self.hits += 1
            return spectrum
        self.misses += 1
        spectrum = build_spectrum(k, cutoff)
        self.store(spectrum)
        return spectrum
