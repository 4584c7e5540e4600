"""Run configuration shared by the CLI, recipe files and output metadata."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .echo import DEFAULT_PAIR_ORBITALS
from .spectrum import DEFAULT_CUTOFF, DEFAULT_STRONG_CUTOFF
from .states import parse_state_spec

__all__ = ["RunConfig", "parse_k", "parse_n_range", "COMMANDS", "ValidationError"]

COMMANDS = ("spectrum", "echo", "work", "fit", "sweep", "cusps")

# per-command time grids: (tmin, tmax, points, grid)
_GRID_DEFAULTS = {
    "echo": (0.0, 2.0 * math.pi, 2000, "linear"),
    "cusps": (0.0, 2.0 * math.pi, 2000, "linear"),
    "work": (0.0, math.pi, 1000, "linear"),
    "sweep": (0.01, 1.0, 30, "log"),
}


class ValidationError(ValueError):
    pass


def parse_k(value) -> float:
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity"):
            return math.inf
        try:
            value = float(text)
        except ValueError:
            raise ValidationError(f"invalid k {value!r}") from None
    value = float(value)
    if math.isnan(value) or not value > 0:
        raise ValidationError(f"k must be positive or inf, got {value}")
    return value


def parse_n_range(value) -> list[int]:
    """``"2:20"`` (inclusive), ``"2:50:4"``, ``"1,2,4"`` or a list of ints."""
    if isinstance(value, (list, tuple)):
        out = [int(v) for v in value]
    else:
        text = str(value).strip()
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValidationError(f"invalid N range {value!r}")
            step = parts[2] if len(parts) == 3 else 1
            if step < 1:
                raise ValidationError("N step must be >= 1")
            out = list(range(parts[0], parts[1] + 1, step))
        else:
            out = [int(p) for p in text.split(",") if p.strip()]
    if not out or min(out) < 1:
        raise ValidationError("N values must be >= 1")
    return out


def _k_out(k: float):
    return "inf" if math.isinf(k) else k


@dataclass
class RunConfig:
    command: str = ""
    state: str | None = None
    states: list = field(default_factory=lambda: ["equal"])
    k: list = field(default_factory=lambda: [10.0])
    cutoff: int | None = None
    orbitals: int = DEFAULT_PAIR_ORBITALS
    N: list = field(default_factory=lambda: list(range(2, 21)))
    tmin: float | None = None
    tmax: float | None = None
    points: int | None = None
    grid: str | None = None
    tau: float | None = None
    bin_width: float = 1.0
    threshold: float = 1.0
    probe: int | None = None
    tolerance: float | None = None
    kdq: bool = False
    input: str | None = None
    out: str = "."
    cache_dir: str | None = None
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "k" in kwargs:
            raw = kwargs["k"]
            if isinstance(raw, str):
                raw = raw.split(",")
            elif not isinstance(raw, (list, tuple)):
                raw = [raw]
            kwargs["k"] = [parse_k(v) for v in raw]
        if "N" in kwargs:
            kwargs["N"] = parse_n_range(kwargs["N"])
        if "states" in kwargs and isinstance(kwargs["states"], str):
            kwargs["states"] = [s for s in kwargs["states"].split(",") if s]
        return cls(**kwargs)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["k"] = [_k_out(k) for k in self.k]
        return data

    def merged(self, overrides: dict) -> "RunConfig":
        """Apply non-``None`` overrides on top of this config."""
        base = self.to_dict()
        base.update({key: val for key, val in overrides.items() if val is not None})
        return RunConfig.from_dict(base)

    @property
    def single_k(self) -> float:
        if len(self.k) != 1:
            raise ValidationError(f"{self.command} takes a single k")
        return self.k[0]

    def cutoff_for(self, k: float) -> int:
        if self.cutoff is not None:
            return self.cutoff
        return DEFAULT_STRONG_CUTOFF if math.isinf(k) else DEFAULT_CUTOFF

    def resolved(self) -> "RunConfig":
        """Fill command-specific defaults so outputs record every parameter."""
        tmin, tmax, points, grid = _GRID_DEFAULTS.get(self.command, (None, None, None, None))
        return replace(
            self,
            tmin=self.tmin if self.tmin is not None else tmin,
            tmax=self.tmax if self.tmax is not None else tmax,
            points=self.points if self.points is not None else points,
            grid=self.grid if self.grid is not None else grid,
        )

    def t_grid(self) -> np.ndarray:
        cfg = self.resolved()
        if cfg.grid == "log":
            if not cfg.tmin > 0:
                raise ValidationError("log grids need tmin > 0")
            return np.geomspace(cfg.tmin, cfg.tmax, cfg.points)
        return np.linspace(cfg.tmin, cfg.tmax, cfg.points)

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        for k in self.k:
            parse_k(k)
        if self.cutoff is not None and self.cutoff < 1:
            raise ValidationError("cutoff must be >= 1")
        if self.orbitals < 2:
            raise ValidationError("orbitals must be >= 2")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        if not self.bin_width > 0:
            raise ValidationError("bin width must be positive")
        if self.grid not in (None, "linear", "log"):
            raise ValidationError("grid must be 'linear' or 'log'")
        if self.points is not None and self.points < 1:
            raise ValidationError("points must be >= 1")
        if self.tmin is not None and self.tmax is not None and self.tmax < self.tmin:
            raise ValidationError("tmax must not be below tmin")
        if self.command in ("echo", "work", "cusps"):
            if not self.state:
                raise ValidationError(f"{self.command} needs --state")
            self.single_k
            state = parse_state_spec(self.state)
            top = int(state.levels.max()) // 2 + 1
            limit = min(self.orbitals, self.cutoff_for(self.k[0])) if state.is_two_fermion else self.cutoff_for(self.k[0])
            if top > limit:
                raise ValidationError(f"state needs {top} even levels but the cutoff holds {limit}")
        if self.command == "spectrum":
            self.single_k
            if self.cutoff_for(self.k[0]) < (1 if math.isinf(self.k[0]) else 2):
                raise ValidationError("cutoff too small")
            if self.probe is not None and self.probe <= self.cutoff_for(self.k[0]):
                raise ValidationError("probe reference cutoff must exceed the cutoff")
        if self.command == "sweep":
            if not self.states:
                raise ValidationError("sweep needs at least one state family")
            for family in self.states:
                parse_state_spec(f"{family}:N={max(self.N)}")
        if self.command == "fit" and not self.input:
            raise ValidationError("fit needs --input (a sweep CSV)")
        return self
