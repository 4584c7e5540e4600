"""Command-line interface: ``deltaquench <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 convergence failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .cache import SpectrumCache
from .config import RunConfig, ValidationError
from .echo import detect_cusps, echo_series, kdq_table
from .output import metadata, read_csv, write_csv, write_json
from .scaling import FitError, fit_scaling, fit_time_laws
from .spectrum import ConvergenceError, convergence_probe
from .states import parse_state_spec, state_family
from .workstats import (
    WorkReport,
    average_work_direct,
    average_work_moment,
    first_local_minimum,
    mhq_histogram,
    nonpositivity,
    qsl_time,
    truncated_variance,
    variance_growth_exponent,
    work_slope,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4


def _k_label(k: float) -> str:
    return "inf" if math.isinf(k) else repr(float(k))


def _meta(cfg: RunConfig, **extra) -> dict:
    return metadata(cfg.to_dict(), **extra)


def _probe_meta(cfg: RunConfig, k: float, cutoff: int):
    if cfg.probe is None:
        return None
    return convergence_probe(k, cutoff, cfg.probe, tolerance=cfg.tolerance).as_dict()


def _out(cfg: RunConfig, name: str) -> Path:
    return Path(cfg.out) / name


def cmd_spectrum(cfg: RunConfig) -> list[Path]:
    k = cfg.single_k
    cutoff = cfg.cutoff_for(k)
    cache = SpectrumCache(cfg.cache_dir)
    spectrum = cache.get(k, cutoff)
    reference = cfg.probe if cfg.probe is not None else 2 * cutoff
    probe = convergence_probe(k, cutoff, reference, tolerance=cfg.tolerance)
    summary = spectrum.with_probe(probe).summary()
    files = [write_json(_out(cfg, "spectrum.json"), summary, _meta(cfg, cutoff=cutoff))]
    if cache.directory is not None:
        files.append(cache.path(k, cutoff))
    return files


def _echo_for(cfg: RunConfig, state_spec: str, k: float, cache: SpectrumCache, t: np.ndarray):
    state = parse_state_spec(state_spec)
    spectrum = cache.get(k, cfg.cutoff_for(k))
    table = kdq_table(state, spectrum, orbitals=cfg.orbitals)
    return state, spectrum, table, echo_series(table, t)


def _echo_columns(series) -> dict:
    return {
        "t": series.t,
        "re_nu": series.nu.real,
        "im_nu": series.nu.imag,
        "abs_nu": series.abs,
        "abs_nu_sq": series.abs_sq,
    }


def cmd_echo(cfg: RunConfig) -> list[Path]:
    k = cfg.single_k
    cache = SpectrumCache(cfg.cache_dir)
    _, spectrum, table, series = _echo_for(cfg, cfg.state, k, cache, cfg.t_grid())
    meta = _meta(cfg, cutoff=spectrum.cutoff, probe=_probe_meta(cfg, k, spectrum.cutoff), echo=series.meta)
    files = [write_csv(_out(cfg, "echo.csv"), _echo_columns(series), meta)]
    if cfg.kdq:
        n, m, w, q = table.entries()
        cols = {"n": n, "m": m} if not table.two_fermion else {
            "n": np.array([f"{a}-{b}" for a, b in n], dtype=object),
            "m": np.array([f"{a}-{b}" for a, b in m], dtype=object),
        }
        cols.update({"w": w, "re_q": q.real, "im_q": q.imag})
        files.append(write_csv(_out(cfg, "kdq.csv"), cols, meta))
    return files


def cmd_work(cfg: RunConfig) -> list[Path]:
    k = cfg.single_k
    if math.isinf(k):
        raise ValidationError("work statistics need a finite k")
    cache = SpectrumCache(cfg.cache_dir)
    state, spectrum, table, series = _echo_for(cfg, cfg.state, k, cache, cfg.t_grid())
    direct = average_work_direct(state, k)
    tau = cfg.tau if cfg.tau is not None else first_local_minimum(series, tmax=cfg.resolved().tmax)
    if cfg.tau is not None:
        # evaluate exactly at the requested time
        series_tau = echo_series(table, [tau])
        tau_qsl = float((1.0 - abs(series_tau.nu[0])) / abs(direct))
    else:
        tau_qsl = qsl_time(series, direct, tau)
    if state.is_two_fermion:
        var, growth = None, None
    else:
        var = truncated_variance(state, k, spectrum.cutoff)
        growth = variance_growth_exponent([spectrum.cutoff * 2**i for i in range(5)])
    bins = mhq_histogram(table, cfg.bin_width)
    report = WorkReport(
        state=cfg.state,
        k=k,
        cutoff=spectrum.cutoff,
        n_re=nonpositivity(table),
        avg_work_direct=direct,
        avg_work_moment=average_work_moment(table),
        slope_fit=work_slope(state, k),
        variance_value=var,
        variance_cutoff=spectrum.cutoff,
        variance_growth_exponent=growth,
        tau=tau,
        tau_qsl=tau_qsl,
        mhq_bins=bins,
    )
    meta = _meta(cfg, cutoff=spectrum.cutoff, probe=_probe_meta(cfg, k, spectrum.cutoff))
    keep = bins[1] != 0
    return [
        write_json(_out(cfg, "work.json"), report.as_dict(), meta),
        write_csv(_out(cfg, "mhq.csv"), {"w_bin": bins[0][keep], "re_q_sum": bins[1][keep]}, meta),
    ]


def _sweep_task(cfg, cache, family, k, t):
    def run(N):
        state = state_family(family, N)
        spectrum = cache.get(k, cfg.cutoff_for(k))
        return echo_series(kdq_table(state, spectrum, orbitals=cfg.orbitals), t)

    return run


def cmd_sweep(cfg: RunConfig) -> list[Path]:
    cache = SpectrumCache(cfg.cache_dir)
    t = cfg.t_grid()
    rows = {"family": [], "k": [], "N": [], "t": [], "re_nu": [], "im_nu": [], "abs_nu": []}
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        for k in cfg.k:
            # build once up front so workers only read
            cache_k = _PinnedCache(cache, k, cfg.cutoff_for(k))
            for family in cfg.states:
                for N, series in zip(cfg.N, pool.map(_sweep_task(cfg, cache_k, family, k, t), cfg.N)):
                    size = t.size
                    rows["family"].extend([family] * size)
                    rows["k"].extend([_k_label(k)] * size)
                    rows["N"].append(np.full(size, N, dtype=np.int64))
                    rows["t"].append(t)
                    rows["re_nu"].append(series.nu.real)
                    rows["im_nu"].append(series.nu.imag)
                    rows["abs_nu"].append(series.abs)
    cols = {
        "family": np.array(rows["family"], dtype=object),
        "k": np.array(rows["k"], dtype=object),
        "N": np.concatenate(rows["N"]),
    }
    for key in ("t", "re_nu", "im_nu", "abs_nu"):
        cols[key] = np.concatenate(rows[key])
    cutoffs = {_k_label(k): cfg.cutoff_for(k) for k in cfg.k}
    return [write_csv(_out(cfg, "sweep.csv"), cols, _meta(cfg, cutoffs=cutoffs))]


class _PinnedCache:
    """Holds one prebuilt spectrum for the duration of a sweep."""

    def __init__(self, cache: SpectrumCache, k: float, cutoff: int):
        self.spectrum = cache.get(k, cutoff)

    def get(self, k, cutoff):
        return self.spectrum


def cmd_fit(cfg: RunConfig) -> list[Path]:
    meta_in, cols = read_csv(cfg.input)
    family_col = cols["family"]
    k_col = cols["k"]
    if k_col.dtype != object:
        k_col = np.array([_k_label(v) for v in k_col], dtype=object)
    files = []
    groups = sorted({(str(f), str(k)) for f, k in zip(family_col, k_col)})
    for family, ktxt in groups:
        sel = (family_col == family) & (k_col == ktxt)
        ns = np.asarray(cols["N"][sel]).astype(int)
        ts = cols["t"][sel]
        nu = cols["abs_nu"][sel]
        t_grid = np.unique(ts)
        by_n = {}
        for N in np.unique(ns):
            mask = ns == N
            order = np.argsort(ts[mask])
            if not np.array_equal(ts[mask][order], t_grid):
                raise ValidationError(f"N={N} does not cover the common time grid")
            by_n[int(N)] = nu[mask][order]
        k = math.inf if ktxt == "inf" else float(ktxt)
        fit = fit_scaling(t_grid, by_n, k=k, state_family=family)
        try:
            fit_time_laws(fit, diagonal_flavor=family.startswith("diag-"))
        except FitError as exc:
            fit.meta["time_law_error"] = str(exc)
        payload = fit.as_dict()
        if "time_law_error" in fit.meta:
            payload["time_law_error"] = fit.meta["time_law_error"]
        name = f"fit_{family}_k{ktxt}.json"
        files.append(write_json(_out(cfg, name), payload, _meta(cfg, source_meta=meta_in)))
    return files


def cmd_cusps(cfg: RunConfig) -> list[Path]:
    k = cfg.single_k
    cache = SpectrumCache(cfg.cache_dir)
    _, spectrum, _, series = _echo_for(cfg, cfg.state, k, cache, cfg.t_grid())
    times = detect_cusps(series, cfg.threshold)
    payload = {"state": cfg.state, "k": _k_label(k), "threshold": cfg.threshold, "times": times}
    return [write_json(_out(cfg, "cusps.json"), payload, _meta(cfg, cutoff=spectrum.cutoff))]


HANDLERS = {
    "spectrum": cmd_spectrum,
    "echo": cmd_echo,
    "work": cmd_work,
    "fit": cmd_fit,
    "sweep": cmd_sweep,
    "cusps": cmd_cusps,
}


def _add_global(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--cache-dir", dest="cache_dir", default=default, help="spectrum cache directory")
    parser.add_argument("--workers", type=int, default=default, help="worker threads for sweeps")
    parser.add_argument("--out", default=default, help="output directory")
    parser.add_argument("--config", default=default, help="JSON run configuration")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deltaquench", description="Quench of a trapped particle by a delta defect.")
    _add_global(parser, suppress=False)
    sub = parser.add_subparsers(dest="command")

    def common(p, state=True):
        _add_global(p, suppress=True)
        if state:
            p.add_argument("--state", help="state spec, e.g. equal:N=10")
        p.add_argument("--k", help="defect strength (number or 'inf')")
        p.add_argument("--cutoff", type=int, help="even levels kept in the basis")
        p.add_argument("--orbitals", type=int, help="orbital cutoff for two-fermion pair tables")
        p.add_argument("--probe", type=int, help="reference cutoff for the convergence probe")
        p.add_argument("--tolerance", type=float, help="fail with exit 3 if probe deviations exceed this")

    def timegrid(p):
        p.add_argument("--tmin", type=float)
        p.add_argument("--tmax", type=float)
        p.add_argument("--points", type=int)
        p.add_argument("--grid", choices=["linear", "log"])

    p = sub.add_parser("spectrum", help="solve and cache a spectrum")
    common(p, state=False)
    p = sub.add_parser("echo", help="Loschmidt echo time series")
    common(p)
    timegrid(p)
    p.add_argument("--kdq", action="store_true", default=None, help="also write the quasiprobability table")
    p = sub.add_parser("work", help="work statistics report")
    common(p)
    timegrid(p)
    p.add_argument("--tau", type=float)
    p.add_argument("--bin-width", dest="bin_width", type=float)
    p = sub.add_parser("sweep", help="echo over state families, N and k")
    common(p, state=False)
    timegrid(p)
    p.add_argument("--states", help="comma-separated families (equal, diag-equal, fermi2, diag-fermi2)")
    p.add_argument("--N", help="N range, e.g. 2:20 or 1,2,4")
    p = sub.add_parser("fit", help="scaling-law fits of a sweep CSV")
    _add_global(p, suppress=True)
    p.add_argument("--input", help="sweep CSV")
    p = sub.add_parser("cusps", help="cusp times of |nu|")
    common(p)
    timegrid(p)
    p.add_argument("--threshold", type=float)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = vars(args).copy()
    config_path = values.pop("config", None)
    base = RunConfig()
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid config file: {exc}") from None
        data = {key: val for key, val in data.items() if not key.startswith("_")}
        base = RunConfig.from_dict(data)
    if values.get("command") is None:
        values.pop("command", None)
    cfg = base.merged(values)
    if not cfg.command:
        raise ValidationError("no command given")
    return cfg.resolved().validate()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        files = HANDLERS[cfg.command](cfg)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValidationError, ValueError, FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in files:
        if path is not None:
            print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
