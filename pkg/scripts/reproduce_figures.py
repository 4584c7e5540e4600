"""Regenerate the data behind the four figure recipes in ``configs/``.

    python3 scripts/reproduce_figures.py --out results [--figures fig1 fig3]

Each recipe is run through the CLI; recipes with a ``_trend`` block also write
a per-N table (average work, tau_QSL, non-positivity) computed with the library.
"""

from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np

from deltaquench.cache import SpectrumCache
from deltaquench.cli import main as cli_main
from deltaquench.config import RunConfig, parse_n_range
from deltaquench.echo import echo_series, kdq_table
from deltaquench.output import metadata, write_csv
from deltaquench.states import state_family
from deltaquench.workstats import average_work_direct, first_local_minimum, nonpositivity, qsl_time

ROOT = Path(__file__).resolve().parent.parent


def run_recipe(name: str, out: Path, cache_dir: str) -> None:
    recipe_path = ROOT / "configs" / f"{name}.json"
    recipe = json.loads(recipe_path.read_text())
    target = out / name
    common = ["--config", str(recipe_path), "--out", str(target), "--cache-dir", cache_dir]
    code = cli_main(common)
    if code:
        raise SystemExit(f"{name}: command exited with {code}")
    for follow in recipe.get("_then", []):
        if follow == "fit":
            code = cli_main(["--out", str(target), "fit", "--input", str(target / "sweep.csv")])
            if code:
                raise SystemExit(f"{name}: fit exited with {code}")
    if recipe.get("command") == "work":
        # the companion dephased state
        dephased = "diag-" + recipe["state"]
        cli_main(common + ["work", "--state", dephased, "--out", str(target / "dephased")])
        cli_main(common + ["echo", "--state", recipe["state"], "--tmax", "6.283185307179586", "--points", "2000"])
    if "_trend" in recipe:
        trend(recipe, target, cache_dir)


def trend(recipe: dict, target: Path, cache_dir: str) -> None:
    spec = recipe["_trend"]
    cfg = RunConfig.from_dict({key: val for key, val in recipe.items() if not key.startswith("_")}).resolved()
    cache = SpectrumCache(cache_dir)
    t = cfg.t_grid()
    cols = {"family": [], "k": [], "N": [], "avg_work": [], "tau": [], "tau_qsl": [], "n_re": []}
    for k in spec["k"]:
        spectrum = cache.get(float(k), cfg.cutoff_for(float(k)))
        for family in spec["families"]:
            for N in parse_n_range(spec["N"]):
                state = state_family(family, N)
                table = kdq_table(state, spectrum, orbitals=cfg.orbitals)
                series = echo_series(table, t)
                work = average_work_direct(state, float(k))
                tau = first_local_minimum(series, tmax=cfg.tmax)
                cols["family"].append(family)
                cols["k"].append(repr(float(k)))
                cols["N"].append(N)
                cols["avg_work"].append(work)
                cols["tau"].append(tau)
                cols["tau_qsl"].append(qsl_time(series, work, tau) if work else math.nan)
                cols["n_re"].append(nonpositivity(table))
    arrays = {
        "family": np.array(cols["family"], dtype=object),
        "k": np.array(cols["k"], dtype=object),
        "N": np.array(cols["N"], dtype=np.int64),
    }
    for key in ("avg_work", "tau", "tau_qsl", "n_re"):
        arrays[key] = np.array(cols[key], dtype=float)
    write_csv(target / "trend.csv", arrays, metadata(cfg.to_dict(), trend=spec))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results")
    parser.add_argument("--cache-dir", default=None)
    parser.add_argument("--figures", nargs="*", default=["fig1", "fig2", "fig3", "fig4"])
    args = parser.parse_args()
    out = Path(args.out)
    cache_dir = args.cache_dir or str(out / "cache")
    for name in args.figures:
        run_recipe(name, out, cache_dir)
        print(f"{name}: written to {out / name}")


if __name__ == "__main__":
    main()
