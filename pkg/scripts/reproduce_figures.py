#!/usr/bin/env python3
"""Write the data behind every figure as CSV/JSON, plus a plot script for each.

    python scripts/reproduce_figures.py --out figures/
    MPLBACKEND=Agg python figures/c13_vs_delta_plot.py

Each data file gets a sibling ``<stem>_plot.py`` that reads it by relative
name, so the directory can be moved or archived as a unit.
"""

import argparse
import math
import time
from pathlib import Path

import numpy as np

from dmqrg import results_io as rio
from dmqrg.block_rg import Couplings, flow
from dmqrg.scaling import scaling_analysis, singularity_surface, sweep

SQ2 = math.sqrt(2.0)


def fig_concurrence_vs_anisotropy(out: Path, workers):
    grid = np.linspace(0, 6, 121)
    res = [sweep(Couplings(D=d), "Delta", grid, 0, "C13", workers) for d in (0.0, 1.0, 2.0)]
    return out / "c13_vs_delta.csv", rio.sweeps_to_csv(res), "sweep"


def fig_concurrence_vs_dm(out: Path, workers):
    grid = np.linspace(0, 2, 200)
    res = [sweep(Couplings(Delta=SQ2), "D", grid, n, "C13", workers) for n in (0, 1, 2, 4, 8)]
    return out / "c13_vs_dm.csv", rio.sweeps_to_csv(res), "sweep"


def fig_derivative_delta(out: Path, workers):
    grid = np.linspace(0, 2, 401)
    res = [sweep(Couplings(Delta=SQ2), "D", grid, n, "dC13_dDelta", workers) for n in range(0, 8)]
    return out / "dc13_ddelta.csv", rio.sweeps_to_csv(res), "sweep"


def fig_eof_vs_dm(out: Path, workers):
    grid = np.linspace(0, 2, 200)
    res = [sweep(Couplings(Delta=SQ2), "D", grid, n, "eof13", workers) for n in (0, 2, 4, 8)]
    return out / "eof13_vs_dm.csv", rio.sweeps_to_csv(res), "sweep"


def fig_scaling(out: Path, workers):
    rep = scaling_analysis(SQ2, range(2, 8), workers=workers)
    return out / "scaling.json", rio.scaling_to_json(rep), "scaling"


def fig_surface(out: Path, workers):
    surf = singularity_surface(np.linspace(1, 2.5, 60), np.linspace(0, 2, 60), 6, workers=workers)
    return out / "surface.csv", rio.surface_to_csv(surf), "surface"


def fig_derivative_dm(out: Path, workers):
    grid = np.linspace(0.5, 1.5, 401)
    res = [sweep(Couplings(Delta=SQ2, D=0.5), "D", grid, n, "dC13_dD", workers) for n in (0, 2, 4, 6, 8)]
    return out / "dc13_dd.csv", rio.sweeps_to_csv(res), "sweep"


def fig_monogamy(out: Path, workers):
    grid = np.linspace(0, 2, 100)
    res = [sweep(Couplings(Delta=SQ2), "D", grid, n, obs, workers) for obs in ("C12", "C13") for n in (0, 8)]
    return out / "c12_c13_vs_dm.csv", rio.sweeps_to_csv(res), "sweep"


def fig_flow(out: Path, workers):
    return out / "flow.csv", rio.flow_to_csv(flow(Couplings(Delta=1.2, D=1.0), 20)), "flow"


FIGURES = {
    "c13_vs_delta": fig_concurrence_vs_anisotropy,
    "c13_vs_dm": fig_concurrence_vs_dm,
    "dc13_ddelta": fig_derivative_delta,
    "eof13_vs_dm": fig_eof_vs_dm,
    "scaling": fig_scaling,
    "surface": fig_surface,
    "dc13_dd": fig_derivative_dm,
    "c12_c13_vs_dm": fig_monogamy,
    "flow": fig_flow,
}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("figures"))
    p.add_argument("--only", nargs="*", choices=sorted(FIGURES), default=None)
    p.add_argument("--workers", type=int, default=None)
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in args.only or FIGURES:
        t0 = time.perf_counter()
        path, text, kind = FIGURES[name](args.out, args.workers)
        rio.atomic_write(path, text)
        script = rio.emit_plot_script(path, kind)
        print(f"{name}: {path} + {script.name} ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
