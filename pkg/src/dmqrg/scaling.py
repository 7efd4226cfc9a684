"""Parameter sweeps, the dC/dDelta minimum and log-log scaling fits."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .block_rg import BLOCK_SIZE, Couplings, critical_dm
from .config import TOL
from .entanglement import concurrence_at_step, dC_dD, dC_dDelta, eof_at_step
from .errors import DegenerateFit, NoMinimumBracketed, StepTooLarge

OBSERVABLES: dict[str, Callable[[Couplings, int], float]] = {
    "C13": lambda c, n: concurrence_at_step(c, n, "sites_13"),
    "C12": lambda c, n: concurrence_at_step(c, n, "sites_12"),
    "eof13": lambda c, n: eof_at_step(c, n, "sites_13"),
    "eof12": lambda c, n: eof_at_step(c, n, "sites_12"),
    "dC13_dDelta": lambda c, n: dC_dDelta(c, n, "sites_13"),
    "dC13_dD": lambda c, n: dC_dD(c, n, "sites_13"),
    "dC12_dDelta": lambda c, n: dC_dDelta(c, n, "sites_12"),
    "dC12_dD": lambda c, n: dC_dD(c, n, "sites_12"),
}

_AXES = {"delta": "Delta", "d": "D"}


def canonical_axis(axis: str) -> str:
    try:
        return _AXES[axis.lower()]
    except (KeyError, AttributeError):
        raise ValueError(f"axis must be 'Delta' or 'D', got {axis!r}") from None


def canonical_observable(name: str) -> str:
    for key in OBSERVABLES:
        if key.lower() == str(name).lower():
            return key
    raise ValueError(f"unknown observable {name!r}; choose from {sorted(OBSERVABLES)}")


def effective_size(n_steps: int) -> int:
    return BLOCK_SIZE ** (n_steps + 1)


@dataclass(frozen=True)
class SweepResult:
    """Observable on a 1-D grid of one bare coupling; NaN marks a missing point."""

    axis: str
    grid: np.ndarray
    values: np.ndarray
    n_steps: int
    observable: str
    fixed_params: Couplings
    effective_size: int = field(default=0)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or values.shape != grid.shape:
            raise ValueError("grid and values must be 1-D of equal length")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly ascending")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if not self.effective_size:
            object.__setattr__(self, "effective_size", effective_size(self.n_steps))

    def couplings_at(self, k: int) -> Couplings:
        return self.fixed_params.with_(**{self.axis: float(self.grid[k])})


def _eval_point(args) -> float:
    c, n, observable = args
    try:
        return OBSERVABLES[observable](c, n)
    except StepTooLarge:
        return math.nan


def _map(tasks: list, workers: Optional[int]) -> list[float]:
    # pool.map keeps input order, so parallel output equals sequential output
    if workers is None or workers <= 1 or len(tasks) < 2:
        return [_eval_point(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_eval_point, tasks, chunksize=chunk))


def sweep(
    fixed: Couplings,
    axis: str,
    grid: Iterable[float],
    n_steps: int,
    observable: str = "C13",
    workers: Optional[int] = None,
) -> SweepResult:
    """Evaluate ``observable`` after ``n_steps`` RG steps along ``axis``.

    Points where the finite-difference stencil straddles saturation are
    recorded as NaN instead of aborting the sweep.
    """
    axis = canonical_axis(axis)
    observable = canonical_observable(observable)
    grid = np.asarray(list(grid), dtype=float)
    if n_steps < 0 or n_steps > TOL.max_steps:
        raise ValueError(f"n_steps must be in [0, {TOL.max_steps}]")
    # builds every Couplings up front so invalid grids fail before any work
    tasks = [(fixed.with_(**{axis: float(x)}), int(n_steps), observable) for x in grid]
    values = _map(tasks, workers)
    if grid.size:
        # the swept coordinate of ``fixed`` is meaningless; pin it to the first grid point
        fixed = tasks[0][0]
    return SweepResult(axis, grid, np.array(values, dtype=float), int(n_steps), observable, fixed)


@dataclass(frozen=True)
class DerivativeMinimum:
    D_m: float
    min_value: float
    n_steps: int


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on [a, b] until the bracket is narrower than ``tol``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def default_coarse_grid(delta: float) -> np.ndarray:
    top = critical_dm(delta) + 1.0 if delta > 1 else 2.0
    return np.linspace(0.0, top, 401)


def find_derivative_minimum(
    fixed: Couplings,
    n_steps: int,
    coarse_grid: Optional[Sequence[float]] = None,
    pair: str = "sites_13",
    tol: float = TOL.golden_tol,
) -> DerivativeMinimum:
    """Locate the minimum over D of dC/dDelta at fixed bare anisotropy.

    A coarse scan picks the bracketing cell, golden-section search refines
    it to ``tol``.  The derivative depends on D only through D^2, so a
    coarse minimum sitting on D = 0 is a genuine stationary minimum and is
    accepted; a minimum on any other grid edge raises NoMinimumBracketed.
    """
    grid = default_coarse_grid(fixed.Delta) if coarse_grid is None else np.asarray(coarse_grid, dtype=float)
    if grid.size < 3:
        raise ValueError("coarse grid needs at least three points")

    def f(d: float) -> float:
        return dC_dDelta(fixed.with_(D=max(d, 0.0)), n_steps, pair)

    vals = np.array([_eval_or_nan(f, d) for d in grid])
    if np.all(np.isnan(vals)):
        raise NoMinimumBracketed("derivative undefined on the whole coarse grid")
    i = int(np.nanargmin(vals))
    if i == grid.size - 1 or (i == 0 and grid[0] != 0.0):
        raise NoMinimumBracketed(f"coarse minimum at grid edge D={grid[i]}")
    lo = grid[i - 1] if i > 0 else 0.0
    d_m, v = golden_section(f, lo, grid[i + 1], tol)
    return DerivativeMinimum(float(d_m), float(v), int(n_steps))


def _eval_or_nan(f, x):
    try:
        return f(x)
    except StepTooLarge:
        return math.nan


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares line ``ln y = slope * ln N + intercept``."""

    slope: float
    intercept: float
    r_squared: float
    points: tuple[tuple[float, float], ...]
    nu_estimate: float


def linear_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Slope, intercept and r^2 of an ordinary least-squares line."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("a scaling fit needs at least three points")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise DegenerateFit("all abscissae are equal")
    slope = float(np.sum((x - xm) * (y - ym))) / sxx
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return slope, intercept, r2


def _fit(ln_n, ln_y, nu) -> ScalingFit:
    slope, intercept, r2 = linear_fit(ln_n, ln_y)
    pts = tuple((float(a), float(b)) for a, b in zip(ln_n, ln_y))
    return ScalingFit(slope, intercept, r2, pts, nu(slope))


def fit_position_scaling(results: Sequence[tuple[int, float]], d_c: float) -> ScalingFit:
    """Fit ``ln(D_c - D_m)`` against ``ln N`` with ``N = 3^(n+1)``."""
    results = list(results)
    gaps = [d_c - d for _, d in results]
    if any(g <= 0 for g in gaps):
        raise ValueError("every D_m must lie below D_c")
    ln_n = [math.log(effective_size(n)) for n, _ in results]
    return _fit(ln_n, [math.log(g) for g in gaps], lambda s: -1.0 / s if s else math.inf)


def fit_divergence_scaling(results: Sequence[tuple[int, float]]) -> ScalingFit:
    """Fit ``ln|dC/dDelta|_min`` against ``ln N``."""
    results = list(results)
    if any(v == 0 for _, v in results):
        raise ValueError("minimum values must be non-zero")
    ln_n = [math.log(effective_size(n)) for n, _ in results]
    return _fit(ln_n, [math.log(abs(v)) for _, v in results], lambda s: 1.0 / abs(s) if s else math.inf)


@dataclass(frozen=True)
class ScalingPoint:
    n: int
    N: int
    D_m: float
    min_value: float


@dataclass(frozen=True)
class ScalingReport:
    delta: float
    d_c: float
    points: tuple[ScalingPoint, ...]
    position_fit: ScalingFit
    divergence_fit: ScalingFit
    J: float = 1.0


def scaling_analysis(
    delta: float = math.sqrt(2.0),
    n_values: Iterable[int] = range(2, 8),
    J: float = 1.0,
    coarse_grid: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
) -> ScalingReport:
    """D_m and |dC/dDelta|_min for each n, plus both log-log fits."""
    n_values = [int(n) for n in n_values]
    d_c = critical_dm(delta)
    fixed = Couplings(J=J, Delta=delta, D=0.0)
    tasks = [(fixed, n, coarse_grid) for n in n_values]
    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            minima = list(pool.map(_minimum_task, tasks))
    else:
        minima = [_minimum_task(t) for t in tasks]
    points = tuple(ScalingPoint(m.n_steps, effective_size(m.n_steps), m.D_m, m.min_value) for m in minima)
    pos = fit_position_scaling([(p.n, p.D_m) for p in points], d_c)
    div = fit_divergence_scaling([(p.n, p.min_value) for p in points])
    return ScalingReport(delta, d_c, points, pos, div, J)


def _minimum_task(args) -> DerivativeMinimum:
    fixed, n, grid = args
    return find_derivative_minimum(fixed, n, grid)


@dataclass(frozen=True)
class SurfaceResult:
    """dC/dDelta on a (D, Delta) grid; ``values[i, j]`` is at ``d_grid[i]``, ``delta_grid[j]``."""

    delta_grid: np.ndarray
    d_grid: np.ndarray
    values: np.ndarray
    n_steps: int
    observable: str = "dC13_dDelta"

    def extremal_delta(self) -> np.ndarray:
        """Per D row, the Delta where |value| is largest (NaN-aware)."""
        out = np.full(self.d_grid.size, math.nan)
        for i, row in enumerate(np.abs(self.values)):
            if not np.all(np.isnan(row)):
                out[i] = self.delta_grid[int(np.nanargmax(row))]
        return out


def singularity_surface(
    delta_grid: Iterable[float],
    d_grid: Iterable[float],
    n_steps: int,
    observable: str = "dC13_dDelta",
    J: float = 1.0,
    workers: Optional[int] = None,
) -> SurfaceResult:
    """Dense 2-D evaluation of a derivative observable for surface plots."""
    observable = canonical_observable(observable)
    dg = np.asarray(list(delta_grid), dtype=float)
    Dg = np.asarray(list(d_grid), dtype=float)
    tasks = [(Couplings(J=J, Delta=float(x), D=float(d)), int(n_steps), observable) for d in Dg for x in dg]
    vals = np.array(_map(tasks, workers), dtype=float).reshape(Dg.size, dg.size)
    return SurfaceResult(dg, Dg, vals, int(n_steps), observable)
