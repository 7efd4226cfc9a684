import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dmqrg.block_rg import Couplings, flow
from dmqrg.errors import DegenerateFit, NoMinimumBracketed
from dmqrg.scaling import (
    effective_size,
    find_derivative_minimum,
    fit_divergence_scaling,
    fit_position_scaling,
    golden_section,
    linear_fit,
    scaling_analysis,
    singularity_surface,
    sweep,
)

SQ2 = math.sqrt(2.0)
AT_SQ2 = Couplings(J=1.0, Delta=SQ2, D=0.0)


@pytest.fixture(scope="module")
def minima():
    return {n: find_derivative_minimum(AT_SQ2, n) for n in range(1, 8)}


def test_c13_decays_with_anisotropy():
    grid = np.arange(0, 6.0001, 0.05)
    curves = [sweep(Couplings(D=d), "Delta", grid, 0, "C13").values for d in (0.0, 1.0, 2.0)]
    for v in curves:
        assert v[0] == pytest.approx(0.5, abs=1e-12)
        assert np.all(np.diff(v) < 0)
    # larger D decays more slowly
    assert np.all(curves[1][1:] > curves[0][1:])
    assert np.all(curves[2][1:] > curves[1][1:])


def test_c13_step_across_critical_dm():
    res = sweep(Couplings(Delta=SQ2), "D", np.linspace(0, 2, 81), 8, "C13")
    assert np.all(res.values[res.grid <= 0.9] <= 1e-4)
    assert np.all(np.abs(res.values[res.grid >= 1.5] - 0.5) <= 1e-2)
    assert res.effective_size == 3**9


def test_single_point_grid():
    res = sweep(Couplings(D=1), "delta", [0.7], 0, "c13")
    assert res.grid.shape == (1,) and res.values.shape == (1,)
    assert res.axis == "Delta" and res.observable == "C13"


def test_sweep_validation():
    with pytest.raises(ValueError):
        sweep(Couplings(), "J", [1.0], 0)
    with pytest.raises(ValueError):
        sweep(Couplings(), "Delta", [1.0], 0, "negativity")
    with pytest.raises(ValueError):
        sweep(Couplings(), "Delta", [-1.0, 1.0], 0)
    with pytest.raises(ValueError):
        sweep(Couplings(), "Delta", [2.0, 1.0], 0)


def test_sweep_order_independent():
    grid = np.linspace(0.5, 1.5, 21)
    fwd = sweep(Couplings(Delta=SQ2), "D", grid, 5, "dC13_dDelta")
    rev = [sweep(Couplings(Delta=SQ2), "D", [x], 5, "dC13_dDelta").values[0] for x in grid[::-1]]
    assert np.array_equal(fwd.values, np.array(rev[::-1]))


def test_sweep_parallel_matches_sequential():
    grid = np.linspace(0.5, 1.5, 17)
    seq = sweep(Couplings(Delta=SQ2), "D", grid, 6, "dC13_dDelta", workers=1)
    par = sweep(Couplings(Delta=SQ2), "D", grid, 6, "dC13_dDelta", workers=2)
    assert np.array_equal(seq.values, par.values)


def test_sweep_records_missing_points():
    lo, hi = 1.0 + 1e-9, 50.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if flow(Couplings(Delta=mid), 5).saturated[-1] else (mid, hi)
    edge = 0.5 * (lo + hi)
    res = sweep(Couplings(D=0.0), "Delta", [1.2, edge, 20.0], 5, "dC13_dDelta")
    assert math.isnan(res.values[1])
    assert not math.isnan(res.values[0]) and res.values[2] == 0.0


def test_sweep_reproducible():
    grid = np.linspace(0.1, 2, 30)
    a = sweep(Couplings(Delta=SQ2), "D", grid, 7, "eof13")
    b = sweep(Couplings(Delta=SQ2), "D", grid, 7, "eof13")
    assert a.values.tobytes() == b.values.tobytes()


def test_golden_section_on_parabola():
    x, fx = golden_section(lambda t: (t - 0.3) ** 2 + 1, 0, 1, 1e-7)
    assert x == pytest.approx(0.3, abs=1e-6)
    assert fx == pytest.approx(1.0, abs=1e-15)


def test_minimum_approaches_critical_point_from_below(minima):
    d_m = [minima[n].D_m for n in range(1, 8)]
    values = [abs(minima[n].min_value) for n in range(1, 8)]
    assert np.all(np.diff(d_m) > 0)
    assert np.all(np.diff(values) > 0)
    assert all(d < 1 for d in d_m)
    assert abs(1 - minima[2].D_m) < abs(1 - minima[1].D_m)
    assert 1 - find_derivative_minimum(AT_SQ2, 10).D_m < 0.01


def test_first_step_minimum_sits_at_zero_dm(minima):
    # the curve is even in D; at n = 1 its minimum is the symmetric point
    assert minima[1].D_m < 1e-5


def test_minimum_needs_bracket():
    with pytest.raises(NoMinimumBracketed):
        find_derivative_minimum(AT_SQ2, 2, np.linspace(0.8, 1.2, 11))
    with pytest.raises(NoMinimumBracketed):
        find_derivative_minimum(AT_SQ2, 6, np.linspace(0.1, 0.5, 11))


def test_minimum_stable_under_grid_refinement(minima):
    for n in range(3, 8):
        fine = find_derivative_minimum(AT_SQ2, n, np.linspace(0, 2, 801))
        coarse = find_derivative_minimum(AT_SQ2, n, np.linspace(0, 2, 401))
        assert abs(fine.D_m - coarse.D_m) <= 2e-6


def test_fit_position_exact_law():
    results = [(n, 1.0 - effective_size(n) ** -0.5) for n in range(2, 8)]
    fit = fit_position_scaling(results, 1.0)
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.nu_estimate == pytest.approx(2.0, abs=1e-11)


def test_fit_position_exponent_046_nu():
    results = [(n, 1.0 - effective_size(n) ** -0.46) for n in range(2, 8)]
    fit = fit_position_scaling(results, 1.0)
    assert fit.slope == pytest.approx(-0.46, abs=1e-12)
    assert fit.nu_estimate == pytest.approx(1 / 0.46, abs=1e-10)
    assert fit.nu_estimate == pytest.approx(2.17, abs=0.01)


def test_fit_divergence_exact_law():
    results = [(n, -(effective_size(n) ** 0.46)) for n in range(2, 8)]
    fit = fit_divergence_scaling(results)
    assert fit.slope == pytest.approx(0.46, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert len(fit.points) == 6


@given(st.floats(0.05, 3.0), st.floats(-3, 3))
def test_fit_recovers_any_exponent(expo, log_amp):
    results = [(n, math.exp(log_amp) * effective_size(n) ** expo) for n in range(0, 6)]
    fit = fit_divergence_scaling(results)
    assert fit.slope == pytest.approx(expo, abs=1e-12)
    assert fit.intercept == pytest.approx(log_amp, abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_fit_errors():
    with pytest.raises(DegenerateFit):
        fit_divergence_scaling([(3, 1.0), (3, 2.0), (3, 4.0)])
    with pytest.raises(ValueError):
        fit_divergence_scaling([(1, 1.0), (2, 2.0)])
    with pytest.raises(ValueError):
        fit_divergence_scaling([(1, 1.0), (2, 0.0), (3, 2.0)])
    with pytest.raises(ValueError):
        fit_position_scaling([(1, 0.5), (2, 1.2), (3, 0.9)], 1.0)


def test_linear_fit_r2_imperfect():
    slope, intercept, r2 = linear_fit([0, 1, 2, 3], [0, 1, 1, 3])
    assert slope == pytest.approx(0.9)
    assert 0 < r2 < 1


def test_scaling_fits_consistent():
    rep = scaling_analysis(SQ2, range(2, 8))
    assert rep.d_c == pytest.approx(1.0, abs=1e-12)
    assert abs(abs(rep.divergence_fit.slope) - abs(rep.position_fit.slope)) <= 0.05
    assert [p.N for p in rep.points] == [27, 81, 243, 729, 2187, 6561]


@pytest.mark.parametrize("d,expected", [(0.0, 1.0), (1.0, SQ2), (math.sqrt(3), 2.0)])
def test_surface_locus(d, expected):
    dg = np.linspace(0.5, 2.5, 81)
    surf = singularity_surface(dg, [d], 14)
    assert abs(surf.extremal_delta()[0] - expected) <= dg[1] - dg[0]


def test_surface_shape_and_order():
    surf = singularity_surface([1.0, 1.5, 2.0], [0.2, 0.4], 3)
    assert surf.values.shape == (2, 3)
    single = sweep(Couplings(D=0.4), "Delta", [1.0, 1.5, 2.0], 3, "dC13_dDelta").values
    assert np.array_equal(surf.values[1], single)
