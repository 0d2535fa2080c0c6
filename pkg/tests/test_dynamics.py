import warnings

import numpy as np
import pytest

from plasmageom.cli import rk4_temporal_order
from plasmageom.dynamics import (COLUMNS, CFLWarning, DiagnosticSeries, ScenarioParams,
                                 SimulationError, gauss_residual, max_stable_dt, mode_energies,
                                 rhs, run, step_rk4)
from plasmageom.grid import Config, PhaseGrid
from plasmageom.profiles import maxwellian, perturbed_state
from plasmageom.state import State, total_energy


@pytest.fixture(scope="module")
def nonlinear_run():
    return run(ScenarioParams(t_end=20.0, amplitude=0.05), PhaseGrid())


def _rel_drift(series, name):
    c = series.column(name)
    return float(np.max(np.abs(c - c[0])) / abs(c[0]))


def test_equilibrium_run_diagnostics_constant(ref_grid):
    s = run(ScenarioParams(t_end=20.0, amplitude=0.0), ref_grid)
    assert s.error is None
    for name in COLUMNS[1:]:
        c = s.column(name)
        assert np.max(np.abs(c - c[0])) <= 1e-10 * max(abs(c[0]), 1.0), name


def test_conservation_over_twenty_time_units(nonlinear_run):
    s = nonlinear_run
    assert s.error is None and s.cfl_warnings == 0
    assert _rel_drift(s, "energy") <= 1e-5
    assert _rel_drift(s, "casimir1") <= 1e-5
    assert _rel_drift(s, "casimir2") <= 1e-5
    assert s.column("gauss_residual").max() <= 1e-6
    assert s.column("min_f").min() >= -1e-6 * maxwellian()(0.0) * 1.05


def test_gauss_residual_growth_is_sublinear(nonlinear_run):
    g = nonlinear_run.column("gauss_residual")
    n = len(g) - 1
    # residual after n steps is below n times the residual after the first step (plus roundoff)
    assert g[-1] <= n * max(g[1], 1e-15)


def test_rk4_is_fourth_order():
    res = rk4_temporal_order(0, [0.04, 0.02, 0.01], 0.4, PhaseGrid(Nx=32, Nv=128))
    assert min(res["orders"]) > 3.7


def test_reference_step_is_substepped(ref_grid):
    z = perturbed_state(maxwellian(), ref_grid, 1, 1e-3)
    assert 0.05 > max_stable_dt(z, ref_grid)
    s = run(ScenarioParams(t_end=0.5), ref_grid)
    assert s.substeps == 2 and s.cfl_warnings == 0


def test_forced_large_step_warns_and_reports_error(ref_grid):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        s = run(ScenarioParams(t_end=40.0, dt=0.2, substeps=1, amplitude=0.1), ref_grid)
    assert any(issubclass(w.category, CFLWarning) for w in caught)
    assert s.cfl_warnings > 0
    assert s.error is not None and s.error.startswith("step ")
    assert len(s) >= 1 and s.final_state is not None


def test_nonfinite_state_raises(small_grid):
    z = perturbed_state(maxwellian(), small_grid, 1, 0.1)
    bad = State(np.array(z.f) * np.inf, z.E)
    with np.errstate(invalid="ignore"):
        with pytest.raises(SimulationError):
            rhs(bad, small_grid)
        with pytest.raises(SimulationError):
            step_rk4(bad, small_grid, 0.01)


def test_external_current_enters_ampere_law(small_grid):
    z = perturbed_state(maxwellian(), small_grid, 1, 0.1)
    J = np.sin(2 * np.pi * small_grid.x / small_grid.L)[None]
    d = rhs(z, small_grid, J).dE - rhs(z, small_grid).dE
    assert np.allclose(d, -J, atol=1e-15)
    # a callable current is evaluated at the stage times
    a = step_rk4(z, small_grid, 0.01, j_ext=lambda t: J)
    b = step_rk4(z, small_grid, 0.01, j_ext=J)
    assert np.array_equal(a.f, b.f) and np.array_equal(a.E, b.E)


def test_mode_energy_of_single_mode(small_grid):
    k = 2 * np.pi / small_grid.L
    E = 0.3 * np.cos(2 * k * small_grid.x)
    z = State.create(small_grid, np.zeros(small_grid.f_shape), E[None])
    me = mode_energies(z, small_grid)
    assert me[1] == pytest.approx(small_grid.L * 0.15 ** 2, rel=1e-12)
    assert max(me[0], me[2], me[3]) < 1e-30


def test_gauss_residual_zero_for_poisson_state(small_grid):
    z = perturbed_state(maxwellian(), small_grid, 2, 0.3)
    assert gauss_residual(z, small_grid) < 1e-14


def test_electromagnetic_run_conserves_energy():
    # v_max = 8 keeps f negligible in the one-sided stencil rows
    g = PhaseGrid(Config.EM_1D2V, Nx=16, Nv=48, v_max=8.0)
    z = perturbed_state(maxwellian(), g, 1, 0.05)
    z = State.create(g, z.f, z.E, 0.05 * np.sin(2 * np.pi * g.x / g.L))
    s = run(ScenarioParams(t_end=1.0, dt=0.05), g, z0=z)
    assert s.error is None
    assert _rel_drift(s, "energy") < 1e-8
    assert s.column("gauss_residual").max() < 1e-10


def test_csv_uses_seventeen_digits(tmp_path):
    s = DiagnosticSeries()
    s.rows.append((0.1,) + (1.0 / 3.0,) * (len(COLUMNS) - 1))
    text = s.to_csv(tmp_path / "d.csv")
    header, row = text.strip().split("\n")
    assert header.split(",") == list(COLUMNS)
    assert row.split(",")[1] == "0.33333333333333331"
    assert (tmp_path / "d.csv").read_text() == text


@pytest.mark.parametrize("kwargs,field", [({"dt": -1.0}, "dt"), ({"t_end": -1.0}, "t_end"),
                                          ({"amplitude": -1e-3}, "amplitude"), ({"cadence": 0}, "cadence"),
                                          ({"substeps": 0}, "substeps")])
def test_scenario_params_validation(kwargs, field):
    with pytest.raises(ValueError, match=field):
        ScenarioParams(**kwargs)


def test_cadence_thins_rows(small_grid):
    s = run(ScenarioParams(t_end=1.0, dt=0.05, cadence=4), small_grid)
    assert s.column("t")[1] == pytest.approx(0.2)
    assert s.column("t")[-1] == pytest.approx(1.0)


def test_energy_matches_total_energy(small_grid):
    s = run(ScenarioParams(t_end=0.1, dt=0.05, amplitude=0.1), small_grid)
    assert s.column("energy")[-1] == total_energy(s.final_state, small_grid)
