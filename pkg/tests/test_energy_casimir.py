import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from plasmageom.cli import two_stream_interval_oracle
from plasmageom.dynamics import ScenarioParams, run
from plasmageom.energy_casimir import (DEGENERATE, INDEFINITE, POSITIVE, CasimirConstructionError,
                                       casimir_from_energy_profile, casimir_from_equilibrium,
                                       definiteness_report, energy_casimir_report,
                                       first_variation_residual, gauss_constraint_basis,
                                       second_variation_form)
from plasmageom.grid import PhaseGrid
from plasmageom.linear import Equilibrium, effective_projector, mode_operator
from plasmageom.profiles import gaussian_mixture, maxwellian, two_stream
from plasmageom.state import State, StateTangent, total_energy


@pytest.fixture(scope="module")
def maxwell(ref_grid):
    eq = Equilibrium.from_profile(maxwellian(), ref_grid)
    return eq, casimir_from_equilibrium(eq, ref_grid)


def test_maxwellian_casimir_is_entropy_like(maxwell):
    _, prof = maxwell
    s = np.geomspace(1e-8, 0.39, 60)
    assert np.allclose(prof.dphi(s), np.log(s * np.sqrt(2 * np.pi)), atol=1e-10)
    assert np.allclose(prof.d2phi(s) * s, 1.0, atol=1e-10)
    d = prof.phi(s) - (s * np.log(s) + (np.log(np.sqrt(2 * np.pi)) - 1) * s)
    assert np.ptp(d) < 1e-8


def test_maxwellian_first_variation_vanishes(maxwell, ref_grid):
    eq, prof = maxwell
    fv = first_variation_residual(eq, prof, ref_grid)
    assert fv.total < 1e-8
    assert eq.rhs_residual < 1e-8


def test_drifting_state_is_not_critical_for_rest_frame_casimir(maxwell, ref_grid):
    _, prof = maxwell
    moving = Equilibrium.from_profile(maxwellian(drift=0.5), ref_grid)
    assert first_variation_residual(moving, prof, ref_grid).total > 1.0


def test_maxwellian_report_positive_definite(maxwell, ref_grid):
    eq, _ = maxwell
    rep = energy_casimir_report(eq, ref_grid, modes=(1, 2, 3))
    assert rep.verdict == POSITIVE and rep.formally_stable
    assert rep.min_eigenvalue > 0
    assert rep.to_dict()["label"] == "formally stable"


def test_min_eigenvalue_matches_generalized_eigenproblem(maxwell, ref_grid):
    eq, prof = maxwell
    g = ref_grid
    form = second_variation_form(eq, prof, g)
    Q = form.mode_matrix()
    for m in (1, 2):
        k = 2 * np.pi * m / g.L
        P = effective_projector(mode_operator(eq, m, g))
        T = gauss_constraint_basis(k, g)
        # Gauss-consistent vectors orthogonal to the removed static direction
        N = sla.null_space(P.removed.conj().T @ T)
        B = T @ N
        lam = sla.eigh(B.conj().T @ Q @ B, B.conj().T @ B, eigvals_only=True)
        rep = definiteness_report(Q, P, T)
        assert rep.min_eigenvalue == pytest.approx(lam[0], rel=1e-8)
        assert rep.projector_corank == 1


def test_two_stream_has_no_single_valued_casimir(ref_grid):
    eq = Equilibrium.from_profile(two_stream(), ref_grid)
    with pytest.raises(CasimirConstructionError, match="no single-valued Casimir") as info:
        casimir_from_equilibrium(eq, ref_grid)
    lo, hi = info.value.interval
    a = two_stream_interval_oracle(two_stream())
    assert lo == -hi
    assert abs(hi - a) <= ref_grid.dv


def test_flat_top_is_degenerate(ref_grid):
    F = np.where(np.abs(ref_grid.v) < 1, 0.3, maxwellian()(ref_grid.v))
    with pytest.raises(CasimirConstructionError, match="degenerate"):
        casimir_from_equilibrium(Equilibrium.from_values(F, ref_grid), ref_grid)


def test_non_even_and_nonpositive_profiles_rejected(ref_grid):
    v = ref_grid.v
    with pytest.raises(CasimirConstructionError, match="not even"):
        casimir_from_energy_profile(maxwellian(drift=0.3)(v), v)
    with pytest.raises(CasimirConstructionError, match="positive"):
        casimir_from_energy_profile(maxwellian()(v) - 0.01, v)


def test_inhomogeneous_equilibrium_rejected(ref_grid):
    from plasmageom.profiles import bgk_equilibrium
    z, _ = bgk_equilibrium(ref_grid)
    with pytest.raises(CasimirConstructionError):
        casimir_from_equilibrium(Equilibrium.from_state(z, ref_grid), ref_grid)


@settings(max_examples=8)
@given(st.lists(st.tuples(st.floats(0.1, 1.0), st.floats(0.8, 1.5)), min_size=1, max_size=3))
def test_monotone_profiles_are_formally_stable(comps):
    g = PhaseGrid(Nx=16, Nv=128)
    prof = gaussian_mixture([(a, 0.0, s) for a, s in comps])
    rep = energy_casimir_report(Equilibrium.from_profile(prof, g), g, modes=(1, 2))
    assert rep.verdict == POSITIVE
    assert rep.first_variation.total < 1e-8


@pytest.mark.parametrize("diag,verdict", [((1.0, 2.0), POSITIVE), ((1.0, -1.0), INDEFINITE),
                                          ((1.0, 0.0), DEGENERATE)])
def test_definiteness_of_small_forms(diag, verdict):
    rep = definiteness_report(np.diag(diag))
    assert rep.verdict == verdict
    assert rep.min_eigenvalue == pytest.approx(min(diag))


def test_definiteness_on_constraint_subspace():
    Q = np.diag([1.0, -1.0])
    # the negative direction is excluded by the constraint
    assert definiteness_report(Q, constraint=np.array([[1.0], [0.0]])).verdict == POSITIVE
    assert definiteness_report(Q, constraint=np.zeros((2, 0))).verdict == DEGENERATE


def test_widely_scaled_weights_keep_verdict():
    Q = np.diag([1e-12, 1.0, 1e6])
    rep = definiteness_report(Q)
    assert rep.verdict == POSITIVE and rep.min_eigenvalue == pytest.approx(1e-12, rel=1e-9)


def test_quadratic_form_matches_mode_matrix(maxwell, ref_grid):
    # a single real cosine mode: Q(dz) = (1/2) * (L * w-weighted energy) for amplitude pairs
    eq, prof = maxwell
    g = ref_grid
    form = second_variation_form(eq, prof, g)
    k = 2 * np.pi / g.L
    dfv = np.exp(-g.v ** 2 / 2)
    dz = StateTangent(np.cos(k * g.x)[:, None] * dfv[None, :], 0.3 * np.cos(k * g.x)[None])
    Qm = form.mode_matrix()
    y = np.concatenate([dfv, [0.3]]) / 2   # cos = (e^{ikx} + e^{-ikx}) / 2
    assert form(dz) == pytest.approx(2 * np.real(y @ Qm @ y), rel=1e-12)


def test_energy_casimir_functional_conserved_along_flow(maxwell, ref_grid):
    eq, prof = maxwell
    g = ref_grid
    s = run(ScenarioParams(t_end=5.0, amplitude=0.01), g)
    z0 = perturbed = s.final_state
    from plasmageom.profiles import perturbed_state
    z0 = perturbed_state(maxwellian(), g, 1, 0.01)

    def ec(z):
        return total_energy(z, g) + g.integrate(prof.phi(np.maximum(z.f, 1e-300)))
    e0, e1 = ec(z0), ec(perturbed)
    assert abs(e1 - e0) <= 1e-5 * abs(e0)
