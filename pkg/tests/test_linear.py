import numpy as np
import pytest

from oracles import mix_root
from plasmageom.dynamics import rhs
from plasmageom.grid import Config, PhaseGrid
from plasmageom.linear import (Equilibrium, LinearStabilityError, apply_linearized,
                               build_linear_operator, effective_projector, evolve_linear,
                               gauss_consistent_mode, linear_energy_rate, mode_operator,
                               neutral_mode_residual, spectrum, translation_direction)
from plasmageom.profiles import bgk_equilibrium, maxwellian, perturbed_state, two_stream
from plasmageom.state import State, StateTangent, tangent_norm


@pytest.fixture(scope="module")
def maxwell_eq(ref_grid):
    return Equilibrium.from_profile(maxwellian(), ref_grid)


@pytest.fixture(scope="module")
def stream_setup():
    g = PhaseGrid(L=10 * np.pi)
    return g, Equilibrium.from_profile(two_stream(), g)


def test_operator_shape_and_labels(maxwell_eq, ref_grid):
    op = mode_operator(maxwell_eq, 2, ref_grid)
    assert op.dim == ref_grid.Nv + 1 and op.mode == 2
    assert op.block_labels[-1] == "dE" and op.k == pytest.approx(1.0)


def test_operator_rejects_unsupported_inputs(maxwell_eq, ref_grid):
    with pytest.raises(LinearStabilityError):
        build_linear_operator(maxwell_eq, 0.3, ref_grid)
    with pytest.raises(LinearStabilityError):
        build_linear_operator(maxwell_eq, -0.5, ref_grid)
    z, _ = bgk_equilibrium(ref_grid)
    with pytest.raises(LinearStabilityError):
        build_linear_operator(Equilibrium.from_state(z, ref_grid), 0.5, ref_grid)
    em = PhaseGrid(Config.EM_1D2V, Nx=8, Nv=8)
    with pytest.raises(LinearStabilityError):
        build_linear_operator(Equilibrium.from_profile(maxwellian(), em), 2 * np.pi / em.L, em)


def test_linearization_matches_central_difference(maxwell_eq, ref_grid):
    # rhs is quadratic in z, so a central difference is exact up to roundoff
    rng = np.random.default_rng(0)
    g = ref_grid
    k = 2 * np.pi / g.L
    df = (np.cos(k * g.x)[:, None] + 0.3 * np.sin(2 * k * g.x)[:, None]) * np.exp(-g.v ** 2 / 2)[None]
    df = df * (1 + 0.1 * rng.standard_normal(g.f_shape))
    dz = StateTangent(df, 0.2 * np.sin(k * g.x)[None])
    z0 = maxwell_eq.state
    h = 1e-3
    fd = (rhs(z0.advanced(dz, h), g) - rhs(z0.advanced(dz, -h), g)) * (0.5 / h)
    L = apply_linearized(maxwell_eq, dz, g)
    assert tangent_norm(fd - L, g) <= 1e-9 * tangent_norm(L, g)


def test_linear_nonlinear_consistency_order(maxwell_eq, ref_grid):
    z0 = maxwell_eq.state
    ratios, errs = [], []
    for eps in (1e-3, 1e-4, 1e-5):
        zp = perturbed_state(maxwellian(), ref_grid, 1, eps)
        dz = zp.difference(z0) * (1 / eps)
        e = tangent_norm(rhs(zp, ref_grid) - apply_linearized(maxwell_eq, dz, ref_grid) * eps, ref_grid)
        errs.append(e)
        ratios.append(e / eps ** 2)
    assert max(ratios) / min(ratios) <= 2.0
    orders = np.log10(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders >= 1.9)


def test_maxwellian_spectrum_is_neutral(maxwell_eq, ref_grid):
    sp = spectrum(mode_operator(maxwell_eq, 1, ref_grid))
    assert sp.neutral.all()
    assert np.max(np.abs(sp.eigenvalues.real)) < 1e-10


def test_real_form_spectrum_closed_under_conjugation(stream_setup):
    g, eq = stream_setup
    lam = spectrum(mode_operator(eq, 1, g), real_form=True).eigenvalues
    gap = max(np.min(np.abs(np.conj(l) - lam)) for l in lam)
    assert gap < 1e-12


def test_unstable_eigenvalue_matches_dispersion_root(stream_setup):
    g, eq = stream_setup
    for mode in (1, 2):
        k = 2 * np.pi * mode / g.L
        root = mix_root(k, two_stream().components, 0.2j)
        top = spectrum(mode_operator(eq, mode, g)).eigenvalues[0]
        assert top.real == pytest.approx(root.imag, rel=0.01)


def test_effective_projector_removes_static_mode(maxwell_eq, ref_grid):
    op = mode_operator(maxwell_eq, 1, ref_grid)
    P = effective_projector(op)
    assert P.corank == 1 and not P.fallback
    assert np.allclose(P.matrix @ P.matrix, P.matrix, atol=1e-12)
    assert np.allclose(P.matrix, P.matrix.conj().T, atol=1e-12)
    assert np.linalg.norm(op.matrix @ P.removed) < 1e-12 * np.linalg.norm(op.matrix)
    # static balance -i k v df = q dE F0' fixes df from the field component
    u = P.removed[:, 0]
    g = ref_grid
    expected = 1j * g.q * u[-1] * (g.Dv @ maxwell_eq.F0) / (op.k * g.v)
    assert np.allclose(u[:-1], expected, atol=1e-12)


def test_projector_without_zero_modes_is_identity():
    P = effective_projector(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    assert P.corank == 0 and np.array_equal(P.matrix, np.eye(2))


def test_evolve_linear_composes(maxwell_eq, ref_grid):
    op = mode_operator(maxwell_eq, 1, ref_grid)
    y0 = gauss_consistent_mode(maxwell_eq, op.k, ref_grid)
    a = evolve_linear(op, y0, 0.1, 4)
    b = evolve_linear(op, y0, 0.4, 1)
    assert np.allclose(a[-1], b[-1], atol=1e-11)


def test_gauss_consistent_initial_mode(maxwell_eq, ref_grid):
    k = 2 * np.pi / ref_grid.L
    y = gauss_consistent_mode(maxwell_eq, k, ref_grid)
    assert 1j * k * y[-1] == pytest.approx(ref_grid.q * np.sum(ref_grid.wv * y[:-1]))


def test_landau_rate_from_linear_evolution(maxwell_eq, ref_grid):
    r = linear_energy_rate(maxwell_eq, 1, ref_grid)
    assert r.relative_error < 0.05
    assert r.oracle_rate == pytest.approx(2 * -0.1533594669096048, rel=1e-8)


def test_two_stream_rate_from_linear_evolution(stream_setup):
    g, eq = stream_setup
    r = linear_energy_rate(eq, 1, g)
    assert r.relative_error < 0.05 and r.rate > 0


def test_translation_direction_of_shifted_wave(small_grid):
    k = 2 * np.pi / small_grid.L
    z = State.create(small_grid, np.zeros(small_grid.f_shape), np.sin(k * small_grid.x)[None])
    d = translation_direction(z, small_grid)
    assert np.allclose(d.dE[0], k * np.cos(k * small_grid.x), atol=1e-12)


def test_goldstone_mode_of_bgk_state(ref_grid):
    z, info = bgk_equilibrium(ref_grid)
    eq = Equilibrium.from_state(z, ref_grid, "bgk")
    r0 = eq.rhs_residual
    assert r0 < 1e-6
    res = neutral_mode_residual(eq, ref_grid)
    assert not res.trivial
    assert res.residual <= 100 * r0
    neg = neutral_mode_residual(Equilibrium.from_state(perturbed_state(maxwellian(), ref_grid, 1, 0.05), ref_grid),
                                ref_grid)
    assert neg.residual >= 1e3 * res.residual


def test_goldstone_trivial_for_homogeneous(maxwell_eq, ref_grid):
    res = neutral_mode_residual(maxwell_eq, ref_grid)
    assert res.trivial and res.residual == 0.0
    with pytest.raises(ValueError):
        neutral_mode_residual(maxwell_eq, ref_grid, generator="boost")


def test_spectrum_csv(maxwell_eq, small_grid):
    eq = Equilibrium.from_profile(maxwellian(), small_grid)
    text = spectrum(mode_operator(eq, 1, small_grid)).to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "k,re,im,neutral" and len(lines) == small_grid.Nv + 2
