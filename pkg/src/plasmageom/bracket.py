"""Discrete Maxwell-Vlasov Lie-Poisson bracket and Hamiltonian vector fields.

The bracket of two observables at z = (f, E, B) is the sum of four
quadrature-evaluated terms::

    int f {F_f, G_f}_xv                              (Vlasov)
    q int f B . (grad_v F_f x grad_v G_f)            (magnetic twisting)
    int F_E . curl G_B - G_E . curl F_B              (Maxwell)
    q int f (G_E . grad_v F_f - F_E . grad_v G_f)    (field-particle coupling)

plus ``int F_E . G_A - G_E . F_A`` for observables carrying a vector
potential derivative (external current couplings).  In ``ES_1D1V`` only the
Vlasov and coupling terms survive.  With fields depending on x alone and
``B = B3 e3``, ``curl (0, 0, b) = (0, -db/dx, 0)``.

:func:`hamiltonian_vector_field` is built as the exact discrete adjoint of
the bracket, so ``pair(Fd, X_H) == mv_bracket(Fd, Hd)`` holds to roundoff
for every derivative ``Fd``.
"""
from __future__ import annotations

import numpy as np

from .grid import GridError, PhaseGrid
from .state import FunctionalDerivative, State, StateTangent


def canonical_xv_bracket(a, b, grid: PhaseGrid) -> np.ndarray:
    """{a, b}_xv = da/dx db/dv1 - da/dv1 db/dx on the phase grid."""
    a = grid.check_f(a, "a")
    b = grid.check_f(b, "b")
    return grid.ddx(a) * grid.ddv(b, 0) - grid.ddv(a, 0) * grid.ddx(b)


def _check(Fd: FunctionalDerivative, grid: PhaseGrid, name: str):
    grid.check_f(Fd.d_f, f"{name}.d_f")
    grid.check_field(Fd.d_E, grid.n_efield, f"{name}.d_E")
    if grid.em and Fd.d_B is None:
        raise GridError(f"{name}.d_B is required in EM_1D2V")


def bracket_terms(Fd: FunctionalDerivative, Gd: FunctionalDerivative, z: State,
                  grid: PhaseGrid) -> dict:
    """The individual bracket contributions, keyed by term name."""
    _check(Fd, grid, "Fd")
    _check(Gd, grid, "Gd")
    f, q, W = z.f, grid.q, grid.weights
    a, g = Fd.d_f, Gd.d_f
    grad_a = [grid.ddv(a, c) for c in range(grid.n_vdim)]
    grad_g = [grid.ddv(g, c) for c in range(grid.n_vdim)]

    terms = {}
    xv = grid.ddx(a) * grad_g[0] - grad_a[0] * grid.ddx(g)
    terms["vlasov"] = float(np.sum(W * f * xv))

    coupling = np.zeros(grid.f_shape)
    for c in range(grid.n_efield):
        FE = Fd.d_E[c].reshape((-1,) + (1,) * grid.n_vdim)
        GE = Gd.d_E[c].reshape((-1,) + (1,) * grid.n_vdim)
        coupling += GE * grad_a[c] - FE * grad_g[c]
    terms["coupling"] = q * float(np.sum(W * f * coupling))

    if grid.em:
        B3 = z.B[:, None, None]
        twist = grad_a[0] * grad_g[1] - grad_a[1] * grad_g[0]
        terms["twisting"] = q * float(np.sum(W * f * B3 * twist))
        terms["maxwell"] = grid.dx * float(np.sum(
            -Fd.d_E[1] * grid.ddx(Gd.d_B) + Gd.d_E[1] * grid.ddx(Fd.d_B)))

    if Fd.d_A is not None or Gd.d_A is not None:
        s = 0.0
        if Gd.d_A is not None:
            s += np.sum(Fd.d_E * Gd.d_A)
        if Fd.d_A is not None:
            s -= np.sum(Gd.d_E * Fd.d_A)
        terms["potential"] = grid.dx * float(s)
    return terms


def mv_bracket(Fd: FunctionalDerivative, Gd: FunctionalDerivative, z: State,
               grid: PhaseGrid) -> float:
    """Maxwell-Vlasov Lie-Poisson bracket {F, G}(z)."""
    terms = bracket_terms(Fd, Gd, z, grid)
    # fixed summation order keeps {F,G} = -{G,F} exact in floating point
    order = ("vlasov", "twisting", "maxwell", "coupling", "potential")
    return float(sum(terms[k] for k in order if k in terms))


def hamiltonian_vector_field(Hd: FunctionalDerivative, z: State,
                             grid: PhaseGrid) -> StateTangent:
    """Tangent X_H with pair(Fd, X_H) = mv_bracket(Fd, Hd, z) for all Fd."""
    _check(Hd, grid, "Hd")
    f, q = z.f, grid.q
    W = grid.weights
    h = Hd.d_f
    grad_h = [grid.ddv(h, c) for c in range(grid.n_vdim)]
    nb = (-1,) + (1,) * grid.n_vdim

    # Vlasov term, linear in F_f: <Dx^T(W f Dv h) - Dv^T(W f Dx h), F_f>
    acc = -grid.ddx(W * f * grad_h[0]) - grid.ddv_adjoint(W * f * grid.ddx(h), 0)
    for c in range(grid.n_efield):
        acc = acc + q * grid.ddv_adjoint(W * f * Hd.d_E[c].reshape(nb), c)
    if grid.em:
        fB = W * f * z.B[:, None, None]
        acc = acc + q * (grid.ddv_adjoint(fB * grad_h[1], 0)
                         - grid.ddv_adjoint(fB * grad_h[0], 1))
    df = acc / W

    vw = grid.velocity_weights[None, ...]
    dE = np.stack([-q * (vw * f * grad_h[c]).reshape(grid.Nx, -1).sum(axis=1)
                   for c in range(grid.n_efield)])
    dB = None
    if grid.em:
        dE[1] = dE[1] - grid.ddx(Hd.d_B)
        dB = -grid.ddx(Hd.d_E[1])
    if Hd.d_A is not None:
        dE = dE + Hd.d_A
    return StateTangent(df, dE, dB)


def bracket_derivative(Fd: FunctionalDerivative, Gd: FunctionalDerivative, z: State,
                       grid: PhaseGrid) -> FunctionalDerivative:
    """Derivative of z -> mv_bracket(Fd, Gd, z) for z-independent Fd, Gd.

    Exact: the bracket is affine in z in ``ES_1D1V`` and bilinear in (f, B)
    through the twisting term in ``EM_1D2V``.  Used for Jacobi residuals
    on linear observables.
    """
    q = grid.q
    a, g = Fd.d_f, Gd.d_f
    grad_a = [grid.ddv(a, c) for c in range(grid.n_vdim)]
    grad_g = [grid.ddv(g, c) for c in range(grid.n_vdim)]
    nb = (-1,) + (1,) * grid.n_vdim
    d_f = grid.ddx(a) * grad_g[0] - grad_a[0] * grid.ddx(g)
    for c in range(grid.n_efield):
        d_f = d_f + q * (Gd.d_E[c].reshape(nb) * grad_a[c] - Fd.d_E[c].reshape(nb) * grad_g[c])
    d_B = None
    if grid.em:
        twist = grad_a[0] * grad_g[1] - grad_a[1] * grad_g[0]
        d_f = d_f + q * z.B[:, None, None] * twist
        d_B = q * grid.integrate_v(z.f * twist)
    return FunctionalDerivative.create(grid, d_f=d_f, d_B=d_B)


def jacobi_residual(Fd, Gd, Hd, z: State, grid: PhaseGrid) -> float:
    """|{{F,G},H} + {{G,H},F} + {{H,F},G}| for linear observables."""
    s = (mv_bracket(bracket_derivative(Fd, Gd, z, grid), Hd, z, grid)
         + mv_bracket(bracket_derivative(Gd, Hd, z, grid), Fd, z, grid)
         + mv_bracket(bracket_derivative(Hd, Fd, z, grid), Gd, z, grid))
    return abs(s)
