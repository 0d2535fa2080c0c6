"""Velocity profiles, initial states and inhomogeneous (BGK) equilibria."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .grid import PhaseGrid
from .state import State

_SQRT2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class VelocityProfile:
    """Weighted sum of drifting Maxwellians, ``sum_i a_i M(v - u_i; s_i)``.

    Entire in ``v``, so the profile and its derivative can be evaluated at
    complex velocities (needed for Landau-contour continuation).
    """

    components: tuple = ((1.0, 0.0, 1.0),)
    kind: str = "custom"
    transverse_sigma: float = 1.0

    def __call__(self, v):
        v = np.asarray(v)
        out = np.zeros(v.shape, dtype=np.result_type(v, float))
        for a, u, s in self.components:
            out = out + a * np.exp(-0.5 * ((v - u) / s) ** 2) / (s * _SQRT2PI)
        return out

    def derivative(self, v):
        v = np.asarray(v)
        out = np.zeros(v.shape, dtype=np.result_type(v, float))
        for a, u, s in self.components:
            out = out - a * (v - u) / s ** 2 * np.exp(-0.5 * ((v - u) / s) ** 2) / (s * _SQRT2PI)
        return out

    def second_derivative(self, v):
        v = np.asarray(v)
        out = np.zeros(v.shape, dtype=np.result_type(v, float))
        for a, u, s in self.components:
            y = (v - u) / s
            out = out + a * (y * y - 1.0) / s ** 2 * np.exp(-0.5 * y * y) / (s * _SQRT2PI)
        return out

    @property
    def density(self) -> float:
        return float(sum(a for a, _, _ in self.components))

    @property
    def support(self) -> tuple:
        lo = min(u - 12 * s for _, u, s in self.components)
        hi = max(u + 12 * s for _, u, s in self.components)
        return lo, hi

    def on_grid(self, grid: PhaseGrid) -> np.ndarray:
        """Profile sampled on the velocity grid, shape ``(Nv,)*n_vdim``."""
        F = self(grid.v)
        if grid.em:
            s = self.transverse_sigma
            M = np.exp(-0.5 * (grid.v / s) ** 2) / (s * _SQRT2PI)
            return np.multiply.outer(F, M)
        return F


def maxwellian(sigma: float = 1.0, density: float = 1.0, drift: float = 0.0) -> VelocityProfile:
    return VelocityProfile(((density, drift, sigma),), kind="maxwellian", transverse_sigma=sigma)


def two_stream(u0: float = 2.4, sigma: float = 1.0, density: float = 1.0) -> VelocityProfile:
    c = ((0.5 * density, u0, sigma), (0.5 * density, -u0, sigma))
    return VelocityProfile(c, kind="two_stream", transverse_sigma=sigma)


def bump_on_tail(nb: float = 0.1, vb: float = 4.5, sigma_b: float = 0.5,
                 sigma: float = 1.0) -> VelocityProfile:
    c = ((1.0 - nb, 0.0, sigma), (nb, vb, sigma_b))
    return VelocityProfile(c, kind="bump_on_tail", transverse_sigma=sigma)


def gaussian_mixture(components: Sequence[Sequence[float]], kind: str = "custom") -> VelocityProfile:
    return VelocityProfile(tuple(tuple(float(x) for x in c) for c in components), kind=kind)


def homogeneous_state(profile: VelocityProfile, grid: PhaseGrid) -> State:
    f = np.broadcast_to(profile.on_grid(grid)[None, ...], grid.f_shape)
    return State.create(grid, f)


def perturbed_state(profile: VelocityProfile, grid: PhaseGrid, k_mode: int = 1,
                    amplitude: float = 1e-3, kind: str = "density") -> State:
    """Equilibrium plus a single-mode perturbation; E from a Poisson solve."""
    k = 2.0 * np.pi * k_mode / grid.L
    cos = np.cos(k * grid.x).reshape((-1,) + (1,) * grid.n_vdim)
    if kind == "density":
        f = profile.on_grid(grid)[None, ...] * (1.0 + amplitude * cos)
    elif kind == "velocity":
        shift = amplitude * np.cos(k * grid.x)
        F = profile(grid.v[None, :] - shift[:, None])
        if grid.em:
            s = profile.transverse_sigma
            M = np.exp(-0.5 * (grid.v / s) ** 2) / (s * _SQRT2PI)
            F = F[:, :, None] * M[None, None, :]
        f = F
    else:
        raise ValueError(f"unknown perturbation kind {kind!r}")
    f = np.broadcast_to(f, grid.f_shape)
    return with_poisson_field(f, grid)


def with_poisson_field(f, grid: PhaseGrid, B=None) -> State:
    """State whose E1 solves Gauss's law for ``f`` (zero-mean gauge)."""
    rho = grid.q * grid.integrate_v(grid.check_f(f))
    E = np.zeros((grid.n_efield, grid.Nx))
    E[0] = grid.poisson_field(rho)
    return State.create(grid, f, E, B)


@dataclass
class BGKSolution:
    """Self-consistent periodic electrostatic potential for a BGK state."""

    amplitude: float
    beta: float
    C: float
    n_bar: float
    phi: np.ndarray = field(repr=False)
    E: np.ndarray = field(repr=False)


def _bgk_distribution(e, C, beta):
    return C * np.exp(-e) * (1.0 + beta * e) / _SQRT2PI


def _bgk_density(phi, C, beta):
    # int C exp(-(v^2/2 + phi)) (1 + beta (v^2/2 + phi)) dv / sqrt(2 pi)
    return C * np.exp(-phi) * (1.0 + 0.5 * beta + beta * phi)


def bgk_equilibrium(grid: PhaseGrid, amplitude: float = 0.05, beta: float = 3.0,
                    k_mode: int = 1):
    """Inhomogeneous stationary state ``f = G(v^2/2 + phi(x))``.

    ``G(e) = C exp(-e) (1 + beta e) / sqrt(2 pi)`` with ``beta > 2`` gives a
    density response that increases with potential, so the Poisson equation
    ``phi'' = n_bar - n(phi)`` admits periodic orbits.  ``C`` is tuned by
    root finding so the orbit through ``phi(0) = amplitude`` has period
    ``L / k_mode``.  Requires ``q = 1`` and ``ES_1D1V``.
    """
    if grid.em or grid.q != 1.0:
        raise ValueError("BGK construction is implemented for ES_1D1V with q = 1")
    if beta <= 2.0:
        raise ValueError("beta must exceed 2 for periodic potentials")
    if not 0 < amplitude < 1.0 / (3.0 * beta):
        raise ValueError("amplitude too large for a positive distribution")
    period = grid.L / k_mode
    k = 2.0 * np.pi / period

    def half_period(C):
        n_bar = _bgk_density(0.0, C, beta)

        def rhs(x, y):
            return [y[1], n_bar - _bgk_density(y[0], C, beta)]

        def turn(x, y):
            return y[1]
        turn.terminal = True
        turn.direction = 1
        sol = solve_ivp(rhs, (0, 4 * period), [amplitude, 0.0], events=turn,
                        rtol=1e-12, atol=1e-14, max_step=period / 200)
        # first event is at x = 0 only if the solver lands on it; skip tiny times
        times = [t for t in sol.t_events[0] if t > 1e-9]
        return times[0] if times else np.inf

    C0 = k ** 2 / (0.5 * beta - 1.0)
    C = brentq(lambda c: half_period(c) - 0.5 * period, 0.5 * C0, 2.0 * C0, xtol=1e-15)
    n_bar = _bgk_density(0.0, C, beta)

    def rhs(x, y):
        return [y[1], n_bar - _bgk_density(y[0], C, beta)]

    sol = solve_ivp(rhs, (0, grid.L), [amplitude, 0.0], dense_output=True,
                    rtol=1e-12, atol=1e-14, max_step=period / 400)
    y = sol.sol(grid.x)
    phi, E = y[0], -y[1]
    info = BGKSolution(amplitude, beta, C, n_bar, phi, E)
    f = _bgk_distribution(0.5 * grid.v[None, :] ** 2 + phi[:, None], C, beta)
    return State.create(grid, f, E[None, :]), info
