"""Affine Hamiltonian controls: antenna currents and Casimir shaping.

A controlled Hamiltonian reads ``H + sum_a u_a(t) B_a`` with two channel
kinds:

* ``current_coupling``: ``B_a = -int J_a . A``.  Only its vector-potential
  derivative ``-J_a`` is ever used, so the vector potential is never built;
  the generator is the Ampere-law source ``dE/dt = -J_a``.
* ``casimir_shaping``: ``B_a = 1/2 int w_a f^2``, a quadratic functional of
  the distribution (not one of the antenna couplings; flagged in reports).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .bracket import hamiltonian_vector_field, mv_bracket
from .dynamics import rhs
from .energy_casimir import (CasimirProfile, DefinitenessReport, StabilityReport,
                             casimir_from_equilibrium, first_variation_vector,
                             modal_definiteness, second_variation_form)
from .grid import GridError, PhaseGrid
from .linear import Equilibrium, translation_direction
from .profiles import maxwellian
from .state import FunctionalDerivative, State, StateTangent, energy_derivative, pair

CURRENT = "current_coupling"
SHAPING = "casimir_shaping"


@dataclass(frozen=True, eq=False)
class ControlChannel:
    """One control input.

    ``profile`` is a current shape of shape ``(n_efield, Nx)`` for
    ``current_coupling`` and a weight broadcastable to the phase grid for
    ``casimir_shaping``.
    """

    kind: str
    profile: np.ndarray
    label: str = ""

    @classmethod
    def current(cls, J, grid: PhaseGrid, label: str = "antenna") -> "ControlChannel":
        J = grid.check_field(np.atleast_2d(np.asarray(J, dtype=float)), grid.n_efield, "J_ext")
        if not np.all(np.isfinite(J)):
            raise GridError("J_ext has non-finite entries")
        return cls(CURRENT, J, label)

    @classmethod
    def shaping(cls, w, grid: PhaseGrid, label: str = "shaping") -> "ControlChannel":
        w = np.asarray(w, dtype=float)
        if w.shape == (grid.Nv,) * grid.n_vdim:
            w = w[None, ...]
        try:
            np.broadcast_shapes(w.shape, grid.f_shape)
        except ValueError:
            raise GridError(f"shaping weight of shape {w.shape} does not fit {grid.f_shape}")
        if not np.all(np.isfinite(w)):
            raise GridError("shaping weight has non-finite entries")
        return cls(SHAPING, w, label)

    @property
    def is_antenna(self) -> bool:
        return self.kind == CURRENT

    def velocity_weight(self, grid: PhaseGrid) -> np.ndarray:
        """x-independent shaping weight as a velocity array (per-mode analysis)."""
        w = np.broadcast_to(self.profile, grid.f_shape)
        if not np.all(w == w[0:1]):
            raise ValueError(f"channel {self.label!r}: weight depends on x")
        return np.array(w[0])


def channel_functional_derivative(ch: ControlChannel, z: State, grid: PhaseGrid) -> FunctionalDerivative:
    if ch.kind == CURRENT:
        return FunctionalDerivative.create(grid, d_A=-ch.profile)
    if ch.kind == SHAPING:
        return FunctionalDerivative.create(grid, d_f=np.broadcast_to(ch.profile, grid.f_shape) * z.f)
    raise ValueError(f"unknown channel kind {ch.kind!r}")


def channel_value(ch: ControlChannel, z: State, grid: PhaseGrid, A=None) -> float:
    """B_a at z; current couplings also need the vector potential ``A``."""
    if ch.kind == CURRENT:
        if A is None:
            raise ValueError("current coupling needs the vector potential")
        return -grid.dx * float(np.sum(ch.profile * np.asarray(A)))
    return 0.5 * grid.integrate(np.broadcast_to(ch.profile, grid.f_shape) * z.f ** 2)


def control_generator(ch: ControlChannel, z: State, grid: PhaseGrid) -> StateTangent:
    return hamiltonian_vector_field(channel_functional_derivative(ch, z, grid), z, grid)


@dataclass(frozen=True)
class ControlSignal:
    """Scalar control ``u(t)``: constant, piecewise-constant or sinusoidal."""

    kind: str = "constant"
    value: float = 0.0
    times: tuple = ()        # piecewise: breakpoints t_1 < ... < t_m
    values: tuple = ()       # piecewise: m + 1 levels
    omega: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "piecewise", "sinusoid"):
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.kind == "piecewise" and len(self.values) != len(self.times) + 1:
            raise ValueError("piecewise signal needs len(values) == len(times) + 1")

    def __call__(self, t: float) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "piecewise":
            return float(self.values[int(np.searchsorted(self.times, t, side="right"))])
        return self.value * np.sin(self.omega * t + self.phase)

    @property
    def amplitude(self) -> float:
        if self.kind == "piecewise":
            return float(max(abs(v) for v in self.values))
        return abs(self.value)


@dataclass(frozen=True)
class ControlSchedule:
    signals: tuple

    @classmethod
    def constant(cls, values: Sequence[float]) -> "ControlSchedule":
        return cls(tuple(ControlSignal("constant", float(v)) for v in values))

    def __call__(self, t: float) -> np.ndarray:
        return np.array([s(t) for s in self.signals])

    @property
    def amplitude(self) -> np.ndarray:
        return np.array([s.amplitude for s in self.signals])


def _controls_at(u, t) -> np.ndarray:
    if callable(u):
        return np.asarray(u(t), dtype=float)
    return np.asarray(u, dtype=float)


def control_tangent(z: State, grid: PhaseGrid, channels, u, t: float = 0.0) -> StateTangent:
    """``sum_a u_a(t) F_a(z)``."""
    ua = _controls_at(u, t)
    if len(ua) != len(channels):
        raise ValueError(f"{len(channels)} channels but {len(ua)} control values")
    out = StateTangent.zeros_like(z)
    for ch, val in zip(channels, ua):
        out = out + val * control_generator(ch, z, grid)
    return out


def controlled_rhs(z: State, grid: PhaseGrid, channels, u, t: float = 0.0) -> StateTangent:
    return rhs(z, grid) + control_tangent(z, grid, channels, u, t)


@dataclass(frozen=True)
class ControlledFlow:
    """Control hook for :func:`plasmageom.dynamics.run`."""

    channels: tuple
    schedule: ControlSchedule

    def tangent(self, z: State, t: float, grid: PhaseGrid) -> StateTangent:
        return control_tangent(z, grid, self.channels, self.schedule, t)


def control_power(z: State, grid: PhaseGrid, channels, u, t: float = 0.0) -> float:
    """Instantaneous energy input ``sum_a u_a {H, B_a}``."""
    Hd = energy_derivative(z, grid)
    ua = _controls_at(u, t)
    return float(sum(val * mv_bracket(Hd, channel_functional_derivative(ch, z, grid), z, grid)
                     for ch, val in zip(channels, ua)))


@dataclass(frozen=True)
class PairingResult:
    value: float
    trivial: bool
    # the L2 grid pairing stands in for the effective symplectic pairing
    proxy: str = "L2 grid pairing"


def symmetry_breaking_pairing(ch: ControlChannel, eq: Equilibrium, grid: PhaseGrid,
                              generator: str = "x_translation") -> PairingResult:
    if generator != "x_translation":
        raise ValueError(f"unsupported symmetry generator {generator!r}")
    d = translation_direction(eq.state, grid)
    dfd = FunctionalDerivative(d.df, d.dE, d.dB)
    if not (np.any(d.df) or np.any(d.dE)):
        return PairingResult(0.0, True)
    return PairingResult(pair(dfd, control_generator(ch, eq.state, grid), grid), False)


# -- equilibrium shift and controlled second variation -----------------------

def _flatten(Fd: FunctionalDerivative, grid: PhaseGrid) -> np.ndarray:
    """Weighted coordinates so the Euclidean norm is the quadrature L2 norm."""
    parts = [(np.sqrt(grid.weights) * np.broadcast_to(Fd.d_f, grid.f_shape)).ravel(),
             np.sqrt(grid.dx) * np.asarray(Fd.d_E).ravel()]
    if grid.em:
        parts.append(np.sqrt(grid.dx) * (np.zeros(grid.Nx) if Fd.d_B is None else Fd.d_B))
    nE = grid.n_efield * grid.Nx
    parts.append(np.zeros(nE) if Fd.d_A is None else np.sqrt(grid.dx) * np.asarray(Fd.d_A).ravel())
    return np.concatenate(parts)


@dataclass(frozen=True)
class ShiftResult:
    u: np.ndarray
    residual_before: float
    residual_after: float
    rank: int

    def to_dict(self) -> dict:
        return {"u": [float(x) for x in self.u], "residual_before": self.residual_before,
                "residual_after": self.residual_after, "rank": self.rank}


def first_variation_derivative(eq: Equilibrium, profile: CasimirProfile, grid: PhaseGrid) -> FunctionalDerivative:
    """Derivative of energy plus Casimir at the equilibrium state."""
    g = first_variation_vector(eq, profile, grid)
    z = eq.state
    return FunctionalDerivative.create(grid, d_f=np.broadcast_to(g[None, ...], grid.f_shape),
                                       d_E=z.E, d_B=z.B)


def solve_equilibrium_shift(eq: Equilibrium, channels, profile: CasimirProfile,
                            grid: PhaseGrid, rcond: float = 1e-12) -> ShiftResult:
    """Least-squares controls making energy + Casimir + sum u B_a stationary."""
    if not channels:
        raise ValueError("at least one channel is required")
    g0 = _flatten(first_variation_derivative(eq, profile, grid), grid)
    G = np.stack([_flatten(channel_functional_derivative(ch, eq.state, grid), grid)
                  for ch in channels], axis=1)
    u, _, rank, _ = np.linalg.lstsq(G, -g0, rcond=rcond)
    if rank < len(channels):
        warnings.warn(f"channel set has rank {rank} < {len(channels)}; using the minimum-norm controls",
                      RuntimeWarning, stacklevel=2)
    return ShiftResult(u, float(np.linalg.norm(g0)), float(np.linalg.norm(g0 + G @ u)), int(rank))


def controlled_second_variation(eq: Equilibrium, u, channels, profile: CasimirProfile,
                                grid: PhaseGrid, modes=None) -> StabilityReport:
    """Definiteness of the second variation with the control terms added.

    Current couplings are linear functionals and contribute nothing;
    shaping channels add ``u_a w_a`` to the velocity weight.
    """
    form = second_variation_form(eq, profile, grid)
    extra = np.zeros(grid.Nv)
    for ch, val in zip(channels, np.atleast_1d(u)):
        if ch.kind == SHAPING:
            extra = extra + val * ch.velocity_weight(grid)
    return modal_definiteness(eq, form.plus(extra), grid, modes)


# -- constructed marginal case ----------------------------------------------

@dataclass(frozen=True, eq=False)
class MarginalCase:
    equilibrium: Equilibrium
    target: CasimirProfile
    channel: ControlChannel
    expected_u: float


def shifted_profile(base: CasimirProfile, dphi_shift: Callable, d2phi_shift: Callable,
                    label: str = "target") -> CasimirProfile:
    """``phi + psi`` given psi' and psi''; phi itself is not shifted (unused)."""
    return CasimirProfile(lambda s: base.dphi(s) + dphi_shift(s),
                          lambda s: base.d2phi(s) + d2phi_shift(s),
                          base.phi, base.domain, label)


def marginal_stabilization_case(grid: PhaseGrid, v_mark: float = 1.5, width: float = 1.5,
                                gain: float = 2.0) -> MarginalCase:
    """Maxwellian with a target Casimir that is indefinite until shaped.

    The target Casimir subtracts ``c s bump(s)`` from the matched ``phi'``,
    where ``bump`` is a log-normal bump in density centred at
    ``s_m = F0(v_mark)`` with ``c bump(s_m) = gain / s_m``.  The matched
    shaping channel ``w(v) = bump(F0(v))`` cancels the resulting first
    variation at ``u = c`` and restores definiteness.
    """
    profile = maxwellian()
    eq = Equilibrium.from_profile(profile, grid)
    base = casimir_from_equilibrium(eq, grid)
    s_m = float(profile(v_mark))
    c = 1.0
    A = gain / s_m

    def bump(s):
        x = (np.log(s) - np.log(s_m)) / width
        return A * np.exp(-0.5 * x ** 2)

    def dbump_dlog(s):
        return -bump(s) * (np.log(s) - np.log(s_m)) / width ** 2

    target = shifted_profile(base, lambda s: -c * bump(s) * s,
                             lambda s: -c * (bump(s) + dbump_dlog(s)), "marginal target")
    w = bump(eq.F0)
    return MarginalCase(eq, target, ControlChannel.shaping(w, grid, "log-bump shaping"), c)


@dataclass
class StabilizationCertificate:
    u: np.ndarray
    shift: ShiftResult
    before: StabilityReport
    after: StabilityReport

    @property
    def flipped(self) -> bool:
        return (not self.before.formally_stable) and self.after.formally_stable

    def to_dict(self) -> dict:
        return {"u": [float(x) for x in self.u], "shift": self.shift.to_dict(),
                "min_eigenvalue_before": self.before.min_eigenvalue,
                "min_eigenvalue_after": self.after.min_eigenvalue,
                "verdict_before": self.before.verdict, "verdict_after": self.after.verdict}


def stabilization_certificate(eq: Equilibrium, channels, profile: CasimirProfile,
                              grid: PhaseGrid, modes=None) -> StabilizationCertificate:
    shift = solve_equilibrium_shift(eq, channels, profile, grid)
    before = controlled_second_variation(eq, np.zeros(len(channels)), channels, profile, grid, modes)
    after = controlled_second_variation(eq, shift.u, channels, profile, grid, modes)
    return StabilizationCertificate(shift.u, shift, before, after)
