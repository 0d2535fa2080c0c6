"""State container z = (f, E, B), moments and conserved functionals."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import GridError, PhaseGrid


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class State:
    """Reduced Eulerian variables on a :class:`PhaseGrid`.

    ``E`` has shape ``(n_efield, Nx)``; ``B`` is the single out-of-plane
    component ``B3`` with shape ``(Nx,)`` in ``EM_1D2V`` and ``None`` in
    ``ES_1D1V``.
    """

    f: np.ndarray
    E: np.ndarray
    B: Optional[np.ndarray] = None

    @classmethod
    def create(cls, grid: PhaseGrid, f, E=None, B=None) -> "State":
        f = grid.check_f(f)
        if not np.all(np.isfinite(f)):
            raise GridError("f has non-finite entries")
        E = np.zeros((grid.n_efield, grid.Nx)) if E is None else E
        E = grid.check_field(np.atleast_2d(E), grid.n_efield)
        if grid.em:
            B = np.zeros(grid.Nx) if B is None else np.asarray(B, dtype=float)
            if B.shape != (grid.Nx,):
                raise GridError(f"B has shape {B.shape}, expected {(grid.Nx,)}")
            B = _frozen(B)
        elif B is not None:
            raise GridError("ES_1D1V states carry no magnetic field")
        return cls(_frozen(f), _frozen(E), B)

    @classmethod
    def zeros(cls, grid: PhaseGrid) -> "State":
        return cls.create(grid, np.zeros(grid.f_shape))

    def advanced(self, tangent: "StateTangent", dt: float) -> "State":
        B = None if self.B is None else self.B + dt * tangent.dB
        return State(_frozen(self.f + dt * tangent.df), _frozen(self.E + dt * tangent.dE),
                     None if B is None else _frozen(B))

    def difference(self, other: "State") -> "StateTangent":
        dB = None if self.B is None else self.B - other.B
        return StateTangent(self.f - other.f, self.E - other.E, dB)

    def is_finite(self) -> bool:
        ok = np.all(np.isfinite(self.f)) and np.all(np.isfinite(self.E))
        return bool(ok and (self.B is None or np.all(np.isfinite(self.B))))


@dataclass(frozen=True, eq=False)
class StateTangent:
    """A tangent vector dz = (df, dE, dB) at a state."""

    df: np.ndarray
    dE: np.ndarray
    dB: Optional[np.ndarray] = None

    @classmethod
    def zeros_like(cls, z: State) -> "StateTangent":
        return cls(np.zeros_like(z.f), np.zeros_like(z.E),
                   None if z.B is None else np.zeros_like(z.B))

    def __add__(self, other: "StateTangent") -> "StateTangent":
        dB = None if self.dB is None else self.dB + other.dB
        return StateTangent(self.df + other.df, self.dE + other.dE, dB)

    def __sub__(self, other: "StateTangent") -> "StateTangent":
        return self + (-1.0) * other

    def __mul__(self, s: float) -> "StateTangent":
        return StateTangent(s * self.df, s * self.dE, None if self.dB is None else s * self.dB)

    __rmul__ = __mul__

    def is_finite(self) -> bool:
        ok = np.all(np.isfinite(self.df)) and np.all(np.isfinite(self.dE))
        return bool(ok and (self.dB is None or np.all(np.isfinite(self.dB))))


@dataclass(frozen=True, eq=False)
class FunctionalDerivative:
    """Variational derivatives of an observable.

    ``d_A`` is the derivative with respect to the vector potential.  The
    vector potential is never a state variable; the slot exists so that
    current-potential couplings can be expressed in (E, B) variables, where
    ``dE/dt`` picks up ``+d_A`` of the Hamiltonian.
    """

    d_f: np.ndarray
    d_E: np.ndarray
    d_B: Optional[np.ndarray] = None
    d_A: Optional[np.ndarray] = None

    @classmethod
    def create(cls, grid: PhaseGrid, d_f=None, d_E=None, d_B=None, d_A=None):
        d_f = np.zeros(grid.f_shape) if d_f is None else np.broadcast_to(
            np.asarray(d_f, dtype=float), grid.f_shape).copy()
        d_E = np.zeros((grid.n_efield, grid.Nx)) if d_E is None else d_E
        d_E = grid.check_field(np.atleast_2d(d_E), grid.n_efield, "d_E")
        if grid.em:
            d_B = np.zeros(grid.Nx) if d_B is None else np.asarray(d_B, dtype=float)
            if d_B.shape != (grid.Nx,):
                raise GridError(f"d_B has shape {d_B.shape}, expected {(grid.Nx,)}")
        elif d_B is not None:
            raise GridError("ES_1D1V derivatives carry no d_B")
        if d_A is not None:
            d_A = grid.check_field(np.atleast_2d(d_A), grid.n_efield, "d_A")
        return cls(d_f, d_E, d_B, d_A)

    def __add__(self, other):
        def add(a, b):
            if a is None:
                return b
            return a if b is None else a + b
        return FunctionalDerivative(self.d_f + other.d_f, self.d_E + other.d_E,
                                    add(self.d_B, other.d_B), add(self.d_A, other.d_A))

    def __mul__(self, s):
        def sc(a):
            return None if a is None else s * a
        return FunctionalDerivative(s * self.d_f, s * self.d_E, sc(self.d_B), sc(self.d_A))

    __rmul__ = __mul__


@dataclass(frozen=True)
class Moments:
    rho: np.ndarray
    j: np.ndarray


def _check_f(f, grid):
    return grid.check_f(f)


def charge_density(f, grid: PhaseGrid) -> np.ndarray:
    """q * int f dv, minus its spatial mean when the background neutralizes."""
    rho = grid.q * grid.integrate_v(_check_f(f, grid))
    if grid.background_neutralizing:
        rho = rho - rho.mean()
    return rho


def current_density(f, grid: PhaseGrid) -> np.ndarray:
    """Components ``j_c = q * int v_c f dv``, shape ``(n_vdim, Nx)``."""
    f = _check_f(f, grid)
    return np.stack([grid.q * grid.integrate_v(grid.velocity_component(c) * f)
                     for c in range(grid.n_vdim)])


def moments(f, grid: PhaseGrid) -> Moments:
    return Moments(charge_density(f, grid), current_density(f, grid))


def kinetic_energy(f, grid: PhaseGrid) -> float:
    return grid.integrate(0.5 * grid.speed_squared * _check_f(f, grid))


def field_energy(z: State, grid: PhaseGrid) -> float:
    e = np.sum(z.E ** 2)
    if z.B is not None:
        e += np.sum(z.B ** 2)
    return 0.5 * grid.dx * float(e)


def total_energy(z: State, grid: PhaseGrid) -> float:
    return kinetic_energy(z.f, grid) + field_energy(z, grid)


def casimir_lp(f, grid: PhaseGrid, p: float) -> float:
    """Quadrature of the L^p Casimir ``int int f^p dx dv``."""
    f = _check_f(f, grid)
    if p < 1:
        raise ValueError(f"p must be >= 1 (got {p})")
    if float(p).is_integer():
        return grid.integrate(f ** int(p))
    if np.any(f < 0):
        raise ValueError("fractional-power Casimir needs f >= 0")
    return grid.integrate(f ** p)


def energy_derivative(z: State, grid: PhaseGrid) -> FunctionalDerivative:
    """Functional derivative of :func:`total_energy` at ``z``."""
    return FunctionalDerivative.create(grid, d_f=0.5 * grid.speed_squared, d_E=z.E, d_B=z.B)


def pair(Fd: FunctionalDerivative, dz: StateTangent, grid: PhaseGrid) -> float:
    """Quadrature pairing <dF, dz> of a derivative with a tangent."""
    s = grid.integrate(Fd.d_f * dz.df) + grid.dx * float(np.sum(Fd.d_E * dz.dE))
    if dz.dB is not None and Fd.d_B is not None:
        s += grid.dx * float(np.sum(Fd.d_B * dz.dB))
    return s


def tangent_norm(dz: StateTangent, grid: PhaseGrid) -> float:
    """Quadrature-weighted L2 norm of a tangent vector."""
    s = grid.integrate(dz.df ** 2) + grid.dx * float(np.sum(dz.dE ** 2))
    if dz.dB is not None:
        s += grid.dx * float(np.sum(dz.dB ** 2))
    return float(np.sqrt(s))
