"""Phase-space grid, derivative stencils and quadrature.

Every module shares the same discretization: pseudospectral derivatives in
the periodic coordinate ``x``, fourth-order central differences in velocity
(one-sided at the two velocity boundaries), a uniform Riemann sum in ``x``
and the trapezoid rule in ``v``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class Config(str, enum.Enum):
    ES_1D1V = "ES_1D1V"
    EM_1D2V = "EM_1D2V"


class GridError(ValueError):
    """Raised for invalid grid parameters or mis-shaped grid functions."""


# fourth-order first-derivative stencils, in units of 1/(12 h)
_INTERIOR = np.array([1.0, -8.0, 0.0, 8.0, -1.0])
_ROW0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0])
_ROW1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0])


def velocity_derivative_matrix(n: int, h: float) -> np.ndarray:
    """Dense matrix of the fourth-order velocity derivative on ``n`` nodes."""
    if n < 5:
        raise GridError("fourth-order velocity stencil needs at least 5 nodes")
    D = np.zeros((n, n))
    for j in range(2, n - 2):
        D[j, j - 2:j + 3] = _INTERIOR
    D[0, :5] = _ROW0
    D[1, :5] = _ROW1
    D[n - 1, n - 5:] = -_ROW0[::-1]
    D[n - 2, n - 5:] = -_ROW1[::-1]
    return D / (12.0 * h)


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform periodic-in-x, truncated-in-v phase-space grid.

    ``Nv`` counts velocity nodes per velocity dimension; the nodes include
    both endpoints ``-v_max`` and ``v_max``.  Distribution functions have
    shape ``(Nx, Nv)`` in ``ES_1D1V`` and ``(Nx, Nv, Nv)`` in ``EM_1D2V``
    (axes ``x, v1, v2``).
    """

    config: Config = Config.ES_1D1V
    L: float = 4.0 * np.pi
    Nx: int = 64
    v_max: float = 6.0
    Nv: int = 256
    q: float = 1.0
    background_neutralizing: bool = True

    def __post_init__(self):
        object.__setattr__(self, "config", Config(self.config))
        problems = []
        if self.Nx < 4 or self.Nx % 2:
            problems.append(f"Nx must be even and >= 4 (got {self.Nx})")
        if self.Nv < 5:
            problems.append(f"Nv must be >= 5 (got {self.Nv})")
        if not self.L > 0:
            problems.append(f"L must be positive (got {self.L})")
        if not self.v_max > 0:
            problems.append(f"v_max must be positive (got {self.v_max})")
        if problems:
            raise GridError("; ".join(problems))

    # -- basic geometry -------------------------------------------------
    @property
    def em(self) -> bool:
        return self.config is Config.EM_1D2V

    @property
    def n_vdim(self) -> int:
        return 2 if self.em else 1

    @property
    def n_efield(self) -> int:
        return 2 if self.em else 1

    @property
    def f_shape(self) -> tuple:
        return (self.Nx,) + (self.Nv,) * self.n_vdim

    @property
    def dx(self) -> float:
        return self.L / self.Nx

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / (self.Nv - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * self.dx

    @cached_property
    def v(self) -> np.ndarray:
        # integer numerator keeps the grid exactly antisymmetric
        i = np.arange(self.Nv)
        return self.v_max * (2.0 * i - (self.Nv - 1)) / (self.Nv - 1)

    @cached_property
    def wv(self) -> np.ndarray:
        """Trapezoid weights for one velocity dimension."""
        w = np.full(self.Nv, self.dv)
        w[0] = w[-1] = 0.5 * self.dv
        return w

    @cached_property
    def velocity_weights(self) -> np.ndarray:
        """Velocity-space quadrature weights, shape ``(Nv,)*n_vdim``."""
        if self.em:
            return np.multiply.outer(self.wv, self.wv)
        return self.wv

    @cached_property
    def weights(self) -> np.ndarray:
        """Phase-space quadrature weights broadcastable against ``f``."""
        return self.dx * self.velocity_weights[None, ...]

    def velocity_component(self, c: int) -> np.ndarray:
        """Velocity component ``v_{c+1}`` broadcastable against ``f``."""
        if c == 0:
            return self.v.reshape((1, self.Nv) + (1,) * (self.n_vdim - 1))
        if c == 1 and self.em:
            return self.v.reshape(1, 1, self.Nv)
        raise GridError(f"no velocity component {c} in {self.config.value}")

    @cached_property
    def speed_squared(self) -> np.ndarray:
        """``|v|^2`` broadcastable against ``f``."""
        return sum(self.velocity_component(c) ** 2 for c in range(self.n_vdim))

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumbers of the real FFT along x."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.Nx, d=self.dx)

    @cached_property
    def _ik(self) -> np.ndarray:
        ik = 1j * self.k
        ik[-1] = 0.0  # Nyquist mode has no real derivative
        return ik

    @cached_property
    def Dv(self) -> np.ndarray:
        return velocity_derivative_matrix(self.Nv, self.dv)

    # -- shape checks ---------------------------------------------------
    def check_f(self, f, name="f") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.f_shape:
            raise GridError(f"{name} has shape {f.shape}, expected {self.f_shape}")
        return f

    def check_field(self, E, ncomp, name="E") -> np.ndarray:
        E = np.asarray(E, dtype=float)
        if E.shape != (ncomp, self.Nx):
            raise GridError(f"{name} has shape {E.shape}, expected {(ncomp, self.Nx)}")
        return E

    # -- derivatives ----------------------------------------------------
    def ddx(self, a, axis=0) -> np.ndarray:
        """Pseudospectral x-derivative (Nyquist mode dropped)."""
        a = np.asarray(a)
        shape = [1] * a.ndim
        shape[axis] = -1
        ah = np.fft.rfft(a, axis=axis)
        return np.fft.irfft(ah * self._ik.reshape(shape), n=self.Nx, axis=axis)

    def ddv(self, a, c=0) -> np.ndarray:
        """Fourth-order derivative along velocity component ``c``."""
        return np.moveaxis(np.moveaxis(np.asarray(a), 1 + c, -1) @ self.Dv.T, -1, 1 + c)

    def ddv_adjoint(self, a, c=0) -> np.ndarray:
        """Euclidean transpose of :meth:`ddv` (not weighted)."""
        return np.moveaxis(np.moveaxis(np.asarray(a), 1 + c, -1) @ self.Dv, -1, 1 + c)

    # -- quadrature -----------------------------------------------------
    def integrate_v(self, a) -> np.ndarray:
        """Integrate a phase-space array over velocity, leaving x."""
        a = np.asarray(a)
        return (a * self.velocity_weights[None, ...]).reshape(self.Nx, -1).sum(axis=1)

    def integrate(self, a) -> float:
        return float(np.sum(np.asarray(a) * self.weights))

    def integrate_x(self, a) -> float:
        return float(np.sum(a) * self.dx)

    # -- Poisson --------------------------------------------------------
    def poisson_field(self, rho) -> np.ndarray:
        """Zero-mean E solving dE/dx = rho - mean(rho) spectrally."""
        rh = np.fft.rfft(np.asarray(rho, dtype=float))
        Eh = np.zeros_like(rh)
        ik = self._ik
        nz = ik != 0
        Eh[nz] = rh[nz] / ik[nz]
        return np.fft.irfft(Eh, n=self.Nx)

    def mode_amplitudes(self, a) -> np.ndarray:
        """Complex Fourier coefficients ``a_m`` with a(x) = sum a_m e^{ikx}."""
        return np.fft.rfft(np.asarray(a, dtype=float)) / self.Nx

    def with_resolution(self, Nx: int, Nv: int) -> "PhaseGrid":
        return PhaseGrid(self.config, self.L, Nx, self.v_max, Nv, self.q,
                         self.background_neutralizing)
