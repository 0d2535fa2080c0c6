"""Linearized electrostatic dynamics about homogeneous equilibria.

Per Fourier mode ``k`` the perturbation ``(df(v), dE)`` obeys

    d(df)/dt = -i k v df - q dE F0'(v)
    d(dE)/dt = -q sum_j w_j v_j df_j

with the shared fourth-order velocity stencil for ``F0'`` and trapezoid
weights ``w``.  The complex per-mode matrix has dimension ``Nv + 1``; the
real operator acting on ``cos``/``sin`` pairs is its realification.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .analysis import peak_rate, window_rate
from .dispersion import dispersion_root_oracle, dispersion_roots  # noqa: F401  (re-export)
from .dynamics import rhs
from .grid import PhaseGrid
from .profiles import VelocityProfile, homogeneous_state
from .state import State, StateTangent, tangent_norm


class LinearStabilityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Equilibrium:
    """Stationary state with the residual of the nonlinear rhs recorded.

    ``F0`` is the velocity profile on the grid for homogeneous equilibria
    and ``None`` otherwise; ``state`` always holds the full phase-space
    state.
    """

    state: State
    kind: str
    F0: Optional[np.ndarray] = None
    profile: Optional[VelocityProfile] = None
    rhs_residual: float = 0.0

    @property
    def homogeneous(self) -> bool:
        return self.F0 is not None

    @property
    def E0(self):
        return self.state.E

    @property
    def B0(self):
        return self.state.B

    @classmethod
    def from_profile(cls, profile: VelocityProfile, grid: PhaseGrid) -> "Equilibrium":
        z = homogeneous_state(profile, grid)
        return cls(z, profile.kind, profile.on_grid(grid), profile,
                   tangent_norm(rhs(z, grid), grid))

    @classmethod
    def from_values(cls, F0, grid: PhaseGrid, kind: str = "custom") -> "Equilibrium":
        """Homogeneous equilibrium from velocity samples (shape ``(Nv,)*n_vdim``)."""
        F0 = np.asarray(F0, dtype=float)
        z = State.create(grid, np.broadcast_to(F0[None, ...], grid.f_shape))
        return cls(z, kind, F0, None, tangent_norm(rhs(z, grid), grid))

    @classmethod
    def from_state(cls, z: State, grid: PhaseGrid, kind: str = "custom") -> "Equilibrium":
        F0 = None
        if _is_uniform(z):
            F0 = np.array(z.f[0])
        return cls(z, kind, F0, None, tangent_norm(rhs(z, grid), grid))


def _is_uniform(z: State) -> bool:
    same = np.all(z.f == z.f[0:1]) and np.all(z.E == 0)
    return bool(same and (z.B is None or np.all(z.B == 0)))


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """Per-mode linearized generator on ``(df(v_1..v_Nv), dE)``."""

    k: float
    matrix: np.ndarray
    block_labels: tuple
    mode: Optional[int] = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def real_matrix(self) -> np.ndarray:
        """Real form on (Re, Im) coordinates; its spectrum is the union of the
        complex spectrum and its conjugate."""
        A, B = self.matrix.real, self.matrix.imag
        return np.block([[A, -B], [B, A]])


def _mode_matrix(F0, k_eff: float, grid: PhaseGrid) -> np.ndarray:
    n = grid.Nv
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[:n, :n] = np.diag(-1j * k_eff * grid.v)
    M[:n, n] = -grid.q * (grid.Dv @ F0)
    M[n, :n] = -grid.q * grid.wv * grid.v
    return M


def build_linear_operator(eq: Equilibrium, k: float, grid: PhaseGrid) -> LinearOperator:
    """Per-mode operator at wavenumber ``k = 2 pi m / L``, ``m >= 1``."""
    if grid.em:
        raise LinearStabilityError("per-mode operators are implemented for ES_1D1V only")
    if not eq.homogeneous:
        raise LinearStabilityError("inhomogeneous equilibria are not supported")
    m = k * grid.L / (2.0 * np.pi)
    if k <= 0 or abs(m - round(m)) > 1e-9 * max(1.0, m):
        raise LinearStabilityError(f"k={k} is not a positive multiple of 2 pi / L")
    labels = tuple(f"df[{j}]" for j in range(grid.Nv)) + ("dE",)
    return LinearOperator(float(k), _mode_matrix(eq.F0, k, grid), labels, int(round(m)))


def mode_operator(eq: Equilibrium, mode: int, grid: PhaseGrid) -> LinearOperator:
    return build_linear_operator(eq, 2.0 * np.pi * mode / grid.L, grid)


def apply_linearized(eq: Equilibrium, dz: StateTangent, grid: PhaseGrid) -> StateTangent:
    """Linearized rhs applied mode by mode through the per-mode matrices.

    The mean and Nyquist modes use ``k_eff = 0`` (the spectral derivative
    annihilates both).
    """
    if not eq.homogeneous or grid.em:
        raise LinearStabilityError("apply_linearized needs a homogeneous ES equilibrium")
    fh = np.fft.rfft(dz.df, axis=0)
    Eh = np.fft.rfft(dz.dE[0])
    k_eff = grid._ik.imag
    out_f = np.empty_like(fh)
    out_E = np.empty_like(Eh)
    for m in range(fh.shape[0]):
        M = _mode_matrix(eq.F0, k_eff[m], grid)
        y = M @ np.concatenate([fh[m], [Eh[m]]])
        out_f[m], out_E[m] = y[:-1], y[-1]
    out_E[0] = 0.0  # the mean current is removed in the Ampere law
    df = np.fft.irfft(out_f, n=grid.Nx, axis=0)
    dE = np.fft.irfft(out_E, n=grid.Nx)[None, :]
    return StateTangent(df, dE, None)


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    neutral: np.ndarray = field(repr=False)
    k: float = 0.0

    def to_csv(self, path=None) -> str:
        lines = ["k,re,im,neutral"]
        for lam, nf in zip(self.eigenvalues, self.neutral):
            lines.append("%.17g,%.17g,%.17g,%d" % (self.k, lam.real, lam.imag, int(nf)))
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


NEUTRAL_TOL = 1e-10


def spectrum(op, real_form: bool = False) -> Spectrum:
    """Dense eigendecomposition sorted by real part, descending.

    ``op`` may be a :class:`LinearOperator` or a bare square matrix.
    """
    if isinstance(op, LinearOperator):
        M, k = (op.real_matrix if real_form else op.matrix), op.k
    else:
        M, k = np.asarray(op), 0.0
    try:
        lam, V = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise LinearStabilityError(f"eigensolver failed for operator k={k}, dim={M.shape[0]}: {exc}")
    order = np.lexsort((-lam.imag, -lam.real))
    lam, V = lam[order], V[:, order]
    return Spectrum(lam, V, np.abs(lam.real) < NEUTRAL_TOL, k)


@dataclass(frozen=True)
class EffectiveProjector:
    matrix: np.ndarray
    corank: int
    removed: np.ndarray  # orthonormal basis of the removed subspace
    fallback: bool = False


def effective_projector(op, tol: float = 1e-10) -> EffectiveProjector:
    """Orthogonal projector onto the complement of the zero-frequency subspace.

    Eigendirections with ``|lambda| <= tol * ||M||`` are removed.  Purely
    oscillatory (neutral, ``Re lambda = 0``) modes are kept: they carry the
    physical wave content.  If the zero cluster is defective the null space
    of the matrix itself is removed instead, with a warning.
    """
    M = op.matrix if isinstance(op, LinearOperator) else np.asarray(op)
    n = M.shape[0]
    scale = max(np.linalg.norm(M, 2), 1.0)
    lam, V = np.linalg.eig(M)
    zero = np.abs(lam) <= tol * scale
    m = int(zero.sum())
    fallback = False
    if m == 0:
        return EffectiveProjector(np.eye(n, dtype=M.dtype), 0, np.zeros((n, 0), dtype=M.dtype))
    U, s, _ = np.linalg.svd(V[:, zero], full_matrices=False)
    r = int(np.sum(s > 1e-8 * s[0]))
    if r < m:
        warnings.warn("defective zero-mode cluster; using the singular subspace",
                      RuntimeWarning, stacklevel=2)
        fallback = True
        _, sv, Vh = np.linalg.svd(M)
        null = Vh[sv <= tol * scale].conj().T
        U = null
    else:
        U = U[:, :r]
    P = np.eye(n, dtype=complex) - U @ U.conj().T
    if np.isrealobj(M) and np.allclose(P.imag, 0):
        P = P.real
    return EffectiveProjector(P, U.shape[1], U, fallback)


# -- linear time evolution --------------------------------------------------

def gauss_consistent_mode(eq: Equilibrium, k: float, grid: PhaseGrid, df=None) -> np.ndarray:
    """Initial vector (df, dE) with dE fixed by Gauss's law, ik dE = q int df."""
    df = eq.F0.astype(complex) if df is None else np.asarray(df, dtype=complex)
    dE = grid.q * np.sum(grid.wv * df) / (1j * k)
    return np.concatenate([df, [dE]])


def evolve_linear(op: LinearOperator, y0, dt: float, nsteps: int) -> np.ndarray:
    """Exact propagation ``y(t_n) = exp(n dt M) y0``; returns shape (nsteps+1, dim)."""
    P = sla.expm(dt * op.matrix)
    out = np.empty((nsteps + 1, op.dim), dtype=complex)
    out[0] = y0
    for n in range(nsteps):
        out[n + 1] = P @ out[n]
    return out


@dataclass(frozen=True)
class LinearRateResult:
    rate: float          # fitted energy rate (2 Im omega)
    oracle_rate: float
    omega: complex
    relative_error: float
    times: np.ndarray = field(repr=False)
    field_energy: np.ndarray = field(repr=False)


def linear_energy_rate(eq: Equilibrium, mode: int, grid: PhaseGrid, t_end: float = 30.0,
                       dt: float = 0.05, window=None) -> LinearRateResult:
    """Field-energy rate of the time-evolved linear system versus the oracle.

    Damped modes are fitted through field-energy maxima; growing modes by a
    log-linear fit on ``window`` (default: the second half of the run).
    """
    op = mode_operator(eq, mode, grid)
    n = int(round(t_end / dt))
    Y = evolve_linear(op, gauss_consistent_mode(eq, op.k, grid), dt, n)
    t = dt * np.arange(n + 1)
    energy = grid.L * np.abs(Y[:, -1]) ** 2
    omega = dispersion_root_oracle(eq.profile, op.k, grid.q)
    if omega.imag < 0:
        fit = peak_rate(t, energy, 2.0, t_end)
    else:
        lo, hi = window if window is not None else (0.5 * t_end, t_end)
        fit = window_rate(t, energy, lo, hi)
    oracle = 2.0 * omega.imag
    return LinearRateResult(fit.rate, oracle, omega, abs(fit.rate - oracle) / abs(oracle), t, energy)


# -- Goldstone directions ---------------------------------------------------

@dataclass(frozen=True)
class NeutralModeResult:
    residual: float
    trivial: bool
    rhs_residual: float
    direction_norm: float


def translation_direction(z: State, grid: PhaseGrid) -> StateTangent:
    """Infinitesimal x-translation of a state, computed spectrally."""
    return StateTangent(grid.ddx(z.f), grid.ddx(z.E, axis=1),
                        None if z.B is None else grid.ddx(z.B))


def neutral_mode_residual(eq: Equilibrium, grid: PhaseGrid, generator: str = "x_translation") -> NeutralModeResult:
    """Normalized ``||L(d_x z0)|| / ||d_x z0||`` with L the derivative of rhs.

    The derivative is taken by central differencing of the nonlinear rhs
    with a cube-root-of-epsilon step; norms are quadrature-weighted L2.
    """
    if generator != "x_translation":
        raise ValueError(f"unsupported symmetry generator {generator!r}")
    z = eq.state
    if _is_uniform(z) or (np.all(z.f == z.f[0:1]) and np.all(z.E == z.E[:, :1])):
        return NeutralModeResult(0.0, True, eq.rhs_residual, 0.0)
    d = translation_direction(z, grid)
    dn = tangent_norm(d, grid)
    if dn == 0.0:
        return NeutralModeResult(0.0, True, eq.rhs_residual, 0.0)
    znorm = tangent_norm(StateTangent(z.f, z.E, z.B), grid)
    h = np.cbrt(np.finfo(float).eps) * max(znorm, 1.0) / dn
    Lz = (rhs(z.advanced(d, h), grid) - rhs(z.advanced(d, -h), grid)) * (0.5 / h)
    return NeutralModeResult(tangent_norm(Lz, grid) / dn, False, eq.rhs_residual, dn)
