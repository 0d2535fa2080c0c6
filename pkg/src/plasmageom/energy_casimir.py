"""Energy-Casimir stability for homogeneous electrostatic equilibria.

For an equilibrium ``F0`` that is a strictly decreasing function of the
particle energy ``e = v^2/2`` we build ``phi`` with ``phi'(F0(v)) = -v^2/2``,
so that total energy plus ``int phi(f)`` is stationary at the equilibrium.
The second variation is the diagonal form

    Q(df, dE) = sum phi''(F0) df^2 dx dv + sum dE^2 dx

with ``phi''(s) = -1 / (dF0/de)`` positive wherever F0 decreases in energy.
Definiteness is tested on Gauss-consistent perturbations, mode by mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import PchipInterpolator

from .grid import PhaseGrid
from .linear import EffectiveProjector, Equilibrium, effective_projector, mode_operator
from .state import StateTangent


class CasimirConstructionError(ValueError):
    """No single-valued Casimir exists for the given equilibrium."""

    def __init__(self, message: str, interval=None):
        super().__init__(message)
        self.interval = interval


@dataclass(frozen=True, eq=False)
class CasimirProfile:
    """Casimir density ``phi`` with its first two derivatives.

    ``domain`` is ``(min F0, max F0)`` on the grid; evaluation outside it
    uses the monotone interpolant's extrapolation.
    """

    dphi: Callable
    d2phi: Callable
    phi: Callable
    domain: tuple
    label: str = "equilibrium"


def _check_energy_monotone(F0: np.ndarray, v: np.ndarray, rtol: float = 1e-12):
    scale = float(np.max(np.abs(F0)))
    if np.any(F0 <= 0):
        raise CasimirConstructionError("F0 must be positive on the velocity grid")
    if np.max(np.abs(F0 - F0[::-1])) > rtol * scale:
        raise CasimirConstructionError("F0 is not even in v; it is not a function of energy")
    pos = v >= 0
    vp, Fp = v[pos], F0[pos]
    d = np.diff(Fp)
    rising = d > rtol * scale
    if np.any(rising):
        a = float(vp[np.nonzero(rising)[0].max() + 1])
        raise CasimirConstructionError(
            f"no single-valued Casimir: F0 increases with |v| on [-{a:.6g}, {a:.6g}]",
            (-a, a))
    flat = d >= 0
    if np.any(flat):
        j = np.nonzero(flat)[0]
        lo, hi = float(vp[j.min()]), float(vp[j.max() + 1])
        raise CasimirConstructionError(
            f"degenerate profile: dF0/de = 0 for |v| in [{lo:.6g}, {hi:.6g}]", (lo, hi))
    return vp, Fp


def casimir_from_energy_profile(F0: np.ndarray, v: np.ndarray, n_fine: int = 20001,
                                label: str = "equilibrium") -> CasimirProfile:
    """Casimir built from samples of an even, strictly energy-decreasing F0."""
    vp, Fp = _check_energy_monotone(np.asarray(F0, float), np.asarray(v, float))
    ell = np.log(Fp[::-1])              # ascending log-density
    energy = 0.5 * vp[::-1] ** 2
    e_of_ell = PchipInterpolator(ell, energy, extrapolate=True)
    de_dell = e_of_ell.derivative()

    def dphi(s):
        return -e_of_ell(np.log(s))

    def d2phi(s):
        s = np.asarray(s, dtype=float)
        return -de_dell(np.log(s)) / s

    # phi(s) = int_{s_min}^{s} phi'(r) dr, integrated in log-density
    lg = np.linspace(ell[0], ell[-1], n_fine)
    integrand = -e_of_ell(lg) * np.exp(lg)
    phi_tab = PchipInterpolator(lg, cumulative_simpson(integrand, x=lg, initial=0.0),
                                extrapolate=True)

    def phi(s):
        return phi_tab(np.log(s))

    return CasimirProfile(dphi, d2phi, phi, (float(Fp.min()), float(Fp.max())), label)


def casimir_from_equilibrium(eq: Equilibrium, grid: PhaseGrid) -> CasimirProfile:
    if grid.em:
        raise CasimirConstructionError("energy-Casimir construction is implemented for ES_1D1V")
    if not eq.homogeneous:
        raise CasimirConstructionError("equilibrium must be spatially homogeneous")
    return casimir_from_energy_profile(eq.F0, grid.v, label=eq.kind)


@dataclass(frozen=True)
class FirstVariation:
    kinetic: float
    field: float

    @property
    def total(self) -> float:
        return max(self.kinetic, self.field)


def first_variation_vector(eq: Equilibrium, profile: CasimirProfile, grid: PhaseGrid) -> np.ndarray:
    """Pointwise ``v^2/2 + phi'(F0(v))`` on the velocity grid."""
    return 0.5 * grid.v ** 2 + profile.dphi(eq.F0)


def first_variation_residual(eq: Equilibrium, profile: CasimirProfile, grid: PhaseGrid) -> FirstVariation:
    kin = float(np.max(np.abs(first_variation_vector(eq, profile, grid))))
    fld = float(np.max(np.abs(eq.state.E))) if eq.state.E.size else 0.0
    return FirstVariation(kin, fld)


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """Diagonal second variation on ``(df, dE)`` grid perturbations.

    ``velocity_weight`` is the pointwise coefficient of ``df^2`` (before
    quadrature); the field coefficient is 1.
    """

    velocity_weight: np.ndarray
    grid: PhaseGrid = field(repr=False)

    @property
    def diagonal_f(self) -> np.ndarray:
        return self.velocity_weight[None, :] * self.grid.weights

    @property
    def diagonal_E(self) -> np.ndarray:
        return np.full((self.grid.n_efield, self.grid.Nx), self.grid.dx)

    def __call__(self, dz: StateTangent) -> float:
        return float(np.sum(self.diagonal_f * dz.df ** 2) + np.sum(self.diagonal_E * dz.dE ** 2))

    def mode_matrix(self) -> np.ndarray:
        """Per-Fourier-mode matrix ``L diag(weight * w_v, 1)`` on (df_hat, dE_hat)."""
        g = self.grid
        return g.L * np.diag(np.concatenate([self.velocity_weight * g.wv, [1.0]]))

    def plus(self, extra_velocity_weight) -> "QuadraticForm":
        return QuadraticForm(self.velocity_weight + np.asarray(extra_velocity_weight, float), self.grid)


def second_variation_form(eq: Equilibrium, profile: CasimirProfile, grid: PhaseGrid) -> QuadraticForm:
    return QuadraticForm(np.asarray(profile.d2phi(eq.F0), dtype=float), grid)


POSITIVE = "positive-definite"
INDEFINITE = "indefinite"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class DefinitenessReport:
    min_eigenvalue: float
    verdict: str
    dimension: int
    projector_corank: int = 0

    @property
    def formally_stable(self) -> bool:
        return self.verdict == POSITIVE

    @property
    def label(self) -> str:
        return "formally stable" if self.formally_stable else self.verdict

    def to_dict(self) -> dict:
        return {"min_eigenvalue": self.min_eigenvalue, "verdict": self.verdict,
                "label": self.label, "dimension": self.dimension,
                "projector_corank": self.projector_corank}


def _orth(A, rtol=1e-10):
    if A.shape[1] == 0:
        return A
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    return U[:, s > rtol * s[0]] if s.size and s[0] > 0 else A[:, :0]


def _null(A, rtol=1e-10):
    _, s, Vh = np.linalg.svd(A)
    top = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * max(top, 1.0)))
    return Vh[rank:].conj().T


def _unit_diagonal(M):
    diag = np.abs(np.real(np.diag(M)))
    if np.any(diag == 0):
        return None, None
    Dm = 1.0 / np.sqrt(diag)
    return Dm, Dm[:, None] * M * Dm[None, :]


def definiteness_report(Q, projector=None, constraint=None, tol: float = 1e-10) -> DefinitenessReport:
    """Smallest Rayleigh quotient of Q on range(constraint) intersected with
    range(projector).

    Inertia is read after rescaling Q to unit diagonal, so widely spread
    weights do not blur the verdict.  The reported
    minimum eigenvalue is taken in an orthonormal basis (via the inverse
    when the form is definite).
    """
    Q = np.asarray(Q)
    n = Q.shape[0]
    corank = 0
    T = np.eye(n, dtype=complex) if constraint is None else np.asarray(constraint, dtype=complex)
    if projector is not None:
        if isinstance(projector, EffectiveProjector):
            corank, P = projector.corank, projector.matrix
        else:
            P = np.asarray(projector)
            corank = n - int(round(np.real(np.trace(P))))
        C = _null((np.eye(n) - P) @ T)
        T = T @ C
    B = _orth(T)
    d = B.shape[1]
    if d == 0:
        return DefinitenessReport(0.0, DEGENERATE, 0, corank)

    # Sylvester: inertia of Q on range(T) equals that of D^-1 Q D^-1 on
    # range(D T).  With D = sqrt|diag Q| the rescaled form is well conditioned
    # even when the weights span many decades.
    dq = np.sqrt(np.abs(np.real(np.diag(Q))))
    dq[dq == 0] = 1.0
    S = (Q / dq[:, None]) / dq[None, :]
    Bs = np.linalg.qr(dq[:, None] * B)[0]
    lo = np.linalg.eigvalsh(_hermitian(Bs.conj().T @ S @ Bs))[0]

    M = _hermitian(B.conj().T @ Q @ B)
    if lo > tol:
        Dm, S = _unit_diagonal(M)
        Minv = Dm[:, None] * np.linalg.inv(S) * Dm[None, :]
        lam_min = 1.0 / np.linalg.eigvalsh(_hermitian(Minv))[-1]
        return DefinitenessReport(float(lam_min), POSITIVE, d, corank)
    lam_min = float(np.linalg.eigvalsh(M)[0])
    verdict = INDEFINITE if lo < -tol else DEGENERATE
    return DefinitenessReport(lam_min, verdict, d, corank)


def _hermitian(M):
    return 0.5 * (M + M.conj().T)


def gauss_constraint_basis(k: float, grid: PhaseGrid) -> np.ndarray:
    """Columns span the per-mode Gauss-consistent pairs (df, dE(df))."""
    n = grid.Nv
    T = np.zeros((n + 1, n), dtype=complex)
    T[:n] = np.eye(n)
    T[n] = -1j * grid.q * grid.wv / k
    return T


@dataclass
class StabilityReport:
    verdict: str
    min_eigenvalue: float
    modes: dict = field(default_factory=dict)
    first_variation: Optional[FirstVariation] = None

    @property
    def formally_stable(self) -> bool:
        return self.verdict == POSITIVE

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "label": "formally stable" if self.formally_stable else self.verdict,
                "min_eigenvalue": self.min_eigenvalue,
                "first_variation": None if self.first_variation is None else
                {"kinetic": self.first_variation.kinetic, "field": self.first_variation.field},
                "modes": {str(m): r.to_dict() for m, r in self.modes.items()}}


def modal_definiteness(eq: Equilibrium, form: QuadraticForm, grid: PhaseGrid,
                       modes=None, use_projector: bool = True) -> StabilityReport:
    """Combine per-mode reports: positive-definite only if every mode is."""
    modes = range(1, grid.Nx // 2) if modes is None else modes
    Qm = form.mode_matrix()
    reports = {}
    for m in modes:
        k = 2.0 * np.pi * m / grid.L
        P = effective_projector(mode_operator(eq, m, grid)) if use_projector else None
        reports[m] = definiteness_report(Qm, P, gauss_constraint_basis(k, grid))
    verdicts = {r.verdict for r in reports.values()}
    if INDEFINITE in verdicts:
        verdict = INDEFINITE
    elif DEGENERATE in verdicts or not reports:
        verdict = DEGENERATE
    else:
        verdict = POSITIVE
    lam = min((r.min_eigenvalue for r in reports.values()), default=0.0)
    return StabilityReport(verdict, float(lam), reports)


def energy_casimir_report(eq: Equilibrium, grid: PhaseGrid, modes=None) -> StabilityReport:
    """Build the Casimir, check stationarity and test the second variation."""
    profile = casimir_from_equilibrium(eq, grid)
    rep = modal_definiteness(eq, second_variation_form(eq, profile, grid), grid, modes)
    rep.first_variation = first_variation_residual(eq, profile, grid)
    return rep
