"""Constraint chains for linear presymplectic systems.

A system is a constant skew form ``omega`` on R^n with a quadratic
Hamiltonian ``H(z) = z.A.z/2 + b.z``.  A vector field X solves the
presymplectic equation at z when ``omega(X, .) = dH(z)``, i.e.

    omega^T X = A z + b.

The chain starts from the whole space and repeatedly keeps the points at
which a solution tangent to the current constraint set exists, until the
set stops shrinking.  Every step is a linear solve with SVD rank decisions
at relative tolerance ``tol``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import subspace_angles

DEFAULT_TOL = 1e-10


class GNHError(RuntimeError):
    pass


class InconsistentVectorField(GNHError):
    """The presymplectic equation has no tangent solution on the final set."""


@dataclass(frozen=True, eq=False)
class PresymplecticSystem:
    omega: np.ndarray
    A: np.ndarray
    b: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        n = om.shape[0]
        problems = []
        if om.shape != (n, n) or A.shape != (n, n) or b.shape != (n,):
            problems.append(f"shapes omega {om.shape}, A {A.shape}, b {b.shape} are inconsistent")
        elif not np.array_equal(om.T, -om):
            problems.append("omega must be exactly skew-symmetric")
        elif not np.array_equal(A.T, A):
            problems.append("A must be exactly symmetric")
        if self.labels is not None and len(self.labels) != n:
            problems.append(f"{len(self.labels)} labels for dimension {n}")
        if problems:
            raise ValueError("; ".join(problems))
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    def gradient(self, z) -> np.ndarray:
        return self.A @ z + self.b

    def index(self, label: str) -> int:
        return list(self.labels).index(label)

    def to_dict(self) -> dict:
        return {"n": self.n, "omega": self.omega.tolist(), "A": self.A.tolist(),
                "b": self.b.tolist(), "labels": None if self.labels is None else list(self.labels)}


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    basepoint: np.ndarray
    directions: np.ndarray   # orthonormal columns

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.directions @ self.directions.T

    def contains(self, z, tol: float = 1e-8) -> bool:
        r = np.asarray(z) - self.basepoint
        r = r - self.directions @ (self.directions.T @ r)
        return bool(np.linalg.norm(r) <= tol * max(1.0, np.linalg.norm(z)))

    def satisfies(self, coeffs, value: float = 0.0, tol: float = 1e-8) -> bool:
        """True if ``coeffs . z == value`` holds on the whole subspace."""
        c = np.asarray(coeffs, dtype=float)
        scale = max(1.0, np.linalg.norm(c))
        return bool(abs(c @ self.basepoint - value) <= tol * scale
                    and np.all(np.abs(c @ self.directions) <= tol * scale))

    def sample(self, rng, count: int = 1) -> np.ndarray:
        return self.basepoint[None, :] + rng.standard_normal((count, self.dim)) @ self.directions.T

    def to_dict(self) -> dict:
        return {"dim": self.dim, "basepoint": self.basepoint.tolist(),
                "directions": self.directions.tolist()}


@dataclass(frozen=True, eq=False)
class ConstraintChain:
    """Nested subspaces ``C_0 ⊇ C_1 ⊇ ... ⊇ C_s`` with ``C_{s+1} = C_s``."""

    n: int
    subspaces: tuple
    stabilized_at: Optional[int]
    empty: bool = False
    labels: Optional[tuple] = None

    @property
    def dims(self) -> list:
        return [s.dim for s in self.subspaces]

    @property
    def final(self) -> AffineSubspace:
        if self.empty or not self.subspaces:
            raise GNHError("the constraint chain ended in the empty set")
        return self.subspaces[-1]

    def dim_sequence(self) -> list:
        """Ambient dimension followed by the distinct constraint dimensions."""
        out = [self.n]
        for d in self.dims:
            if d != out[-1]:
                out.append(d)
        return out

    def to_dict(self) -> dict:
        return {"n": self.n, "dims": self.dims, "dim_sequence": self.dim_sequence(),
                "stabilized_at": self.stabilized_at, "empty": self.empty,
                "labels": None if self.labels is None else list(self.labels),
                "subspaces": [s.to_dict() for s in self.subspaces]}


def _rank(s, tol, scale):
    # thresholds are relative to the system matrices, not to the block at hand,
    # so roundoff-sized blocks count as zero
    return int(np.sum(s > tol * scale))


def _scale(M) -> float:
    return max(float(np.linalg.norm(M, 2)) if M.size else 0.0, np.finfo(float).tiny)


def _range_and_cokernel(M, tol, scale):
    U, s, _ = np.linalg.svd(M, full_matrices=True)
    r = _rank(s, tol, scale)
    return U[:, :r], U[:, r:]


def _null_space(M, tol, scale):
    if M.shape[0] == 0:
        return np.eye(M.shape[1])
    _, s, Vh = np.linalg.svd(M, full_matrices=True)
    r = _rank(s, tol, scale)
    return Vh[r:].T


def _pinv(M, tol, scale):
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    r = _rank(s, tol, scale)
    return (Vh[:r].T / s[:r]) @ U[:, :r].T


def constraint_step(sys: PresymplecticSystem, current: AffineSubspace, tol: float = DEFAULT_TOL):
    """Points of ``current`` where ``A z + b`` lies in ``omega^T`` of its tangent space.

    Returns the new subspace, or ``None`` if no such point exists.
    """
    D = current.directions
    _, cok = _range_and_cokernel(sys.omega.T @ D, tol, _scale(sys.omega))
    lhs = cok.T @ sys.A @ D
    rhs = -cok.T @ sys.gradient(current.basepoint)
    if lhs.shape[0] == 0:
        return current
    c, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    scale = max(1.0, np.linalg.norm(sys.A), np.linalg.norm(sys.b), np.linalg.norm(current.basepoint))
    if np.linalg.norm(lhs @ c - rhs) > np.sqrt(tol) * scale:
        return None
    N = _null_space(lhs, tol, _scale(sys.A))
    return AffineSubspace(current.basepoint + D @ c, D @ N)


def whole_space(n: int) -> AffineSubspace:
    return AffineSubspace(np.zeros(n), np.eye(n))


def primary_constraint(sys: PresymplecticSystem, tol: float = DEFAULT_TOL) -> Optional[AffineSubspace]:
    """Points where ``A z + b`` lies in the range of omega (``None`` if empty)."""
    return constraint_step(sys, whole_space(sys.n), tol)


def gnh_iterate(sys: PresymplecticSystem, tol: float = DEFAULT_TOL) -> ConstraintChain:
    subspaces = []
    current = whole_space(sys.n)
    for _ in range(sys.n + 2):
        nxt = constraint_step(sys, current, tol)
        if nxt is None:
            return ConstraintChain(sys.n, tuple(subspaces), None, True, sys.labels)
        if subspaces and nxt.dim == current.dim:
            return ConstraintChain(sys.n, tuple(subspaces), len(subspaces) - 1, False, sys.labels)
        subspaces.append(nxt)
        current = nxt
    raise GNHError("constraint chain did not stabilize within n + 1 steps")


@dataclass(frozen=True, eq=False)
class VectorFieldSolution:
    """``X(z) = X0 + M (z - basepoint)`` on the final constraint set, plus the
    kernel directions along which solutions are not unique."""

    basepoint: np.ndarray
    X0: np.ndarray
    linear: np.ndarray
    kernel_basis: np.ndarray

    def __call__(self, z) -> np.ndarray:
        return self.X0 + self.linear @ (np.asarray(z) - self.basepoint)


def solve_vector_field(sys: PresymplecticSystem, chain: ConstraintChain,
                       tol: float = DEFAULT_TOL) -> VectorFieldSolution:
    C = chain.final
    D = C.directions
    M = sys.omega.T @ D
    om_scale = _scale(sys.omega)
    pinv = _pinv(M, tol, om_scale) if M.size else np.zeros((D.shape[1], sys.n))
    X0 = D @ (pinv @ sys.gradient(C.basepoint))
    lin = D @ pinv @ sys.A
    scale = max(1.0, np.linalg.norm(sys.A), np.linalg.norm(sys.b), np.linalg.norm(C.basepoint))
    for probe in [C.basepoint] + [C.basepoint + D[:, j] for j in range(D.shape[1])]:
        X = X0 + lin @ (probe - C.basepoint)
        if np.linalg.norm(sys.omega.T @ X - sys.gradient(probe)) > np.sqrt(tol) * scale:
            raise InconsistentVectorField(
                "no tangent solution on the final constraint set; the rank tolerance is too loose")
    K = D @ _null_space(M, tol, om_scale) if M.size else D
    return VectorFieldSolution(C.basepoint, X0, lin, K)


def subspaces_match(S1: AffineSubspace, S2: AffineSubspace, tol: float = 1e-8) -> bool:
    if S1.dim != S2.dim:
        return False
    if S1.dim and np.max(subspace_angles(S1.directions, S2.directions)) > tol:
        return False
    return S2.contains(S1.basepoint, tol) and S1.contains(S2.basepoint, tol)


# -- encodings ----------------------------------------------------------------

def skinner_rusk_system(S, l=None, labels=None) -> PresymplecticSystem:
    """Unified position/velocity/momentum system for ``L = x.S.x/2 + l.x``
    with ``x = (q, v)``.

    Coordinates are ``(q, v, p)``; ``omega(d1, d2) = dq1.dp2 - dq2.dp1`` and
    ``H = p.v - L(q, v)``.
    """
    S = np.asarray(S, dtype=float)
    m = S.shape[0] // 2
    l = np.zeros(2 * m) if l is None else np.asarray(l, dtype=float)
    n = 3 * m
    I = np.eye(m)
    omega = np.zeros((n, n))
    omega[:m, 2 * m:] = I
    omega[2 * m:, :m] = -I
    A = np.zeros((n, n))
    A[:2 * m, :2 * m] = -S
    A[m:2 * m, 2 * m:] = I
    A[2 * m:, m:2 * m] = I
    b = np.concatenate([-l, np.zeros(m)])
    return PresymplecticSystem(omega, A, b, None if labels is None else tuple(labels))


def free_particle() -> PresymplecticSystem:
    """``L = v^2 / 2`` in one dimension."""
    S = np.array([[0.0, 0.0], [0.0, 1.0]])
    return skinner_rusk_system(S, labels=("q", "v", "p"))


def electromagnetic_modes(wavenumbers=(1.0, 2.0), charges=(0.3, -0.5)) -> PresymplecticSystem:
    """Longitudinal field modes with static charges.

    Per mode ``j`` with coordinates (phi_j, a_j) the Lagrangian is
    ``(da_j/dt + k_j phi_j)^2 / 2 - rho_j phi_j``: the field energy of
    ``E = -(da/dt + k phi)`` minus the charge coupling.
    """
    k = np.asarray(wavenumbers, dtype=float)
    rho = np.asarray(charges, dtype=float)
    m = len(k)
    nq = 2 * m
    S = np.zeros((2 * nq, 2 * nq))
    l = np.zeros(2 * nq)
    labels_q, labels_v, labels_p = [], [], []
    for j in range(m):
        iphi, ia = 2 * j, 2 * j + 1
        iva = nq + ia
        # (v_a + k phi)^2 / 2
        S[iva, iva] += 1.0
        S[iphi, iphi] += k[j] ** 2
        S[iva, iphi] += k[j]
        S[iphi, iva] += k[j]
        l[iphi] = -rho[j]
        labels_q += [f"phi{j + 1}", f"a{j + 1}"]
        labels_v += [f"v_phi{j + 1}", f"v_a{j + 1}"]
        labels_p += [f"P_phi{j + 1}", f"P_a{j + 1}"]
    return skinner_rusk_system(S, l, labels_q + labels_v + labels_p)


def canonical_system(m: int, A=None, b=None) -> PresymplecticSystem:
    n = 2 * m
    J = np.zeros((n, n))
    J[:m, m:] = np.eye(m)
    J[m:, :m] = -np.eye(m)
    A = np.eye(n) if A is None else A
    b = np.zeros(n) if b is None else b
    return PresymplecticSystem(J, A, b)
