"""Exact-arithmetic constraint chains, used to cross-check :mod:`plasmageom.gnh`.

Works with rational matrices and parametrized affine sets ``z0 + N t``.
Instead of orthogonal projectors it imposes the annihilator conditions
``u . (A z + b) = 0`` for every ``u`` in the left null space of
``omega^T N``, solved by Gauss-Jordan elimination.
"""
from __future__ import annotations

import numpy as np
import sympy as sp


def _as_rational(M):
    return sp.Matrix(M).applyfunc(sp.nsimplify)


def exact_chain(omega, A, b, max_steps=None):
    """Return a list of ``(basepoint, basis)`` numpy pairs, or ``None`` entries
    marking an empty set.  Iteration stops when the dimension repeats."""
    om = _as_rational(omega)
    A = _as_rational(A)
    b = _as_rational(b).reshape(om.rows, 1)
    n = om.rows
    z0 = sp.zeros(n, 1)
    N = sp.eye(n)
    out = []
    for _ in range(max_steps or n + 2):
        R = om.T * N
        ann = (R.T).nullspace()        # u with u^T R = 0
        if not ann:
            z_new, N_new = z0, N
        else:
            U = sp.Matrix.hstack(*ann).T
            lhs = U * A * N
            rhs = -U * (A * z0 + b)
            try:
                sol, params = lhs.gauss_jordan_solve(rhs)
            except ValueError:
                out.append(None)
                return out
            t0 = sol.subs({p: 0 for p in params})
            z_new = z0 + N * t0
            nulls = lhs.nullspace()
            N_new = N * sp.Matrix.hstack(*nulls) if nulls else sp.zeros(n, 0)
        if out and N_new.cols == N.cols:
            return out
        out.append((np.array(z_new, dtype=float).ravel(), np.array(N_new, dtype=float).reshape(n, -1)))
        z0, N = z_new, N_new
    raise RuntimeError("exact chain did not stabilize")


def random_integer_system(rng, n: int, rank: int, entries: int = 3):
    """Degenerate skew form ``B^T J B`` with ``rank(J) = rank``, random
    symmetric ``A`` and ``b``, all with small integer entries."""
    m = rank // 2
    J = np.zeros((n, n), dtype=int)
    J[:m, m:2 * m] = np.eye(m, dtype=int)
    J[m:2 * m, :m] = -np.eye(m, dtype=int)
    B = rng.integers(-entries, entries + 1, size=(n, n))
    omega = B.T @ J @ B
    S = rng.integers(-entries, entries + 1, size=(n, n))
    A = S + S.T
    b = rng.integers(-entries, entries + 1, size=n)
    return omega, A, b
