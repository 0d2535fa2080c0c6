"""Electrostatic dispersion roots with the Landau prescription.

The dielectric function is

    eps(w, k) = 1 - (q^2 / k^2) int F0'(v) / (v - w/k) dv

continued analytically from Im w > 0.  Profiles are Gaussian mixtures and
therefore entire, so the continuation is obtained by integrating along the
horizontal line ``Im v = -c`` lying below the pole.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .profiles import VelocityProfile


class DispersionError(RuntimeError):
    pass


# poles this far below the real axis are handled by the residue
_DEEP_POLE = 1.0


def _line_depth(u) -> np.ndarray:
    """Depth ``c`` of the integration line ``Im v = -c``.

    Shallow poles get a line one unit below them.  Deeper poles use the real
    line plus a residue, since a deep line multiplies the integrand by
    ``exp(c^2 / 2)`` and loses digits to cancellation.
    """
    im = np.imag(u)
    return np.where(im > -_DEEP_POLE, np.maximum(0.0, -im) + 1.0, 0.0)


def _residues(profile: VelocityProfile, u, p: int):
    """``2 pi i Res`` picked up by lifting the Landau contour to the real line."""
    u = np.asarray(u, dtype=complex)
    deep = np.imag(u) <= -_DEEP_POLE
    res = profile.derivative(u) if p == 1 else profile.second_derivative(u)
    return np.where(deep, 2j * np.pi * res, 0.0)


def _span(profile: VelocityProfile, u):
    lo, hi = profile.support
    lo = min(lo, float(np.min(np.real(u))) - 10.0)
    hi = max(hi, float(np.max(np.real(u))) + 10.0)
    return lo, hi


def _trapezoid_integrals(profile: VelocityProfile, u, n: int, powers=(1,)):
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    c = _line_depth(u)
    lo, hi = _span(profile, u)
    s = np.linspace(lo, hi, n)
    ds = s[1] - s[0]
    v = s[None, :] - 1j * c.reshape(-1, 1)
    dF = profile.derivative(v)
    out = []
    for p in powers:
        g = dF / (v - u.reshape(-1, 1)) ** p
        out.append(ds * (g.sum(axis=1) - 0.5 * (g[:, 0] + g[:, -1])) + _residues(profile, u, p))
    return out


def dielectric(profile: VelocityProfile, omega, k: float, q: float = 1.0, n: int = 4001):
    """Vectorized dielectric by trapezoid quadrature on the shifted line.

    Exponentially accurate because the integrand is analytic in a strip of
    half-width 1 around the line; used for scans and the first Newton stage.
    """
    omega = np.asarray(omega, dtype=complex)
    (I,) = _trapezoid_integrals(profile, omega.ravel() / k, n)
    return (1.0 - q ** 2 / k ** 2 * I).reshape(omega.shape)


def _line_integral(func, lo, hi, c):
    with warnings.catch_warnings():
        # quadpack flags roundoff once the integral is converged to ~1e-13
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(lambda s: func(s - 1j * c), lo, hi, complex_func=True,
                      limit=400, epsabs=1e-13, epsrel=1e-11)
    return val


def dielectric_adaptive(profile: VelocityProfile, omega: complex, k: float, q: float = 1.0):
    """Dielectric and its omega-derivative by adaptive quadrature."""
    u = complex(omega) / k
    c = float(_line_depth(np.array([u]))[0])
    lo, hi = _span(profile, np.array([u]))
    I0 = _line_integral(lambda v: profile.derivative(v) / (v - u), lo, hi, c) + complex(_residues(profile, u, 1))
    I1 = _line_integral(lambda v: profile.derivative(v) / (v - u) ** 2, lo, hi, c) + complex(_residues(profile, u, 2))
    return 1.0 - q ** 2 / k ** 2 * I0, -q ** 2 / k ** 3 * I1


def _newton(evaluate, w, tol, maxit, bound):
    for _ in range(maxit):
        eps, deps = evaluate(w)
        if deps == 0 or not np.isfinite(deps):
            return None
        step = eps / deps
        w = w - step
        if not np.isfinite(w) or abs(w) > bound:
            return None
        if abs(step) < tol * max(1.0, abs(w)):
            return w
    return None


def refine_root(profile: VelocityProfile, w0: complex, k: float, q: float = 1.0,
                bound: float = 50.0):
    """Newton on the trapezoid dielectric, polished with adaptive quadrature."""
    def trap(w):
        I0, I1 = _trapezoid_integrals(profile, w / k, 4001, (1, 2))
        return 1.0 - q ** 2 / k ** 2 * I0[0], -q ** 2 / k ** 3 * I1[0]

    w = _newton(trap, complex(w0), 1e-10, 60, bound)
    if w is None:
        return None
    w = _newton(lambda x: dielectric_adaptive(profile, x, k, q), w, 1e-13, 6, bound)
    if w is None or abs(dielectric_adaptive(profile, w, k, q)[0]) > 1e-9:
        return None
    return w


def dispersion_roots(profile: VelocityProfile, k: float, q: float = 1.0,
                     re_max: float = None, im_min: float = None, im_max: float = 1.5,
                     n_re: int = 61, n_im: int = 61) -> list:
    """All roots reached by Newton from local minima of |eps| on a scan grid.

    Only ``Re w >= 0`` is scanned; roots of real profiles come in pairs
    ``w, -conj(w)``.  Returned sorted by imaginary part, descending.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    lo, hi = profile.support
    vmax = max(abs(lo), abs(hi))
    if re_max is None:
        re_max = max(3.0, 1.0 + 3.0 * k ** 2 + k * vmax)
    if im_min is None:
        im_min = -4.0 * k
    wr = np.linspace(0.0, re_max, n_re)
    wi = np.linspace(im_min, im_max, n_im)
    W = wr[None, :] + 1j * wi[:, None]
    A = np.abs(dielectric(profile, W, k, q, n=1201))
    cands = []
    for i in range(n_im):
        for j in range(n_re):
            nb = A[max(i - 1, 0):i + 2, max(j - 1, 0):j + 2]
            if A[i, j] <= nb.min():
                cands.append((A[i, j], W[i, j]))
    cands.sort(key=lambda c: c[0])
    roots = []
    for _, w0 in cands[:12]:
        w = refine_root(profile, w0, k, q, bound=4.0 * (re_max + abs(im_min) + im_max))
        if w is None or not (im_min - 1.0 <= w.imag <= im_max + 1.0):
            continue
        if w.real < 0:
            w = -w.conjugate()
        if abs(w.real) < 1e-10:
            w = complex(0.0, w.imag)
        if all(abs(w - r) > 1e-7 * max(1.0, abs(w)) for r in roots):
            roots.append(w)
    if not roots:
        best = ", ".join(f"{w:.4g} (|eps|={a:.3g})" for a, w in cands[:5])
        raise DispersionError(f"no dispersion root found for k={k}; scan minima: {best}")
    return sorted(roots, key=lambda w: -w.imag)


def dispersion_root_oracle(profile: VelocityProfile, k: float, q: float = 1.0, **scan) -> complex:
    """Least-damped (or fastest-growing) electrostatic root."""
    return dispersion_roots(profile, k, q, **scan)[0]
