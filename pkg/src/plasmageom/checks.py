"""Property suites shared by the CLI scenarios and the acceptance tests.

Every suite takes an explicit seed and returns plain floats and lists, so
its output can be written to JSON and compared byte for byte.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .analysis import observed_order
from .bracket import hamiltonian_vector_field, jacobi_residual, mv_bracket
from .grid import Config, PhaseGrid
from .state import FunctionalDerivative, State, pair

REFINEMENT_LEVELS = ((32, 64), (64, 128), (128, 256))
# absolute size below which a residual is indistinguishable from rounding
ROUNDOFF_FLOOR = 1e-12


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    rule: str

    def to_dict(self) -> dict:
        return asdict(self)


def below(name: str, value: float, threshold: float) -> Check:
    value = float(value)
    return Check(name, value, threshold, bool(value < threshold), "value < threshold")


def at_least(name: str, value: float, threshold: float) -> Check:
    value = float(value)
    return Check(name, value, threshold, bool(value >= threshold), "value >= threshold")


@dataclass(frozen=True)
class SmoothField:
    """Random low-mode field on phase space, independent of the grid.

    ``a(x, v) = sum_m c_m cos(m k x + p_m) * g_m(v)`` with
    ``g_m(v) = exp(-(v - s_m)^2 / (2 w_m^2)) * (1 + r_m v)``.  The same
    coefficients evaluated on refined grids give a convergent sequence.
    """

    coeffs: tuple
    phases: tuple
    shifts: tuple
    widths: tuple
    slopes: tuple
    field_coeffs: tuple
    field_phases: tuple

    @classmethod
    def draw(cls, rng, modes: int = 3, envelope: float = 1.5) -> "SmoothField":
        def vec(lo, hi):
            return tuple(float(x) for x in rng.uniform(lo, hi, modes))
        return cls(vec(-1, 1), vec(0, 2 * np.pi), vec(-1, 1), vec(0.8 * envelope, 1.2 * envelope),
                   vec(-0.5, 0.5), vec(-0.5, 0.5), vec(0, 2 * np.pi))

    def phase_values(self, grid: PhaseGrid) -> np.ndarray:
        k = 2 * np.pi / grid.L
        x = grid.x[:, None]
        v = grid.v[None, :]
        out = np.zeros((grid.Nx, grid.Nv))
        for m, (c, p, s, w, r) in enumerate(zip(self.coeffs, self.phases, self.shifts,
                                                  self.widths, self.slopes)):
            out += c * np.cos(m * k * x + p) * np.exp(-(v - s) ** 2 / (2 * w * w)) * (1 + r * v)
        return out

    def field_values(self, grid: PhaseGrid) -> np.ndarray:
        k = 2 * np.pi / grid.L
        E = sum(c * np.sin((m + 1) * k * grid.x + p)
                for m, (c, p) in enumerate(zip(self.field_coeffs, self.field_phases)))
        return np.asarray(E)[None, :]

    def derivative(self, grid: PhaseGrid) -> FunctionalDerivative:
        return FunctionalDerivative.create(grid, self.phase_values(grid), self.field_values(grid))


def smooth_state(rng, amplitude: float = 0.3):
    """Positive smooth state builder: a Maxwellian times ``1 + amplitude * tanh(a)``."""
    a = SmoothField.draw(rng)

    def build(g: PhaseGrid) -> State:
        M = np.exp(-g.v ** 2 / 2) / np.sqrt(2 * np.pi)
        f = M[None, :] * (1 + amplitude * np.tanh(a.phase_values(g)))
        return State.create(g, f, a.field_values(g))
    return build


def _random_derivative(rng, grid: PhaseGrid) -> FunctionalDerivative:
    B = rng.uniform(-1, 1, grid.Nx) if grid.em else None
    return FunctionalDerivative.create(grid, rng.uniform(-1, 1, grid.f_shape),
                                       rng.uniform(-1, 1, (grid.n_efield, grid.Nx)), B)


def _random_state(rng, grid: PhaseGrid) -> State:
    B = rng.uniform(-1, 1, grid.Nx) if grid.em else None
    return State.create(grid, rng.uniform(0, 1, grid.f_shape),
                        rng.uniform(-1, 1, (grid.n_efield, grid.Nx)), B)


def bracket_algebra(seed: int, n_triples: int = 100) -> dict:
    """Antisymmetry, bilinearity and vector-field duality on random triples.

    Triples alternate between an electrostatic and an electromagnetic grid.
    All derivative entries and state entries are O(1).
    """
    rng = np.random.default_rng(seed)
    grids = (PhaseGrid(Config.ES_1D1V, Nx=16, Nv=32),
             PhaseGrid(Config.EM_1D2V, Nx=8, Nv=8))
    anti = bilin = dual = 0.0
    for i in range(n_triples):
        g = grids[i % 2]
        F, G, H = (_random_derivative(rng, g) for _ in range(3))
        z = _random_state(rng, g)
        a, b = rng.uniform(-2, 2, 2)
        FG = mv_bracket(F, G, z, g)
        anti = max(anti, abs(FG + mv_bracket(G, F, z, g)))
        combo = FunctionalDerivative.create(
            g, a * F.d_f + b * G.d_f, a * F.d_E + b * G.d_E,
            None if not g.em else a * F.d_B + b * G.d_B)
        lhs = mv_bracket(combo, H, z, g)
        bilin = max(bilin, abs(lhs - a * mv_bracket(F, H, z, g) - b * mv_bracket(G, H, z, g)))
        X = hamiltonian_vector_field(G, z, g)
        dual = max(dual, abs(pair(F, X, g) - FG))
    checks = [below("antisymmetry_max_residual", anti, 1e-12),
              below("bilinearity_max_residual", bilin, 1e-12),
              below("vector_field_duality_max_residual", dual, 1e-12)]
    return {"n_triples": n_triples, "antisymmetry": float(anti), "bilinearity": float(bilin),
            "duality": float(dual), "checks": checks}


def casimir_convergence(seed: int, powers=(1, 2), levels=REFINEMENT_LEVELS) -> dict:
    """Residual of ``{F, C_p}`` for smooth random ``F`` and ``z`` across refinements.

    A power passes when every pairwise order is at least 2, or when every
    residual is already below :data:`ROUNDOFF_FLOOR` (the mass Casimir is
    annihilated exactly by the discrete bracket).
    """
    rng = np.random.default_rng(seed)
    build = smooth_state(rng)
    F = SmoothField.draw(rng)
    h, res = [], {p: [] for p in powers}
    for Nx, Nv in levels:
        g = PhaseGrid(Nx=Nx, Nv=Nv)
        z = build(g)
        Fd = F.derivative(g)
        h.append(g.dv)
        for p in powers:
            Cd = FunctionalDerivative.create(g, p * z.f ** (p - 1))
            res[p].append(abs(mv_bracket(Fd, Cd, z, g)))
    out = {"h": h, "residuals": {}, "orders": {}, "checks": []}
    for p in powers:
        r = res[p]
        floor = bool(max(r) < ROUNDOFF_FLOOR)
        orders = observed_order(h, r) if not floor else np.array([])
        ok = floor or bool(np.all(orders >= 2))
        worst = float(orders.min()) if orders.size else float("inf")
        out["residuals"][str(p)] = [float(x) for x in r]
        out["orders"][str(p)] = [float(x) for x in orders]
        out["checks"].append(Check(f"casimir_p{p}_convergence", worst if not floor else float(max(r)),
                                   2.0 if not floor else ROUNDOFF_FLOOR, ok,
                                   "min order >= 2, or all residuals < roundoff floor"))
    return out


def jacobi_convergence(seed: int, levels=REFINEMENT_LEVELS) -> dict:
    """Jacobi residual for three smooth linear observables across refinements."""
    rng = np.random.default_rng(seed)
    build = smooth_state(rng)
    F, G, H = (SmoothField.draw(rng) for _ in range(3))
    h, res = [], []
    for Nx, Nv in levels:
        g = PhaseGrid(Nx=Nx, Nv=Nv)
        h.append(g.dv)
        res.append(jacobi_residual(F.derivative(g), G.derivative(g), H.derivative(g), build(g), g))
    orders = observed_order(h, res)
    return {"h": h, "residuals": [float(r) for r in res], "orders": [float(o) for o in orders],
            "checks": [at_least("jacobi_min_order", float(orders.min()), 2.0)]}


def gnh_oracle_agreement(seed: int, n_systems: int = 50, max_dim: int = 6,
                         tol: float = 1e-8) -> dict:
    """Compare floating-point constraint chains with exact rational elimination.

    Systems have ``2 <= n <= max_dim`` and a random even form rank.  A
    system agrees when both chains end empty, or when every stage has the
    same dimension and all principal angles and basepoint offsets are below
    ``tol``.
    """
    from .elimination import exact_chain, random_integer_system
    from .gnh import AffineSubspace, PresymplecticSystem, gnh_iterate, subspaces_match

    rng = np.random.default_rng(seed)
    mismatches, sequences = [], []
    for i in range(n_systems):
        n = int(rng.integers(2, max_dim + 1))
        rank = 2 * int(rng.integers(0, n // 2 + 1))
        om, A, b = random_integer_system(rng, n, rank)
        chain = gnh_iterate(PresymplecticSystem(om.astype(float), A.astype(float), b.astype(float)))
        exact = exact_chain(om, A, b)
        sequences.append(chain.dim_sequence())
        exact_empty = exact[-1] is None
        if chain.empty != exact_empty:
            mismatches.append(i)
            continue
        stages = [AffineSubspace(z, np.linalg.qr(N)[0] if N.shape[1] else N)
                  for z, N in (e for e in exact if e is not None)]
        if len(stages) != len(chain.subspaces) or not all(
                subspaces_match(a, c, tol) for a, c in zip(chain.subspaces, stages)):
            mismatches.append(i)
    return {"n_systems": n_systems, "mismatches": mismatches, "dim_sequences": sequences,
            "checks": [Check("gnh_oracle_mismatches", float(len(mismatches)), 0.0,
                             not mismatches, "value == threshold")]}
