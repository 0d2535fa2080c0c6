"""Semi-discrete nonlinear Maxwell-Vlasov evolution with RK4 time stepping.

The electric field is advanced with Ampere's law; Gauss's law is a monitored
invariant (see :func:`gauss_residual`), never re-imposed during a run.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import PhaseGrid
from .profiles import VelocityProfile, maxwellian, perturbed_state
from .state import State, StateTangent, casimir_lp, current_density, total_energy

# RK4 stability interval on the imaginary axis
RK4_IMAG_LIMIT = 2.0 * np.sqrt(2.0)
# spectral radius of the interior 4th-order stencil, times dv
_STENCIL_RADIUS = 1.3722


class SimulationError(RuntimeError):
    """Non-finite values encountered during time integration."""


class CFLWarning(RuntimeWarning):
    pass


def rhs(z: State, grid: PhaseGrid, j_ext=None) -> StateTangent:
    """Time derivative of z from the Vlasov and Ampere/Faraday equations.

    ``j_ext`` is an optional external current of shape ``(n_efield, Nx)``.
    """
    f, E, q = z.f, z.E, grid.q
    nb = (-1,) + (1,) * grid.n_vdim
    v1 = grid.velocity_component(0)
    j = current_density(f, grid)
    if grid.em:
        v2 = grid.velocity_component(1)
        B3 = z.B.reshape(nb)
        force1 = E[0].reshape(nb) + v2 * B3
        force2 = E[1].reshape(nb) - v1 * B3
        df = -v1 * grid.ddx(f) - q * (force1 * grid.ddv(f, 0) + force2 * grid.ddv(f, 1))
        dE = np.stack([-j[0], -grid.ddx(z.B) - j[1]])
        dB = -grid.ddx(E[1])
    else:
        df = -v1 * grid.ddx(f) - q * E[0].reshape(nb) * grid.ddv(f, 0)
        dE = -(j - j.mean(axis=1, keepdims=True))
        dB = None
    if j_ext is not None:
        dE = dE - np.asarray(j_ext, dtype=float).reshape(dE.shape)
    out = StateTangent(df, dE, dB)
    if not out.is_finite():
        raise SimulationError("non-finite time derivative")
    return out


def max_stable_dt(z: State, grid: PhaseGrid) -> float:
    """Largest dt keeping every advection eigenvalue inside RK4's stability
    interval: spectral modes in x, the velocity stencil's spectral radius in v."""
    k_max = grid.k[-2] if grid.Nx > 2 else grid.k[-1]
    rate = k_max * grid.v_max
    force = np.max(np.abs(z.E)) * abs(grid.q)
    if z.B is not None:
        force = force + abs(grid.q) * np.sqrt(2.0) * grid.v_max * np.max(np.abs(z.B))
    rate += grid.n_vdim * force * _STENCIL_RADIUS / grid.dv
    return np.inf if rate == 0 else RK4_IMAG_LIMIT / rate


def _eval_current(j_ext, t):
    if j_ext is None:
        return None
    return j_ext(t) if callable(j_ext) else j_ext


def step_rk4(z: State, grid: PhaseGrid, dt: float, j_ext=None, t: float = 0.0,
             forcing: Optional[Callable[[State, float], StateTangent]] = None) -> State:
    """One classical RK4 step.

    ``j_ext`` may be an array or a callable of time; ``forcing(z, t)``
    returns an extra tangent (control generators).  Both are evaluated at
    the stage times.
    """
    def F(zs, ts):
        out = rhs(zs, grid, _eval_current(j_ext, ts))
        if forcing is not None:
            out = out + forcing(zs, ts)
        return out

    k1 = F(z, t)
    k2 = F(z.advanced(k1, 0.5 * dt), t + 0.5 * dt)
    k3 = F(z.advanced(k2, 0.5 * dt), t + 0.5 * dt)
    k4 = F(z.advanced(k3, dt), t + dt)
    incr = k1 + 2.0 * k2 + 2.0 * k3 + k4
    znew = z.advanced(incr, dt / 6.0)
    if not znew.is_finite():
        raise SimulationError("non-finite state after RK4 step")
    return znew


def gauss_residual(z: State, grid: PhaseGrid) -> float:
    """max |dE1/dx - (rho - mean rho)| with the neutralized charge density."""
    rho = grid.q * grid.integrate_v(z.f)
    return float(np.max(np.abs(grid.ddx(z.E[0]) - (rho - rho.mean()))))


def divergence_B(z: State, grid: PhaseGrid) -> float:
    """div B for B = B3(x) e3: identically zero in the reduced geometry."""
    return 0.0


def mode_energies(z: State, grid: PhaseGrid, modes=(1, 2, 3, 4)) -> list:
    """Electric field energy carried by each Fourier mode (both +-k)."""
    out = []
    amps = [grid.mode_amplitudes(Ec) for Ec in z.E]
    for m in modes:
        out.append(float(sum(grid.L * abs(a[m]) ** 2 for a in amps)) if m < grid.Nx // 2 else 0.0)
    return out


COLUMNS = ("t", "energy", "casimir1", "casimir2", "gauss_residual",
           "mode_energy_1", "mode_energy_2", "mode_energy_3", "mode_energy_4", "min_f")


@dataclass
class DiagnosticSeries:
    """Time series recorded by :func:`run`; one row per diagnostic time."""

    rows: list = field(default_factory=list)
    error: Optional[str] = None
    cfl_warnings: int = 0
    substeps: int = 1
    final_state: Optional[State] = field(default=None, repr=False)

    def record(self, t: float, z: State, grid: PhaseGrid):
        self.rows.append((t, total_energy(z, grid), casimir_lp(z.f, grid, 1),
                          casimir_lp(z.f, grid, 2), gauss_residual(z, grid),
                          *mode_energies(z, grid), float(np.min(z.f))))

    def column(self, name: str) -> np.ndarray:
        return np.array([r[COLUMNS.index(name)] for r in self.rows])

    def __len__(self):
        return len(self.rows)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow(["%.17g" % x for x in r])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def to_dict(self) -> dict:
        return {"columns": list(COLUMNS), "rows": [list(map(float, r)) for r in self.rows],
                "error": self.error, "cfl_warnings": self.cfl_warnings,
                "substeps": self.substeps}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


@dataclass
class ScenarioParams:
    """Parameters of a time-dependent run.

    ``control`` is any object with a ``tangent(z, t, grid)`` method (see
    :class:`plasmageom.control.ControlledFlow`).
    """

    dt: float = 0.05
    t_end: float = 30.0
    profile: VelocityProfile = field(default_factory=maxwellian)
    k_mode: int = 1
    amplitude: float = 1e-3
    perturbation: str = "density"
    control: object = None
    cadence: int = 1
    substeps: Optional[int] = None  # None: chosen from the stability estimate

    def __post_init__(self):
        problems = []
        if not self.dt > 0:
            problems.append("dt must be positive")
        if not self.t_end >= 0:
            problems.append("t_end must be non-negative")
        if self.amplitude < 0:
            problems.append("amplitude must be non-negative")
        if self.cadence < 1:
            problems.append("cadence must be >= 1")
        if self.substeps is not None and self.substeps < 1:
            problems.append("substeps must be >= 1")
        if problems:
            raise ValueError("; ".join(problems))


def initial_state(scenario: ScenarioParams, grid: PhaseGrid) -> State:
    return perturbed_state(scenario.profile, grid, scenario.k_mode,
                           scenario.amplitude, scenario.perturbation)


def run(scenario: ScenarioParams, grid: PhaseGrid, z0: Optional[State] = None,
        callback: Optional[Callable[[int, float, State], None]] = None) -> DiagnosticSeries:
    """Integrate from the scenario's initial state (or ``z0``) to ``t_end``.

    Each scenario step ``dt`` is split into RK4 substeps; unless fixed by
    ``scenario.substeps`` their number is the smallest keeping the initial
    state inside the RK4 stability estimate (with a 10% margin).  Errors
    during stepping stop the run; the partial series is returned with
    ``error`` set.
    """
    z = initial_state(scenario, grid) if z0 is None else z0
    series = DiagnosticSeries()
    nsteps = int(round(scenario.t_end / scenario.dt))
    m = scenario.substeps
    if m is None:
        m = max(1, int(np.ceil(scenario.dt / (0.9 * max_stable_dt(z, grid)))))
    dt = scenario.dt / m
    forcing = None
    if scenario.control is not None:
        ctl = scenario.control

        def forcing(zs, ts):
            return ctl.tangent(zs, ts, grid)

    series.record(0.0, z, grid)
    series.substeps = m
    for n in range(nsteps):
        if dt > max_stable_dt(z, grid):
            series.cfl_warnings += 1
            if series.cfl_warnings == 1:
                warnings.warn(f"substep {dt:g} exceeds the RK4 stability estimate at step {n}",
                              CFLWarning, stacklevel=2)
        try:
            for i in range(m):
                z = step_rk4(z, grid, dt, t=n * scenario.dt + i * dt, forcing=forcing)
        except SimulationError as exc:
            series.error = f"step {n}: {exc}"
            break
        t = (n + 1) * scenario.dt
        if (n + 1) % scenario.cadence == 0 or n + 1 == nsteps:
            series.record(t, z, grid)
        if callback is not None:
            callback(n + 1, t, z)
    series.final_state = z
    return series
