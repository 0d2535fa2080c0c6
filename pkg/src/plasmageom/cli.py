"""Batch scenario runner: ``python -m plasmageom <scenario> [options]``.

Each run writes four artifacts into the output directory:

``config.json``      effective configuration (defaults filled in)
``diagnostics.csv``  time series, or one row per check for static scenarios
``report.json``      checks with pass/fail, results and any error
``summary.json``     scenario, status and exit code only

Exit status: 0 when every check passes, 1 when a check fails, 2 for a
configuration error and 3 for a runtime error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import traceback
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import checks as pc
from .checks import Check, at_least, below
from .config import RESOLUTIONS, SCENARIOS, ConfigError, RunConfig, parse_config
from .grid import PhaseGrid

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

# topic each scenario exercises, kept in every report for traceability
ANCHORS = {
    "landau": "nonlinear Vlasov-Poisson evolution: Landau damping of a Maxwellian",
    "two_stream": "nonlinear Vlasov-Poisson evolution: two-stream growth",
    "bracket_check": "Maxwell-Vlasov Lie-Poisson bracket algebra and Casimirs",
    "gnh_demo": "presymplectic constraint chains (free particle, electromagnetic modes)",
    "ec_stability": "energy-Casimir formal stability of homogeneous equilibria",
    "controlled_stabilization": "affine Hamiltonian control and Casimir shaping",
    "convergence": "discretization convergence of bracket identities and time stepping",
}


@dataclass
class Outcome:
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    series: Optional[object] = None
    error: Optional[str] = None


def _jsonable(obj):
    if isinstance(obj, Check):
        return _jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        # JSON has no inf/nan literals
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _grid(cfg: RunConfig) -> PhaseGrid:
    g = cfg.grid
    return PhaseGrid(g["config"], L=g["L"], Nx=g["Nx"], v_max=g["v_max"], Nv=g["Nv"], q=g["q"])


# -- scenarios ----------------------------------------------------------------

def _rate_scenario(cfg: RunConfig, out: Outcome, profile, window, fitter, sign):
    from .analysis import peak_rate, window_rate
    from .dispersion import dispersion_root_oracle
    from .dynamics import ScenarioParams, run

    p = cfg.params
    grid = _grid(cfg)
    k = 2 * np.pi * p["k_mode"] / grid.L
    series = run(ScenarioParams(dt=p["dt"], t_end=p["t_end"], profile=profile,
                                k_mode=p["k_mode"], amplitude=p["amplitude"]), grid)
    out.series = series
    out.results["substeps"] = series.substeps
    if series.error:
        out.error = series.error
        return
    root = dispersion_root_oracle(profile, k, grid.q)
    expected = 2 * root.imag
    t = series.column("t")
    energy = series.column(f"mode_energy_{p['k_mode']}") if p["k_mode"] <= 4 else None
    if energy is None:
        raise ValueError("k_mode above 4 has no recorded mode energy")
    fit = (peak_rate if fitter == "peak" else window_rate)(t, energy, *window)
    rel = abs(fit.rate - expected) / abs(expected)
    E = series.column("energy")
    out.results.update({
        "k": k, "oracle_omega": {"re": root.real, "im": root.imag},
        "oracle_energy_rate": expected, "fitted_energy_rate": fit.rate,
        "fit_points": fit.n_points, "fit_window": list(window),
        "relative_energy_drift": float(np.max(np.abs(E - E[0])) / abs(E[0])),
        "max_gauss_residual": float(series.column("gauss_residual").max()),
    })
    out.checks.append(below("energy_rate_relative_error", rel, p["tolerance"]))
    out.checks.append(Check("max_gauss_residual", out.results["max_gauss_residual"],
                            p["gauss_limit"], out.results["max_gauss_residual"] <= p["gauss_limit"],
                            "value <= threshold"))
    out.checks.append(Check("rate_sign", sign * fit.rate, 0.0, bool(sign * fit.rate > 0),
                            "value > threshold"))


def equilibrium_constancy(grid: PhaseGrid, profile, t_end: float, dt: float = 0.05) -> dict:
    """Largest relative change of each diagnostic along an unperturbed run."""
    from .dynamics import COLUMNS, ScenarioParams, run

    s = run(ScenarioParams(dt=dt, t_end=t_end, profile=profile, amplitude=0.0), grid)
    drift = {}
    for name in COLUMNS[1:]:
        c = s.column(name)
        drift[name] = float(np.max(np.abs(c - c[0])) / max(abs(c[0]), 1.0))
    return {"drift": drift, "error": s.error}


def scenario_landau(cfg: RunConfig, out: Outcome):
    from .profiles import maxwellian

    p = cfg.params
    profile = maxwellian(sigma=p["sigma"])
    _rate_scenario(cfg, out, profile, (p["fit_t_min"], p["t_end"]), "peak", -1)
    if out.error is None and p["equilibrium_t_end"] > 0:
        eq = equilibrium_constancy(_grid(cfg), profile, p["equilibrium_t_end"], p["dt"])
        out.results["equilibrium_drift"] = eq["drift"]
        worst = max(eq["drift"].values())
        out.checks.append(Check("equilibrium_max_relative_drift", worst,
                                p["equilibrium_tolerance"], worst <= p["equilibrium_tolerance"],
                                "value <= threshold"))


def scenario_two_stream(cfg: RunConfig, out: Outcome):
    from .profiles import two_stream

    p = cfg.params
    _rate_scenario(cfg, out, two_stream(u0=p["u0"], sigma=p["sigma"]),
                   tuple(p["fit_window"]), "window", +1)


def scenario_bracket_check(cfg: RunConfig, out: Outcome):
    alg = pc.bracket_algebra(cfg.seed, cfg.params["n_triples"])
    cas = pc.casimir_convergence(cfg.seed)
    out.checks += alg.pop("checks") + cas.pop("checks")
    out.results = {"algebra": alg, "casimir": cas}


def scenario_gnh_demo(cfg: RunConfig, out: Outcome):
    from .gnh import electromagnetic_modes, free_particle, gnh_iterate, solve_vector_field

    fp = free_particle()
    chain = gnh_iterate(fp)
    sol = solve_vector_field(fp, chain)
    out.results["free_particle"] = {"dims": chain.dim_sequence(), "stabilized_at": chain.stabilized_at,
                                    "kernel_dim": int(sol.kernel_basis.shape[1])}
    out.checks.append(Check("free_particle_dims", 0.0 if chain.dim_sequence() == [3, 2] else 1.0,
                            0.0, chain.dim_sequence() == [3, 2], "dims == [3, 2]"))
    out.checks.append(Check("free_particle_stabilized_at", float(chain.stabilized_at), 0.0,
                            chain.stabilized_at == 0, "value == threshold"))

    em = electromagnetic_modes()
    ch = gnh_iterate(em)
    C0, C1 = ch.subspaces[0], ch.subspaces[1]
    stages = []
    scalar_ok = gauss_c0 = gauss_c1 = True
    ks, rhos = (1.0, 2.0), (0.3, -0.5)
    for j, (k, rho) in enumerate(zip(ks, rhos), start=1):
        e = np.zeros(em.n)
        e[em.index(f"P_phi{j}")] = 1.0
        gauss = np.zeros(em.n)
        gauss[em.index(f"P_a{j}")] = k
        s = {"mode": j, "scalar_momentum_zero_on_C0": C0.satisfies(e),
             "gauss_on_C0": C0.satisfies(gauss, rho), "gauss_on_C1": C1.satisfies(gauss, rho)}
        stages.append(s)
        scalar_ok &= s["scalar_momentum_zero_on_C0"]
        gauss_c0 &= s["gauss_on_C0"]
        gauss_c1 &= s["gauss_on_C1"]
    out.results["electromagnetic"] = {"dims": ch.dim_sequence(), "stabilized_at": ch.stabilized_at,
                                      "stages": stages}
    out.checks.append(Check("em_primary_stage_scalar_momentum", float(scalar_ok), 1.0, bool(scalar_ok),
                            "holds on C0"))
    out.checks.append(Check("em_gauss_stage", float(gauss_c1 and not gauss_c0), 1.0,
                            bool(gauss_c1 and not gauss_c0), "absent on C0, holds on C1"))
    p = cfg.params
    ora = pc.gnh_oracle_agreement(cfg.seed, p["n_random"], p["max_dim"], p["angle_tolerance"])
    out.checks += ora.pop("checks")
    out.results["oracle"] = ora


def two_stream_interval_oracle(profile) -> float:
    """Positive velocity of the interior maximum of an even double-humped profile."""
    from scipy.optimize import brentq

    grid_v = np.linspace(1e-6, 10, 2001)
    d = profile.derivative(grid_v)
    i = int(np.nonzero(d < 0)[0][0])
    return float(brentq(profile.derivative, grid_v[i - 1], grid_v[i], xtol=1e-14))


def scenario_ec_stability(cfg: RunConfig, out: Outcome):
    from .energy_casimir import CasimirConstructionError, casimir_from_equilibrium, energy_casimir_report
    from .linear import Equilibrium
    from .profiles import gaussian_mixture, maxwellian, two_stream

    p = cfg.params
    grid = _grid(cfg)
    rep = energy_casimir_report(Equilibrium.from_profile(maxwellian(), grid), grid, p["modes"])
    out.results["maxwellian"] = rep.to_dict()
    out.checks.append(below("maxwellian_first_variation", rep.first_variation.total, 1e-8))
    out.checks.append(Check("maxwellian_min_eigenvalue", rep.min_eigenvalue, 0.0,
                            rep.formally_stable and rep.min_eigenvalue > 0,
                            "positive-definite and value > threshold"))

    ts = two_stream(u0=p["u0"])
    expected = two_stream_interval_oracle(ts)
    try:
        casimir_from_equilibrium(Equilibrium.from_profile(ts, grid), grid)
        interval, message = None, None
    except CasimirConstructionError as exc:
        interval, message = exc.interval, str(exc)
    ok = (interval is not None and "no single-valued Casimir" in message
          and abs(interval[1] - expected) <= grid.dv and abs(interval[0] + expected) <= grid.dv)
    out.results["two_stream"] = {"message": message, "interval": interval,
                                 "oracle_half_width": expected, "grid_spacing": grid.dv}
    out.checks.append(Check("two_stream_interval_offset",
                            float("inf") if interval is None else abs(interval[1] - expected),
                            grid.dv, bool(ok), "error raised and |a - a_oracle| <= dv"))

    rng = np.random.default_rng(cfg.seed)
    lo, hi = p["sigma_range"]
    draws = []
    for _ in range(p["n_random"]):
        n = int(rng.integers(1, 4))
        comps = [(float(rng.uniform(0.1, 1.0)), 0.0, float(rng.uniform(lo, hi))) for _ in range(n)]
        r = energy_casimir_report(Equilibrium.from_profile(gaussian_mixture(comps), grid), grid,
                                  p["random_modes"])
        draws.append({"components": comps, "verdict": r.verdict, "min_eigenvalue": r.min_eigenvalue})
    n_pd = sum(d["verdict"] == "positive-definite" for d in draws)
    out.results["random_monotone"] = draws
    out.checks.append(Check("random_monotone_positive_definite", float(n_pd), float(len(draws)),
                            n_pd == len(draws), "value == threshold"))


def power_balance(grid: PhaseGrid, channels, u, z0, dt: float, steps: int) -> list:
    """Relative mismatch between the energy change over each step and the
    Simpson-rule integral of the control power (evaluated with half steps)."""
    from .control import control_power, control_tangent
    from .dynamics import step_rk4
    from .state import total_energy

    def forcing(zz, tt):
        return control_tangent(zz, grid, channels, u, tt)

    errs = []
    z, t = z0, 0.0
    for _ in range(steps):
        zh = step_rk4(z, grid, dt / 2, t=t, forcing=forcing)
        z1 = step_rk4(zh, grid, dt / 2, t=t + dt / 2, forcing=forcing)
        dH = total_energy(z1, grid) - total_energy(z, grid)
        P = [control_power(s, grid, channels, u, tt) for s, tt in ((z, t), (zh, t + dt / 2), (z1, t + dt))]
        work = dt / 6 * (P[0] + 4 * P[1] + P[2])
        errs.append(abs(dH - work) / abs(work))
        z, t = z1, t + dt
    return errs


def scenario_controlled_stabilization(cfg: RunConfig, out: Outcome):
    from .control import (ControlChannel, ControlledFlow, ControlSchedule,
                          marginal_stabilization_case, stabilization_certificate)
    from .dynamics import ScenarioParams, run
    from .profiles import maxwellian, perturbed_state

    p = cfg.params
    grid = _grid(cfg)
    case = marginal_stabilization_case(grid, p["v_mark"], p["width"], p["gain"])
    cert = stabilization_certificate(case.equilibrium, [case.channel], case.target, grid, p["modes"])
    out.results["certificate"] = cert.to_dict()
    out.results["expected_u"] = case.expected_u
    out.checks.append(Check("verdict_flip", float(cert.flipped), 1.0, cert.flipped,
                            "indefinite before, positive-definite after"))

    J = np.sin(2 * np.pi * grid.x / grid.L)[None]
    channels = [ControlChannel.current(J, grid)]
    z0 = perturbed_state(maxwellian(), grid, 1, p["amplitude"])
    errs = power_balance(grid, channels, [p["u"]], z0, p["power_dt"], p["power_steps"])
    out.results["power_balance_relative_errors"] = errs
    out.checks.append(below("power_balance_max_relative_error", max(errs), p["power_tolerance"]))

    base = ScenarioParams(t_end=p["zero_control_t_end"])
    plain = run(base, grid).to_csv()
    zero = run(ScenarioParams(t_end=p["zero_control_t_end"],
                              control=ControlledFlow(tuple(channels), ControlSchedule.constant([0.0]))),
               grid).to_csv()
    out.results["zero_control_identical"] = plain == zero
    out.checks.append(Check("zero_control_identical", float(plain == zero), 1.0, plain == zero,
                            "byte-identical diagnostics"))


def rk4_temporal_order(seed: int, dts, t_end: float, grid: PhaseGrid) -> dict:
    """Observed RK4 order from errors against a run with a quarter of the smallest step."""
    from .analysis import observed_order
    from .dynamics import step_rk4
    from .state import tangent_norm

    z0 = pc.smooth_state(np.random.default_rng(seed))(grid)

    def integrate(dt):
        n = int(round(t_end / dt))
        z = z0
        for i in range(n):
            z = step_rk4(z, grid, t_end / n, t=i * t_end / n)
        return z

    ref = integrate(min(dts) / 4)
    errs = [tangent_norm(integrate(dt).difference(ref), grid) for dt in dts]
    return {"dt": list(dts), "errors": errs, "orders": [float(o) for o in observed_order(dts, errs)]}


def scenario_convergence(cfg: RunConfig, out: Outcome):
    p = cfg.params
    cas = pc.casimir_convergence(cfg.seed)
    jac = pc.jacobi_convergence(cfg.seed)
    rk = rk4_temporal_order(cfg.seed, p["dt"], p["t_end"], PhaseGrid(Nx=32, Nv=128))
    out.checks += cas.pop("checks") + jac.pop("checks")
    out.checks.append(at_least("rk4_min_order", min(rk["orders"]), p["min_time_order"]))
    out.results = {"casimir": cas, "jacobi": jac, "rk4": rk}


SCENARIO_FUNCS = {
    "landau": scenario_landau,
    "two_stream": scenario_two_stream,
    "bracket_check": scenario_bracket_check,
    "gnh_demo": scenario_gnh_demo,
    "ec_stability": scenario_ec_stability,
    "controlled_stabilization": scenario_controlled_stabilization,
    "convergence": scenario_convergence,
}


# -- artifacts ----------------------------------------------------------------

def _check_table(checks) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("check", "value", "threshold", "passed"))
    for c in checks:
        w.writerow((c.name, "%.17g" % c.value, "%.17g" % c.threshold, int(c.passed)))
    return buf.getvalue()


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def run_scenario(cfg: RunConfig, out_dir: str) -> int:
    """Run one scenario and write its artifacts; return the exit status."""
    os.makedirs(out_dir, exist_ok=True)
    _write(os.path.join(out_dir, "config.json"), _dump(cfg.to_dict()))
    out = Outcome()
    try:
        SCENARIO_FUNCS[cfg.scenario](cfg, out)
    except Exception as exc:  # reported, not raised: partial artifacts are still written
        out.error = f"{type(exc).__name__}: {exc}"
        out.results["traceback_tail"] = traceback.format_exception_only(type(exc), exc)[-1].strip()
    if out.error is not None:
        status, code = "error", EXIT_RUNTIME
    elif all(c.passed for c in out.checks):
        status, code = "pass", EXIT_PASS
    else:
        status, code = "fail", EXIT_FAIL
    table = out.series.to_csv() if out.series is not None else _check_table(out.checks)
    _write(os.path.join(out_dir, "diagnostics.csv"), table)
    report = {"scenario": cfg.scenario, "anchor": ANCHORS[cfg.scenario], "seed": cfg.seed,
              "status": status, "checks": out.checks, "results": out.results, "error": out.error}
    _write(os.path.join(out_dir, "report.json"), _dump(report))
    summary = {"scenario": cfg.scenario, "status": status, "exit_code": code,
               "n_checks": len(out.checks), "n_passed": sum(c.passed for c in out.checks)}
    _write(os.path.join(out_dir, "summary.json"), _dump(summary))
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plasmageom", description="Run one plasmageom scenario.")
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", metavar="PATH", help="TOML configuration file")
    ap.add_argument("--out", metavar="DIR", help="output directory (default: runs/<scenario>)")
    ap.add_argument("--seed", type=int, help="seed for randomized checks")
    ap.add_argument("--resolution", choices=tuple(RESOLUTIONS), help="override grid Nx and Nv")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    text = ""
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        cfg = parse_config(text, scenario=args.scenario, seed=args.seed,
                           resolution=args.resolution, output=args.out)
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = cfg.output or os.path.join("runs", cfg.scenario)
    code = run_scenario(cfg, out_dir)
    print(f"{cfg.scenario}: {['pass', 'fail', 'config error', 'error'][code]} ({out_dir})")
    return code
