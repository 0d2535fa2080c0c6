"""Energy-Casimir test on homogeneous equilibria.

A Maxwellian gets a positive-definite second variation on every mode.  A
double-humped profile cannot be written as a function of kinetic energy,
and the Casimir construction reports where it breaks.

    python demos/formal_stability.py
"""
from plasmageom.energy_casimir import CasimirConstructionError, casimir_from_equilibrium, energy_casimir_report
from plasmageom.grid import PhaseGrid
from plasmageom.linear import Equilibrium
from plasmageom.profiles import gaussian_mixture, maxwellian, two_stream

grid = PhaseGrid()
for name, prof in (("maxwellian", maxwellian()),
                   ("two cold + one warm", gaussian_mixture([(0.6, 0.0, 0.9), (0.4, 0.0, 1.4)]))):
    rep = energy_casimir_report(Equilibrium.from_profile(prof, grid), grid, modes=(1, 2, 3))
    print(f"{name:>20}: {rep.verdict}, min eigenvalue {rep.min_eigenvalue:.4f}, "
          f"first variation {rep.first_variation.total:.1e}")

try:
    casimir_from_equilibrium(Equilibrium.from_profile(two_stream(), grid), grid)
except CasimirConstructionError as exc:
    print(f"{'two stream':>20}: {exc}")
