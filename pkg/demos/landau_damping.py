"""Landau damping of a small density wave on a Maxwellian.

Runs the nonlinear solver, fits the decay of the first Fourier mode of the
field energy and sets it beside the least-damped dispersion root.

    python demos/landau_damping.py
"""
import numpy as np

from plasmageom.analysis import peak_rate
from plasmageom.dispersion import dispersion_root_oracle
from plasmageom.dynamics import ScenarioParams, run
from plasmageom.grid import PhaseGrid
from plasmageom.profiles import maxwellian

grid = PhaseGrid()                       # L = 4 pi, so mode 1 has k = 0.5
k = 2 * np.pi / grid.L
series = run(ScenarioParams(dt=0.05, t_end=30.0, profile=maxwellian(), amplitude=1e-3), grid)

t = series.column("t")
energy = series.column("mode_energy_1")
fit = peak_rate(t, energy)
root = dispersion_root_oracle(maxwellian(), k)

print(f"k = {k:.3f}, dispersion root omega = {root.real:.6f} {root.imag:+.6f}i")
print(f"field-energy rate: fitted {fit.rate:.5f} from {fit.n_points} peaks, expected {2 * root.imag:.5f}")
print(f"relative error {abs(fit.rate - 2 * root.imag) / abs(2 * root.imag):.2%}")
E = series.column("energy")
print(f"total energy drift {np.max(np.abs(E - E[0])) / E[0]:.1e}, "
      f"max Gauss residual {series.column('gauss_residual').max():.1e}")
for ti, ei in list(zip(t, energy))[::60]:
    print(f"  t = {ti:5.1f}   mode-1 field energy {ei:.3e}")
