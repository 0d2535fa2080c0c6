"""Constraint chains for two small presymplectic systems.

A free particle in position/velocity/momentum form loses one dimension to
the momentum definition.  Two longitudinal field modes with static charges
first lose their scalar-potential momenta, then pick up Gauss's law.

    python demos/constraint_chains.py
"""
import numpy as np

from plasmageom.gnh import electromagnetic_modes, free_particle, gnh_iterate, solve_vector_field

fp = free_particle()
chain = gnh_iterate(fp)
sol = solve_vector_field(fp, chain)
print("free particle: dims", chain.dim_sequence(), "stabilized at step", chain.stabilized_at)
z = np.array([0.0, 1.5, 1.5])
print("  vector field at (q, v, p) = (0, 1.5, 1.5):", np.round(sol(z), 12))

em = electromagnetic_modes()
chain = gnh_iterate(em)
sol = solve_vector_field(em, chain)
print("field modes: dims", chain.dim_sequence())
for j, (k, rho) in enumerate(((1.0, 0.3), (2.0, -0.5)), start=1):
    gauss = np.zeros(em.n)
    gauss[em.index(f"P_a{j}")] = k
    on = [C.satisfies(gauss, rho) for C in chain.subspaces]
    print(f"  mode {j}: k P_a = rho holds on stages {on}")
print("  gauge directions left free:", sol.kernel_basis.shape[1])
