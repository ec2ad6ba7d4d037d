"""Transport on the six-site complete network.

Inject one excitation at site 1, absorb it through site 6, and watch most of
it never arrive: the complete graph is highly symmetric and has many
eigenstates with no amplitude on the sink site.
"""

import numpy as np

from eetnet import build_hamiltonian, build_model, complete_network, integrate
from eetnet import IntegratorConfig, dark_projector, predicted_efficiency

spec = complete_network(6)          # unit hopping everywhere, site 1 -> site 6
model = build_model(spec)           # sink rate 0.5, no noise
traj = integrate(model, cfg=IntegratorConfig(t_max=100.0, n_samples=11))

print("  t     sink   site1   site2")
for t, sink, s1, s2 in zip(traj.times, traj.sink, traj.site(0), traj.site(1)):
    print(f"{t:5.0f}  {sink:.4f}  {s1:.4f}  {s2:.4f}")

# The plateau is predicted without any time evolution.
h = build_hamiltonian(spec)
p = dark_projector(h, sink=5)
print("dark subspace dimension:", round(np.trace(p).real))
print("predicted efficiency   :", predicted_efficiency(h, 0, 5))
print("trapped amplitudes     :", np.round(np.abs(p[:, 0]) ** 2, 4))
