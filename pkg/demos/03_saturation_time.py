"""How fast does the sink fill up as the direct link is tuned?

At J_16 = 1 the network is the symmetric complete graph and the sink never
reaches 99 %. Detuning the link removes the trap; a coarse scan followed by a
fine one locates the fastest coupling.
"""

import numpy as np

from eetnet.experiments import saturation_sweep

coarse = saturation_sweep(np.arange(0.5, 6.01, 0.5))
for row in coarse.rows:
    tau = f"{row['tau_s']:7.2f}" if row["tau_reached"] else "  never"
    print(f"J16 = {row['hopping']:.1f}  tau_s = {tau}")

best = coarse.aggregate[0]["argmin_hopping"]
fine = saturation_sweep(np.round(np.arange(best - 0.5, best + 0.51, 0.02), 10))
agg = fine.aggregate[0]
print(f"\nfastest at J16 = {agg['argmin_hopping']:.2f} with tau_s = {agg['min_tau_s']:.2f}")
