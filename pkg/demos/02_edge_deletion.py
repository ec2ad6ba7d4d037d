"""Removing one link can make transport perfect.

Deleting the direct link between injection and sink breaks the symmetry that
hid site 1 from the sink. Every other single deletion leaves a trap.
"""

from eetnet.experiments import edge_deletion_scan

scan = edge_deletion_scan(6)
for row in sorted(scan.rows, key=lambda r: -r["eta_inf"]):
    print(f"delete {row['deleted']}: eta = {row['eta_inf']:.4f} "
          f"(predicted {row['predicted_eta']:.4f}, reachable dark states {row['accessible_dark_dim']})")

# Where does the leftover population sit? Compare two localization maps.
for key in ("1-6", "2-3"):
    rep = scan.extras["reports"][key]
    print(f"\ndeleted {key}: network population {rep.network_population:.3f}, "
          f"entries above 1e-3 off the sink: {rep.offsink_count}")
