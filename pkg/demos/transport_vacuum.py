"""Density transport through a near-vacuum band.

A mollified band where the density dips to 0.1 is carried by a shear flow with
weak diffusion. The upwind scheme keeps every value inside the initial range,
so the printed min and max never leave it.
"""

from hydrostat import TransportParams, make_grid, mollify, transport_solve
from hydrostat.presets import preset_catalog, transport_velocity

g = make_grid(1.0, 64, 64)
rho0 = mollify(preset_catalog("vacuum-band").density(g), 0.1)
u, w = transport_velocity("shear", g, 0.5)
traj = transport_solve(rho0, lambda n, t: (u, w), TransportParams(1e-3, 0.004), 1.0)

print(f"initial range [{traj.mins[0]:.6f}, {traj.maxs[0]:.6f}]")
for i in range(0, len(traj.times), 50):
    print(f"t={traj.times[i]:.3f}  min={traj.mins[i]:.6f}  max={traj.maxs[i]:.6f}")
print(f"overall       min={min(traj.mins):.6f}  max={max(traj.maxs):.6f}")
