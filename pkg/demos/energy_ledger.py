"""Discrete energy balance of the coupled march.

The backward Euler step dissipates a little more than the continuous balance
predicts. That surplus shrinks linearly with the time step, so halving dt
should roughly halve the gap at any fixed time. The ratio column compares
matching times.
"""

from hydrostat import PicardConfig, ViscosityLaw, make_grid, march
from hydrostat.presets import preset_catalog

g = make_grid(1.0, 32, 32)
rho0 = preset_catalog("stratified").density(g)
u0 = preset_catalog("shear").velocity(g)
law = ViscosityLaw("affine", (0.5, 0.5), 0.5)

previous = None
for dt in (0.005, 0.0025, 0.00125):
    rec = march(rho0, u0, 0.0, PicardConfig(T=0.25, dt=dt, law=law), diagnostics=False)
    gap = {round(r.t, 12): r.energy_gap for r in rec.reports}
    line = f"dt={dt:<8} largest gap {max(gap.values()):.3e}"
    if previous is not None:
        shared = [t for t in gap if t in previous]
        line += f"   ratio to coarser dt {min(previous[t] / gap[t] for t in shared):.2f}"
    print(line)
    previous = gap
