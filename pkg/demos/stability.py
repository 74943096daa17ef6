"""Sensitivity of the coupled march to a small velocity perturbation.

Identical data give an identically zero difference. A perturbation of size
eps grows or decays at an exponential rate that should not depend on eps
once eps is small.
"""

from hydrostat import PicardConfig, ViscosityLaw, make_grid, stability_experiment
from hydrostat.norms import _l2
from hydrostat.presets import preset_catalog

g = make_grid(1.0, 32, 32)
rho0 = preset_catalog("stratified").density(g)
u0 = preset_catalog("shear").velocity(g)
cfg = PicardConfig(T=0.25, dt=0.005, law=ViscosityLaw("affine", (0.5, 0.5), 0.5))

same = stability_experiment(rho0, u0, rho0, u0, 0.0, cfg)
print(f"identical data: max difference {max(same.E):.1e}")
direction = u0 * (1.0 / _l2(u0.values, g))
for eps in (1e-5, 1e-6, 1e-7):
    rep = stability_experiment(rho0, u0, rho0, u0 + direction * eps, 0.0, cfg)
    print(f"eps={eps:.0e}: fitted rate {rep.rate:.5e}")
