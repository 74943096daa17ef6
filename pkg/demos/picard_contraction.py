"""Successive approximation on the vacuum-band problem.

Each iterate solves a linear momentum problem with the density transported by
the previous velocity. Prints the iterate differences, their ratios and the
geometric-fit verdict. The ratios shrink fast but alternate in size rather
than falling monotonically.
"""

from hydrostat import PicardConfig, ViscosityLaw, contraction_report, make_grid, mollify, picard_iterate
from hydrostat.presets import preset_catalog

g = make_grid(1.0, 32, 32)
rho0 = mollify(preset_catalog("vacuum-band").density(g), 0.2)
u0 = preset_catalog("shear").velocity(g)
cfg = PicardConfig(T=0.1, dt=0.005, tol=1e-8, max_iters=20, lam=1e-3, delta=0.2,
                   law=ViscosityLaw("affine", (0.5, 0.5), 0.5))

res = picard_iterate(rho0, u0, 0.0, cfg)
print(f"converged={res.converged} after {res.iterations} iterates")
for d in res.diagnostics:
    print(f"k={d.k}  eta_L2={d.eta_l2:.3e}  ratio={d.ratio:.4f}")
rep = contraction_report(res.diagnostics)
print(f"fitted r={rep.r:.4f}  verdict: {rep.verdict}")
