"""Two-level continuation towards vacuum and vanishing diffusion.

First lambda is halved at fixed mollification: successive solutions move
closer together. Then the mollification width shrinks at fixed lambda:
the energy functional Phi stays bounded as the band gets sharper.
"""

from hydrostat import PicardConfig, ViscosityLaw, make_grid, two_level_continuation
from hydrostat.presets import preset_catalog

g = make_grid(1.0, 32, 32)
raw = preset_catalog("vacuum-band").density(g)
u0 = preset_catalog("shear").velocity(g)
cfg = PicardConfig(T=0.1, dt=0.005, tol=1e-8, max_iters=20, law=ViscosityLaw("affine", (0.5, 0.5), 0.5))

print("lambda sweep at delta=0.2")
for lv in two_level_continuation(raw, u0, 0.0, cfg, [0.2], [1e-2, 5e-3, 2.5e-3]):
    print(f"  lambda={lv.lam:<7} iterates={lv.iterations}  diff to previous={lv.diff_to_previous:.3e}")

print("delta sweep at lambda=1e-3")
for lv in two_level_continuation(raw, u0, 0.0, cfg, [0.1, 0.05, 0.025], [1e-3]):
    print(f"  delta={lv.delta:<6} iterates={lv.iterations}  max Phi={max(lv.phi):.4f}")
