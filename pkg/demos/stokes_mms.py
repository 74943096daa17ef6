"""Manufactured solutions for the steady hydrostatic Stokes problem.

Runs both built-in cases on three doubled grids and prints the error table
with the observed orders. Expect slopes close to 2.
"""

from hydrostat import convergence_study, make_grid

for case in ("constant-mu", "variable-mu"):
    rep = convergence_study(case, [make_grid(1.0, n, n) for n in (16, 32, 64)])
    print(f"\n{case}")
    print(f"{'h':>10} {'|u-u*|_L2':>12} {'|u-u*|_H1':>12} {'|P-P*|_L2':>12}")
    for h, a, b, c in zip(rep.h, rep.u_l2, rep.u_h1, rep.p_l2):
        print(f"{h:10.5f} {a:12.3e} {b:12.3e} {c:12.3e}")
    print(f"orders: u L2 {rep.order_u_l2:.3f}, u H1 {rep.order_u_h1:.3f}, P {rep.order_p_l2:.3f}")
