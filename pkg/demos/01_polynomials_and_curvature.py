"""Parse a family, look at the implicit geometry at a point, and total the
curvature of a few levels."""

import math

import numpy as np

from levelcurv import Family, Point, surface_point
from levelcurv.curv import degree_crosscheck, total_curvature_at
from levelcurv.poly import grad, parse, to_text

F = parse("x1 + x1^2*x2 - t", 2)
print("F          =", to_text(F))
print("grad F     =", [to_text(g) for g in grad(F)])

fam = Family(F, name="broughton")
sp = surface_point(fam, Point((1.0, 0.0), 1.0))
print("nu_M       =", np.round(sp.nu, 6))
print("grad t_M   =", np.round(sp.grad_tM, 6), "norm", round(sp.grad_tM_norm, 6))
print("N, kappa   =", sp.N, sp.kappa)

# a circle has total turning 2 pi at every positive level
circ = Family.from_text("x1^2 + x2^2 - t", 2)
for c in (0.25, 1.0, 4.0):
    K, A, err = total_curvature_at(circ, c, ball_radius=3.0)
    print(f"circle  c={c:<5} K={K:.9f} |K|={A:.9f}  (2 pi = {2 * math.pi:.9f})")

# Broughton: two independent estimates of the same integral
for c in (0.5, 1.0, 2.0):
    K, A, err = total_curvature_at(fam, c, ball_radius=50.0)
    Kd, Ad = degree_crosscheck(fam, c, ball_radius=50.0)
    print(f"broughton c={c}: turning |K|={A:.4f} +- {err:.1e}, Gauss-map count |K|={Ad:.4f}")
