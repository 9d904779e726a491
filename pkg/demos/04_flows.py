"""Move points from level to level along chi and along the sphere-tangent field."""

import math

import numpy as np

from levelcurv.families import builtin
from levelcurv.flow import NearCritical, gronwall_check, min_h_along, transport, xi_transport
from levelcurv.poly import Point

circle = builtin("sphere2")
traj = transport(circle, Point((1.0, 0.0), 1.0), 0.21)
print("endpoint", traj.end.x, "level", traj.end.t, "expected", (math.sqrt(1.21), 0.0))
A = min_h_along(circle, traj)
print("Gronwall with A =", round(A, 6), "->", gronwall_check(traj, A))

try:
    transport(circle, Point((0.1, 0.0), 0.01), -0.02)
except NearCritical as exc:
    print("stopped:", exc, "after", len(exc.trajectory), "steps")

fam = builtin("broughton")
x2 = 32.0
x1 = (-1 + math.sqrt(1 + 2 * x2)) / (2 * x2)
xi = xi_transport(fam, Point((x1, x2), 0.5), 0.4, segments=8)
for s, p, r, lv in xi.steps:
    print(f"s={s:.2f}  x=({p.x[0]:+.5f}, {p.x[1]:+.5f})  |x|={r:.9f}  t={lv:.3f}")
print("radius spread", np.ptp(xi.radius))
