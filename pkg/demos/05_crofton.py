"""Average Euler characteristics of sections by lines and planes through 0."""

import numpy as np

from levelcurv.crofton import average_euler
from levelcurv.poly import parse

tg = np.array([0.5, 1.0, 2.0])
print("disk levels   ", average_euler(parse("x1^2 + x2^2", 2), tg, draws=2000, seed=0).mean)
print("sphere levels ", average_euler(parse("x1^2 + x2^2 + x3^2", 3), tg, draws=50,
                                      box_radius=3.0, seed=0).mean)

# on lines (n even) only the sign of the leading form matters, so the
# average is constant in t.  Planes (n odd) cut the hyperboloids in
# hyperbolas (two arcs, chi 2) or ellipses (chi 0) or nothing; the mix is
# the same on both sides of the cone at t = 0.  Hyperbola vertices that
# fall outside the box are missed, which is the small drift at t = -1.
f = parse("x1^2 + x2^2 - x3^2", 3)
grid = np.array([-1.0, -0.5, -0.25, 0.25, 0.5, 1.0])
avg = average_euler(f, grid, draws=100, box_radius=5.0, seed=0)
print(avg.to_csv())
