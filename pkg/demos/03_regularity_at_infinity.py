"""Malgrange profiles and horizontal sphericalness at a good and a bad value."""

import numpy as np

from levelcurv.asym import limit_normal_cloud, malgrange_profile, sphericalness_report
from levelcurv.families import builtin

fam = builtin("broughton")
for c in (0.0, 1.0):
    rep = malgrange_profile(fam, c)
    print(f"c={c}: mu0(R) =", np.array2string(np.array(rep.mu0), precision=4),
          f"slope {rep.fitted_slope:+.3f} -> {rep.classification}")
    sph = sphericalness_report(fam, c)
    print(f"      e_c ~ {sph.ec_estimate:.3f}, defect {sph.defect:.3f} -> {sph.verdict}")

cloud = limit_normal_cloud(fam, 0.0, r_min=100.0)
dots = np.abs(np.einsum("ij,ij->i", cloud.u, cloud.v))
k = int(np.argmax(dots))
print(f"cloud at 0: {len(cloud)} pairs, worst |<u, N>| = {dots[k]:.4f} at u = {np.round(cloud.u[k], 4)}")

for name in ("linear", "sphere2"):
    rep = malgrange_profile(builtin(name), 1.0)
    print(f"{name}: {rep.classification}")
