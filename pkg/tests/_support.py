"""Random families and points shared by the test modules."""

import numpy as np

from levelcurv.geom import Family
from levelcurv.poly import Polynomial
from levelcurv.sample import newton_project_batch
from levelcurv.streams import stream


def monomials(nvars, max_degree):
    out = [()]
    for _ in range(nvars + 1):
        out = [m + (e,) for m in out for e in range(max_degree + 1)]
    return [m for m in out if sum(m) <= max_degree]


def random_family(seed, nvars, max_degree=3, density=0.6):
    """Random F(x, t) of degree <= max_degree that really depends on t and x."""
    rng = stream(seed, nvars, max_degree)
    terms = []
    for m in monomials(nvars, max_degree):
        if rng.random() < density:
            terms.append((m, float(np.round(rng.standard_normal(), 3))))
    # keep t and every x variable present at first order
    terms.append(((0,) * nvars + (1,), -1.0))
    for j in range(nvars):
        e = [0] * (nvars + 1)
        e[j] = 1
        terms.append((tuple(e), 0.5))
    return Family(Polynomial(nvars, terms), name=f"random{seed}")


def random_quadratic(k):
    rng = stream(2024, k)
    terms = []
    for e in [(2, 0, 0), (0, 2, 0), (1, 1, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, 0),
              (1, 0, 1), (0, 1, 1), (0, 0, 2)]:
        terms.append((e, float(np.round(rng.standard_normal(), 3))))
    c = float(np.round(rng.uniform(-1, 1), 3))
    return Family(Polynomial(2, terms), name=f"quadratic{k}"), c


def points_on(fam, count, seed, box=2.0, min_dx=1e-3):
    """``count`` Newton-projected points of M with |dxF| >= min_dx."""
    X, T = [], []
    for k in range(1000):
        rng = stream(seed, 99, k)
        t = float(rng.uniform(-1, 1))
        P, ok = newton_project_batch(fam, rng.uniform(-box, box, (count, fam.n)), t)
        P = P[ok & (np.linalg.norm(P, axis=1) < 10 * box)]
        if len(P):
            P = P[np.linalg.norm(fam.gradient(P, t)[:, : fam.n], axis=1) >= min_dx]
        X.extend(P)
        T.extend([t] * len(P))
        if len(T) >= count:
            break
    return np.array(X[:count]), np.array(T[:count])
