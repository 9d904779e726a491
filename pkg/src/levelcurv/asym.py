"""Critical values of t_M and regularity of the pencil at infinity.

The basic far-field quantity is h(x, t) = |x| * |grad t_M| = |x| |dxF| / |grad F|
on M.  Malgrange's condition at c asks h >= A > 0 for all far points with
t near c; an asymptotic critical value is a c where h -> 0 along some
sequence going to infinity.

Far points on a sphere |x| = R are found exactly on great circles: with
x = R (a cos th + b sin th) and z = exp(i th), z^d F(x(z), t) is a polynomial
in z whose unimodular roots are the intersection points.  They seed a
Levenberg-Marquardt descent of h over the sphere, t following the branch
F(x, t) = 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .geom import Family, householder_complement
from .streams import pmap, stream

MALGRANGE_SLOPE = -0.05
ACV_SLOPE = -0.1
FIT_MAX_RESIDUAL = 0.25
EC_MARGIN = 0.05
DEFECT_THRESHOLD = 0.1
K0_F_TOL = 1e-9
K0_DX_TOL = 1e-7


# ---------------------------------------------------------------------------
# K0: critical values of t_M


def find_K0(fam: Family, t_bounds, box_radius: float = 10.0, per_axis: int = 7,
            t_points: int = 5, max_iter: int = 60) -> list[float]:
    """Critical values of t_M in ``t_bounds`` (Gauss-Newton on F = dxF = 0).

    Seeds form a grid of ``per_axis``^n x ``t_points`` in the box; roots
    missed by every seed are missed (no completeness guarantee).
    """
    lo, hi = map(float, t_bounds)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ValueError("t_bounds must be a finite interval")
    n = fam.n
    axes = [np.linspace(-box_radius, box_radius, per_axis)] * n
    axes.append(np.linspace(lo, hi, t_points) if t_points > 1 else np.array([lo]))
    P = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n + 1)
    # nudge seeds off symmetric positions where the Jacobian is often singular
    P[:, :n] += 1e-3 * box_radius * np.sin(np.arange(len(P)) * 12.9898)[:, None] * \
        np.linspace(1.0, 0.5, n)[None, :]

    def residual(P):
        G = fam.gradient(P[:, :n], P[:, n])
        return np.concatenate([fam.value(P[:, :n], P[:, n])[:, None], G[:, :n]], axis=1), G

    for _ in range(max_iter):
        r, G = residual(P)
        H = fam.hess(P[:, :n], P[:, n])
        J = np.concatenate([G[:, None, :], H[:, :n, :]], axis=1)   # (m, n+1, n+1)
        step = np.einsum("mij,mj->mi", np.linalg.pinv(J, rcond=1e-12), r)
        P = P - step
        P[~np.isfinite(P).all(axis=1)] = np.nan
    r, _ = residual(P)
    good = (np.isfinite(P).all(axis=1) & (np.abs(r[:, 0]) <= K0_F_TOL)
            & (np.linalg.norm(r[:, 1:], axis=1) <= K0_DX_TOL)
            & (P[:, n] >= lo - 1e-12) & (P[:, n] <= hi + 1e-12))
    ts = np.sort(P[good, n])
    out: list[float] = []
    for t in ts:
        if not out or abs(t - out[-1]) > 1e-6 * (1 + abs(t)):
            out.append(float(t))
    return out


# ---------------------------------------------------------------------------
# exact great-circle slices


def _laurent_tables(fam: Family, alpha: np.ndarray):
    """Coefficients of z^D F(x(z), t) grouped by powers of t.

    x_j(z) = alpha_j z + conj(alpha_j) / z.  Returns ``(tables, D)`` where
    ``tables[k]`` holds the z-coefficients (index = power) of the t^k part.
    """
    n = fam.n
    D = max((sum(e[:n]) for e, _ in fam.F.terms), default=0)
    powers = []
    for j in range(n):
        base = np.array([np.conj(alpha[j]), 0.0, alpha[j]], dtype=complex)
        pw = [np.array([1.0 + 0j])]
        for _ in range(D):
            pw.append(np.convolve(pw[-1], base))
        powers.append(pw)
    kmax = max((e[n] for e, _ in fam.F.terms), default=0)
    tables = np.zeros((kmax + 1, 2 * D + 1), dtype=complex)
    for e, coef in fam.F.terms:
        p = np.array([coef + 0j])
        for j in range(n):
            if e[j]:
                p = np.convolve(p, powers[j][e[j]])
        d = sum(e[:n])
        tables[e[n], D - d:D + d + 1] += p
    return tables, D


def circle_slice(fam: Family, R: float, tvals, a: np.ndarray, b: np.ndarray):
    """Points of M on the circle x = R (a cos th + b sin th) at each t in ``tvals``.

    Returns arrays ``(X, T)``.  Roots are polished by Newton in th.
    """
    a, b = np.asarray(a, float), np.asarray(b, float)
    alpha = 0.5 * R * (a - 1j * b)
    tables, D = _laurent_tables(fam, alpha)
    fx = [g.compiled for g in fam.gradF[: fam.n]]
    Xs, Ts = [], []
    for t in tvals:
        coeffs = np.array([np.polynomial.polynomial.polyval(t, tables[:, i])
                           for i in range(tables.shape[1])])
        scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
        if scale == 0.0:
            continue
        c = coeffs.copy()
        c[np.abs(c) < 1e-14 * scale] = 0.0
        nz = np.nonzero(c)[0]
        if nz.size < 2:
            continue
        c = c[nz[0]:nz[-1] + 1]
        roots = np.roots(c[::-1])
        roots = roots[np.abs(np.abs(roots) - 1.0) < 1e-3]
        if roots.size == 0:
            continue
        th = np.angle(roots)
        for _ in range(30):
            X = R * (np.cos(th)[:, None] * a + np.sin(th)[:, None] * b)
            cols = [X[:, j] for j in range(fam.n)] + [np.full(len(th), t)]
            Fv = np.asarray(fam.F.compiled(*cols), dtype=float) * np.ones(len(th))
            G = np.stack([np.asarray(g(*cols), float) * np.ones(len(th)) for g in fx], axis=1)
            dX = R * (-np.sin(th)[:, None] * a + np.cos(th)[:, None] * b)
            d = np.einsum("ij,ij->i", G, dX)
            step = np.where(np.abs(d) > 0, Fv / np.where(d == 0, 1.0, d), 0.0)
            th = th - np.clip(step, -0.1, 0.1)
            if np.all(np.abs(step) < 1e-15):
                break
        X = R * (np.cos(th)[:, None] * a + np.sin(th)[:, None] * b)
        Fv = np.atleast_1d(fam.value(X, t))
        mag = sum(abs(cf) for _, cf in fam.F.terms) * (R + abs(t) + 1) ** fam.F.degree
        ok = np.abs(Fv) <= max(1e-9, 1e-13 * mag)
        th = np.sort(np.mod(th[ok], 2 * np.pi))
        if th.size > 1:
            keep = np.concatenate([[True], np.diff(th) > 1e-13])
            th = th[keep]
        X = R * (np.cos(th)[:, None] * a + np.sin(th)[:, None] * b)
        Xs.append(X)
        Ts.append(np.full(len(th), float(t)))
    if not Xs:
        return np.zeros((0, fam.n)), np.zeros(0)
    return np.concatenate(Xs), np.concatenate(Ts)


def slab_tvalues(c: float, epsilon: float, per_side: int = 16) -> np.ndarray:
    """c, plus per_side geometrically spaced offsets on each side out to epsilon."""
    off = epsilon * np.geomspace(1e-3, 1.0, per_side)
    return np.concatenate([c - off[::-1], [c], c + off])


def _circles(n: int, count: int, seed: int, ids):
    if n == 2:
        return [(np.array([1.0, 0.0]), np.array([0.0, 1.0]))]
    out = []
    for j in range(count):
        g = stream(seed, *ids, j).standard_normal((2, n))
        q, _ = np.linalg.qr(g.T)
        out.append((q[:, 0], q[:, 1]))
    return out


def h_values(fam: Family, X, T) -> np.ndarray:
    G = fam.gradient(X, T)
    n = fam.n
    return np.linalg.norm(X, axis=1) * np.linalg.norm(G[:, :n], axis=1) / np.linalg.norm(G, axis=1)


def far_samples(fam: Family, R: float, c: float, epsilon: float, budget: int, seed: int,
                ids=()) -> tuple[np.ndarray, np.ndarray]:
    """Points of M with |x| = R and |t - c| <= epsilon from great-circle slices."""
    tv = slab_tvalues(c, epsilon)
    ncirc = 1 if fam.n == 2 else max(4, budget // len(tv))
    Xs, Ts = [], []
    for a, b in _circles(fam.n, ncirc, seed, ids):
        X, T = circle_slice(fam, R, tv, a, b)
        Xs.append(X)
        Ts.append(T)
    return np.concatenate(Xs), np.concatenate(Ts)


# ---------------------------------------------------------------------------
# local minimization of h on the sphere


def _solve_t(fam: Family, X, T, iters: int = 20):
    ok = np.ones(len(T), dtype=bool)
    for _ in range(iters):
        Fv = fam.value(X, T)
        Ft = fam.gradient(X, T)[:, -1]
        bad = np.abs(Ft) < 1e-300
        step = np.where(bad, 0.0, Fv / np.where(bad, 1.0, Ft))
        T = T - step
        ok &= ~bad
        if np.all(np.abs(step) <= 1e-15 * (1 + np.abs(T))):
            break
    Fv = fam.value(X, T)
    mag = 1e-13 * sum(abs(cf) for _, cf in fam.F.terms) * \
        (np.linalg.norm(X, axis=1) + np.abs(T) + 1) ** fam.F.degree
    ok &= np.isfinite(T) & (np.abs(Fv) <= np.maximum(1e-9, mag))
    return T, ok


def _q_and_jac(fam: Family, X, T):
    """r = dxF / dtF and its derivative along the sphere with t = t(x)."""
    n = fam.n
    G = fam.gradient(X, T)
    H = fam.hess(X, T)
    g, Ft = G[:, :n], G[:, n]
    tau = -g / Ft[:, None]                       # dt/dx on M
    Dg = H[:, :n, :n] + H[:, :n, n][:, :, None] * tau[:, None, :]
    DFt = H[:, n, :n] + H[:, n, n][:, None] * tau
    r = g / Ft[:, None]
    Dr = Dg / Ft[:, None, None] - g[:, :, None] * DFt[:, None, :] / (Ft**2)[:, None, None]
    return r, Dr


def minimize_h(fam: Family, X0, T0, R: float, c: float, epsilon: float, max_iter: int = 80):
    """Levenberg-Marquardt on q = |dxF / dtF|^2 over {|x| = R} with t = t(x).

    h = R sqrt(q / (1 + q)) is increasing in q.  Steps leaving the slab
    |t - c| <= epsilon are rejected.  Returns ``(X, T, h)``.
    """
    X, T = np.array(X0, float), np.array(T0, float)
    m = len(T)
    if m == 0:
        return X, T, np.zeros(0)
    lam = np.full(m, 1e-3)
    active = np.ones(m, dtype=bool)
    with np.errstate(all="ignore"):
        r, Dr = _q_and_jac(fam, X, T)
        q = np.einsum("ij,ij->i", r, r)
        for _ in range(max_iter):
            idx = np.nonzero(active & np.isfinite(q))[0]
            if idx.size == 0:
                break
            u = X[idx] / R
            B = householder_complement(u)                      # (k, n, n-1)
            J = np.einsum("kij,kja->kia", Dr[idx], B) * R       # per unit tangent angle
            JtJ = np.einsum("kia,kib->kab", J, J)
            Jtr = np.einsum("kia,ki->ka", J, r[idx])
            dmp = lam[idx, None, None] * (np.eye(fam.n - 1) * (1.0 + np.einsum("kaa->ka", JtJ)[:, :, None]))
            delta = -np.linalg.solve(JtJ + dmp, Jtr[..., None])[..., 0]
            step = np.clip(np.linalg.norm(delta, axis=1), 0, 0.2)
            scale = np.where(np.linalg.norm(delta, axis=1) > 0.2,
                             0.2 / np.maximum(np.linalg.norm(delta, axis=1), 1e-300), 1.0)
            delta = delta * scale[:, None]
            v = u + np.einsum("kia,ka->ki", B, delta)
            Xn = R * v / np.linalg.norm(v, axis=1, keepdims=True)
            Tn, ok = _solve_t(fam, Xn, T[idx].copy())
            ok &= np.abs(Tn - c) <= epsilon
            rn, Drn = _q_and_jac(fam, Xn, np.where(ok, Tn, T[idx]))
            qn = np.einsum("ij,ij->i", rn, rn)
            better = ok & np.isfinite(qn) & (qn < q[idx])
            rel = better & (q[idx] - qn <= 1e-12 * q[idx])
            acc = idx[better]
            X[acc], T[acc], r[acc], Dr[acc], q[acc] = Xn[better], Tn[better], rn[better], Drn[better], qn[better]
            lam[acc] = np.maximum(lam[acc] / 3, 1e-12)
            rej = idx[~better]
            lam[rej] *= 4
            stop = rel | (better & (step < 1e-15)) | (lam[idx] > 1e12)
            active[idx[stop]] = False
    h = h_values(fam, X, T)
    return X, T, h


# ---------------------------------------------------------------------------
# Malgrange profile


@dataclass
class AcvReport:
    c: float
    epsilon: float
    radii: list
    mu0: list                      # inf marks an empty slab at that radius
    fitted_slope: float
    classification: str
    local_minima: list = field(default_factory=list)   # per radius: sorted distinct minima of h
    undersampled: list = field(default_factory=list)   # radii with too few seeds

    def to_json(self) -> str:
        d = asdict(self)
        d["mu0"] = [None if not math.isfinite(v) else v for v in self.mu0]
        d["fitted_slope"] = None if not math.isfinite(self.fitted_slope) else self.fitted_slope
        return json.dumps(d, indent=2, sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "AcvReport":
        d = json.loads(text)
        d["mu0"] = [math.inf if v is None else v for v in d["mu0"]]
        if d["fitted_slope"] is None:
            d["fitted_slope"] = math.nan
        return cls(**d)


def _fit_window(logR, logm):
    """Slope over the longest suffix window (at least 3 points when there are
    3) fitting a line to FIT_MAX_RESIDUAL."""
    best = None
    k = len(logR)
    for start in range(0, max(1, k - 2)):
        x, y = logR[start:], logm[start:]
        A = np.vstack([x, np.ones_like(x)]).T
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        res = float(np.max(np.abs(A @ coef - y)))
        if res <= FIT_MAX_RESIDUAL:
            return float(coef[0]), res, start
        if best is None:
            best = (float(coef[0]), res, start)
    if best is None:
        return math.nan, math.inf, k
    return best


def classify_mu0(radii, mu0):
    """(slope, classification) from a Malgrange profile."""
    mu0 = np.asarray(mu0, float)
    radii = np.asarray(radii, float)
    if len(mu0) and not np.isfinite(mu0[-1]):
        return math.nan, "vacuous_compact"
    # the stable window is the tail of finite values
    finite = np.isfinite(mu0) & (mu0 > 0)
    tail = len(mu0)
    while tail > 0 and finite[tail - 1]:
        tail -= 1
    sel = slice(tail, len(mu0))
    if len(mu0) - tail < 2:
        return math.nan, "inconclusive"
    slope, res, _ = _fit_window(np.log(radii[sel]), np.log(mu0[sel]))
    if slope >= MALGRANGE_SLOPE and np.min(mu0[sel]) > 0:
        return slope, "malgrange_holds"
    if slope <= ACV_SLOPE and res <= FIT_MAX_RESIDUAL:
        return slope, "acv_with_exponent"
    return slope, "inconclusive"


@dataclass
class RadiusScan:
    R: float
    X: np.ndarray          # seeds then minima
    T: np.ndarray
    h: np.ndarray
    n_seeds: int
    minima: np.ndarray     # distinct local minimum values of h


def scan_radius(fam: Family, R: float, c: float, epsilon: float, budget: int, seed: int,
                ids=(), restarts: int = 50) -> RadiusScan:
    X, T = far_samples(fam, R, c, epsilon, budget, seed, ids)
    if len(T) == 0:
        return RadiusScan(R, X, T, np.zeros(0), 0, np.zeros(0))
    h0 = h_values(fam, X, T)
    # every seed is a restart for n = 2 (cheap); otherwise the lowest ``restarts``
    order = np.argsort(h0, kind="stable")
    pick = order if fam.n == 2 else order[:restarts]
    Xm, Tm, hm = minimize_h(fam, X[pick], T[pick], R, c, epsilon)
    mins = np.unique(np.round(hm[np.isfinite(hm)], 12))
    return RadiusScan(R, np.concatenate([X, Xm]), np.concatenate([T, Tm]),
                      np.concatenate([h0, hm]), len(T), mins)


def malgrange_profile(fam: Family, c: float, epsilon: float = 0.1, radii=(10, 30, 100, 300, 1000),
                      budget: int = 400, seed: int = 0, workers=None, min_seeds: int = 4) -> AcvReport:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing")
    scans = pmap(lambda k: scan_radius(fam, radii[k], c, epsilon, budget, seed, (k,)),
                 range(len(radii)), workers)
    mu0 = [float(np.min(s.h)) if len(s.h) else math.inf for s in scans]
    slope, cls = classify_mu0(radii, mu0)
    return AcvReport(float(c), float(epsilon), radii, mu0, slope, cls,
                     local_minima=[[float(v) for v in s.minima[:20]] for s in scans],
                     undersampled=[s.R for s in scans if 0 < s.n_seeds < min_seeds])


# ---------------------------------------------------------------------------
# horizontal sphericalness


@dataclass
class SphericalnessReport:
    c: float
    ec_estimate: float
    defect: float
    verdict: str
    n_samples: int = 0

    def to_json(self) -> str:
        d = asdict(self)
        if not math.isfinite(self.ec_estimate):
            d["ec_estimate"] = None
        return json.dumps(d, indent=2)


def _lower_hull(x, y):
    pts = sorted(set(zip(x.tolist(), y.tolist())))
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return np.array(hull)


def ec_fit(dt, h) -> float:
    """Exponent e with h >= E |t - c|^e, read off the lower hull of
    (log|t - c|, log h).

    The slope is taken on the hull edge leaving the lowest vertex towards
    larger |t - c|: the lowest vertex is the farthest-out evidence, and to its
    left the hull only reflects radii too small to reach smaller |t - c|.
    """
    keep = (dt > 0) & (h > 0) & np.isfinite(h)
    if keep.sum() < 3:
        return math.nan
    x, y = np.log(dt[keep]), np.log(h[keep])
    # only the lowest point of each column can be on the lower hull; columns
    # closer than 1e-3 in log|t - c| are merged so rounding cannot fake a cliff
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    group = np.concatenate([[0], np.cumsum(np.diff(x) > 1e-3)])
    yu = np.full(group[-1] + 1, np.inf)
    np.minimum.at(yu, group, y)
    xu = np.array([x[group == g][np.argmin(y[group == g])] for g in range(len(yu))])
    hull = _lower_hull(xu, yu)
    if len(hull) < 2:
        return math.nan
    k = int(np.argmin(hull[:, 1]))
    if k == len(hull) - 1:
        k -= 1          # lowest point at the slab edge: use the edge coming into it
    (x0, y0), (x1, y1) = hull[k], hull[k + 1]
    return float((y1 - y0) / (x1 - x0))


def sphericalness_report(fam: Family, c: float, epsilon: float = 0.1, radii=(10, 30, 100, 300, 1000),
                         budget: int = 400, seed: int = 0, workers=None) -> SphericalnessReport:
    radii = [float(r) for r in radii]
    scans = pmap(lambda k: scan_radius(fam, radii[k], c, epsilon, budget, seed, (k,)),
                 range(len(radii)), workers)
    Ts = np.concatenate([s.T for s in scans])
    hs = np.concatenate([s.h for s in scans])
    if len(Ts) == 0:
        return SphericalnessReport(float(c), math.nan, 0.0, "vacuous_compact", 0)
    ec = ec_fit(np.abs(Ts - c), hs)
    last = next(s for s in reversed(scans) if len(s.T))
    defect = float(np.max(np.abs(_u_dot_N(fam, last.X, last.T))))
    defect = min(max(defect, 0.0), 1.0)
    if not math.isfinite(ec):
        verdict = "inconclusive"
    elif ec < 1 - EC_MARGIN and defect <= DEFECT_THRESHOLD:
        verdict = "spherical"
    elif ec >= 1 - EC_MARGIN or defect >= 5 * DEFECT_THRESHOLD:
        verdict = "not_spherical"
    else:
        verdict = "inconclusive"
    return SphericalnessReport(float(c), ec, defect, verdict, int(len(Ts)))


def _u_dot_N(fam: Family, X, T) -> np.ndarray:
    G = fam.gradient(X, T)[:, : fam.n]
    u = X / np.linalg.norm(X, axis=1, keepdims=True)
    gn = np.linalg.norm(G, axis=1)
    return np.where(gn > 0, np.einsum("ij,ij->i", u, G) / np.where(gn > 0, gn, 1.0), np.nan)


# ---------------------------------------------------------------------------
# limit normal clouds


@dataclass
class NormalCloud:
    u: np.ndarray          # (k, n) directions x/|x|
    v: np.ndarray          # (k, n) Gauss map N
    radius: np.ndarray
    tval: np.ndarray
    grid_h: float

    def __len__(self) -> int:
        return len(self.radius)

    @property
    def occupancy(self) -> float:
        if len(self) == 0:
            return 0.0
        cells, total = sphere_cells(self.v, self.grid_h)
        return len(set(map(tuple, cells))) / total

    def to_csv(self) -> str:
        n = self.u.shape[1] if self.u.ndim == 2 and self.u.shape[0] else 0
        head = [f"u{i+1}" for i in range(n)] + [f"v{i+1}" for i in range(n)] + ["radius", "tval"]
        lines = [",".join(head)]
        for k in range(len(self)):
            row = list(self.u[k]) + list(self.v[k]) + [self.radius[k], self.tval[k]]
            lines.append(",".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"


def sphere_cells(V: np.ndarray, h: float):
    """Cell indices of unit vectors on a grid of angular resolution h, and the
    number of cells (n = 2: arcs; n = 3: latitude bands split into
    near-square cells)."""
    V = np.asarray(V, float)
    n = V.shape[1]
    if n == 2:
        m = int(math.ceil(2 * math.pi / h))
        ang = np.mod(np.arctan2(V[:, 1], V[:, 0]), 2 * math.pi)
        return np.minimum((ang / (2 * math.pi) * m).astype(int), m - 1)[:, None], m
    if n == 3:
        bands = int(math.ceil(math.pi / h))
        lat = np.arccos(np.clip(V[:, 2], -1, 1))
        bi = np.minimum((lat / math.pi * bands).astype(int), bands - 1)
        per = np.maximum(1, np.ceil(2 * math.pi * np.sin((np.arange(bands) + 0.5) * math.pi / bands) / h)).astype(int)
        lon = np.mod(np.arctan2(V[:, 1], V[:, 0]), 2 * math.pi)
        li = np.minimum((lon / (2 * math.pi) * per[bi]).astype(int), per[bi] - 1)
        return np.stack([bi, li], axis=1), int(per.sum())
    raise ValueError("cell grids are implemented for n = 2 and n = 3")


def limit_normal_cloud(fam: Family, c: float, epsilon: float = 0.1, r_min: float = 100.0,
                       budget: int = 400, seed: int = 0, grid_h: float = 0.05,
                       radius_steps: int = 4) -> NormalCloud:
    """Far pairs (x/|x|, N) with |x| in [r_min, 8 r_min] and |t - c| <= epsilon.

    Slice samples are joined by the local minimizers of |x| |grad t_M|: the
    points where a sphere is tangent to a level (the ones carrying extreme
    normals) are hit by no fixed-t slice.
    """
    radii = np.geomspace(r_min, 8 * r_min, radius_steps)
    U, V, Rs, Ts = [], [], [], []
    for k, R in enumerate(radii):
        scan = scan_radius(fam, float(R), c, epsilon, budget, seed, (k,))
        X, T = scan.X, scan.T
        if len(T) == 0:
            continue
        G = fam.gradient(X, T)[:, : fam.n]
        gn = np.linalg.norm(G, axis=1)
        keep = gn > 0
        U.append(X[keep] / np.linalg.norm(X[keep], axis=1, keepdims=True))
        V.append(G[keep] / gn[keep, None])
        Rs.append(np.full(keep.sum(), float(R)))
        Ts.append(T[keep])
    n = fam.n
    if not U:
        return NormalCloud(np.zeros((0, n)), np.zeros((0, n)), np.zeros(0), np.zeros(0), grid_h)
    return NormalCloud(np.concatenate(U), np.concatenate(V), np.concatenate(Rs),
                       np.concatenate(Ts), grid_h)


def same_directions_at_c(cloud: NormalCloud, c: float, slack: int = 1) -> bool:
    """Do the u-directions at t = c exactly cover those of the whole slab,
    up to ``slack`` cells?  (Only meaningful for n = 2 and n = 3.)"""
    if len(cloud) == 0:
        return True
    cells, total = sphere_cells(cloud.u, cloud.grid_h)
    at_c = cells[cloud.tval == c]
    if len(at_c) == 0:
        return False
    for cell in np.unique(cells, axis=0):
        d = np.abs(at_c - cell)
        if cells.shape[1] == 1:
            d = np.minimum(d, total - d)      # arcs wrap around
        if np.min(np.max(d, axis=1)) > slack:
            return False
    return True
