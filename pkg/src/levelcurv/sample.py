"""Point samples of the levels T_c = {x : F(x, c) = 0}.

Two samplers:

* :func:`trace_level_curve` (n = 2): grid sign changes seed a
  predictor-corrector continuation along each component, so components that
  come closer than a grid cell are never joined to each other.
* :func:`thin_shell_samples` (any n): rejection sampling of a first-order
  tube of half-width delta around T_c inside a ball, Newton-projected back to
  T_c.  Each accepted draw represents vol(ball) / (draws * 2 delta) of
  (n-1)-dimensional measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom import Family, Frames, SurfacePoint, frames
from .poly import Point
from .streams import chunked_until, stream

NEWTON_TOL = 1e-9
NEWTON_MAX_ITER = 50
MIN_SHELL_GRAD = 1e-10


class EmptyLevelInBall(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Newton projection onto T_c


def _fg(fam: Family, X: np.ndarray, c: float):
    cols = [X[:, i] for i in range(fam.n)] + [np.full(len(X), float(c))]
    Fv = fam.F.compiled(*cols)
    G = np.stack([g.compiled(*cols) for g in fam.gradF[: fam.n]], axis=-1)
    return np.asarray(Fv, dtype=float) * np.ones(len(X)), G * np.ones((len(X), 1))


def _magnitude(fam: Family, X: np.ndarray, c: float) -> np.ndarray:
    # sum of |terms|: the floating-point noise floor of F scales with it
    cols = [np.abs(X[:, i]) for i in range(fam.n)] + [np.full(len(X), abs(float(c)))]
    mag = np.zeros(len(X))
    for exps, coef in fam.F.terms:
        term = np.full(len(X), abs(coef))
        for j, e in enumerate(exps):
            if e:
                term = term * cols[j] ** e
        mag += term
    return mag


def newton_project_batch(fam: Family, X0, c: float, tol: float = NEWTON_TOL,
                         max_iter: int = NEWTON_MAX_ITER):
    """Damped Newton along grad_x F for many seeds at once.

    Returns ``(X, ok)``; rows with ``ok == False`` did not converge.  The
    residual target is ``tol`` or the rounding floor of F at that point,
    whichever is larger.
    """
    X = np.array(X0, dtype=float, copy=True).reshape(-1, fam.n)
    ok = np.zeros(len(X), dtype=bool)
    active = np.arange(len(X))
    Fv, G = _fg(fam, X, c)
    floor = 64 * np.finfo(float).eps * _magnitude(fam, X, c)
    for _ in range(max_iter + 1):
        done = np.abs(Fv) <= np.maximum(tol, floor)
        ok[active[done]] = True
        keep = ~done
        active, X_a, F_a, G_a = active[keep], X[active[keep]], Fv[keep], G[keep]
        if active.size == 0:
            break
        if _ == max_iter:
            break
        g2 = np.einsum("ij,ij->i", G_a, G_a)
        stuck = g2 < 1e-24
        g2 = np.where(stuck, 1.0, g2)
        step = (F_a / g2)[:, None] * G_a
        lam = np.ones(len(active))
        X_new = X_a - step
        F_new, G_new = _fg(fam, X_new, c)
        # backtrack where the residual grew
        for _bt in range(8):
            worse = np.abs(F_new) > np.abs(F_a)
            if not worse.any():
                break
            lam = np.where(worse, lam * 0.5, lam)
            X_new[worse] = X_a[worse] - lam[worse, None] * step[worse]
            F_w, G_w = _fg(fam, X_new[worse], c)
            F_new[worse], G_new[worse] = F_w, G_w
        F_new[stuck] = np.inf
        X[active] = X_new
        Fv, G = F_new, G_new
        floor = 64 * np.finfo(float).eps * _magnitude(fam, X[active], c)
        alive = np.isfinite(Fv)
        active, Fv, G, floor = active[alive], Fv[alive], G[alive], floor[alive]
    return X, ok


def newton_project(fam: Family, x0, c: float, tol: float = NEWTON_TOL,
                   max_iter: int = NEWTON_MAX_ITER) -> Point | None:
    """Project ``x0`` onto T_c; ``None`` when Newton does not converge."""
    X, ok = newton_project_batch(fam, np.atleast_2d(x0), c, tol, max_iter)
    if not ok[0]:
        return None
    return Point(X[0], c)


# ---------------------------------------------------------------------------
# curve tracer (n = 2)


@dataclass
class Polyline:
    """Ordered vertices of one traced component, traversed so that the
    tangent is the Gauss map N rotated by +90 degrees."""

    vertices: np.ndarray          # (k, 2)
    closed: bool
    normals: np.ndarray = field(repr=False)   # (k, 2) unit N at each vertex
    c: float = 0.0

    def __len__(self) -> int:
        return len(self.vertices)

    def points(self) -> list[Point]:
        return [Point(v, self.c) for v in self.vertices]

    def _pairs(self):
        V, Nv = self.vertices, self.normals
        if self.closed:
            return V, np.roll(V, -1, axis=0), Nv, np.roll(Nv, -1, axis=0)
        return V[:-1], V[1:], Nv[:-1], Nv[1:]

    def turning(self) -> np.ndarray:
        """Signed turning of N between consecutive vertices (radians)."""
        _, _, Na, Nb = self._pairs()
        cross = Na[:, 0] * Nb[:, 1] - Na[:, 1] * Nb[:, 0]
        dot = np.einsum("ij,ij->i", Na, Nb)
        return np.arctan2(cross, dot)

    def chord_turning(self) -> np.ndarray:
        """Exterior angles of the polyline itself (chord directions)."""
        A, B, _, _ = self._pairs()
        d = B - A
        keep = np.linalg.norm(d, axis=1) > 0
        d = d[keep]
        if len(d) < 2:
            return np.zeros(0)
        if self.closed:
            d0, d1 = d, np.roll(d, -1, axis=0)
        else:
            d0, d1 = d[:-1], d[1:]
        cross = d0[:, 0] * d1[:, 1] - d0[:, 1] * d1[:, 0]
        return np.arctan2(cross, np.einsum("ij,ij->i", d0, d1))

    def length(self) -> float:
        """Arc length, each chord corrected by its turning angle (exact on circles)."""
        A, B, _, _ = self._pairs()
        chord = np.linalg.norm(B - A, axis=1)
        half = np.abs(self.turning()) / 2
        corr = np.where(half > 1e-8, half / np.sin(np.maximum(half, 1e-300)), 1.0)
        return float(np.sum(chord * corr))


def _grid_seeds(fam: Family, c: float, R: float, cell: float):
    m = max(2, int(math.ceil(2 * R / cell)))
    xs = np.linspace(-R, R, m + 1)
    XX, YY = np.meshgrid(xs, xs, indexing="ij")
    Fv = np.asarray(fam.F.compiled(XX, YY, np.full_like(XX, c)), dtype=float)
    pos = Fv >= 0
    seeds = []
    # horizontal edges (i, j) -> (i+1, j)
    ih, jh = np.nonzero(pos[:-1, :] != pos[1:, :])
    fa, fb = Fv[ih, jh], Fv[ih + 1, jh]
    s = fa / (fa - fb)
    seeds.append(np.stack([xs[ih] + s * (xs[ih + 1] - xs[ih]), xs[jh]], axis=1))
    iv, jv = np.nonzero(pos[:, :-1] != pos[:, 1:])
    fa, fb = Fv[iv, jv], Fv[iv, jv + 1]
    s = fa / (fa - fb)
    seeds.append(np.stack([xs[iv], xs[jv] + s * (xs[jv + 1] - xs[jv])], axis=1))
    S = np.concatenate(seeds)
    if len(S) == 0:
        return S
    P, ok = newton_project_batch(fam, S, c)
    P = P[ok]
    # deterministic order: lexicographic on the grid position of the seed
    order = np.lexsort((P[:, 1], P[:, 0]))
    return P[order]


class _Tracer:
    def __init__(self, fam: Family, c: float, R: float, cell: float, max_turn: float,
                 max_step: float):
        self.f = fam.F.compiled
        self.g1 = fam.gradF[0].compiled
        self.g2 = fam.gradF[1].compiled
        self.c = float(c)
        self.R = R
        self.max_turn = max_turn
        self.max_step = max_step
        self.min_step = cell * 1e-7
        self.tol = NEWTON_TOL
        self.coef_sum = sum(abs(cf) for _, cf in fam.F.terms) * (1.0 + abs(self.c)) ** fam.F.degree
        self.deg = fam.F.degree

    def normal(self, x, y):
        a, b = self.g1(x, y, self.c), self.g2(x, y, self.c)
        r = math.hypot(a, b)
        if r < 1e-14:
            return None
        return a / r, b / r

    def correct(self, x, y):
        """Newton onto the curve; iterates until the step itself is negligible,
        since a small residual alone is loose where |grad F| is small."""
        f, g1, g2, c = self.f, self.g1, self.g2, self.c
        for _ in range(30):
            v = f(x, y, c)
            a, b = g1(x, y, c), g2(x, y, c)
            r2 = a * a + b * b
            if r2 < 1e-28:
                return None
            mag = abs(x) + abs(y) + 1.0
            floor = self.coef_sum * mag ** self.deg * 1e-14
            dx, dy = v * a / r2, v * b / r2
            x, y = x - dx, y - dy
            if math.hypot(dx, dy) <= 1e-13 * mag or abs(v) <= floor:
                return (x, y) if abs(v) <= max(self.tol, floor) else None
        return None

    def inside(self, x, y):
        return abs(x) <= self.R and abs(y) <= self.R

    def march(self, x0, y0, direction, start_tangent=None, max_steps=200000):
        """Follow the curve from (x0, y0) with tangent direction*J N.

        Returns (points, normals, closed).
        """
        n0 = self.normal(x0, y0)
        pts, nrm = [(x0, y0)], [n0]
        x, y, n = x0, y0, n0
        h = self.max_step * 0.25
        travelled = 0.0
        for _ in range(max_steps):
            tx, ty = -n[1] * direction, n[0] * direction
            accepted = False
            while h >= self.min_step:
                q = self.correct(x + h * tx, y + h * ty)
                if q is not None:
                    qx, qy = q
                    nq = self.normal(qx, qy)
                    dx, dy = qx - x, qy - y
                    d = math.hypot(dx, dy)
                    if (nq is not None and d <= 2.0 * h and dx * tx + dy * ty > 0.5 * d
                            and abs(math.atan2(n[0] * nq[1] - n[1] * nq[0],
                                               n[0] * nq[0] + n[1] * nq[1])) <= self.max_turn):
                        accepted = True
                        break
                h *= 0.5
            if not accepted:
                return pts, nrm, False
            travelled += d
            # back at the start of a closed component?
            if start_tangent is not None and travelled > 4 * d and len(pts) > 3:
                sx, sy = pts[0]
                ex, ey = sx - x, sy - y
                seg2 = dx * dx + dy * dy
                u = (ex * dx + ey * dy) / seg2 if seg2 > 0 else 0.0
                if 0.0 <= u <= 1.0:
                    px, py = x + u * dx - sx, y + u * dy - sy
                    if (math.hypot(px, py) < 0.25 * d
                            and dx * start_tangent[0] + dy * start_tangent[1] > 0.5 * d):
                        return pts, nrm, True
            pts.append((qx, qy))
            nrm.append(nq)
            x, y, n = qx, qy, nq
            if not self.inside(x, y):
                return pts, nrm, False
            h = min(h * 1.6, self.max_step)
        return pts, nrm, False

    def component(self, x0, y0):
        n0 = self.normal(x0, y0)
        if n0 is None:
            return None
        t0 = (-n0[1], n0[0])
        fwd, nf, closed = self.march(x0, y0, +1, start_tangent=t0)
        if closed:
            return np.array(fwd), np.array(nf), True
        bwd, nb, _ = self.march(x0, y0, -1)
        P = bwd[::-1] + fwd[1:]
        Nn = nb[::-1] + nf[1:]
        return np.array(P), np.array(Nn), False


def _seg_distance(S: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Distance of each point in S to the polyline with segments A[i]-B[i]."""
    if len(A) == 0:
        return np.full(len(S), np.inf)
    out = np.full(len(S), np.inf)
    step = max(1, 2_000_000 // max(1, len(A)))
    for k in range(0, len(S), step):
        P = S[k:k + step, None, :]
        d = B - A
        dd = np.einsum("ij,ij->i", d, d)
        dd = np.where(dd > 0, dd, 1.0)
        u = np.clip(np.einsum("pij,ij->pi", P - A, d) / dd, 0.0, 1.0)
        proj = A + u[..., None] * d
        out[k:k + step] = np.min(np.linalg.norm(P - proj, axis=-1), axis=1)
    return out


def trace_level_curve(fam: Family, c: float, box_radius: float, cell: float,
                      max_turn: float = 0.1, max_step: float | None = None) -> list[Polyline]:
    """All components of T_c inside the box [-R, R]^2 (n = 2 only).

    Components leaving the box are returned as open polylines whose first and
    last vertices are the first points found outside the box.  Components
    that stay closer than ``cell / 4`` to an already traced component along
    their whole length are not detected.
    """
    if fam.n != 2:
        raise ValueError("trace_level_curve needs n = 2")
    if cell <= 0 or box_radius <= 0:
        raise ValueError("cell and box_radius must be positive")
    max_step = max_step if max_step is not None else 10.0 * cell
    seeds = _grid_seeds(fam, c, box_radius, cell)
    tracer = _Tracer(fam, c, box_radius, cell, max_turn, max_step)
    alive = np.ones(len(seeds), dtype=bool)
    out: list[Polyline] = []
    for k in range(len(seeds)):
        if not alive[k]:
            continue
        comp = tracer.component(*seeds[k])
        alive[k] = False
        if comp is None:
            continue
        P, Nn, closed = comp
        if len(P) < 2:
            continue
        A, B = (P, np.roll(P, -1, axis=0)) if closed else (P[:-1], P[1:])
        idx = np.nonzero(alive)[0]
        if idx.size:
            near = _seg_distance(seeds[idx], A, B) < cell / 4
            alive[idx[near]] = False
        out.append(Polyline(P, closed, Nn, float(c)))
    return out


# ---------------------------------------------------------------------------
# thin-shell Monte Carlo sampler


@dataclass(frozen=True)
class WeightedSample:
    sp: SurfacePoint
    weight: float


@dataclass
class SampleBatch:
    """Accepted, projected shell samples of T_c in the ball of radius R."""

    c: float
    ball_radius: float
    delta: float
    draws: int
    frames: Frames
    weights: np.ndarray
    lost: int = 0            # accepted draws dropped because Newton failed

    @property
    def X(self) -> np.ndarray:
        return self.frames.X

    def __len__(self) -> int:
        return len(self.weights)

    def weight_sum(self) -> float:
        return float(np.sum(self.weights))

    def estimate(self, values: np.ndarray) -> tuple[float, float]:
        """Estimate of the integral of ``values`` over T_c in the ball, with its
        standard error (per-draw variance over all draws, accepted or not)."""
        values = np.asarray(values, dtype=float)
        y = self.weights * values * self.draws
        total = float(np.sum(self.weights * values))
        m2 = float(np.sum(y * y)) / self.draws
        var = max(m2 - total * total, 0.0) / self.draws
        return total, math.sqrt(var)

    def samples(self) -> list[WeightedSample]:
        return [WeightedSample(self._sp(i), float(self.weights[i])) for i in range(len(self))]

    def _sp(self, i: int) -> SurfacePoint:
        fr, n = self.frames, self.frames.X.shape[1]
        crit = bool(fr.critical[i])
        return SurfacePoint(
            p=Point(fr.X[i], self.c), nu=fr.nu[i], nu_x=fr.nu[i, :n], nu_t=float(fr.nu[i, n]),
            grad_tM=fr.grad_tM[i], N=None if crit else fr.N[i],
            kappa=None if crit else float(fr.kappa[i]), critical=crit,
        )


def _uniform_ball(rng: np.random.Generator, k: int, n: int, R: float) -> np.ndarray:
    g = rng.standard_normal((k, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = R * rng.random(k) ** (1.0 / n)
    return g * r[:, None]


def ball_volume(n: int, R: float) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * R**n


CHUNK = 1 << 16


def thin_shell_samples(fam: Family, c: float, ball_radius: float,
                       shell_half_width: float | None = None, count: int = 10_000,
                       seed: int = 0, retry_factor: int = 20, max_draws: int | None = None,
                       workers: int | None = None, stream_id: tuple[int, ...] = ()) -> SampleBatch:
    """Sample T_c in the ball of radius R by rejection from a thin shell.

    Draws are generated in fixed chunks of ``CHUNK`` points, chunk k using the
    stream ``(seed, *stream_id, k)``, until at least ``count`` draws were
    accepted.  If nothing was accepted after ``retry_factor * count`` draws
    the level is declared empty.
    """
    R = float(ball_radius)
    delta = float(shell_half_width) if shell_half_width is not None else 1e-3 * R
    if delta <= 0 or count <= 0:
        raise ValueError("shell_half_width and count must be positive")
    n = fam.n
    empty_after = retry_factor * count
    if max_draws is None:
        # generous cap on total draws: expected draws per acceptance is
        # vol(B) / (2 delta area) ~ R / (2 delta) for O(R^(n-1)) areas
        max_draws = int(retry_factor * count * max(1.0, R / (2 * delta)))
    max_chunks = max(1, -(-max_draws // CHUNK))

    def chunk(k: int):
        rng = stream(seed, *stream_id, k)
        X = _uniform_ball(rng, CHUNK, n, R)
        Fv, G = _fg(fam, X, c)
        gn = np.linalg.norm(G, axis=1)
        acc = (np.abs(Fv) < delta * gn) & (gn >= MIN_SHELL_GRAD)
        return X[acc]

    def done(prefix):
        acc = sum(len(p) for p in prefix)
        return acc >= count or (acc == 0 and len(prefix) * CHUNK >= empty_after)

    parts = chunked_until(chunk, done, max_chunks, workers)
    draws = len(parts) * CHUNK
    Xacc = np.concatenate(parts) if parts else np.zeros((0, n))
    if len(Xacc) == 0:
        raise EmptyLevelInBall(f"no shell acceptances for c={c} in ball of radius {R} "
                               f"after {draws} draws")
    P, ok = newton_project_batch(fam, Xacc, c)
    P = P[ok]
    fr = frames(fam, P, c)
    w = np.full(len(P), ball_volume(n, R) / (draws * 2.0 * delta))
    return SampleBatch(float(c), R, delta, draws, fr, w, lost=int((~ok).sum()))
