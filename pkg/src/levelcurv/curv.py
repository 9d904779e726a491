"""Total curvature K(c) = int kappa and total absolute curvature |K|(c) of the
levels T_c, their profiles over a parameter grid, and jump detection.

Two estimators:

* ``tracer`` (n = 2): turning of the Gauss map along traced polylines inside
  the disk of radius R.  K sums the signed turning, |K| the absolute turning.
* ``thin_shell`` (any n): Monte Carlo over shell samples in the ball of
  radius R, K = sum w kappa and |K| = sum w |kappa|.

``budget`` is the number of grid nodes for the tracer (cell = 2R/sqrt(budget))
and the number of accepted samples for the shell sampler.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .geom import Family
from .sample import EmptyLevelInBall, Polyline, thin_shell_samples, trace_level_curve
from .streams import pmap, stream

FLAG_ORDER = ("ok", "near_K0", "empty", "discontinuity_left", "discontinuity_right")
TRACER_ERR_FLOOR = 1e-9


@dataclass
class LevelCurvature:
    c: float
    K: float
    absK: float
    err: float
    empty: bool = False
    components: list[tuple[float, float]] = field(default_factory=list)   # (K, absK) per traced component


def _tracer_cell(budget: int, R: float) -> float:
    return 2.0 * R / math.sqrt(max(budget, 4))


def trace_in_disk(fam: Family, c: float, ball_radius: float, budget: int) -> list[Polyline]:
    """Traced components of T_c clipped to the disk of radius R."""
    cell = _tracer_cell(budget, ball_radius)
    out = []
    for pl in trace_level_curve(fam, c, ball_radius, cell):
        if pl.closed:
            if np.max(np.linalg.norm(pl.vertices, axis=1)) <= ball_radius:
                out.append(pl)
            continue
        inside = np.linalg.norm(pl.vertices, axis=1) <= ball_radius
        # split into maximal runs inside the disk, keeping one vertex past the boundary
        idx = np.nonzero(inside)[0]
        if idx.size == 0:
            continue
        breaks = np.nonzero(np.diff(idx) > 1)[0]
        starts = np.concatenate([[idx[0]], idx[breaks + 1]])
        ends = np.concatenate([idx[breaks], [idx[-1]]])
        for a, b in zip(starts, ends):
            a, b = max(a - 1, 0), min(b + 1, len(pl) - 1)
            if b > a:
                out.append(Polyline(pl.vertices[a:b + 1], False, pl.normals[a:b + 1], pl.c))
    return out


def _tracer_estimate(fam: Family, c: float, ball_radius: float, budget: int) -> LevelCurvature:
    pls = trace_in_disk(fam, c, ball_radius, budget)
    if not pls:
        return LevelCurvature(float(c), 0.0, 0.0, 0.0, empty=True)
    comps, err = [], 0.0
    for pl in pls:
        turn = pl.turning()
        k, a = float(np.sum(turn)), float(np.sum(np.abs(turn)))
        comps.append((k, a))
        # chord-based exterior angles converge to the same limit from the other side
        chord = pl.chord_turning()
        if pl.closed:
            err += abs(abs(float(np.sum(chord))) - abs(k)) if len(chord) else 0.0
        err += abs(float(np.sum(np.abs(chord))) - a) if len(chord) else 0.0
    K = sum(k for k, _ in comps)
    absK = sum(a for _, a in comps)
    err = err + TRACER_ERR_FLOOR * (1.0 + absK)
    return LevelCurvature(float(c), K, absK, err, components=comps)


def _shell_estimate(fam: Family, c: float, ball_radius: float, budget: int, seed: int,
                    stream_id=(), workers=None) -> LevelCurvature:
    try:
        batch = thin_shell_samples(fam, c, ball_radius, count=budget, seed=seed,
                                   stream_id=stream_id, workers=workers)
    except EmptyLevelInBall:
        return LevelCurvature(float(c), 0.0, 0.0, 0.0, empty=True)
    kappa = np.nan_to_num(batch.frames.kappa, nan=0.0)
    K, eK = batch.estimate(kappa)
    A, eA = batch.estimate(np.abs(kappa))
    return LevelCurvature(float(c), K, A, max(eK, eA))


def curvature_at(fam: Family, c: float, method: str = "tracer", budget: int = 160_000,
                 ball_radius: float = 10.0, seed: int = 0, stream_id=(),
                 workers=None) -> LevelCurvature:
    if method == "tracer":
        if fam.n != 2:
            raise ValueError("the tracer needs n = 2; use method='thin_shell'")
        return _tracer_estimate(fam, c, ball_radius, budget)
    if method == "thin_shell":
        return _shell_estimate(fam, c, ball_radius, budget, seed, stream_id, workers)
    raise ValueError(f"unknown method {method!r}")


def total_curvature_at(fam: Family, c: float, method: str = "tracer", budget: int = 160_000,
                       ball_radius: float = 10.0, seed: int = 0) -> tuple[float, float, float]:
    """(K, |K|, err) of T_c inside the ball of radius ``ball_radius``."""
    r = curvature_at(fam, c, method, budget, ball_radius, seed)
    return r.K, r.absK, r.err


def choose_ball_radius(fam: Family, c: float, method: str = "tracer", budget: int = 160_000,
                       r0: float = 1.0, rel: float = 0.01, max_doublings: int = 10, seed: int = 0):
    """Double R from ``r0`` until |K| changes by less than ``rel``.

    Returns ``(R, sweep)`` where sweep lists ``(R, K, absK, err)`` for every
    radius tried, so a slow convergence is visible rather than hidden.
    """
    sweep = []
    R = r0
    prev = None
    for _ in range(max_doublings + 1):
        r = curvature_at(fam, c, method, budget, R, seed)
        sweep.append((R, r.K, r.absK, r.err))
        if prev is not None and r.absK > 0 and abs(r.absK - prev) <= rel * r.absK:
            return R, sweep
        prev = r.absK
        R *= 2
    return R / 2, sweep


# ---------------------------------------------------------------------------
# Gauss map degree


def degree_crosscheck(fam: Family, c: float, directions: int = 1024, seed: int = 0,
                      ball_radius: float = 10.0, budget: int = 160_000) -> tuple[float, float]:
    """Count Gauss map preimages of equally spaced directions (random offset).

    A direction u counts +1 or -1 at each crossing of N through u along a
    traced polyline, with the sign of the turning there, so
    K_deg = 2 pi * mean signed count and |K|_deg = 2 pi * mean count.
    """
    if fam.n != 2:
        raise ValueError("degree_crosscheck needs n = 2")
    pls = trace_in_disk(fam, c, ball_radius, budget)
    D = int(directions)
    spacing = 2 * math.pi / D
    phi0 = float(stream(seed).random()) * spacing
    signed = unsigned = 0
    for pl in pls:
        Nv = pl.normals
        theta = np.arctan2(Nv[:, 1], Nv[:, 0])
        turn = pl.turning()
        start = theta[: len(turn)]
        end = start + turn
        lo, hi = np.minimum(start, end), np.maximum(start, end)
        # directions phi0 + j*spacing in (lo, hi]
        cnt = np.floor((hi - phi0) / spacing) - np.floor((lo - phi0) / spacing)
        signed += int(np.sum(np.sign(turn) * cnt))
        unsigned += int(np.sum(cnt))
    return 2 * math.pi * signed / D, 2 * math.pi * unsigned / D


# ---------------------------------------------------------------------------
# profiles


@dataclass
class CurvatureProfile:
    tgrid: np.ndarray
    K: np.ndarray
    absK: np.ndarray
    err: np.ndarray
    flags: list[set]
    config: dict = field(default_factory=dict)
    components: list[list[tuple[float, float]]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.tgrid = np.asarray(self.tgrid, dtype=float)
        if np.any(np.diff(self.tgrid) <= 0):
            raise ValueError("tgrid must be strictly increasing")
        self.K, self.absK, self.err = (np.asarray(a, dtype=float) for a in (self.K, self.absK, self.err))
        self.flags = [set(f) for f in self.flags]

    def __len__(self) -> int:
        return len(self.tgrid)

    def flag_text(self, i: int) -> str:
        f = self.flags[i]
        return "|".join(x for x in FLAG_ORDER if x in f) if f else "ok"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "K", "absK", "err", "flag"])
        for i in range(len(self)):
            w.writerow([repr(float(self.tgrid[i])), repr(float(self.K[i])),
                        repr(float(self.absK[i])), repr(float(self.err[i])), self.flag_text(i)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CurvatureProfile":
        rows = list(csv.DictReader(io.StringIO(text)))
        flags = [set(r["flag"].split("|")) - {"ok"} for r in rows]
        return cls([float(r["t"]) for r in rows], [float(r["K"]) for r in rows],
                   [float(r["absK"]) for r in rows], [float(r["err"]) for r in rows], flags)


def profile(fam: Family, tmin: float, tmax: float, steps: int, method: str = "tracer",
            budget: int = 160_000, ball_radius: float = 10.0, seed: int = 0,
            K0=None, workers=None) -> CurvatureProfile:
    """K and |K| on ``linspace(tmin, tmax, steps)``.

    ``K0`` defaults to :func:`levelcurv.asym.find_K0` over the grid range;
    grid points within one step of a value of K0 are marked near_K0.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    tgrid = np.linspace(tmin, tmax, steps)
    if K0 is None:
        from .asym import find_K0
        K0 = find_K0(fam, (tmin, tmax), box_radius=ball_radius)

    def one(i):
        try:
            return curvature_at(fam, float(tgrid[i]), method, budget, ball_radius, seed,
                                stream_id=(i,))
        except Exception as exc:       # a failing point must not abort the profile
            r = LevelCurvature(float(tgrid[i]), math.nan, math.nan, math.nan)
            r.components = [("error", str(exc))]
            return r

    res = pmap(one, range(steps), workers)
    step = (tmax - tmin) / (steps - 1)
    flags = []
    for i, r in enumerate(res):
        f = set()
        if r.empty:
            f.add("empty")
        if any(abs(tgrid[i] - v) <= step * (1 + 1e-9) for v in K0):
            f.add("near_K0")
        flags.append(f)
    config = dict(method=method, budget=int(budget), ball_radius=float(ball_radius),
                  seed=int(seed), K0=tuple(float(v) for v in K0))
    return CurvatureProfile(tgrid, [r.K for r in res], [r.absK for r in res],
                            [r.err for r in res], flags, config, [r.components for r in res])


# ---------------------------------------------------------------------------
# discontinuities


def detect_discontinuities(prof: CurvatureProfile, k_sigma: float = 5.0, fam: Family | None = None,
                           levels: int = 2, workers=None) -> list[tuple[float, float]]:
    """Intervals (t_i, t_{i+1}) across which |K| jumps.

    A candidate is an interval with |absK(t_{i+1}) - absK(t_i)| > k_sigma *
    (err_i + err_{i+1}); near_K0 points never form candidates.  With ``fam``
    the candidate must also survive re-evaluation:

    * bisection ``levels`` times: at each level, one half of the interval
      must carry at least 3/4 of the gap (a continuous but steep change
      spreads over both halves), and
    * the gap at the endpoints persists when the budget is doubled.

    Without ``fam`` (e.g. a profile read from CSV) candidates are returned
    as they are.  Flagged endpoints are marked discontinuity_left/right in
    ``prof.flags``.
    """
    A, E = prof.absK, prof.err
    cands = []
    for i in range(len(prof) - 1):
        if "near_K0" in prof.flags[i] or "near_K0" in prof.flags[i + 1]:
            continue
        if not (np.isfinite(A[i]) and np.isfinite(A[i + 1])):
            continue
        gap = abs(A[i + 1] - A[i])
        if gap > k_sigma * (E[i] + E[i + 1]):
            cands.append(i)
    if fam is not None:
        cfg = prof.config
        method, budget = cfg.get("method", "tracer"), int(cfg.get("budget", 160_000))
        R, seed = float(cfg.get("ball_radius", 10.0)), int(cfg.get("seed", 0))

        def confirm(i):
            return _confirm(fam, prof, i, k_sigma, levels, method, budget, R, seed)

        keep = pmap(confirm, cands, workers)
        cands = [i for i, k in zip(cands, keep) if k]
    out = []
    for i in cands:
        prof.flags[i].add("discontinuity_left")
        prof.flags[i + 1].add("discontinuity_right")
        out.append((float(prof.tgrid[i]), float(prof.tgrid[i + 1])))
    return out


def _confirm(fam, prof, i, k_sigma, levels, method, budget, R, seed) -> bool:
    cache = {}

    def at(t, b, salt):
        key = (t, b)
        if key not in cache:
            cache[key] = curvature_at(fam, t, method, b, R, seed, stream_id=((1 << 20) + salt,))
        return cache[key]

    # persistence at doubled budget
    lo, hi = float(prof.tgrid[i]), float(prof.tgrid[i + 1])
    a, b = at(lo, 2 * budget, 2 * i), at(hi, 2 * budget, 2 * i + 1)
    gap = abs(b.absK - a.absK)
    if not gap > k_sigma * (a.err + b.err):
        return False
    # localization by bisection at the base budget
    left = at(lo, budget, 4 * i)
    right = at(hi, budget, 4 * i + 1)
    salt = 0
    for _ in range(levels):
        salt += 1
        tm = 0.5 * (lo + hi)
        mid = at(tm, budget, (4 * i + 2) * 64 + salt)
        g = abs(right.absK - left.absK)
        gl, gr = abs(mid.absK - left.absK), abs(right.absK - mid.absK)
        if gl >= gr:
            big, errs, nxt = gl, left.err + mid.err, (lo, tm, left, mid)
        else:
            big, errs, nxt = gr, mid.err + right.err, (tm, hi, mid, right)
        if not (big >= 0.75 * g and big > k_sigma * errs and big >= 0.5 * gap):
            return False
        lo, hi, left, right = nxt
    return True
