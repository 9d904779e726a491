"""Flows on M that move points from level to level.

``transport`` integrates chi = grad t_M / |grad t_M|^2, whose t-component is
exactly 1, so the parameter s is the level increment.  Written with t as the
independent variable, the x-part is

    dx/ds = -dtF * dxF / |dxF|^2.

``xi_transport`` integrates the field with the same level clock whose x-part
is tangent to the spheres |x| = const:

    dx/ds = -dtF * P / |P|^2,   P = dxF - <dxF, x> x / |x|^2.

Both integrate with DOP853 over short segments and re-project onto M (and,
for xi, onto the sphere) at every segment end.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .geom import Family, SurfacePoint, surface_point
from .poly import Point

NEAR_CRITICAL = 1e-8
RESIDUAL_TOL = 1e-8


class NearCritical(RuntimeError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class StepUnderflow(RuntimeError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class DegenerateSphericalComponent(RuntimeError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass
class FlowTrajectory:
    start: SurfacePoint | None
    s: list = field(default_factory=list)
    points: list = field(default_factory=list)     # Point per step
    field_kind: str = "chi"

    @property
    def radius(self) -> np.ndarray:
        return np.array([np.linalg.norm(p.x) for p in self.points])

    @property
    def level(self) -> np.ndarray:
        return np.array([p.t for p in self.points])

    @property
    def steps(self):
        return [(s, p, float(np.linalg.norm(p.x)), p.t) for s, p in zip(self.s, self.points)]

    def __len__(self) -> int:
        return len(self.s)

    @property
    def end(self) -> Point:
        return self.points[-1]

    def to_csv(self) -> str:
        n = len(self.points[0].x) if self.points else 0
        buf = io.StringIO()
        buf.write(",".join(["s"] + [f"x{i+1}" for i in range(n)] + ["t", "radius", "level"]) + "\n")
        for s, p, r, lv in self.steps:
            row = [s, *p.x, p.t, r, lv]
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()


def _grad_parts(fam: Family, x, t):
    G = fam.gradient(np.asarray(x)[None, :], t)[0]
    return G[: fam.n], G[fam.n]


def _project_level(fam: Family, x, t, iters: int = 30):
    """Newton along dxF at fixed t (minimum-norm correction)."""
    x = np.array(x, float)
    for _ in range(iters):
        Fv = float(fam.value(x[None, :], t)[0])
        if abs(Fv) <= RESIDUAL_TOL * 1e-3:
            break
        g, _ = _grad_parts(fam, x, t)
        gg = g @ g
        if gg == 0:
            break
        x = x - Fv * g / gg
    return x


def _project_level_sphere(fam: Family, x, t, r0: float, iters: int = 30):
    """Gauss-Newton onto {F(., t) = 0, |x| = r0}."""
    x = np.array(x, float)
    for _ in range(iters):
        Fv = float(fam.value(x[None, :], t)[0])
        rr = x @ x - r0 * r0
        if abs(Fv) <= RESIDUAL_TOL * 1e-3 and abs(rr) <= 1e-14 * r0 * r0:
            break
        g, _ = _grad_parts(fam, x, t)
        J = np.vstack([g, 2 * x])
        dx, *_ = np.linalg.lstsq(J, np.array([Fv, rr]), rcond=None)
        x = x - dx
    return x


def _chi_rhs(fam: Family, t0: float):
    def rhs(s, x):
        g, Ft = _grad_parts(fam, x, t0 + s)
        gg = g @ g
        gtm = math.sqrt(gg) / math.sqrt(gg + Ft * Ft)
        if gtm < NEAR_CRITICAL:
            raise _Abort(s, x, gtm)
        return -Ft * g / gg
    return rhs


def _xi_rhs(fam: Family, t0: float):
    def rhs(s, x):
        g, Ft = _grad_parts(fam, x, t0 + s)
        P = g - (g @ x) / (x @ x) * x
        G2 = g @ g + Ft * Ft
        if abs(Ft) * math.sqrt(P @ P) / G2 < NEAR_CRITICAL:
            raise _Degenerate(s, x)
        if math.sqrt(g @ g) / math.sqrt(G2) < NEAR_CRITICAL:
            raise _Abort(s, x, math.sqrt(g @ g / G2))
        return -Ft * P / (P @ P)
    return rhs


class _Abort(Exception):
    def __init__(self, s, x, val):
        self.s, self.x, self.val = s, x, val


class _Degenerate(Exception):
    def __init__(self, s, x):
        self.s, self.x = s, x


def _integrate(fam: Family, start: SurfacePoint, s_target: float, tol: float, kind: str,
               segments: int):
    traj = FlowTrajectory(start, [0.0], [start.p], kind)
    t0 = start.p.t
    x = np.array(start.p.x, float)
    r0 = float(np.linalg.norm(x))
    rhs = _chi_rhs(fam, t0) if kind == "chi" else _xi_rhs(fam, t0)
    try:
        rhs(0.0, x)
    except _Abort as a:
        raise NearCritical(f"|grad t_M| = {a.val:.2e} at the start point", traj) from None
    except _Degenerate:
        raise DegenerateSphericalComponent(
            "the sphere-tangent part of grad t_M vanishes at the start point", traj) from None
    if s_target == 0:
        return traj
    nseg = max(1, int(segments))
    knots = np.linspace(0.0, s_target, nseg + 1)
    for a, b in zip(knots[:-1], knots[1:]):
        try:
            sol = solve_ivp(rhs, (a, b), x, method="DOP853", rtol=min(1e-10, tol * 1e-3),
                            atol=tol * 1e-4, max_step=abs(b - a))
        except _Abort as e:
            raise NearCritical(f"|grad t_M| = {e.val:.2e} at s = {e.s:.6g}", traj) from None
        except _Degenerate as e:
            raise DegenerateSphericalComponent(
                f"the sphere-tangent part of grad t_M vanishes at s = {e.s:.6g}", traj) from None
        if sol.status != 0:
            raise StepUnderflow(f"integrator stopped at s = {sol.t[-1]:.6g}: {sol.message}", traj)
        t = t0 + b
        x = sol.y[:, -1]
        x = _project_level(fam, x, t) if kind == "chi" else _project_level_sphere(fam, x, t, r0)
        Fv = float(fam.value(x[None, :], t)[0])
        if not abs(Fv) <= RESIDUAL_TOL:
            raise StepUnderflow(f"re-projection failed at s = {b:.6g} (|F| = {abs(Fv):.2e})", traj)
        traj.s.append(float(b))
        traj.points.append(Point(x, t))
    return traj


def transport(fam: Family, start, s_target: float, tol: float = 1e-8,
              segments: int = 64) -> FlowTrajectory:
    """Move ``start`` along chi from level t to level t + s_target."""
    start = start if isinstance(start, SurfacePoint) else surface_point(fam, start)
    return _integrate(fam, start, float(s_target), tol, "chi", segments)


def xi_transport(fam: Family, start, s_target: float, tol: float = 1e-8,
                 segments: int = 64) -> FlowTrajectory:
    """Move ``start`` along the sphere-tangent field from level t to t + s_target."""
    start = start if isinstance(start, SurfacePoint) else surface_point(fam, start)
    return _integrate(fam, start, float(s_target), tol, "xi", segments)


def gronwall_check(traj: FlowTrajectory, A: float, tol: float = 1e-9) -> bool:
    """radius(s) <= radius(0) exp(|s| / A) (1 + tol) at every recorded step."""
    if A <= 0:
        raise ValueError("A must be positive")
    if len(traj) == 0:
        return True
    r = traj.radius
    s = np.asarray(traj.s, float)
    return bool(np.all(r <= r[0] * np.exp(np.abs(s) / A) * (1 + tol)))


def min_h_along(fam: Family, traj: FlowTrajectory) -> float:
    """min of |x| |grad t_M| over the recorded points."""
    X = np.array([p.x for p in traj.points])
    T = np.array([p.t for p in traj.points])
    G = fam.gradient(X, T)
    h = np.linalg.norm(X, axis=1) * np.linalg.norm(G[:, : fam.n], axis=1) / np.linalg.norm(G, axis=1)
    return float(np.min(h))
