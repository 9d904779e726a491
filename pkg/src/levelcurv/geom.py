"""Implicit geometry of M = {F = 0} in R^n x R and of its levels T_c.

For a point p = (x, t) of M:

* ``nu``      unit normal grad F / |grad F| = (nu_x, nu_t)
* ``grad_tM`` gradient of the parameter projection t restricted to M,
              -dF/dt dxF / |grad F|^2 + |dxF|^2 / |grad F|^2 e_t
* ``N``       Gauss map of the family, nu_x / |nu_x|
* ``kappa``   Gauss-Kronecker curvature of T_t at x, oriented by dxF

Everything is available pointwise (:func:`surface_point`) and batched
(:func:`frames`), the batched path being the one samplers use.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .poly import Point, Polynomial, grad, hessian, parse, stack_eval

SINGULAR_GRAD = 1e-12
CRITICAL_DX = 1e-12
SURFACE_RESIDUAL = 1e-9


class NotOnSurface(ValueError):
    pass


class SingularGradient(ValueError):
    """|grad F| vanishes on M: 0 is not a regular value of F."""


class CriticalPointError(ValueError):
    """N and kappa are undefined where dxF = 0."""


class Family:
    """A one-parameter family T_t = {x : F(x, t) = 0} given by a polynomial F."""

    def __init__(self, F: Polynomial, name: str | None = None):
        self.F = F
        self.n = F.nvars
        self.name = name
        self.gradF = grad(F)
        self.hessF = hessian(F)

    @classmethod
    def from_text(cls, text: str, nvars: int, name: str | None = None) -> "Family":
        return cls(parse(text, nvars), name=name)

    def __repr__(self) -> str:
        label = f"{self.name}: " if self.name else ""
        return f"Family({label}{self.F}, n={self.n})"

    @cached_property
    def _hess_upper(self):
        m = self.n + 1
        idx = [(i, j) for i in range(m) for j in range(i, m)]
        return idx, [self.hessF[i][j] for i, j in idx]

    # batched evaluation; X has shape (..., n), t broadcasts against X[..., 0]

    @staticmethod
    def _stack(X, t):
        X = np.asarray(X, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), X.shape[:-1])
        return np.concatenate([X, t[..., None]], axis=-1)

    def value(self, X, t):
        return self.F(self._stack(X, t))

    def gradient(self, X, t):
        """Full gradient (dF/dx1..dF/dxn, dF/dt), shape (..., n+1)."""
        return stack_eval(self.gradF, self._stack(X, t))

    def hess(self, X, t):
        pts = self._stack(X, t)
        m = self.n + 1
        idx, polys = self._hess_upper
        vals = stack_eval(polys, pts)
        H = np.empty(pts.shape[:-1] + (m, m))
        for k, (i, j) in enumerate(idx):
            H[..., i, j] = vals[..., k]
            H[..., j, i] = vals[..., k]
        return H

    def value_grad_x(self, X, t):
        """F and the x-gradient only (cheap path for shell tests and Newton)."""
        pts = self._stack(X, t)
        return self.F(pts), stack_eval(self.gradF[:-1], pts)


def householder_complement(N: np.ndarray) -> np.ndarray:
    """Orthonormal basis of N-perp for unit vectors N of shape (..., n).

    Returns shape (..., n, n-1).  Built from the Householder reflector that
    swaps N with +-e1, so the basis is a deterministic function of N.
    """
    N = np.asarray(N, dtype=float)
    n = N.shape[-1]
    s = np.where(N[..., 0] >= 0, 1.0, -1.0)
    w = N.copy()
    w[..., 0] += s
    ww = np.einsum("...i,...i->...", w, w)
    H = np.eye(n) - 2.0 * w[..., :, None] * w[..., None, :] / ww[..., None, None]
    return H[..., :, 1:]


@dataclass(frozen=True)
class Frames:
    """Batched first/second-order data at points of M (arrays over the batch)."""

    X: np.ndarray
    t: np.ndarray
    F: np.ndarray
    grad: np.ndarray        # (k, n+1)
    nu: np.ndarray          # (k, n+1)
    grad_tM: np.ndarray     # (k, n+1)
    dx_norm: np.ndarray     # |dxF|
    critical: np.ndarray    # bool, |dxF| < CRITICAL_DX
    N: np.ndarray           # (k, n); NaN rows at critical points
    kappa: np.ndarray       # (k,); NaN at critical points

    @property
    def grad_tM_norm(self) -> np.ndarray:
        return self.dx_norm / np.linalg.norm(self.grad, axis=-1)

    def __len__(self) -> int:
        return self.t.shape[0]


def frames(fam: Family, X, t, with_curvature: bool = True) -> Frames:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), X.shape[:-1]).copy()
    n = fam.n
    Fv = np.atleast_1d(fam.value(X, t))
    G = fam.gradient(X, t)
    gnorm = np.linalg.norm(G, axis=-1)
    if np.any(gnorm < SINGULAR_GRAD):
        raise SingularGradient("|grad F| below 1e-12 on M")
    nu = G / gnorm[:, None]
    dx = G[:, :n]
    dx_norm = np.linalg.norm(dx, axis=-1)
    g2 = gnorm**2
    grad_tM = np.empty_like(G)
    grad_tM[:, :n] = -(G[:, n] / g2)[:, None] * dx
    grad_tM[:, n] = dx_norm**2 / g2
    critical = dx_norm < CRITICAL_DX
    safe = np.where(critical, 1.0, dx_norm)
    N = dx / safe[:, None]
    N[critical] = np.nan
    kappa = np.full(len(t), np.nan)
    if with_curvature and np.any(~critical):
        ok = ~critical
        Hx = fam.hess(X[ok], t[ok])[:, :n, :n]
        kappa[ok] = _kappa_from(Hx, N[ok], dx_norm[ok])
    return Frames(X, t, Fv, G, nu, grad_tM, dx_norm, critical, N, kappa)


def _kappa_from(Hx: np.ndarray, N: np.ndarray, dx_norm: np.ndarray) -> np.ndarray:
    n = N.shape[-1]
    if n == 1:
        return np.ones(len(N))
    B = householder_complement(N)
    S = np.einsum("kia,kij,kjb->kab", B, Hx, B) / dx_norm[:, None, None]
    if n == 2:
        return S[:, 0, 0]
    return np.linalg.det(S)


# ---------------------------------------------------------------------------
# single-point API


@dataclass(frozen=True)
class SurfacePoint:
    p: Point
    nu: np.ndarray
    nu_x: np.ndarray
    nu_t: float
    grad_tM: np.ndarray
    N: np.ndarray | None
    kappa: float | None
    critical: bool

    @property
    def grad_tM_norm(self) -> float:
        return float(np.linalg.norm(self.grad_tM))


def surface_point(fam: Family, p: Point, residual_tol: float = SURFACE_RESIDUAL) -> SurfacePoint:
    if p.n != fam.n:
        raise ValueError(f"point has {p.n} x-coordinates, family has n={fam.n}")
    X = np.array([p.x])
    Fv = float(fam.value(X, p.t)[0])
    if not abs(Fv) <= residual_tol:
        raise NotOnSurface(f"|F(p)| = {abs(Fv):.3e} exceeds {residual_tol:.1e}")
    fr = frames(fam, X, p.t)
    crit = bool(fr.critical[0])
    return SurfacePoint(
        p=p,
        nu=fr.nu[0],
        nu_x=fr.nu[0, : fam.n],
        nu_t=float(fr.nu[0, fam.n]),
        grad_tM=fr.grad_tM[0],
        N=None if crit else fr.N[0],
        kappa=None if crit else float(fr.kappa[0]),
        critical=crit,
    )


def gauss_map(sp: SurfacePoint) -> np.ndarray:
    if sp.critical:
        raise CriticalPointError("Gauss map undefined at a critical point of t_M")
    return sp.N


def kronecker_curvature(fam: Family, sp: SurfacePoint) -> float:
    if sp.critical:
        raise CriticalPointError("curvature undefined at a critical point of t_M")
    return sp.kappa
