"""Averages over hyperplanes through the origin of Euler characteristics of
sections of the levels of f.

For a hyperplane H (a line for n = 2, a plane for n = 3):

* n odd:  chi(f^-1(t) & H)
* n even: chi({f >= t} & H) - chi({f <= t} & H)

On a line the second quantity is exact from the real roots of f - t
restricted to the line: with simple roots the open pieces alternate in sign
and every piece (closed up) is an interval or ray of Euler characteristic 1,
so the value is #positive pieces - #negative pieces.  The measure on
hyperplanes is normalized to total mass 1.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .geom import Family, householder_complement
from .poly import Polynomial
from .sample import trace_level_curve
from .streams import pmap, stream

ROOT_IMAG_TOL = 1e-9
SIMPLE_ROOT_TOL = 1e-9


class RootIsolationFailure(RuntimeError):
    """The section is degenerate (tangency or a vanishing restriction)."""


@dataclass(frozen=True)
class Hyperplane:
    normal: np.ndarray

    def __post_init__(self):
        nv = np.asarray(self.normal, float)
        if abs(np.linalg.norm(nv) - 1.0) > 1e-12:
            raise ValueError("hyperplane normal must be a unit vector")

    @property
    def n(self) -> int:
        return len(self.normal)

    def basis(self) -> np.ndarray:
        """Orthonormal basis of H as columns, shape (n, n-1)."""
        return householder_complement(np.asarray(self.normal, float))


def _canonical(v: np.ndarray) -> np.ndarray:
    # antipodal identification: last nonzero coordinate positive
    nz = np.nonzero(v)[0]
    if nz.size and v[nz[-1]] < 0:
        v = -v
    return v


def random_hyperplane(n: int, seed: int, index: int = 0, attempt: int = 0) -> Hyperplane:
    """Uniform hyperplane through the origin, deterministic in (seed, index, attempt)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    g = stream(seed, index, attempt).standard_normal(n)
    v = g / np.linalg.norm(g)
    return Hyperplane(_canonical(v))


def _x_only(f: Polynomial) -> Polynomial:
    if any(e[-1] for e, _ in f.terms):
        raise ValueError("f must not depend on t")
    return f


def line_coefficients(f: Polynomial, d: np.ndarray) -> np.ndarray:
    """Coefficients (ascending powers of s) of s -> f(s d)."""
    n = f.nvars
    deg = f.degree
    c = np.zeros(deg + 1)
    for e, coef in f.terms:
        c[sum(e[:n])] += coef * np.prod([d[j] ** e[j] for j in range(n)])
    return c


def _line_euler(coeffs: np.ndarray) -> int:
    """#positive - #negative open pieces of the line cut by the roots of p."""
    c = np.array(coeffs, float)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        raise RootIsolationFailure("f - t vanishes identically on the line")
    c[np.abs(c) <= 1e-14 * scale] = 0.0
    nz = np.nonzero(c)[0]
    deg = int(nz[-1])
    lead = c[deg]
    if deg == 0:
        return 1 if lead > 0 else -1
    roots = np.roots(c[: deg + 1][::-1])
    im = np.abs(roots.imag) / (1 + np.abs(roots))
    real = np.sort(roots[im <= ROOT_IMAG_TOL].real)
    # a near-real complex pair or a multiple root is a tangency
    if np.any((im > ROOT_IMAG_TOL) & (im <= 1e-6)):
        raise RootIsolationFailure("nearly tangent section")
    dp = np.polynomial.polynomial.polyder(c[: deg + 1])
    for r in real:
        slope = np.polynomial.polynomial.polyval(r, dp)
        size = np.polynomial.polynomial.polyval(abs(r), np.abs(c[: deg + 1]))
        if abs(slope) * (1 + abs(r)) <= SIMPLE_ROOT_TOL * size:
            raise RootIsolationFailure("multiple root on the line")
    k = len(real)
    sign_right = 1 if lead > 0 else -1
    # pieces from right to left alternate in sign starting with sign_right
    signs = [sign_right * (-1) ** i for i in range(k + 1)]
    return int(sum(signs))


def _plane_restriction(f: Polynomial, B: np.ndarray) -> Polynomial:
    """f(B y) as a polynomial in y = (y1, y2)."""
    n = f.nvars
    m = B.shape[1]
    ys = [Polynomial.variable(m, k) for k in range(m)]
    lin = []
    for j in range(n):
        p = Polynomial(m, ())
        for k in range(m):
            if B[j, k] != 0.0:
                p = p + float(B[j, k]) * ys[k]
        lin.append(p)
    out = Polynomial(m, ())
    for e, coef in f.terms:
        term = Polynomial(m, (((0,) * (m + 1), coef),))
        for j in range(n):
            if e[j]:
                term = term * lin[j] ** e[j]
        out = out + term
    return out


def euler_of_section(f: Polynomial, t: float, H: Hyperplane, box_radius: float = 20.0,
                     cell: float | None = None) -> int:
    """Euler characteristic of the section (see module docstring for parity)."""
    f = _x_only(f)
    n = f.nvars
    if H.n != n:
        raise ValueError("hyperplane dimension does not match f")
    if n == 2:
        d = H.basis()[:, 0]
        c = line_coefficients(f, d)
        c[0] -= t
        return _line_euler(c)
    if n == 3:
        g = _plane_restriction(f, H.basis())
        fam = Family(g - Polynomial.variable(2, 2))
        cell = cell if cell is not None else box_radius / 200
        try:
            comps = trace_level_curve(fam, t, box_radius, cell)
        except Exception as exc:       # singular section curve
            raise RootIsolationFailure(str(exc)) from exc
        # closed loops have chi = 0, arcs reaching the box boundary chi = 1
        return sum(0 if pl.closed else 1 for pl in comps)
    raise ValueError("sections are implemented for n = 2 and n = 3")


@dataclass
class EulerAverage:
    t: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    failures: np.ndarray    # redraws needed, per t (shared hyperplanes: same for all t)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,mean,stderr,failures\n")
        for i in range(len(self.t)):
            buf.write(f"{float(self.t[i])!r},{float(self.mean[i])!r},{float(self.stderr[i])!r},"
                      f"{int(self.failures[i])}\n")
        return buf.getvalue()


def average_euler(f: Polynomial, tgrid, draws: int = 1000, box_radius: float = 20.0, seed: int = 0,
                  max_redraws: int = 20, workers=None) -> EulerAverage:
    """Mean section Euler characteristic over ``draws`` random hyperplanes.

    The same hyperplanes are used for every t (common random numbers).  A
    hyperplane degenerate at any t is replaced for all t by the next attempt
    of its stream.
    """
    f = _x_only(f)
    tgrid = np.asarray(tgrid, float)

    def one(i):
        for attempt in range(max_redraws + 1):
            H = random_hyperplane(f.nvars, seed, i, attempt)
            try:
                return [euler_of_section(f, float(t), H, box_radius) for t in tgrid], attempt
            except RootIsolationFailure:
                continue
        return None, max_redraws + 1

    res = pmap(one, range(draws), workers)
    vals = np.array([v for v, _ in res if v is not None], float).reshape(-1, len(tgrid))
    fails = sum(a for _, a in res)
    k = len(vals)
    if k == 0:
        nan = np.full(len(tgrid), math.nan)
        return EulerAverage(tgrid, nan, nan, np.full(len(tgrid), fails))
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(k) if k > 1 else np.zeros(len(tgrid))
    return EulerAverage(tgrid, mean, se, np.full(len(tgrid), fails))
