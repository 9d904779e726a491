import math

import numpy as np
import pytest

from levelcurv.families import builtin
from levelcurv.geom import (CriticalPointError, Family, NotOnSurface, SingularGradient, frames,
                            gauss_map, householder_complement, kronecker_curvature, surface_point)
from levelcurv.poly import Point
from _support import points_on, random_family


def test_sphere_point_fields():
    sp = surface_point(builtin("sphere2"), Point((1.0, 0.0), 1.0))
    np.testing.assert_allclose(sp.grad_tM, [0.4, 0.0, 0.8], atol=1e-15)
    assert sp.grad_tM_norm == pytest.approx(2 / math.sqrt(5), abs=1e-15)
    np.testing.assert_allclose(gauss_map(sp), [1.0, 0.0])
    assert kronecker_curvature(builtin("sphere2"), sp) == pytest.approx(1.0, abs=1e-14)


def test_linear_point_fields():
    fam = builtin("linear")
    sp = surface_point(fam, Point((0.0, 5.0), 0.0))
    np.testing.assert_allclose(sp.nu, np.array([1.0, 0.0, -1.0]) / math.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(sp.grad_tM, [0.5, 0.0, 0.5], atol=1e-15)
    assert sp.grad_tM_norm == pytest.approx(1 / math.sqrt(2))
    np.testing.assert_allclose(gauss_map(sp), [1.0, 0.0])
    assert kronecker_curvature(fam, sp) == 0.0


def test_gauss_map_on_top_of_circle():
    sp = surface_point(builtin("sphere2"), Point((0.0, math.sqrt(2)), 2.0))
    np.testing.assert_allclose(gauss_map(sp), [0.0, 1.0], atol=1e-15)
    assert sp.kappa == pytest.approx(1 / math.sqrt(2), rel=1e-14)


@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
def test_sphere3_curvature(r):
    fam = builtin("sphere3")
    x = np.array([1.0, -2.0, 0.5])
    x *= r / np.linalg.norm(x)
    sp = surface_point(fam, Point(x, r * r))
    assert sp.kappa == pytest.approx(1 / r**2, rel=1e-12)


def test_critical_point_flag():
    fam = builtin("sphere2")
    sp = surface_point(fam, Point((0.0, 0.0), 0.0))
    assert sp.critical and sp.N is None and sp.kappa is None
    with pytest.raises(CriticalPointError):
        gauss_map(sp)
    with pytest.raises(CriticalPointError):
        kronecker_curvature(fam, sp)


def test_not_on_surface_and_singular_gradient():
    with pytest.raises(NotOnSurface):
        surface_point(builtin("sphere2"), Point((1.0, 0.0), 2.0))
    cusp = Family.from_text("x1^2 - x2^3 + t^2", 2)
    with pytest.raises(SingularGradient):
        surface_point(cusp, Point((0.0, 0.0), 0.0))


def test_householder_complement_is_orthonormal():
    rng = np.random.default_rng(3)
    N = rng.standard_normal((50, 4))
    N /= np.linalg.norm(N, axis=1, keepdims=True)
    B = householder_complement(N)
    np.testing.assert_allclose(np.einsum("kia,kib->kab", B, B), np.broadcast_to(np.eye(3), (50, 3, 3)),
                               atol=1e-14)
    np.testing.assert_allclose(np.einsum("ki,kia->ka", N, B), 0.0, atol=1e-14)


@pytest.mark.parametrize("seed", range(10))
def test_surface_point_invariants(seed):
    fam = random_family(seed, 2 + seed % 2)
    X, T = points_on(fam, 100, seed)
    fr = frames(fam, X, T)
    n = fam.n
    et = np.zeros(n + 1)
    et[n] = 1.0
    np.testing.assert_allclose(np.linalg.norm(fr.nu, axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.einsum("ki,ki->k", fr.nu, fr.grad_tM), 0.0, atol=1e-10)
    np.testing.assert_allclose(np.linalg.norm(fr.grad_tM, axis=1), fr.grad_tM_norm, atol=1e-10)
    proj = et - fr.nu[:, n:] * fr.nu
    np.testing.assert_allclose(fr.grad_tM, proj, atol=1e-10)


def test_batched_frames_match_single_points():
    fam = random_family(4, 3)
    X, T = points_on(fam, 20, 4)
    fr = frames(fam, X, T)
    for k in range(len(T)):
        sp = surface_point(fam, Point(X[k], T[k]))
        np.testing.assert_array_equal(sp.grad_tM, fr.grad_tM[k])
        assert sp.kappa == fr.kappa[k]
