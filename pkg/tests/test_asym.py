import json
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from levelcurv.asym import (AcvReport, classify_mu0, ec_fit, find_K0, h_values, limit_normal_cloud,
                            malgrange_profile, same_directions_at_c, sphericalness_report)
from levelcurv.families import builtin
from levelcurv.geom import Family

RADII = (10, 30, 100, 300, 1000)


@pytest.mark.parametrize("name, expected", [("sphere2", [0.0]), ("sphere3", [0.0]),
                                            ("broughton", []), ("linear", []), ("plane3", [])])
def test_find_K0_builtins(name, expected):
    got = find_K0(builtin(name), (-2, 2))
    assert len(got) == len(expected)
    for g, e in zip(got, expected):
        assert abs(g - e) < 1e-9


def test_find_K0_shifted_paraboloid():
    fam = Family.from_text("(x1 - 1)^2 + x2^2 - 2*t + 3", 2)
    got = find_K0(fam, (-5, 5))
    assert got == pytest.approx([1.5], abs=1e-9)
    assert find_K0(fam, (2, 5)) == []


def test_find_K0_values_have_witnesses():
    fam = Family.from_text("x1^3 - 3*x1 + x2^2 - t", 2)
    got = find_K0(fam, (-5, 5))
    assert got == pytest.approx([-2.0, 2.0], abs=1e-9)
    for v, x1 in zip(got, (1.0, -1.0)):
        X = np.array([[x1, 0.0]])
        assert abs(fam.value(X, v)[0]) <= 1e-9
        assert np.linalg.norm(fam.gradient(X, v)[0, :2]) <= 1e-7


def test_linear_mu0_is_exact():
    rep = malgrange_profile(builtin("linear"), 0.0, radii=RADII, budget=100)
    np.testing.assert_allclose(rep.mu0, np.array(RADII) / math.sqrt(2), rtol=1e-6)
    assert rep.fitted_slope == pytest.approx(1.0, abs=1e-3)
    assert rep.classification == "malgrange_holds"


def test_sphere_is_vacuous():
    rep = malgrange_profile(builtin("sphere2"), 1.0, radii=RADII, budget=100)
    assert rep.classification == "vacuous_compact"
    assert all(m == math.inf for m in rep.mu0)


def _path_h(R):
    # along x1 = s, x2 = s - 1/(2s), t = s/2 + s^3 the level t_M tends to 0 as s -> 0
    fam = builtin("broughton")
    s = brentq(lambda s: math.hypot(s, s - 1 / (2 * s)) - R, 1e-9, 0.5)
    X = np.array([[s, s - 1 / (2 * s)]])
    t = s / 2 + s**3
    return float(h_values(fam, X, np.array([t]))[0]), t


@pytest.mark.parametrize("R", [30.0, 300.0])
def test_broughton_mu0_below_path_envelope(R):
    h, t = _path_h(R)
    assert abs(t) <= 0.1
    rep = malgrange_profile(builtin("broughton"), 0.0, radii=(R,), budget=200)
    assert rep.mu0[0] <= h * (1 + 1e-9)
    assert rep.mu0[0] == pytest.approx(1 / (4 * R), rel=0.05)


def test_classify_synthetic():
    r = np.array(RADII, float)
    assert classify_mu0(r, 2.0 + 0 * r)[1] == "malgrange_holds"
    assert classify_mu0(r, 1 / r)[1] == "acv_with_exponent"
    assert classify_mu0(r, [math.inf] * 5)[1] == "vacuous_compact"
    assert classify_mu0(r, [1, 5, 0.2, 3, 0.01])[1] == "inconclusive"


def test_acv_json_fields_round_trip():
    rep = AcvReport(0.5, 0.1, [10.0, 20.0], [0.3, math.inf], math.nan, "inconclusive")
    d = json.loads(rep.to_json())
    assert set(d) >= {"c", "epsilon", "radii", "mu0", "fitted_slope", "classification"}
    assert d["mu0"][1] is None and d["fitted_slope"] is None
    back = AcvReport.from_json(rep.to_json())
    assert back.mu0 == [0.3, math.inf] and math.isnan(back.fitted_slope)


def test_ec_fit_synthetic_power_law():
    dt = np.geomspace(1e-4, 0.1, 40)
    assert ec_fit(np.r_[dt, -dt], np.r_[3 * dt**0.5, 3 * dt**0.5]) == pytest.approx(0.5, abs=1e-9)
    assert ec_fit(dt, np.full(40, 2.0)) == pytest.approx(0.0, abs=1e-9)


def test_sphericalness_examples():
    lin = sphericalness_report(builtin("linear"), 0.0, budget=100)
    assert lin.verdict == "spherical" and lin.defect <= 0.1
    b0 = sphericalness_report(builtin("broughton"), 0.0, budget=200)
    assert b0.verdict == "not_spherical" and b0.defect >= 0.9
    b1 = sphericalness_report(builtin("broughton"), 1.0, budget=200)
    assert b1.verdict == "spherical" and b1.ec_estimate < 0.95
    sp = sphericalness_report(builtin("sphere3"), 1.0, budget=50)
    assert sp.verdict == "vacuous_compact"
    for rep in (lin, b0, b1, sp):
        assert 0.0 <= rep.defect <= 1.0 or sp is rep
        d = json.loads(rep.to_json())
        assert {"c", "ec_estimate", "defect", "verdict"} <= set(d)


def test_cloud_examples():
    assert len(limit_normal_cloud(builtin("sphere2"), 1.0, r_min=10.0)) == 0
    cl = limit_normal_cloud(builtin("plane3"), 0.0, r_min=100.0, budget=100, grid_h=0.1)
    np.testing.assert_allclose(np.abs(cl.v[:, 0]), 1.0, atol=1e-12)
    assert cl.occupancy <= 2 * (0.1 / math.pi) ** 2
    np.testing.assert_allclose(np.linalg.norm(cl.u, axis=1), 1.0, atol=1e-10)
    text = cl.to_csv()
    assert text.splitlines()[0] == "u1,u2,u3,v1,v2,v3,radius,tval"
    bc = limit_normal_cloud(builtin("broughton"), 0.0, r_min=100.0, budget=200)
    dots = np.einsum("ij,ij->i", bc.u, bc.v)
    hit = (np.abs(dots) > 0.99) & (bc.u[:, 1] < -0.99)
    assert hit.any()


@pytest.mark.parametrize("name, c", [("linear", 0.0), ("broughton", 1.0), ("plane3", 0.5)])
def test_defect_decays_where_malgrange_holds(name, c):
    fam = builtin(name)
    defects = []
    for r in (50.0, 100.0, 200.0):
        cl = limit_normal_cloud(fam, c, r_min=r, budget=100, radius_steps=2)
        defects.append(float(np.max(np.abs(np.einsum("ij,ij->i", cl.u, cl.v)))))
    assert defects[-1] < 0.1
    assert defects[-1] <= defects[0] + 1e-12


@pytest.mark.parametrize("name, c", [("linear", 0.0), ("broughton", 1.0)])
def test_directions_at_c_match_slab(name, c):
    cl = limit_normal_cloud(builtin(name), c, r_min=100.0, budget=200, grid_h=0.1)
    assert same_directions_at_c(cl, c)
