import math

import numpy as np
import pytest

from levelcurv.curv import (CurvatureProfile, curvature_at, degree_crosscheck,
                            detect_discontinuities, profile, total_curvature_at)
from levelcurv.families import builtin

TWO_PI = 2 * math.pi


def test_circle_total_curvature():
    K, A, err = total_curvature_at(builtin("sphere2"), 4.0, ball_radius=3.0)
    assert K == pytest.approx(TWO_PI, abs=1e-3)
    assert A == pytest.approx(TWO_PI, abs=1e-3)
    assert err < 1e-3


@pytest.mark.parametrize("c", [-2.0, 0.0, 3.5])
def test_linear_family_is_flat(c):
    K, A, _ = total_curvature_at(builtin("linear"), c)
    assert K == 0.0 and A == 0.0


def test_broughton_tracer_vs_shell():
    fam = builtin("broughton")
    K, A, err = total_curvature_at(fam, 1.0, ball_radius=50.0)
    assert math.isfinite(A) and A > 3
    # refined tracer as ground truth
    fine = curvature_at(fam, 1.0, budget=4 * 160_000, ball_radius=50.0)
    assert abs(fine.absK - A) <= err + fine.err + 1e-2
    sh = curvature_at(fam, 1.0, "thin_shell", budget=20_000, ball_radius=50.0, seed=1)
    assert abs(sh.absK - A) <= 3 * (sh.err + err)


def test_circle_tracer_vs_shell():
    fam = builtin("sphere2")
    tr = curvature_at(fam, 1.0, ball_radius=2.0)
    sh = curvature_at(fam, 1.0, "thin_shell", budget=20_000, ball_radius=2.0, seed=0)
    assert abs(tr.K - sh.K) <= 2 * sh.err


def test_empty_level_flag():
    r = curvature_at(builtin("sphere2"), -1.0)
    assert r.empty and (r.K, r.absK, r.err) == (0.0, 0.0, 0.0)


def test_thin_shell_works_in_three_dimensions():
    r = curvature_at(builtin("sphere3"), 1.0, "thin_shell", budget=20_000, ball_radius=2.0, seed=0)
    assert r.K == pytest.approx(4 * math.pi, abs=4 * r.err)


@pytest.mark.parametrize("name, cs", [("sphere2", (0.5, 1.0, 2.0)), ("linear", (-1.0, 0.0, 1.0))])
def test_degree_crosscheck_builtins(name, cs):
    fam = builtin(name)
    for c in cs:
        Kd, Ad = degree_crosscheck(fam, c, ball_radius=5.0)
        K, A, _ = total_curvature_at(fam, c, ball_radius=5.0)
        assert Kd == pytest.approx(K, rel=0.03, abs=1e-12)
        assert Ad == pytest.approx(A, rel=0.03, abs=1e-12)


def test_circle_profile_constant():
    prof = profile(builtin("sphere2"), 0.5, 4.0, 30)
    np.testing.assert_allclose(prof.absK, TWO_PI, rtol=0.02)
    assert detect_discontinuities(prof, fam=builtin("sphere2")) == []
    assert all(f == set() for f in prof.flags)


def test_circle_profile_through_critical_value():
    prof = profile(builtin("sphere2"), -1.0, 1.0, 21)
    for t, f in zip(prof.tgrid, prof.flags):
        if t < -1e-12:
            assert "empty" in f
    near = [round(t, 9) for t, f in zip(prof.tgrid, prof.flags) if "near_K0" in f]
    assert near == [-0.1, 0.0, 0.1]
    assert detect_discontinuities(prof) == []


def test_profile_invariant_triangle():
    prof = profile(builtin("broughton"), 0.5, 1.5, 5, ball_radius=20.0)
    assert np.all(np.abs(prof.K) <= prof.absK + 2 * prof.err)


def test_synthetic_step_profile():
    t = np.linspace(0, 1, 11)
    A = np.where(t < 0.45, 1.0, 11.0)
    prof = CurvatureProfile(t, A, A, np.full(11, 0.1), [set()] * 11)
    assert detect_discontinuities(prof, 5.0) == [(0.4, 0.5)]
    assert prof.flags[4] == {"discontinuity_left"} and prof.flags[5] == {"discontinuity_right"}


def test_noisy_constant_profile():
    rng = np.random.default_rng(11)
    t = np.linspace(0, 1, 50)
    A = 3.0 + 0.1 * rng.standard_normal(50)
    prof = CurvatureProfile(t, A, A, np.full(50, 0.1), [set()] * 50)
    assert detect_discontinuities(prof, 5.0) == []


def test_csv_round_trip():
    prof = profile(builtin("sphere2"), -0.5, 1.0, 4)
    text = prof.to_csv()
    assert text.splitlines()[0] == "t,K,absK,err,flag"
    back = CurvatureProfile.from_csv(text)
    assert back.to_csv() == text
    assert back.flags == prof.flags


def test_grid_must_increase():
    with pytest.raises(ValueError):
        CurvatureProfile([0.0, 0.0], [1, 1], [1, 1], [0, 0], [set(), set()])


def test_per_component_continuity_at_regular_value():
    fam = builtin("broughton")
    comps = [sorted(a for _, a in curvature_at(fam, c, ball_radius=50.0).components)
             for c in (0.95, 1.0, 1.05)]
    assert len({len(c) for c in comps}) == 1
    for a, b in zip(comps, comps[1:]):
        np.testing.assert_allclose(a, b, rtol=0.05, atol=0.05)
