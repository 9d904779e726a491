import math

import numpy as np
import pytest

from levelcurv.families import builtin
from levelcurv.flow import (DegenerateSphericalComponent, FlowTrajectory, NearCritical,
                            gronwall_check, min_h_along, transport, xi_transport)
from levelcurv.geom import surface_point
from levelcurv.poly import Point
from levelcurv.sample import trace_level_curve


def test_sphere_transport_endpoint():
    fam = builtin("sphere2")
    traj = transport(fam, Point((1.0, 0.0), 1.0), 0.21)
    np.testing.assert_allclose(traj.end.x, [1.1, 0.0], atol=1e-5)
    assert traj.end.t == pytest.approx(1.21, abs=1e-12)
    assert np.all(np.abs(fam.value(np.array([p.x for p in traj.points]), traj.level)) <= 1e-8)
    # x(s) = sqrt(1 + s) e1 along the whole path
    np.testing.assert_allclose(traj.radius, np.sqrt(1 + np.array(traj.s)), atol=1e-8)


def test_linear_transport_endpoint():
    traj = transport(builtin("linear"), Point((0.0, 0.0), 0.0), 1.0)
    np.testing.assert_allclose(traj.end.x, [1.0, 0.0], atol=1e-10)
    assert traj.end.t == 1.0


def test_near_critical_abort_keeps_partial_trajectory():
    with pytest.raises(NearCritical) as err:
        transport(builtin("sphere2"), Point((1e-9, 0.0), 1e-18), 0.5)
    assert err.value.trajectory is not None and len(err.value.trajectory) >= 1
    with pytest.raises(NearCritical) as err:
        transport(builtin("sphere2"), Point((0.1, 0.0), 0.01), -0.02)
    assert len(err.value.trajectory) >= 1


def test_level_clock():
    traj = transport(builtin("broughton"), Point((1.0, 0.0), 1.0), 0.4, tol=1e-8)
    clock = np.abs(traj.level - traj.level[0] - np.array(traj.s))
    assert clock.max() <= 10 * 1e-8


def test_reversibility():
    fam = builtin("sphere2")
    x0 = np.array([math.cos(0.3), math.sin(0.3)])
    fwd = transport(fam, Point(x0, 1.0), 0.5)
    back = transport(fam, fwd.end, -0.5)
    np.testing.assert_allclose(back.end.x, x0, atol=100 * 1e-8)
    fam = builtin("broughton")
    fwd = transport(fam, Point((1.0, 0.0), 1.0), 0.3)
    back = transport(fam, fwd.end, -0.3)
    np.testing.assert_allclose(back.end.x, [1.0, 0.0], atol=100 * 1e-8)


def test_fiber_transport_preserves_order():
    fam = builtin("sphere2")
    pl = trace_level_curve(fam, 1.0, 2.0, 0.05, max_turn=0.02)[0]
    assert len(pl) >= 200
    idx = np.linspace(0, len(pl) - 1, 200).astype(int)
    ends = np.array([transport(fam, Point(v, 1.0), 0.5, segments=8).end.x for v in pl.vertices[idx]])
    assert np.all(np.abs(fam.value(ends, 1.5)) <= 1e-8)
    a0 = np.unwrap(np.arctan2(pl.vertices[idx, 1], pl.vertices[idx, 0]))
    a1 = np.unwrap(np.arctan2(ends[:, 1], ends[:, 0]))
    assert np.all(np.diff(a0) > 0) and np.all(np.diff(a1) > 0)


def test_gronwall_examples():
    fam = builtin("sphere2")
    traj = transport(fam, Point((1.0, 0.0), 1.0), 0.21)
    A = min_h_along(fam, traj)
    assert A == pytest.approx(2 / math.sqrt(5), rel=1e-6)
    assert gronwall_check(traj, A)
    synth = FlowTrajectory(None, [0.0, 0.01], [Point((1.0, 0.0), 0.0), Point((2.0, 0.0), 0.01)])
    assert not gronwall_check(synth, 1.0)
    assert gronwall_check(FlowTrajectory(None), 1.0)
    with pytest.raises(ValueError):
        gronwall_check(traj, 0.0)


def test_csv_header():
    traj = transport(builtin("linear"), Point((0.0, 2.0), 0.0), 0.5, segments=4)
    lines = traj.to_csv().splitlines()
    assert lines[0] == "s,x1,x2,t,radius,level"
    assert len(lines) == 1 + len(traj) == 6


def test_xi_sphere_is_degenerate():
    with pytest.raises(DegenerateSphericalComponent):
        xi_transport(builtin("sphere2"), Point((1.0, 0.0), 1.0), 0.1)


def test_xi_linear_keeps_radius():
    traj = xi_transport(builtin("linear"), Point((0.0, 1.0), 0.0), 0.5)
    np.testing.assert_allclose(traj.radius, 1.0, atol=1e-6)
    assert traj.end.t == pytest.approx(0.5)
    assert traj.field_kind == "xi"


def test_xi_broughton_far_point():
    fam = builtin("broughton")
    # far point on the level t = 0.5 with x2 large
    x2 = 32.0
    x1 = (-1 + math.sqrt(1 + 4 * x2 * 0.5)) / (2 * x2)
    sp = surface_point(fam, Point((x1, x2), 0.5))
    traj = xi_transport(fam, sp, 0.3)
    np.testing.assert_allclose(traj.radius, traj.radius[0], atol=1e-6)
    assert np.all(np.diff(traj.level) > 0)
