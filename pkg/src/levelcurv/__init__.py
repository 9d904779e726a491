"""Numerical experiments on the total curvature of the levels of a polynomial
family and on its regularity at infinity."""

__version__ = "0.1.0"

from .poly import Point, Polynomial, PolynomialSyntaxError, parse, to_text, evaluate, grad, hessian
from .geom import Family, SurfacePoint, surface_point, gauss_map, kronecker_curvature, frames
from .families import builtin, list_builtin
from .sample import newton_project, trace_level_curve, thin_shell_samples, EmptyLevelInBall
from .curv import (CurvatureProfile, total_curvature_at, profile, degree_crosscheck,
                   detect_discontinuities)
from .asym import (AcvReport, SphericalnessReport, NormalCloud, find_K0, malgrange_profile,
                   sphericalness_report, limit_normal_cloud)
from .flow import FlowTrajectory, transport, xi_transport, gronwall_check
from .crofton import Hyperplane, random_hyperplane, euler_of_section, average_euler
