"""Numerical verification of curvature identities for Hermitian and
Kaehler-Einstein model manifolds on the unit sphere bundle."""

from .errors import (ChartDomainError, ConstantHError, ConvergenceError,
                     DegenerateMetricError, DegeneratePlaneError,
                     DegenerateRatioError, FlatModelError, FrameError,
                     GeometryError, JetOrderError, ModelSpecError,
                     NotEinsteinError, NotNormalizedError)
from .geometry import (ChartPoint, CurvatureData, Frame, MetricJet, build_frame,
                       chart_curvature, curvature, einstein_constant,
                       finite_difference_metric_jet, frame_j, max_abs_sec,
                       metric_jet, point, sectional, standard_j)
from .hermitian import (ComplexStructureField, HermitianData, QuarticForm,
                        StarCurvature, bisectional, hermitian_data,
                        holomorphic_sec, nabla_j, quartic_form, star_curvature,
                        validate_hermitian)
from .fiber import (FiberStats, avg_max_ratio_check, berger_average_check,
                    einstein_fiber_checks, fiber_max, h_stats, rayleigh_check,
                    sphere_laplacian_identity_check, variance_identity_check,
                    vertical_gradient_sq_average)
from .gray import (LiftedGradient, UnitTangent, gray_l_value, horizontal_gradient,
                   l_h_squared_check, l_h_squared_integral_check, l_h_squared_value,
                   lifted_gradient, surface_identity_checks, tangent_data,
                   vertical_gradient)
from .models import (CATALOG_SPECS, Chart, ModelManifold, ModelSpec, catalog_model,
                     complex_hyperbolic, conformal, flat_torus, fubini_study,
                     make_model, normalize, parse_spec_file, product,
                     round_sphere, scaled, spec)
from .moments import (MomentTable, fiber_average, integrate_fiber, moment_table,
                      monomial_moment, sphere_volume)
from .polynomials import SymPoly
from .report import VerificationReport, to_csv, to_json_lines, to_table

__version__ = "0.1.0"
