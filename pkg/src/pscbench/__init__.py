"""Numerical workbench for scalar-curvature descent from X x S^1 to X.

Pipeline: normal decomposition and angle check, ellipticity test, bump
forcing, anisotropic elliptic Dirichlet solve on X x [-1, 1], then a
Gauss-Codazzi/conformal certificate of pointwise scalar-curvature
positivity on X.
"""

__version__ = "0.1.0"

from .config import RunConfig, parse_config
from .conformal import (CertificateReport, ConformalFactors, certificate,
                        chain_scalar, chain_scalar_exact, conformal_ricci_normal,
                        conformal_scalar, conformal_second_fundamental,
                        exact_slice_scalar, k2_field, laplacian_comparison,
                        lift_solution, select_C, slice_laplacian_identity)
from .curvature import (HypersurfaceData, curvature_bundle, gauss_codazzi_scalar,
                        hypersurface_data, laplacian, ricci, scalar_curvature)
from .errors import (ConfigError, HypothesisViolation, NumericalFailure,
                     PscbenchError)
from .forcing import ForcingSpec, build_bump, calibrate_epsilon
from .grids import (SPHERE, TORUS, DiscreteDomain, DomainSpec, build_domain,
                    c1_norm, lp_norm, w_domains, with_circle)
from .metrics import (MetricField, conformal_metric, load_metric_csv,
                      make_metric, product_extend, restrict_metric)
from .normal import (NormalFrame, angle_field, decompose_normal,
                     ellipticity_minors, normal_frame, unit_normal)
from .pipeline import run_scenario
from .report import RunReport, emit_report, parse_report, render_report
from .solver import (OperatorAssembly, SolveReport, assemble, dtt_monitor,
                     solve_dirichlet)
