"""curvflow: a finite-difference laboratory for geometric flows.

Evolves embedded manifolds under mean curvature flow (and metrics under
Ricci flow) on periodic or band chart grids, and verifies the induced
evolution of the metric and curvature tensors by independent
finite-difference computation.
"""

from .calculus import (bianchi_residual_field, christoffel,
                       covariant_derivative, laplace_beltrami,
                       partial_derivative, raise_index, ricci_and_scalar,
                       ricci_identity_residual_field, riemann_covariant,
                       riemann_mixed, tensor_laplacian)
from .checks import (CHECKS, resolve_check, run_evolution_checks,
                     run_static_checks)
from .convergence import convergence_study
from .embedding import (gauss_tensor, induced_metric, mean_curvature_vector,
                        riemann_extrinsic, tangency_residual_field)
from .fields import (AmbientSignature, DegenerateEmbeddingError,
                     DegenerateMetricError, EmbeddingField, MetricField,
                     TensorField, euclidean_signature)
from .flow import (FlowConfigError, FlowState, FlowTrajectory,
                   IntegratorConfig, integrate_mcf, integrate_ricci_flow,
                   mcf_rhs, metric_evolution_rhs, ricci_flow_step, suggest_dt)
from .grid import ChartGrid, ghost_band_grid, periodic_grid
from .scenarios import Scenario, ScenarioError, make_scenario, scenario_names
from .verify import (CurvaturePack, ResidualEntry, ResidualReport, b_tensor,
                     curvature_pack, fd_time_derivative, rhs_eq10, rhs_eq18,
                     rhs_eq20, rhs_eq21, rhs_eq22, rhs_eq23, rhs_eq24,
                     rhs_eq25, weyl_square)

__version__ = "0.1.0"
