"""cvplab: a numerical laboratory for causal variational principles.

Discrete weighted point measures, causal-action minimization under a
volume constraint, second-variation positivity functionals, jet-space
Gram forms, fragmentation schemes, linearized field equations, and
surface-layer integrals.
"""

from __future__ import annotations

from .action import (action, action_difference, calibrate_nu, el_report, ell,
                     ell_gradient, row_sums)
from .config import (ExperimentConfig, RunState, load_config, load_state,
                     parse_config, save_state)
from .errors import (CvpError, DimensionMismatchError,
                     InfeasibleProjectionError, NegativeDiagonalError,
                     NonFiniteIterateError, SchemaError, UnsupportedOrderError,
                     WeightPositivityError)
from .geometry import ChartManifold
from .jets import (FormEvaluator, GramReport, Jet, JetField, gram_spectrum,
                   nabla1_nabla2_L, nabla2_ell_form, nabla_ell, q1, sp1_inner,
                   sp2_inner)
from .kernels import (CompactSupportKernel, GaussianKernel, InversePowerKernel,
                      RadialKernel, kernel_from_dict, lagrangian_derivatives,
                      lagrangian_eval, pair_tables, verify_lagrangian)
from .linfield import (LinearizedOperator, RegionMask, arc_regions,
                       assemble_linfield, linfield_residual, osi_report,
                       random_regions, solve_linfield, surface_layer_integral)
from .measure import DiscreteMeasure, random_measure
from .optimizer import OptimizerConfig, OptimizerTrace, minimize, project_volume
from .variations import (FragmentationScheme, VariationCurve, deform,
                         frag_lower_bound, frag_second_variation,
                         frag_second_variation_rescaled, fragment_deform,
                         optimal_weights, second_variation_analytic,
                         second_variation_fd, stability_probe)

__version__ = "0.1.0"
