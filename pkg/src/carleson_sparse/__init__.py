"""Carleson-sparse domination of half-space synthesis operators on finite dyadic grids."""
from .errors import BudgetError, CalibrationError, CarlesonError, DomainError, InputError
from .dyadic import (Box, DyadicCube, DyadicGrid, SparseFamily, SparseVerdict, check_witness,
                     dump_family, geometry, load_family, make_grid, relatives, verify_sparse)
from .fields import (BoundaryField, BoxMeasure, CarlesonBox, Cone, DilatedCarlesonBox,
                     HalfspaceComplement, HalfspaceField, WhitneyCell, boundary_field, box_indicator,
                     cell_indicator, constant_boundary, dump_field, halfspace_field, integrate,
                     l1_norm, load_field, lp_norm, norm_table_csv, pairing_boundary, pairing_halfspace,
                     represented_measure, unrepresented_measure)
from .kernels import (Kernel, LipschitzGraph, cauchy_jump_kernel, cauchy_kernel, check_regularity,
                      custom_kernel, load_tabulated_kernel, make_kernel, parse_kernel, poisson_kernel,
                      riesz_kernel, tabulated_kernel)
from .operators import (Operator, apply_S, apply_Sstar, grand_maximal_bruteforce,
                        grand_maximal_truncation, operator, theta)
from .functionals import (ConeConfig, FunctionalResult, area, carleson, dyadic_nontangential, maximal,
                          nontangential)
from .weights import (Weight, ap_characteristic, ap_profile, dual_weight, parse_weight, power_weight,
                      unit_weight)
from .czd import CZDecomposition, cz_decompose, whitney_split
from .sparse import (SparseBuild, build_sparse_family, check_sparse_domination, exceptional_set,
                     select_stopping_cubes)
from .dual import DualFunctionBuild, construct_dual_function
from .harness import (RunConfig, Report, emit_report, load_config, parse_config, parse_csv, run_suite,
                      sweep_weights)

__version__ = "0.1.0"
