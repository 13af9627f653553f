"""Exact martingale-coboundary representation for fields of completely commuting shifts."""
from .decomposition import decompose, verify_uniqueness
from .operators import (cond_exp_level, cond_exp_multi, invariant_projection,
                        koopman, koopman_pow, tail_projection, transfer,
                        transfer_pow)
from .poisson import (normal_project, residual, solve_cesaro, solve_direct,
                      solve_partial_series, solve_series, strict_project)
from .space import (CylinderFunction, SystemSpec, canonicalize, constant,
                    cylinder, expectation, inner_product, make_factor,
                    make_system, norm_l2, norm_sq)

__version__ = "0.1.0"
