"""Wiener-Hopf factorisation of scalar and Daniele-Khrapkov matrix symbols on the real line."""

from .errors import *  # noqa: F401,F403
from .realline import (Grid, GridFunction, analyticity_defect, cauchy_split, l2_norm,
                       limit_from_samples, moebius_grid, spectral_support_defect,
                       truncated_uniform_grid)
from .scalar import (ScalarBoundReport, ScalarFactorization, additive_bound_check,
                     continuous_log, continuous_sqrt, factorize_scalar, multiplicative_bound,
                     multiplicative_bound_check, winding_index)
from .rational import (RationalApproximation, RationalFunction, evaluate, fit_rational,
                       pair_log, pair_sqrt, rational_split)
from .dk import (DKMatrix, DKParameters, EntireMatrixJ, MatrixFactorization, RationalJ,
                 assemble, dk_commutative_product, dk_factorize, dk_parameters,
                 dk_partial_indices, rational_dk_factorize, rational_dk_split, validate_dk)
from .stability import (AbrahamsReduction, DKBoundReport, MeromorphicFactorization, SweepResult,
                        abrahams_reduce, epsilon_scaling, lemma_bounds, meromorphic_factorize,
                        perturbation_sweep, pole_removal_example, unstable_example)

__version__ = "0.1.0"
