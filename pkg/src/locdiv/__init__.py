"""Exponential sums of localized divisor functions, evaluated and checked at desk scale."""

__version__ = "0.1.0"

from .arith import (
    Interval,
    IntervalBox,
    WeightedWindow,
    divisor_list,
    hooley_delta,
    sieve_dk,
    sieve_localized,
)
from .diophantine import (
    ApproxWitness,
    NotInvertibleError,
    ReducedFraction,
    convergents,
    dirichlet_approx,
    dist_to_nearest_int,
    farey_grid,
    mod_inverse,
    residue_norm,
)
from .expsum import (
    ExpSumResult,
    RealAlpha,
    chain_bound,
    exp_sum_decomposed,
    exp_sum_direct,
    geometric_interval_sum,
    parse_alpha,
)
