"""Sampling rate distortion functions of discrete memoryless multiple sources.

Only k of the m components of the source are observed at each time; the
package computes the resulting rate-distortion curves for fixed-set,
independent random and memoryless random samplers.
"""

__version__ = "0.1.0"

from .distortion import (
    additive,
    alpha_map,
    composite_distortion,
    fixed_set_extremes,
    irs_delta_min,
    modified_distortion,
    mrs_extremes,
    pe_extremes,
    probability_of_error,
    sampler_branch_problems,
)
from .envelope import (
    CurvePoint,
    PiecewiseLinearCurve,
    evaluate,
    lower_convex_envelope,
    pointwise_min,
)
from .errors import CapExceeded, InfeasibleDistortion, SrdfError, ValidationError
from .prob import (
    ComponentAlphabet,
    JointPmf,
    Kernel,
    binary_entropy,
    conditional,
    conditional_mutual_information,
    entropy,
    marginal,
    mutual_information,
)
from .samplers import (
    PointMassSampler,
    RandomizedSampler,
    enumerate_point_mass_samplers,
)
from .solver import ba_fixed_slope, branch_sweep, rate_at_distortion, sweep
from .srdf import (
    SolverOptions,
    SrdfResult,
    fixed_set_srdf,
    irs_srdf,
    map_estimator,
    mrs_informed_srdf,
    mrs_uninformed_bound,
    mrs_uninformed_randomized_refine,
    pe_fixed_set_srdf,
)
from .tables import DeltaRange, DistortionTable, RdInstance

__all__ = [
    "additive",
    "alpha_map",
    "ba_fixed_slope",
    "binary_entropy",
    "branch_sweep",
    "CapExceeded",
    "ComponentAlphabet",
    "composite_distortion",
    "conditional",
    "conditional_mutual_information",
    "CurvePoint",
    "DeltaRange",
    "DistortionTable",
    "entropy",
    "enumerate_point_mass_samplers",
    "evaluate",
    "fixed_set_extremes",
    "fixed_set_srdf",
    "InfeasibleDistortion",
    "irs_delta_min",
    "irs_srdf",
    "JointPmf",
    "Kernel",
    "lower_convex_envelope",
    "map_estimator",
    "marginal",
    "modified_distortion",
    "mrs_extremes",
    "mrs_informed_srdf",
    "mrs_uninformed_bound",
    "mrs_uninformed_randomized_refine",
    "mutual_information",
    "pe_extremes",
    "pe_fixed_set_srdf",
    "PiecewiseLinearCurve",
    "PointMassSampler",
    "pointwise_min",
    "probability_of_error",
    "RandomizedSampler",
    "rate_at_distortion",
    "RdInstance",
    "sampler_branch_problems",
    "SolverOptions",
    "SrdfError",
    "SrdfResult",
    "sweep",
    "ValidationError",
]
