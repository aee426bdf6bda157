"""Normal-comparison bounds under random scaling, with EVT verification tools."""

__version__ = "0.1.0"

from .bounds import (
    BoundConstants,
    BoundReport,
    PairTerms,
    berman_bound_classical,
    bound_a_comonotone,
    bound_a_independent,
    bound_b_comonotone,
    bound_b_independent,
    bound_exponential_scaling,
    bound_uniform_scaling,
    corollary_identity_bound,
    pairwise_terms,
    theorem_bound,
)
from .errors import BermanScaleError
from .evt import (
    ArrayDiagnostics,
    ExtremalIndexSpec,
    HRSpec,
    LimitSpec,
    MissingDataSpec,
    NormingConstants,
    check_array_conditions,
    extremal_index,
    gumbel,
    husler_reiss,
    norming_a,
    norming_b,
    norming_classical,
    simulate_array_maxima,
    simulate_bivariate_missing,
    tilted_gumbel,
    w_covariance,
)
from .gaussian import (
    CorrelationModel,
    GaussianSample,
    hr_array_correlation,
    identity_correlation,
    sample_gaussian,
    stationary_correlation,
    validate_correlation,
)
from .probability import (
    MCEstimate,
    RectangleSpec,
    ks_distance,
    mc_delta,
    mc_rectangle_prob,
    quad_rectangle_prob,
    scaled_tail_prob,
)
from .scaling import (
    ScalingModel,
    beta_scaling,
    degenerate_scaling,
    exponential_scaling,
    gamma_scaling,
    sample_scaling,
    tail_a,
    tail_b,
    tail_constant_estimate,
    two_point_scaling,
    uniform_scaling,
    user_scaling,
    weibull_scaling,
)
