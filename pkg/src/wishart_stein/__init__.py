"""Correlated Gaussian Wishart matrices and p-tensors: exact covariances,
Wasserstein bounds, inequality checks and Monte-Carlo distance estimates."""

from ._accel import backend_name
from .bounds import BoundReport, matrix_bound, tensor_bound
from .covariance import (
    CovarianceFunction,
    admissible_matrix,
    admissible_tensor,
    l1_norm,
    parse_covariance,
    s_sums,
    toeplitz_gram,
)
from .distance import mc_tensor_distance, mc_wishart_distance, run_sweep, sliced_w1, slope_fit
from .errors import (
    BoundVacuousError,
    DivergenceError,
    InadmissibleError,
    NotDiagonallyDominantError,
    NotPSDError,
    ResourceBudgetError,
)
from .exact import (
    contraction_norm_sq_exact,
    tensor_cov_exact,
    variance_formula,
    wishart_cov_exact,
)
from .sampler import (
    EnsembleSpec,
    half_vectorize,
    malliavin_inner,
    sample_matrix,
    tensor_sample,
    wick_product,
    wishart,
)

__version__ = "0.1.0"
