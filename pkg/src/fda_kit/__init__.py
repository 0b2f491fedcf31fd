"""Functional data analysis toolkit.

Curves live either on a shared discretization grid or as coefficients over a
function basis.  On top of the representations sit smoothing, registration,
dimensionality reduction, and exploratory statistics, all exposed through this
package, the ``fda-kit`` CLI, and the HTTP analysis service.
"""

from . import errors
from .basis import (
    BasisFunctionalSample,
    BasisSpec,
    LinearDifferentialOperatorSpec,
    evaluate_basis,
    to_grid,
)
from .dimred import (
    FpcaModel,
    SelectionResult,
    coefficient_features,
    distance_correlation,
    evaluation_features,
    fpca_fit,
    fpca_inverse,
    fpca_transform,
    labels_to_onehot,
    maxima_hunting,
    mrmr_select,
    recursive_maxima_hunting,
    rkhs_variable_selection,
)
from .exploratory import (
    BoxplotStats,
    CovarianceSurface,
    DepthReport,
    GeometricMedianResult,
    MsplotStats,
    OutliergramStats,
    band_depth,
    boxplot_stats,
    compute_depth,
    depth_based_median,
    fraiman_muniz_depth,
    geometric_median,
    mean_epigraph_index,
    modified_band_depth,
    msplot_stats,
    outliergram_parabola_coefficients,
    outliergram_stats,
    sample_covariance,
    sample_mean,
    sample_variance,
    trimmed_mean,
)
from .io import (
    parse_csv_text,
    read_csv,
    read_json,
    sample_from_jsonable,
    to_jsonable,
    write_csv,
    write_json,
)
from .registration import (
    DpAlignment,
    ElasticRegistrationResult,
    KarcherElasticResult,
    ShiftRegistrationResult,
    Shifts,
    Warping,
    dp_align,
    elastic_register,
    identity_warping,
    landmark_elastic_register,
    landmark_shift_deltas,
    least_squares_shift_register,
    shift,
    srvf_inverse,
    srvf_transform,
)
from .samples import (
    DiscreteFunctionalSample,
    ExtrapolationSpec,
    Grid,
    InterpolationSpec,
    build_discrete_sample,
    finite_difference_derivative,
    inner_product_l2,
    linear_combine,
    norm_l2,
    refine_grid,
    trapezoid_weights,
)
from .simulate import (
    CovarianceKernelSpec,
    kernel_matrix,
    make_gaussian_process,
    make_multimodal_samples,
)
from .smoothing import (
    BasisSmoother,
    HatMatrix,
    KernelSpec,
    KNeighbors,
    LocalLinearRegression,
    NadarayaWatson,
    PenaltyFunctionSpec,
    ScorerSpec,
    SearchResult,
    basis_hat_matrix,
    gcv_score,
    hat_matrix,
    loo_cv_score,
    parameter_search,
    penalized_basis_fit,
    penalty_matrix,
    smooth,
)

__version__ = "0.1.0"
