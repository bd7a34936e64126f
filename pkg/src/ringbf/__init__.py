"""Ring-decomposed bilateral filtering for 16-bit grayscale images.

The filter averages each pixel's ring-shaped neighborhood with weights that
fall off both with spatial distance and with photometric difference, scaled
so that a chosen fraction of the local noise deviation survives.  The
package bundles the filter itself (compiled core with a pure-Python
fallback), a Monte-Carlo estimator of the deviation-reduction function, a
threshold solver, a dose-to-noise model for planning filter strength on
low-dose CT-style images, and empirical calibration from image pairs.
"""
from ._backend import backend_name, set_backend
from .analysis import (
    CurveExtrema,
    CurveFingerprint,
    KCurve,
    KEstimate,
    NoiseDistribution,
    compute_curve,
    curve_to_csv,
    default_patch_half_width,
    estimate_K,
    estimate_linear_K,
    find_extrema,
    linear_k0,
    sample_patch,
    solve_threshold,
)
from .calibrate import (
    PolyFit,
    PredictorStats,
    RegressionReport,
    empirical_K_points,
    fit_polynomial,
    format_calibration_report,
    local_std_map,
    regress_noise,
)
from .ctmodel import (
    DEFAULT_DOSE_MODEL,
    DEFAULT_HU_GATE,
    DEFAULT_THRESHOLD,
    DoseNoiseModel,
    FilterPlan,
    band_layout,
    load_dose_model,
    noise_sigma,
    plan_filter,
    synth_phantom,
    synth_phantom_values,
)
from .errors import (
    BracketError,
    ConvergenceError,
    DegenerateFitError,
    FormatError,
    NumericalError,
    OutOfDomainError,
    RangeError,
)
from .filter import (
    FilterConfig,
    Image,
    LocalStats,
    filter_image,
    filter_image_values,
    filter_iterate,
    filter_iterate_values,
    filter_pixel_dense,
    filter_pixel_ringed,
    local_stats,
    quantize_to_int16,
)
from .io_cli import cli_dispatch, read_image, write_image
from .kernel import (
    AxiomReport,
    KernelSpec,
    Ring,
    RingNeighborhood,
    VFamily,
    WFamily,
    WVariant,
    build_rings,
    eval_V,
    eval_W,
    validate_kernel,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # backends
    "backend_name",
    "set_backend",
    # kernel
    "VFamily",
    "WVariant",
    "WFamily",
    "KernelSpec",
    "Ring",
    "RingNeighborhood",
    "build_rings",
    "eval_V",
    "eval_W",
    "AxiomReport",
    "validate_kernel",
    # filter
    "Image",
    "FilterConfig",
    "LocalStats",
    "quantize_to_int16",
    "filter_pixel_dense",
    "filter_pixel_ringed",
    "filter_image",
    "filter_image_values",
    "filter_iterate",
    "filter_iterate_values",
    "local_stats",
    # analysis
    "NoiseDistribution",
    "KEstimate",
    "KCurve",
    "CurveFingerprint",
    "CurveExtrema",
    "sample_patch",
    "default_patch_half_width",
    "estimate_K",
    "estimate_linear_K",
    "linear_k0",
    "compute_curve",
    "solve_threshold",
    "find_extrema",
    "curve_to_csv",
    # ct model
    "DoseNoiseModel",
    "DEFAULT_DOSE_MODEL",
    "DEFAULT_HU_GATE",
    "DEFAULT_THRESHOLD",
    "noise_sigma",
    "FilterPlan",
    "plan_filter",
    "band_layout",
    "synth_phantom",
    "synth_phantom_values",
    "load_dose_model",
    # calibration
    "local_std_map",
    "empirical_K_points",
    "PolyFit",
    "fit_polynomial",
    "PredictorStats",
    "RegressionReport",
    "regress_noise",
    "format_calibration_report",
    # io
    "read_image",
    "write_image",
    "cli_dispatch",
    # errors
    "FormatError",
    "RangeError",
    "NumericalError",
    "BracketError",
    "ConvergenceError",
    "DegenerateFitError",
    "OutOfDomainError",
]
