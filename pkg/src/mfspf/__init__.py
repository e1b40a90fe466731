"""Multi-feature signed pressure force active contours for grayscale images."""

from mfspf.image_core import (
    BinaryMask,
    GrayImage,
    ImageFormatError,
    RectRegion,
    load_image,
    load_mask,
    make_synthetic,
    save_image,
    save_mask,
)
from mfspf.features import (
    FeatureStack,
    compute_features,
    entropy_map,
    gradient_map,
    range_map,
    std_map,
)
from mfspf.fitting import (
    FitPair,
    GaussianKernel,
    build_kernel,
    convolve,
    feature_fit_pairs,
    fit_pair,
    global_means,
    heaviside,
)
from mfspf.spf import (
    SpfField,
    WeightMap,
    adaptive_weight,
    global_spf,
    local_spf,
    total_spf,
)
from mfspf.levelset import (
    ModelConfig,
    SegmentationReport,
    check_convergence,
    default_region,
    evolve_step,
    grad_magnitude,
    init_level_set,
    regularize,
    run_proposed,
    run_slgs,
    segment,
    slgs_spf,
)
from mfspf.evaluation import MetricsRecord, compare_masks, timing_summary

__version__ = "0.1.0"
