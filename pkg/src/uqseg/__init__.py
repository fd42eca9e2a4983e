"""Model-agnostic Monte Carlo inference and uncertainty estimation for
image segmentation.

Wraps any segmentation predictor (built-in analytic ones or external
processes speaking an NPY file protocol) with test-time augmentation and
test-time stochastic sampling, and turns the resulting prediction sets into
aggregated segmentations, pixel-wise entropy maps, structure-wise volume
statistics, and uncertainty-vs-error analyses.
"""

from .acquisition import (
    AugmentationPrior,
    TransformParams,
    from_latent,
    load_prior,
    sample_noise,
    sample_params,
    to_latent,
)
from .core import (
    DatasetManifest,
    ManifestCase,
    Tensor,
    load_manifest,
    read_npy,
    save_manifest,
    write_npy,
    znormalize,
)
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    InferenceError,
    NpyFormatError,
    PredictorError,
    PredictorExitError,
    PredictorOutputError,
    PredictorTimeoutError,
    UndefinedSurfaceError,
    UndefinedVVCError,
    UqsegError,
)
from .inference import (
    SampleRecord,
    SampleSet,
    aggregate_mean,
    aggregate_mode,
    run_baseline,
    run_method,
    run_tta,
    run_ttad,
    run_ttd,
)
from .metrics import (
    CaseResult,
    JointHistogram,
    aggregate_cases,
    assd,
    dice,
    joint_histogram,
    merge_histograms,
    surface_points,
)
from .phantoms import PhantomSpec, make_dataset, make_phantom, rotation_only_prior
from .predictors import PredictorSpec, format_predictor, parse_predictor, predict
from .seeding import derive_seed, make_rng
from .transforms import AffineMatrix, affine_from_params, invert, warp_image, warp_labels
from .uncertainty import UncertaintyReport, pixel_entropy, structure_stats, structure_volumes

__version__ = "0.1.0"

__all__ = [
    "AffineMatrix",
    "AugmentationPrior",
    "CaseResult",
    "ConfigurationError",
    "DatasetManifest",
    "DegenerateInputError",
    "InferenceError",
    "JointHistogram",
    "ManifestCase",
    "NpyFormatError",
    "PhantomSpec",
    "PredictorError",
    "PredictorExitError",
    "PredictorOutputError",
    "PredictorSpec",
    "PredictorTimeoutError",
    "SampleRecord",
    "SampleSet",
    "Tensor",
    "TransformParams",
    "UncertaintyReport",
    "UndefinedSurfaceError",
    "UndefinedVVCError",
    "UqsegError",
    "affine_from_params",
    "aggregate_cases",
    "aggregate_mean",
    "aggregate_mode",
    "assd",
    "derive_seed",
    "dice",
    "format_predictor",
    "from_latent",
    "invert",
    "joint_histogram",
    "load_manifest",
    "load_prior",
    "make_dataset",
    "make_phantom",
    "make_rng",
    "merge_histograms",
    "parse_predictor",
    "pixel_entropy",
    "predict",
    "read_npy",
    "rotation_only_prior",
    "run_baseline",
    "run_method",
    "run_tta",
    "run_ttad",
    "run_ttd",
    "sample_noise",
    "sample_params",
    "save_manifest",
    "structure_stats",
    "structure_volumes",
    "surface_points",
    "to_latent",
    "warp_image",
    "warp_labels",
    "write_npy",
    "znormalize",
]
