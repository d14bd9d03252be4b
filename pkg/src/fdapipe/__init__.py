"""Spectral amplitude-fusion data pipeline with curriculum scheduling,
chained augmentation mixing, corruption benchmarking, and segmentation
metrics."""

__version__ = "0.1.0"

# Wire protocol identity checked by out-of-process bindings at load time.
ABI_VERSION = "fdapipe/1"

from .augmix import (  # noqa: E402,F401
    AugPolicy,
    MixCoefficients,
    apply_aug_op,
    chained_augmix,
    sample_mix_coefficients,
)
from .config import RunConfig, load_config, preset_config  # noqa: F401
from .corruptions import CorruptionSpec, corrupt, corruption_suite, psnr  # noqa: F401
from .curriculum import CurriculumConfig, schedule_beta, schedule_table  # noqa: F401
from .errors import ValidationError  # noqa: F401
from .fusion import FusionParams, fda_transform, fuse_amplitude, fused_region  # noqa: F401
from .pipeline import (  # noqa: F401
    DatasetManifest,
    ManifestRecord,
    dice,
    evaluate_masks,
    generate_epoch,
    run_all,
    transform_sample,
)
from .spectral import decompose, forward_dft, inverse_dft, recompose  # noqa: F401
