"""rainlens: deterministic adherent-raindrop synthesis and evaluation.

Renders raindrops stuck to a virtual lens onto arbitrary images through a
refraction lookup texture with metaball merging, evolves the droplet
population over time with seeded randomness, and measures image degradation
and restoration quality (PSNR, SSIM, segmentation statistics).
"""

from ._kernels import backend_name
from ._version import __version__
from .config import ProtoParams, RenderParams
from .dropfield import Droplet, DropField, FieldConfig
from .errors import (DimensionMismatchError, FormatError, ManifestError,
                     ManifestVersionError, PairingError, ParameterError,
                     RainlensError)
from .images import load_image, load_mask, save_image, save_mask
from .metrics import (MetricsReport, SegStats, binary_seg_stats,
                      compare_images, multiclass_miou, psnr, ssim)
from .pipeline import (DatasetLayout, augment_dataset, compare_datasets,
                       derive_seed, load_manifest, replay, save_manifest)
from .protodrop import (ProtoDropTexture, generate_protodrop, load_texture,
                        save_texture)
from .render import CompositeMap, apply_rain, composite, droplet_mask

__all__ = [
    "__version__", "backend_name",
    "ProtoDropTexture", "generate_protodrop", "save_texture", "load_texture",
    "Droplet", "DropField", "FieldConfig",
    "CompositeMap", "composite", "apply_rain", "droplet_mask",
    "MetricsReport", "SegStats", "psnr", "ssim", "compare_images",
    "binary_seg_stats", "multiclass_miou",
    "DatasetLayout", "augment_dataset", "replay", "compare_datasets",
    "derive_seed", "load_manifest", "save_manifest",
    "ProtoParams", "RenderParams",
    "load_image", "save_image", "load_mask", "save_mask",
    "RainlensError", "ParameterError", "DimensionMismatchError",
    "FormatError", "PairingError", "ManifestError", "ManifestVersionError",
]
