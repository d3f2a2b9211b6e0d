"""Visual representation heads: every way the benchmark produces the
low-dimensional policy input z from observations (ground-truth points,
dense-descriptor expectations, autoencoder and end-to-end feature points)."""

from .heads import (
    METHODS,
    DD_VARIANTS,
    VisualHeadConfig,
    DescriptorSet,
    descriptor_heatmap,
    spatial_expectation,
    init_descriptor_set,
    sample_object_points,
    build_head,
    VisualHead,
)
from .autoencoder import (
    ConvPointsEncoder,
    PixelDecoder,
    autoencoder_loss,
    AutoencoderConfig,
    train_autoencoder,
)

__all__ = [
    "METHODS",
    "DD_VARIANTS",
    "VisualHeadConfig",
    "DescriptorSet",
    "descriptor_heatmap",
    "spatial_expectation",
    "init_descriptor_set",
    "sample_object_points",
    "build_head",
    "VisualHead",
    "ConvPointsEncoder",
    "PixelDecoder",
    "autoencoder_loss",
    "AutoencoderConfig",
    "train_autoencoder",
]
