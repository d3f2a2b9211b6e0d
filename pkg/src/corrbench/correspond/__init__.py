"""Self-supervised dense-descriptor training from time-synchronized
multi-view pairs: reprojection match mining with occlusion and photometric
rejection, affine augmentation, and a pixel-contrastive objective."""

from .mining import MatchSet, mine_matches
from .augment import sample_affine_params, augment_side
from .model import DescriptorNet
from .loss import contrastive_loss
from .training import (
    CorrespondenceConfig,
    CorrespondenceReport,
    TrainAbort,
    train_descriptors,
    evaluate_correspondence,
    best_match_pixels,
)

__all__ = [
    "MatchSet",
    "mine_matches",
    "sample_affine_params",
    "augment_side",
    "DescriptorNet",
    "contrastive_loss",
    "CorrespondenceConfig",
    "CorrespondenceReport",
    "TrainAbort",
    "train_descriptors",
    "evaluate_correspondence",
    "best_match_pixels",
]
