"""Behavior cloning: action scaling, the weighted l1+l2 objective,
on-the-fly noise augmentation, the MLP/LSTM policy networks, their training
loops, and the demonstration dataset format."""

from .actions import ACTION_DIM, scale_action, unscale_action, bc_loss, bc_loss_np
from .dataset import (
    EpisodeData,
    DemoDataset,
    generate_demos,
    write_dataset,
    load_dataset,
    frame_view,
)
from .noise import NoiseSpec, noise_augment
from .networks import PolicySpec, MlpPolicy, LstmPolicy, build_policy
from .training import PolicyTrainConfig, train_policy, downsample_indices
from .runtime import PolicyRuntime, load_policy

__all__ = [
    "ACTION_DIM",
    "scale_action",
    "unscale_action",
    "bc_loss",
    "bc_loss_np",
    "EpisodeData",
    "DemoDataset",
    "generate_demos",
    "write_dataset",
    "load_dataset",
    "frame_view",
    "NoiseSpec",
    "noise_augment",
    "PolicySpec",
    "MlpPolicy",
    "LstmPolicy",
    "build_policy",
    "PolicyTrainConfig",
    "train_policy",
    "downsample_indices",
    "PolicyRuntime",
    "load_policy",
]
