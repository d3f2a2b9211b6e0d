"""Behavior-cloning training loops.

MLPs train on independent frames; LSTMs train on full 5 Hz-downsampled
episodes with truncated backpropagation. Noise augmentation perturbs the
proprioceptive state and relabels actions on the fly. Which parameters
train alongside the policy is decided by the visual head (frozen heads have
their z precomputed once).

Policy inputs are standardized with mean/std computed from the training set
at the initial head state; the constants ship with the checkpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import numcore as nc
from ..numcore.checkpoint import save_checkpoint
from ..seeding import stream
from ..visrep.heads import VisualHead, VisualHeadConfig
from .actions import bc_loss, scale_action_array
from .dataset import DemoDataset, frame_view
from .networks import PolicySpec, build_policy
from .noise import NoiseSpec, noise_augment

NORM_FLOOR = 1e-3


@dataclass
class PolicyTrainConfig:
    # Desk-scale schedule: a fifth of the full 75k-step run. The learning
    # rate is scaled up so total RMSProp parameter travel (lr x steps) stays
    # comparable to the full schedule; the full profile keeps lr 1e-4.
    steps: int = 15000
    batch: int = 16
    learning_rate: float = 5e-4
    alpha: float = 0.9
    lr_decay_factor: float = 0.5
    lr_decay_interval: int = 2000
    grad_clip: float | None = None
    clip_mode: str = "global_norm"
    tbptt: int = 50
    downsample: int = 2
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    @staticmethod
    def mlp_desk(noise: NoiseSpec | None = None) -> "PolicyTrainConfig":
        return PolicyTrainConfig(noise=noise or NoiseSpec())

    @staticmethod
    def lstm_desk(noise: NoiseSpec | None = None) -> "PolicyTrainConfig":
        return PolicyTrainConfig(steps=20000, batch=4, learning_rate=2e-3,
                                 lr_decay_factor=0.75, lr_decay_interval=4000,
                                 grad_clip=1.0, noise=noise or NoiseSpec())

    def to_json(self) -> dict:
        d = {k: getattr(self, k) for k in
             ("steps", "batch", "learning_rate", "alpha", "lr_decay_factor",
              "lr_decay_interval", "grad_clip", "clip_mode", "tbptt",
              "downsample")}
        d["noise"] = [self.noise.sigma_translation, self.noise.sigma_rotation,
                      self.noise.sigma_gripper]
        return d


def downsample_indices(n_frames: int, factor: int) -> np.ndarray:
    return np.arange(0, n_frames, factor)


class _FrameTable:
    """Flat view of every frame with its head cache and label data."""

    def __init__(self, dataset: DemoDataset, head: VisualHead):
        cam = dataset.cameras[0]
        self.caches = []
        self.z = None
        truths, actions, start_yaws, epi_of, t_of = [], [], [], [], []
        zs = []
        for e_i, ep in enumerate(dataset.episodes):
            for t in range(ep.n_frames):
                view = frame_view(ep, 0, t, cam) if head.needs_rgb \
                    or head.needs_depth else None
                obj_pose = ep.truth[t, 5:8]
                cache = head.frame_cache(view, obj_pose)
                if "z" in cache:
                    zs.append(cache["z"])
                else:
                    self.caches.append(cache)
                truths.append(ep.truth[t])
                actions.append(ep.actions[t])
                start_yaws.append(ep.start_yaw)
                epi_of.append(e_i)
                t_of.append(t)
        self.truth = np.stack(truths)
        self.actions = np.stack(actions)
        self.start_yaw = np.array(start_yaws)
        self.epi_of = np.array(epi_of)
        self.t_of = np.array(t_of)
        if zs:
            self.z = np.stack(zs)
        self.n = len(self.truth)
        self.frames_per_episode = dataset.episodes[0].n_frames
        self.n_episodes = len(dataset.episodes)

    @property
    def frozen(self) -> bool:
        return self.z is not None

    def frame_index(self, episode: int, t: int) -> int:
        return episode * self.frames_per_episode + t


def _initial_z_sample(table: _FrameTable, head: VisualHead, rng, max_n=256):
    if table.frozen:
        return table.z
    idx = rng.choice(table.n, size=min(max_n, table.n), replace=False)
    out = []
    for i in idx:
        out.append(head.z_graph([table.caches[i]]).data[0])
    return np.stack(out)


def _clean_proprio(truth: np.ndarray, start_yaw: np.ndarray) -> np.ndarray:
    from .noise import proprio_from_pose
    return np.stack([proprio_from_pose(truth[i, :3], truth[i, 3],
                                       start_yaw[i], truth[i, 4])
                     for i in range(len(truth))])


def _augment_rows(table: _FrameTable, idx, noise: NoiseSpec, rng):
    obs = np.empty((len(idx), 13))
    act = np.empty((len(idx), 5))
    for k, i in enumerate(idx):
        obs[k], act[k] = noise_augment(table.truth[i], table.actions[i],
                                       table.start_yaw[i], noise, rng)
    return obs, scale_action_array(act)


def _input_graph(table: _FrameTable, head: VisualHead, idx, obs_norm,
                 z_norm) -> nc.Tensor:
    z_mu, z_sd = z_norm
    if table.frozen:
        zn = (table.z[idx] - z_mu) / z_sd
        return nc.constant(np.concatenate([zn, obs_norm], axis=1))
    z = head.z_graph([table.caches[i] for i in idx])
    zn = nc.mul(nc.add(z, nc.constant(-z_mu)), nc.constant(1.0 / z_sd))
    return nc.concat([zn, nc.constant(obs_norm)], axis=1)


def train_policy(dataset: DemoDataset, head: VisualHead,
                 head_config: VisualHeadConfig, spec: PolicySpec,
                 cfg: PolicyTrainConfig, seed: int,
                 out_dir=None) -> dict:
    """Clone the dataset's expert through the given visual head.

    Returns a checkpoint payload dict; also writes it when out_dir is set."""
    if not dataset.episodes:
        raise ValueError("empty dataset")
    table = _FrameTable(dataset, head)
    rng_norm = stream(seed, "policy", "norm")
    z0 = _initial_z_sample(table, head, rng_norm)
    z_mu = z0.mean(axis=0)
    z_sd = np.maximum(z0.std(axis=0), NORM_FLOOR)
    clean_obs = _clean_proprio(table.truth, table.start_yaw)
    o_mu = clean_obs.mean(axis=0)
    o_sd = np.maximum(clean_obs.std(axis=0), NORM_FLOOR)

    input_dim = head.z_dim + 13
    net = build_policy(spec, input_dim, stream(seed, "policy", "init"))
    net.set_trainable(True)
    params = dict(net.params)
    params.update(head.trainable_params())
    state = nc.RmsPropState(alpha=cfg.alpha, learning_rate=cfg.learning_rate,
                            decay_factor=cfg.lr_decay_factor,
                            decay_interval=cfg.lr_decay_interval,
                            clip_max_norm=cfg.grad_clip,
                            clip_mode=cfg.clip_mode)
    rng_batch = stream(seed, "policy", "batch")
    rng_noise = stream(seed, "policy", "noise")
    rng_drop = stream(seed, "policy", "dropout")

    loss_trace = []
    if spec.network == "mlp":
        for _ in range(cfg.steps):
            idx = rng_batch.integers(table.n, size=cfg.batch)
            obs, labels = _augment_rows(table, idx, cfg.noise, rng_noise)
            obs_n = (obs - o_mu) / o_sd
            x = _input_graph(table, head, idx, obs_n, (z_mu, z_sd))
            pred = net.forward(x, rng_drop, training=True)
            loss = bc_loss(pred, nc.constant(labels))
            nc.zero_grads(params.values())
            nc.backward(loss)
            nc.rmsprop_step(state, params)
            loss_trace.append(float(loss.data))
    else:
        ds_idx = downsample_indices(table.frames_per_episode, cfg.downsample)
        for _ in range(cfg.steps):
            epis = rng_batch.integers(table.n_episodes, size=cfg.batch)
            hstate = net.initial_state(cfg.batch)
            total = None
            since_detach = 0
            for t in ds_idx:
                rows = np.array([table.frame_index(e, t) for e in epis])
                obs, labels = _augment_rows(table, rows, cfg.noise, rng_noise)
                obs_n = (obs - o_mu) / o_sd
                x = _input_graph(table, head, rows, obs_n, (z_mu, z_sd))
                pred, hstate = net.step(x, hstate, rng_drop, training=True)
                step_loss = bc_loss(pred, nc.constant(labels))
                total = step_loss if total is None else nc.add(total, step_loss)
                since_detach += 1
                if since_detach >= cfg.tbptt:
                    hstate = (hstate[0].detach(), hstate[1].detach())
                    since_detach = 0
            loss = nc.affine(total, 1.0 / len(ds_idx))
            nc.zero_grads(params.values())
            nc.backward(loss)
            nc.rmsprop_step(state, params)
            loss_trace.append(float(loss.data))

    net.set_trainable(False)
    tail = loss_trace[-200:] if loss_trace else [float("nan")]
    payload = {
        "tensors": {
            **{f"policy.{k}": v.data for k, v in net.params.items()},
            **head.state_arrays(),
            "norm.z_mu": z_mu, "norm.z_sd": z_sd,
            "norm.o_mu": o_mu, "norm.o_sd": o_sd,
        },
        "scalars": state.scalars(),
        "extra": {
            "task": dataset.task.task_id,
            "head": head_config.to_json(),
            "head_extra": head.extra_state(),
            "policy": spec.to_json(),
            "train_config": cfg.to_json(),
            "camera": dataset.cameras[0].to_json(),
            "seed": seed,
            "input_dim": input_dim,
            "final_loss_mean": float(np.mean(tail)),
            "train_initial_configs": dataset.initial_configs().tolist(),
            "n_demos": len(dataset.episodes),
        },
    }
    if out_dir is not None:
        save_checkpoint(Path(out_dir), payload["tensors"], payload["scalars"],
                        payload["extra"])
    return payload
