"""Loading trained policies and running them step by step.

The runtime rebuilds the visual head from the checkpoint, normalizes inputs
with the stored constants, runs the network in eval mode (dropout off), and
unscales the output into an Action. LSTM policies keep recurrent state that
must be reset at episode start; they act at half the world rate with the
commanded setpoint held in between (handled by the rollout loop).
"""

from __future__ import annotations

import numpy as np

from .. import numcore as nc
from ..correspond.model import DescriptorNet
from ..numcore.checkpoint import load_checkpoint
from ..render.camera import CameraModel
from ..simworld import make_task
from ..visrep.autoencoder import ConvPointsEncoder
from ..visrep.heads import (
    DescriptorSet,
    VisualHeadConfig,
    build_head,
)
from .actions import unscale_action
from .networks import LstmPolicy, PolicySpec, build_policy


def _rebuild_head(head_cfg: VisualHeadConfig, camera: CameraModel,
                  task_id: str, tensors: dict, extra: dict):
    m = head_cfg.method
    if m in ("gt_3d", "gt_2d"):
        head = build_head(head_cfg, camera,
                          object_shape=make_task(task_id).shape)
    elif m in ("dd_2d", "dd_3d"):
        net = DescriptorNet(head_cfg.descriptor_dim)
        dset = DescriptorSet(
            descriptors=nc.Tensor(tensors["head.descriptors"]),
            trainable=bool(extra.get("head_extra", {})
                           .get("descriptors_trainable", False)),
            provenance=extra.get("head_extra", {})
            .get("descriptor_provenance", {}))
        head = build_head(head_cfg, camera, net=net, descriptor_set=dset)
    elif m == "dd_pretrain_e2e":
        net = DescriptorNet(head_cfg.descriptor_dim)
        head = build_head(head_cfg, camera, net=net)
    elif m in ("ae", "ae_masked", "ae_e2e", "e2e"):
        enc = ConvPointsEncoder(camera.height, camera.width)
        head = build_head(head_cfg, camera, encoder=enc)
    elif m == "e2e_deep":
        net = DescriptorNet(16)
        head = build_head(head_cfg, camera, net=net)
    else:
        raise ValueError(f"unknown method {m!r}")
    head_arrays = {k: v for k, v in tensors.items() if k.startswith("head.")}
    if head_arrays:
        head.load_state(head_arrays)
    for t in head.trainable_params().values():
        t.requires_grad = False
    return head


class PolicyRuntime:
    def __init__(self, payload: dict):
        tensors = payload["tensors"]
        extra = payload["extra"]
        self.task_id = extra["task"]
        self.head_config = VisualHeadConfig.from_json(extra["head"])
        self.spec = PolicySpec.from_json(extra["policy"])
        self.camera = CameraModel.from_json(extra["camera"])
        self.extra = extra
        self.head = _rebuild_head(self.head_config, self.camera, self.task_id,
                                  tensors, extra)
        self.net = build_policy(self.spec, extra["input_dim"],
                                np.random.default_rng(0))
        for k, t in self.net.params.items():
            t.data = np.asarray(tensors[f"policy.{k}"], dtype=np.float64) \
                .reshape(t.shape)
            t.requires_grad = False
        self.z_mu = tensors["norm.z_mu"]
        self.z_sd = tensors["norm.z_sd"]
        self.o_mu = tensors["norm.o_mu"]
        self.o_sd = tensors["norm.o_sd"]
        self._state = None

    @property
    def acts_at_half_rate(self) -> bool:
        return self.spec.network == "lstm"

    @property
    def needs_rgb(self) -> bool:
        return self.head.needs_rgb

    @property
    def needs_depth(self) -> bool:
        return self.head.needs_depth

    def reset(self):
        self._state = None

    def act(self, robot_obs: np.ndarray, view=None, obj_pose=None):
        """Deterministic eval-mode action for one observation."""
        z = self.head.encode(view, obj_pose)
        x = np.concatenate([(z - self.z_mu) / self.z_sd,
                            (robot_obs - self.o_mu) / self.o_sd])
        if isinstance(self.net, LstmPolicy):
            if self._state is None:
                self._state = self.net.initial_state(1)
            out, st = self.net.step(nc.constant(x[None]), self._state,
                                    training=False)
            self._state = (nc.constant(st[0].data), nc.constant(st[1].data))
            scaled = out.data[0]
        else:
            scaled = self.net.act_np(x)
        return unscale_action(scaled)


def load_policy(checkpoint_dir) -> PolicyRuntime:
    tensors, scalars, extra = load_checkpoint(checkpoint_dir)
    return PolicyRuntime({"tensors": tensors, "scalars": scalars,
                          "extra": extra})
