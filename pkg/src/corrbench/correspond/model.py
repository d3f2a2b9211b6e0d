"""Fully-convolutional descriptor network.

Four 3x3 conv layers (stride 1, 2, 2, 1; channels 16, 32, 32, D) with ReLU
between them, followed by bilinear upsampling back to the input resolution,
so every pixel gets a D-dimensional descriptor.
"""

from __future__ import annotations

import numpy as np

from .. import numcore as nc
from ..numcore.layers import conv_params


class DescriptorNet:
    CHANNELS = (16, 32, 32)
    STRIDES = (1, 2, 2, 1)

    def __init__(self, descriptor_dim: int = 3, rng: np.random.Generator | None = None):
        self.descriptor_dim = descriptor_dim
        rng = rng or np.random.default_rng(0)
        c1, c2, c3 = self.CHANNELS
        self.params = {}
        for name, (kh, kw, cin, cout) in {
            "conv1": (3, 3, 3, c1),
            "conv2": (3, 3, c1, c2),
            "conv3": (3, 3, c2, c3),
            "conv4": (3, 3, c3, descriptor_dim),
        }.items():
            w, b = conv_params(rng, kh, kw, cin, cout)
            self.params[f"{name}.w"] = w
            self.params[f"{name}.b"] = b

    def forward(self, images: nc.Tensor) -> nc.Tensor:
        """[N, H, W, 3] -> [N, H, W, D]; output spatial size equals input."""
        n, h, w, _ = images.shape
        p = self.params
        x = nc.relu(nc.conv2d(images, p["conv1.w"], p["conv1.b"], stride=1))
        x = nc.relu(nc.conv2d(x, p["conv2.w"], p["conv2.b"], stride=2))
        x = nc.relu(nc.conv2d(x, p["conv3.w"], p["conv3.b"], stride=2))
        x = nc.conv2d(x, p["conv4.w"], p["conv4.b"], stride=1)
        return nc.upsample_bilinear(x, h, w)

    def descriptor_image(self, rgb: np.ndarray) -> np.ndarray:
        """Tape-free forward pass for one [H, W, 3] image."""
        out = self.forward(nc.constant(rgb[None]))
        return out.data[0]

    def set_trainable(self, trainable: bool):
        for t in self.params.values():
            t.requires_grad = trainable

    def state_arrays(self) -> dict:
        return {k: v.data for k, v in self.params.items()}

    def load_state(self, arrays: dict):
        for k, v in self.params.items():
            v.data = np.asarray(arrays[k], dtype=np.float64).reshape(v.shape)

    def checksum(self) -> float:
        return float(sum(np.abs(v.data).sum() for v in self.params.values()))
