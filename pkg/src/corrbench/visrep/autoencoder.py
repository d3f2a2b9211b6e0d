"""Autoencoder / end-to-end visual encoder.

The encoder is three conv layers (stride 2, 2, 1; 16 channels each) followed
by a per-channel spatial softmax, producing 16 expected (u, v) feature
points (z is 32-dimensional). The decoder reconstructs a 2x-downsampled
image from that bottleneck through a single dense layer. The same encoder
architecture serves the autoencoder baselines (frozen or fine-tuned) and the
pure end-to-end baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numcore as nc
from ..numcore.layers import conv_params, dense_params
from ..seeding import stream


class ConvPointsEncoder:
    CHANNELS = (16, 16, 16)

    def __init__(self, height: int, width: int, rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(0)
        c1, c2, c3 = self.CHANNELS
        self.height, self.width = height, width
        self.grid_h, self.grid_w = height // 4, width // 4
        self.params = {}
        for name, spec in {"conv1": (3, 3, 3, c1), "conv2": (3, 3, c1, c2),
                           "conv3": (3, 3, c2, c3)}.items():
            w, b = conv_params(rng, *spec)
            self.params[f"{name}.w"] = w
            self.params[f"{name}.b"] = b
        uu, vv = np.meshgrid(np.arange(self.grid_w, dtype=float),
                             np.arange(self.grid_h, dtype=float))
        self._coords = nc.constant(np.stack([uu.ravel(), vv.ravel()], axis=1))

    @property
    def z_dim(self) -> int:
        return 2 * self.CHANNELS[-1]

    def forward(self, images: nc.Tensor) -> nc.Tensor:
        """[B, H, W, 3] -> [B, 32] spatial-softmax feature points."""
        p = self.params
        x = nc.relu(nc.conv2d(images, p["conv1.w"], p["conv1.b"], stride=2))
        x = nc.relu(nc.conv2d(x, p["conv2.w"], p["conv2.b"], stride=2))
        x = nc.conv2d(x, p["conv3.w"], p["conv3.b"], stride=1)
        b = x.shape[0]
        c = x.shape[3]
        maps = nc.softmax(nc.reshape(x, (b, self.grid_h * self.grid_w, c)), axis=1)
        zs = []
        for i in range(b):
            m = nc.narrow(maps, 0, i, 1)
            m = nc.reshape(m, (self.grid_h * self.grid_w, c))
            e = nc.matmul(nc.transpose2d(m), self._coords)   # [C, 2]
            zs.append(nc.reshape(e, (1, 2 * c)))
        return nc.concat(zs, axis=0)

    def encode_np(self, rgb: np.ndarray) -> np.ndarray:
        return self.forward(nc.constant(rgb[None])).data[0]

    def set_trainable(self, trainable: bool):
        for t in self.params.values():
            t.requires_grad = trainable

    def state_arrays(self):
        return {k: v.data for k, v in self.params.items()}

    def load_state(self, arrays):
        for k, v in self.params.items():
            v.data = np.asarray(arrays[k], dtype=np.float64).reshape(v.shape)

    def checksum(self) -> float:
        return float(sum(np.abs(v.data).sum() for v in self.params.values()))


class PixelDecoder:
    """Dense map from the 32-vector bottleneck to a 2x-downsampled image."""

    def __init__(self, height: int, width: int, z_dim: int = 32,
                 rng: np.random.Generator | None = None):
        rng = rng or np.random.default_rng(1)
        self.out_h, self.out_w = height // 2, width // 2
        n_out = self.out_h * self.out_w * 3
        w, b = dense_params(rng, z_dim, n_out, scale=0.05)
        self.params = {"dec.w": w, "dec.b": b}
        self.z_dim = z_dim

    def forward(self, z: nc.Tensor) -> nc.Tensor:
        """[B, z_dim] -> [B, out_h, out_w, 3]."""
        zn = nc.affine(z, 0.125, -1.0)   # grid units -> roughly [-1, 1]
        out = nc.linear(zn, self.params["dec.w"], self.params["dec.b"])
        return nc.reshape(out, (z.shape[0], self.out_h, self.out_w, 3))

    def set_trainable(self, trainable: bool):
        for t in self.params.values():
            t.requires_grad = trainable


def downsample2(img: np.ndarray) -> np.ndarray:
    h, w = img.shape[:2]
    return img[:h - h % 2, :w - w % 2].reshape(h // 2, 2, w // 2, 2, 3) \
        .mean(axis=(1, 3))


def downsample_mask(mask: np.ndarray) -> np.ndarray:
    h, w = mask.shape
    return mask[:h - h % 2, :w - w % 2].reshape(h // 2, 2, w // 2, 2) \
        .any(axis=(1, 3))


def autoencoder_loss(encoder: ConvPointsEncoder, decoder: PixelDecoder,
                     image: np.ndarray, mask: np.ndarray | None = None,
                     masked: bool = False) -> nc.Tensor:
    """Mean squared reconstruction error of the downsampled image, over all
    pixels or over object-mask pixels only."""
    z = encoder.forward(nc.constant(image[None]))
    recon = decoder.forward(z)
    target = downsample2(image)
    if masked:
        if mask is None:
            raise ValueError("masked reconstruction needs a mask")
        m = downsample_mask(mask)
        if not m.any():
            raise ValueError("masked reconstruction with an empty mask")
        idx = np.flatnonzero(m.ravel())
        flat = nc.reshape(recon, (target.shape[0] * target.shape[1], 3))
        pred = nc.gather_rows(flat, idx)
        tgt = nc.constant(target.reshape(-1, 3)[idx])
        return nc.reduce_mean(nc.square(nc.sub(pred, tgt)))
    tgt = nc.constant(target[None])
    return nc.reduce_mean(nc.square(nc.sub(recon, tgt)))


@dataclass
class AutoencoderConfig:
    steps: int = 3000
    learning_rate: float = 1e-3
    alpha: float = 0.9
    lr_decay_factor: float = 0.5
    lr_decay_interval: int = 1500


def train_autoencoder(images, masks, masked: bool, config: AutoencoderConfig,
                      seed: int):
    """Pretrain the encoder by reconstruction. Returns (encoder, stats)."""
    if len(images) == 0:
        raise ValueError("no images to train on")
    h, w = images[0].shape[:2]
    encoder = ConvPointsEncoder(h, w, rng=stream(seed, "ae", "enc"))
    decoder = PixelDecoder(h, w, encoder.z_dim, rng=stream(seed, "ae", "dec"))
    encoder.set_trainable(True)
    decoder.set_trainable(True)
    params = dict(encoder.params)
    params.update(decoder.params)
    state = nc.RmsPropState(alpha=config.alpha,
                            learning_rate=config.learning_rate,
                            decay_factor=config.lr_decay_factor,
                            decay_interval=config.lr_decay_interval)
    rng = stream(seed, "ae", "data")
    last = float("nan")
    for _ in range(config.steps):
        i = int(rng.integers(len(images)))
        loss = autoencoder_loss(encoder, decoder, images[i],
                                masks[i] if masks is not None else None,
                                masked=masked)
        nc.zero_grads(params.values())
        nc.backward(loss)
        nc.rmsprop_step(state, params)
        last = float(loss.data)
    encoder.set_trainable(False)
    decoder.set_trainable(False)
    return encoder, {"final_loss": last, "steps": config.steps,
                     "masked": masked}
