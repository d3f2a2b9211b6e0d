"""Visual heads producing the policy input z.

Methods:
  gt_3d / gt_2d      ground-truth object points (world frame / pixel coords)
  dd_2d / dd_3d      descriptor-set expectations over correspondence kernels
  dd_pretrain_e2e    channel-wise expectations of a pretrained descriptor net
  ae / ae_masked     frozen autoencoder feature points
  ae_e2e             autoencoder-initialized encoder fine-tuned end-to-end
  e2e                the same encoder trained from scratch end-to-end
  e2e_deep           the descriptor architecture (D=16) trained end-to-end

Descriptor-set methods come in three variants deciding what policy training
optimizes: fixed_set (policy only), set_optimization (policy + descriptor
vectors, the default), end_to_end_dense (policy + descriptors + vision net).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import numcore as nc
from ..correspond.model import DescriptorNet
from ..render.camera import CameraModel, backproject_map, project_many
from ..simworld.world import rot2
from .autoencoder import ConvPointsEncoder

METHODS = ("gt_3d", "gt_2d", "ae", "ae_masked", "ae_e2e", "e2e", "e2e_deep",
           "dd_2d", "dd_3d", "dd_pretrain_e2e")
DD_VARIANTS = ("fixed_set", "set_optimization", "end_to_end_dense")

DEFAULT_TEMPERATURE = 0.01   # squared-descriptor-distance units
GT_POINT_SEED = 20_000_001   # object surface points shared by gt_3d and gt_2d
_NEG_INF = -1e30


@dataclass
class VisualHeadConfig:
    method: str
    variant: str = "set_optimization"
    n_points: int = 16
    descriptor_dim: int = 3
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.method in ("dd_2d", "dd_3d") and self.variant not in DD_VARIANTS:
            raise ValueError(f"unknown descriptor variant {self.variant!r}")

    @property
    def z_dim(self) -> int:
        p, d = self.n_points, self.descriptor_dim
        return {
            "gt_3d": 3 * p, "gt_2d": 2 * p,
            "dd_2d": 2 * p, "dd_3d": 3 * p,
            "dd_pretrain_e2e": 2 * d,
            "ae": 32, "ae_masked": 32, "ae_e2e": 32, "e2e": 32,
            "e2e_deep": 32,
        }[self.method]

    def to_json(self) -> dict:
        return {"method": self.method, "variant": self.variant,
                "n_points": self.n_points,
                "descriptor_dim": self.descriptor_dim,
                "temperature": self.temperature}

    @staticmethod
    def from_json(d: dict) -> "VisualHeadConfig":
        return VisualHeadConfig(**d)


@dataclass
class DescriptorSet:
    descriptors: nc.Tensor          # [P, D]
    trainable: bool
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return self.descriptors.shape[0]


def sample_object_points(shape, n_points: int, seed: int = GT_POINT_SEED):
    """Fixed body-frame points on the object's top surface, [P, 3]."""
    rng = np.random.Generator(np.random.PCG64(seed))
    if shape.kind == "box":
        q = np.column_stack([
            rng.uniform(-shape.size_x / 2, shape.size_x / 2, n_points),
            rng.uniform(-shape.size_y / 2, shape.size_y / 2, n_points),
        ])
    else:
        r = shape.radius * np.sqrt(rng.uniform(0, 1, n_points))
        phi = rng.uniform(0, 2 * np.pi, n_points)
        q = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    return np.column_stack([q, np.full(n_points, shape.top)])


def object_points_world(body_points: np.ndarray, obj_pose: np.ndarray):
    r = rot2(obj_pose[2])
    xy = body_points[:, :2] @ r.T + obj_pose[:2]
    return np.column_stack([xy, body_points[:, 2]])


def descriptor_heatmap(desc_image: np.ndarray, descriptor: np.ndarray,
                       temperature: float = DEFAULT_TEMPERATURE) -> np.ndarray:
    """Normalized correspondence kernel p(u,v) over a [H, W, D] descriptor
    image: softmax of -||desc - d||^2 / T."""
    d2 = ((desc_image - descriptor) ** 2).sum(axis=-1)
    logits = -d2 / temperature
    logits -= logits.max()
    p = np.exp(logits)
    return p / p.sum()


def spatial_expectation(p: np.ndarray, mode: str = "image_2d",
                        view=None) -> np.ndarray:
    """Probability-weighted mean pixel (image_2d) or back-projected world
    point (depth_3d, renormalized over finite-depth pixels)."""
    h, w = p.shape
    if mode == "image_2d":
        uu, vv = np.meshgrid(np.arange(w, dtype=float),
                             np.arange(h, dtype=float))
        return np.array([(p * uu).sum(), (p * vv).sum()])
    if mode == "depth_3d":
        if view is None:
            raise ValueError("depth_3d expectation needs a view with depth")
        finite = np.isfinite(view.depth)
        if not finite.any():
            raise ValueError("depth_3d expectation with all-infinite depth")
        pts = backproject_map(view.camera, view.depth)
        mass = p[finite].sum()
        if mass <= 0:
            raise ValueError("no probability mass on finite-depth pixels")
        return (p[finite][:, None] * pts[finite]).sum(axis=0) / mass
    raise ValueError(f"unknown expectation mode {mode!r}")


def init_descriptor_set(net: DescriptorNet, reference, n_points: int,
                        rng: np.random.Generator, trainable: bool,
                        episode_id=None, frame_id=None) -> DescriptorSet:
    """Sample P distinct mask pixels of a reference view and read their
    descriptors; provenance records where they came from."""
    vv, uu = np.nonzero(reference.mask)
    if len(uu) < n_points:
        raise ValueError(f"reference mask has {len(uu)} pixels, "
                         f"need {n_points}")
    pick = rng.choice(len(uu), size=n_points, replace=False)
    pixels = np.column_stack([uu[pick], vv[pick]])
    desc_image = net.descriptor_image(reference.rgb)
    descs = desc_image[pixels[:, 1], pixels[:, 0]].copy()
    return DescriptorSet(
        descriptors=nc.Tensor(descs, requires_grad=trainable),
        trainable=trainable,
        provenance={"episode": episode_id, "frame": frame_id,
                    "pixels": pixels.tolist()})


# ---------------------------------------------------------------------------
# graph-side helpers


def _heatmap_graph(flat_desc: nc.Tensor, dset: nc.Tensor, temperature: float,
                   mask_logits: np.ndarray | None = None) -> nc.Tensor:
    """[HW, D] x [P, D] -> column-normalized kernel [HW, P]."""
    img2 = nc.reduce_sum(nc.square(flat_desc), axis=1, keepdims=True)
    d2 = nc.reduce_sum(nc.square(dset), axis=1)
    cross = nc.matmul(flat_desc, nc.transpose2d(dset))
    sq = nc.add(nc.add(img2, d2), nc.affine(cross, -2.0))
    logits = nc.affine(sq, -1.0 / temperature)
    if mask_logits is not None:
        logits = nc.add(logits, nc.constant(mask_logits[:, None]))
    return nc.softmax(logits, axis=0)


def _pixel_coords(h: int, w: int) -> np.ndarray:
    uu, vv = np.meshgrid(np.arange(w, dtype=float), np.arange(h, dtype=float))
    return np.stack([uu.ravel(), vv.ravel()], axis=1)


# ---------------------------------------------------------------------------
# heads


class VisualHead:
    """Common surface: frame caches for training, numpy encode for rollout."""

    method: str
    needs_rgb = True
    needs_depth = False
    needs_world = False

    def __init__(self, config: VisualHeadConfig, camera: CameraModel):
        self.config = config
        self.camera = camera
        self.z_dim = config.z_dim

    # trainable parameters exposed to the policy optimizer
    def trainable_params(self) -> dict:
        return {}

    @property
    def fully_frozen(self) -> bool:
        return not self.trainable_params()

    def state_arrays(self) -> dict:
        return {}

    def load_state(self, arrays: dict):
        pass

    def extra_state(self) -> dict:
        return {}

    def frame_cache(self, view, obj_pose) -> dict:
        raise NotImplementedError

    def z_graph(self, caches: list) -> nc.Tensor:
        raise NotImplementedError

    def encode(self, view, obj_pose=None) -> np.ndarray:
        raise NotImplementedError


class GtHead(VisualHead):
    needs_rgb = False
    needs_world = True

    def __init__(self, config, camera, object_shape):
        super().__init__(config, camera)
        self.method = config.method
        self.body_points = sample_object_points(object_shape, config.n_points)

    def encode(self, view, obj_pose=None) -> np.ndarray:
        if obj_pose is None:
            raise ValueError("ground-truth heads need the object pose")
        world = object_points_world(self.body_points, np.asarray(obj_pose))
        if self.method == "gt_3d":
            return world.reshape(-1)
        u, v, _ = project_many(self.camera, world)
        return np.column_stack([u, v]).reshape(-1)

    def frame_cache(self, view, obj_pose) -> dict:
        return {"z": self.encode(view, obj_pose)}


class DescriptorHead(VisualHead):
    """dd_2d, dd_3d, dd_pretrain_e2e."""

    def __init__(self, config, camera, net: DescriptorNet,
                 descriptor_set: DescriptorSet | None):
        super().__init__(config, camera)
        self.method = config.method
        self.net = net
        self.dset = descriptor_set
        self.needs_depth = config.method == "dd_3d"
        if config.method == "dd_pretrain_e2e":
            self.train_net = True
            self.train_set = False
        else:
            variant = config.variant
            self.train_net = variant == "end_to_end_dense"
            self.train_set = variant in ("set_optimization", "end_to_end_dense")
            if self.dset is None:
                raise ValueError(f"{config.method} needs a descriptor set")
        self.net.set_trainable(self.train_net)
        if self.dset is not None:
            self.dset.descriptors.requires_grad = self.train_set

    def trainable_params(self) -> dict:
        params = {}
        if self.train_set:
            params["head.descriptors"] = self.dset.descriptors
        if self.train_net:
            params.update({f"head.net.{k}": v for k, v in self.net.params.items()})
        return params

    def state_arrays(self) -> dict:
        arrays = {f"head.net.{k}": v.data for k, v in self.net.params.items()}
        if self.dset is not None:
            arrays["head.descriptors"] = self.dset.descriptors.data
        return arrays

    def load_state(self, arrays: dict):
        self.net.load_state({k.removeprefix("head.net."): v
                             for k, v in arrays.items()
                             if k.startswith("head.net.")})
        if self.dset is not None:
            self.dset.descriptors.data = np.asarray(arrays["head.descriptors"],
                                                    dtype=np.float64)

    def extra_state(self) -> dict:
        if self.dset is None:
            return {}
        return {"descriptor_provenance": self.dset.provenance,
                "descriptors_trainable": self.dset.trainable}

    def _coords3(self, view):
        pts = backproject_map(view.camera, view.depth).reshape(-1, 3)
        finite = np.isfinite(view.depth).reshape(-1)
        mask_logits = np.where(finite, 0.0, _NEG_INF)
        pts = np.where(finite[:, None], pts, 0.0)
        return pts, mask_logits

    def frame_cache(self, view, obj_pose) -> dict:
        cache = {}
        if self.train_net:
            cache["rgb"] = view.rgb.astype(np.float32)
        else:
            cache["desc"] = self.net.descriptor_image(view.rgb).astype(np.float32)
        if self.method == "dd_3d":
            pts, mask_logits = self._coords3(view)
            cache["coords3"] = pts.astype(np.float32)
            cache["mask_logits"] = mask_logits
        if self.fully_frozen:
            cache = {"z": self._encode_from(cache["desc"].astype(np.float64),
                                            cache.get("coords3"),
                                            cache.get("mask_logits"))}
        return cache

    def _expect_graph(self, flat_desc: nc.Tensor, cache) -> nc.Tensor:
        h, w = self.camera.height, self.camera.width
        if self.method == "dd_pretrain_e2e":
            # channel-wise softmax expectations over the D channels
            p = nc.softmax(nc.affine(flat_desc, 1.0 / self.config.temperature),
                           axis=0)
            coords = nc.constant(_pixel_coords(h, w))
            e = nc.matmul(nc.transpose2d(p), coords)        # [D, 2]
            return nc.reshape(e, (1, self.z_dim))
        mask_logits = cache.get("mask_logits") if self.method == "dd_3d" else None
        p = _heatmap_graph(flat_desc, self.dset.descriptors,
                           self.config.temperature, mask_logits)
        if self.method == "dd_2d":
            coords = nc.constant(_pixel_coords(h, w))
        else:
            coords = nc.constant(np.asarray(cache["coords3"], dtype=np.float64))
        e = nc.matmul(nc.transpose2d(p), coords)            # [P, K]
        return nc.reshape(e, (1, self.z_dim))

    def z_graph(self, caches: list) -> nc.Tensor:
        h, w = self.camera.height, self.camera.width
        d = self.net.descriptor_dim
        if self.train_net:
            imgs = nc.constant(np.stack([np.asarray(c["rgb"], dtype=np.float64)
                                         for c in caches]))
            desc = self.net.forward(imgs)
            rows = []
            for i, c in enumerate(caches):
                flat = nc.reshape(nc.narrow(desc, 0, i, 1), (h * w, d))
                rows.append(self._expect_graph(flat, c))
            return nc.concat(rows, axis=0)
        rows = []
        for c in caches:
            flat = nc.constant(np.asarray(c["desc"], dtype=np.float64)
                               .reshape(h * w, d))
            rows.append(self._expect_graph(flat, c))
        return nc.concat(rows, axis=0)

    def _encode_from(self, desc_image: np.ndarray, coords3=None,
                     mask_logits=None) -> np.ndarray:
        h, w = desc_image.shape[:2]
        flat = desc_image.reshape(h * w, -1)
        t = self.config.temperature
        if self.method == "dd_pretrain_e2e":
            logits = flat / t
            logits = logits - logits.max(axis=0, keepdims=True)
            p = np.exp(logits)
            p /= p.sum(axis=0, keepdims=True)
            return (p.T @ _pixel_coords(h, w)).reshape(-1)
        dset = self.dset.descriptors.data
        d2 = (flat ** 2).sum(1, keepdims=True) + (dset ** 2).sum(1) \
            - 2.0 * flat @ dset.T
        logits = -d2 / t
        if self.method == "dd_3d":
            logits = logits + mask_logits[:, None]
        logits = logits - logits.max(axis=0, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=0, keepdims=True)
        coords = _pixel_coords(h, w) if self.method == "dd_2d" \
            else np.asarray(coords3, dtype=np.float64)
        return (p.T @ coords).reshape(-1)

    def encode(self, view, obj_pose=None) -> np.ndarray:
        if view.rgb.shape[0] != self.camera.height \
                or view.rgb.shape[1] != self.camera.width:
            raise ValueError("image size does not match the trained head")
        desc_image = self.net.descriptor_image(view.rgb)
        coords3 = mask_logits = None
        if self.method == "dd_3d":
            coords3, mask_logits = self._coords3(view)
        return self._encode_from(desc_image, coords3, mask_logits)


class ConvPointsHead(VisualHead):
    """ae, ae_masked, ae_e2e, e2e."""

    def __init__(self, config, camera, encoder: ConvPointsEncoder):
        super().__init__(config, camera)
        self.method = config.method
        self.encoder = encoder
        self.train_encoder = config.method in ("ae_e2e", "e2e")
        self.encoder.set_trainable(self.train_encoder)

    def trainable_params(self) -> dict:
        if not self.train_encoder:
            return {}
        return {f"head.enc.{k}": v for k, v in self.encoder.params.items()}

    def state_arrays(self) -> dict:
        return {f"head.enc.{k}": v.data for k, v in self.encoder.params.items()}

    def load_state(self, arrays: dict):
        self.encoder.load_state({k.removeprefix("head.enc."): v
                                 for k, v in arrays.items()})

    def frame_cache(self, view, obj_pose) -> dict:
        if self.train_encoder:
            return {"rgb": view.rgb.astype(np.float32)}
        return {"z": self.encoder.encode_np(view.rgb)}

    def z_graph(self, caches: list) -> nc.Tensor:
        imgs = nc.constant(np.stack([np.asarray(c["rgb"], dtype=np.float64)
                                     for c in caches]))
        return self.encoder.forward(imgs)

    def encode(self, view, obj_pose=None) -> np.ndarray:
        if view.rgb.shape[0] != self.encoder.height \
                or view.rgb.shape[1] != self.encoder.width:
            raise ValueError("image size does not match the trained head")
        return self.encoder.encode_np(view.rgb)


class DeepE2eHead(VisualHead):
    """e2e_deep: the descriptor architecture with D=16 channels and
    channel-wise full-resolution spatial softmax, trained end-to-end."""

    D = 16

    def __init__(self, config, camera, net: DescriptorNet):
        super().__init__(config, camera)
        self.method = "e2e_deep"
        self.net = net
        self.net.set_trainable(True)
        self._coords = _pixel_coords(camera.height, camera.width)

    def trainable_params(self) -> dict:
        return {f"head.net.{k}": v for k, v in self.net.params.items()}

    def state_arrays(self) -> dict:
        return {f"head.net.{k}": v.data for k, v in self.net.params.items()}

    def load_state(self, arrays: dict):
        self.net.load_state({k.removeprefix("head.net."): v
                             for k, v in arrays.items()})

    def frame_cache(self, view, obj_pose) -> dict:
        return {"rgb": view.rgb.astype(np.float32)}

    def z_graph(self, caches: list) -> nc.Tensor:
        h, w = self.camera.height, self.camera.width
        imgs = nc.constant(np.stack([np.asarray(c["rgb"], dtype=np.float64)
                                     for c in caches]))
        feat = self.net.forward(imgs)                       # [B, H, W, 16]
        maps = nc.softmax(nc.reshape(feat, (len(caches), h * w, self.D)),
                          axis=1)
        coords = nc.constant(self._coords)
        rows = []
        for i in range(len(caches)):
            m = nc.reshape(nc.narrow(maps, 0, i, 1), (h * w, self.D))
            e = nc.matmul(nc.transpose2d(m), coords)        # [16, 2]
            rows.append(nc.reshape(e, (1, self.z_dim)))
        return nc.concat(rows, axis=0)

    def encode(self, view, obj_pose=None) -> np.ndarray:
        h, w = view.rgb.shape[:2]
        if (h, w) != (self.camera.height, self.camera.width):
            raise ValueError("image size does not match the trained head")
        feat = self.net.descriptor_image(view.rgb).reshape(h * w, self.D)
        feat = feat - feat.max(axis=0, keepdims=True)
        p = np.exp(feat)
        p /= p.sum(axis=0, keepdims=True)
        return (p.T @ self._coords).reshape(-1)


def build_head(config: VisualHeadConfig, camera: CameraModel,
               object_shape=None, net: DescriptorNet | None = None,
               descriptor_set: DescriptorSet | None = None,
               encoder: ConvPointsEncoder | None = None,
               rng: np.random.Generator | None = None) -> VisualHead:
    """Assemble a head from its pretrained pieces.

    gt heads need object_shape; dd heads need the descriptor net (and set);
    ae variants need the pretrained encoder; e2e builds a fresh encoder and
    e2e_deep a fresh 16-channel descriptor net when not supplied."""
    m = config.method
    if m in ("gt_3d", "gt_2d"):
        if object_shape is None:
            raise ValueError("gt heads need the object shape")
        return GtHead(config, camera, object_shape)
    if m in ("dd_2d", "dd_3d", "dd_pretrain_e2e"):
        if net is None:
            raise ValueError(f"{m} needs a trained descriptor net")
        return DescriptorHead(config, camera, net, descriptor_set)
    if m in ("ae", "ae_masked", "ae_e2e", "e2e"):
        if encoder is None:
            if m != "e2e":
                raise ValueError(f"{m} needs a pretrained encoder")
            encoder = ConvPointsEncoder(camera.height, camera.width,
                                        rng=rng or np.random.default_rng(0))
        return ConvPointsHead(config, camera, encoder)
    if m == "e2e_deep":
        if net is None:
            net = DescriptorNet(DeepE2eHead.D, rng=rng or np.random.default_rng(0))
        return DeepE2eHead(config, camera, net)
    raise ValueError(f"unknown method {m!r}")
