"""Descriptor training loop and held-out correspondence evaluation.

Each step mines matches from one synchronized view pair, independently
augments both sides, and takes an RMSProp step on the contrastive loss.
A sustained match shortfall aborts training with a diagnostic, since it
means the configured match count cannot be supported by the data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import numcore as nc
from ..seeding import stream
from .augment import augment_side
from .loss import contrastive_loss
from .mining import mine_matches
from .model import DescriptorNet


class TrainAbort(RuntimeError):
    pass


@dataclass
class CorrespondenceConfig:
    descriptor_dim: int = 3
    steps: int = 3000
    n_matches: int = 48
    n_nonmatches: int = 384
    margin: float = 0.5
    learning_rate: float = 3e-4
    alpha: float = 0.9
    lr_decay_factor: float = 0.5
    lr_decay_interval: int = 1500
    depth_tol: float = 0.01
    photo_tol: float = 0.2
    min_nonmatch_dist: float = 4.0
    augment: bool = True
    holdout_fraction: float = 0.1
    accuracy_px: float = 3.0
    shortfall_abort_rate: float = 0.5
    shortfall_window: int = 200


@dataclass
class CorrespondenceReport:
    steps: int
    n_train_pairs: int
    n_holdout_pairs: int
    holdout_accuracy: float
    holdout_mean_px_error: float
    n_eval_matches: int
    final_loss: float
    shortfall_rate: float
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "steps": self.steps,
            "n_train_pairs": self.n_train_pairs,
            "n_holdout_pairs": self.n_holdout_pairs,
            "holdout_accuracy": self.holdout_accuracy,
            "holdout_mean_px_error": self.holdout_mean_px_error,
            "n_eval_matches": self.n_eval_matches,
            "final_loss": self.final_loss,
            "shortfall_rate": self.shortfall_rate,
        }


def split_pairs(pairs, holdout_fraction: float, rng: np.random.Generator):
    n = len(pairs)
    n_hold = max(1, int(round(n * holdout_fraction))) if n > 1 else 0
    order = rng.permutation(n)
    hold = set(order[:n_hold].tolist())
    train = [pairs[i] for i in range(n) if i not in hold]
    held = [pairs[i] for i in sorted(hold)]
    return train, held


def train_descriptors(pairs, config: CorrespondenceConfig, seed: int,
                      net: DescriptorNet | None = None):
    """Train on synchronized (view_a, view_b) pairs; returns (net, report)."""
    if not pairs:
        raise ValueError("no training pairs")
    rng_split = stream(seed, "corr", "split")
    rng_data = stream(seed, "corr", "data")
    rng_aug = stream(seed, "corr", "augment")
    train_pairs, holdout = split_pairs(pairs, config.holdout_fraction, rng_split)
    if not train_pairs:
        train_pairs = list(pairs)

    if net is None:
        net = DescriptorNet(config.descriptor_dim, rng=stream(seed, "corr", "init"))
    net.set_trainable(True)
    state = nc.RmsPropState(alpha=config.alpha,
                            learning_rate=config.learning_rate,
                            decay_factor=config.lr_decay_factor,
                            decay_interval=config.lr_decay_interval)

    shortfalls = []
    last_loss = float("nan")
    for step_i in range(config.steps):
        pair = train_pairs[rng_data.integers(len(train_pairs))]
        view_a, view_b = pair
        mset = mine_matches(view_a, view_b, config.n_matches,
                            config.n_nonmatches, rng_data,
                            depth_tol=config.depth_tol,
                            photo_tol=config.photo_tol,
                            min_nonmatch_dist=config.min_nonmatch_dist)
        shortfalls.append(mset.shortfall)
        if len(shortfalls) >= config.shortfall_window:
            window = shortfalls[-config.shortfall_window:]
            rate = sum(window) / len(window)
            if rate > config.shortfall_abort_rate:
                raise TrainAbort(
                    f"match shortfall rate {rate:.2f} over the last "
                    f"{config.shortfall_window} steps exceeds "
                    f"{config.shortfall_abort_rate}; lower n_matches "
                    f"({config.n_matches}) or check masks/geometry")
        if len(mset) == 0:
            continue

        img_a, img_b = view_a.rgb, view_b.rgb
        ma, mb = mset.matches_a, mset.matches_b
        nma, nmb = mset.nonmatches_a, mset.nonmatches_b
        if config.augment:
            img_a, ca, keep_a = augment_side(
                img_a, np.vstack([ma, nma]), rng_aug)
            img_b, cb, keep_b = augment_side(
                img_b, np.vstack([mb, nmb]), rng_aug)
            keep = keep_a & keep_b
            ca = np.round(ca).astype(np.int64)
            cb = np.round(cb).astype(np.int64)
            n_m = len(ma)
            ma, mb = ca[:n_m][keep[:n_m]], cb[:n_m][keep[:n_m]]
            nma, nmb = ca[n_m:][keep[n_m:]], cb[n_m:][keep[n_m:]]
            if len(ma) == 0:
                continue

        batch = nc.constant(np.stack([img_a, img_b]))
        desc = net.forward(batch)
        desc_a = nc.narrow(desc, 0, 0, 1)
        desc_b = nc.narrow(desc, 0, 1, 1)
        h, w = img_a.shape[:2]
        loss = contrastive_loss(nc.reshape(desc_a, (h, w, net.descriptor_dim)),
                                nc.reshape(desc_b, (h, w, net.descriptor_dim)),
                                ma, mb, nma, nmb, margin=config.margin)
        nc.zero_grads(net.params.values())
        nc.backward(loss)
        nc.rmsprop_step(state, net.params)
        last_loss = float(loss.data)

    eval_pairs = holdout if holdout else train_pairs
    acc = evaluate_correspondence(net, eval_pairs, config,
                                  stream(seed, "corr", "eval"))
    report = CorrespondenceReport(
        steps=config.steps,
        n_train_pairs=len(train_pairs),
        n_holdout_pairs=len(holdout),
        holdout_accuracy=acc["accuracy"],
        holdout_mean_px_error=acc["mean_px_error"],
        n_eval_matches=acc["n_matches"],
        final_loss=last_loss,
        shortfall_rate=(sum(shortfalls) / len(shortfalls)) if shortfalls else 0.0,
    )
    net.set_trainable(False)
    return net, report


def best_match_pixels(desc_image: np.ndarray, descriptors: np.ndarray):
    """Arg-min pixel of each descriptor over a [H, W, D] descriptor image.

    Returns integer (u, v) pairs, shape [P, 2]."""
    h, w, d = desc_image.shape
    flat = desc_image.reshape(h * w, d)
    d2 = ((flat[None, :, :] - descriptors[:, None, :]) ** 2).sum(axis=2)
    idx = d2.argmin(axis=1)
    return np.column_stack([idx % w, idx // w])


def evaluate_correspondence(net: DescriptorNet, pairs, config, rng,
                            max_pairs: int = 24):
    """Fraction of mined matches whose predicted best-match pixel lands
    within config.accuracy_px of the true correspondence."""
    hits, errors, total = 0, [], 0
    use = pairs[:max_pairs]
    for view_a, view_b in use:
        mset = mine_matches(view_a, view_b, config.n_matches, 0, rng,
                            depth_tol=config.depth_tol,
                            photo_tol=config.photo_tol)
        if len(mset) == 0:
            continue
        da = net.descriptor_image(view_a.rgb)
        db = net.descriptor_image(view_b.rgb)
        ref = da[mset.matches_a[:, 1], mset.matches_a[:, 0]]
        pred = best_match_pixels(db, ref)
        err = np.hypot(*(pred - mset.matches_b).T)
        hits += int((err <= config.accuracy_px).sum())
        errors.extend(err.tolist())
        total += len(mset)
    return {
        "accuracy": hits / total if total else 0.0,
        "mean_px_error": float(np.mean(errors)) if errors else float("nan"),
        "n_matches": total,
    }
