import numpy as np
import pytest

from corrbench import numcore as nc
from corrbench.correspond import (
    CorrespondenceConfig,
    DescriptorNet,
    TrainAbort,
    augment_side,
    best_match_pixels,
    contrastive_loss,
    evaluate_correspondence,
    mine_matches,
    train_descriptors,
)
from corrbench.imageops import bilinear_sample
from corrbench.render import default_rig, render
from corrbench.render.camera import backproject_many, project_many
from corrbench.seeding import stream
from corrbench.simworld import make_task, sample_task_config


@pytest.fixture(scope="module")
def rig():
    return default_rig()


@pytest.fixture(scope="module")
def pairs(rig):
    task = make_task("reach_t")
    rng = stream(7, "pairs")
    out = []
    for i in range(24):
        s = sample_task_config(task, "train", rng)
        out.append((render(s, rig[0], time_index=i),
                    render(s, rig[1], time_index=i)))
    return out


# ---------------------------------------------------------------------------
# mining


def test_identical_views_give_identity_matches(pairs):
    va, _ = pairs[0]
    mset = mine_matches(va, va, 32, 64, stream(1, "ident"))
    assert len(mset) > 0
    assert np.array_equal(mset.matches_a, mset.matches_b)


def test_time_desync_rejected(pairs):
    va, vb = pairs[0]
    vb2 = render.__self__ if False else vb
    from dataclasses import replace
    with pytest.raises(ValueError):
        mine_matches(va, replace(vb, time_index=vb.time_index + 1), 16, 32,
                     stream(1, "t"))


def test_full_occlusion_yields_shortfall(pairs):
    from dataclasses import replace
    va, vb = pairs[0]
    near = np.full_like(vb.depth, 0.2)
    occluded = replace(vb, depth=near)
    mset = mine_matches(va, occluded, 32, 64, stream(2, "occ"))
    assert len(mset) == 0 and mset.shortfall


def test_occlusion_never_matches_into_occluded_pixels(pairs):
    from dataclasses import replace
    va, vb = pairs[1]
    # synthetic occluder over the left half of view B
    depth = vb.depth.copy()
    w = depth.shape[1]
    depth[:, :w // 2] = 0.3
    occluded = replace(vb, depth=depth)
    mset = mine_matches(va, occluded, 48, 96, stream(3, "occ2"))
    assert (mset.matches_b[:, 0] >= w // 2).all()


def test_photometric_rejection_on_gain_mismatch(pairs):
    from dataclasses import replace
    va, vb = pairs[2]
    bright = replace(vb, rgb=np.clip(vb.rgb + 0.35, 0, 1))
    mset = mine_matches(va, bright, 32, 64, stream(4, "photo"))
    assert len(mset) == 0 and mset.shortfall


def test_mined_matches_within_half_pixel_of_analytic_reprojection(pairs):
    worst = 0.0
    checked = 0
    for va, vb in pairs[:8]:
        mset = mine_matches(va, vb, 48, 0, stream(5, "exact"))
        assert len(mset) > 0
        ua = mset.matches_a[:, 0].astype(float)
        vva = mset.matches_a[:, 1].astype(float)
        world = backproject_many(va.camera, ua, vva, va.depth[mset.matches_a[:, 1],
                                                              mset.matches_a[:, 0]])
        ub, vvb, _ = project_many(vb.camera, world)
        err = np.maximum(np.abs(mset.matches_b[:, 0] - ub),
                         np.abs(mset.matches_b[:, 1] - vvb))
        worst = max(worst, float(err.max()))
        checked += len(mset)
    assert checked > 200
    assert worst < 0.51, f"worst reprojection error {worst} px"


def test_nonmatches_respect_min_distance_and_split(pairs):
    va, vb = pairs[3]
    mset = mine_matches(va, vb, 32, 128, stream(6, "nm"))
    d = np.hypot(*(mset.nonmatches_b - mset.matches_b[
        np.tile(np.arange(len(mset)), int(np.ceil(128 / len(mset))))[:128]]).T)
    assert (d >= 4.0).all()
    on = mset.nonmatch_on_object
    assert on.sum() == 64
    assert vb.mask[mset.nonmatches_b[on][:, 1], mset.nonmatches_b[on][:, 0]].all()
    off = ~on
    assert not vb.mask[mset.nonmatches_b[off][:, 1],
                       mset.nonmatches_b[off][:, 0]].any()


# ---------------------------------------------------------------------------
# augmentation


def test_identity_augment_is_noop(pairs):
    va, _ = pairs[0]
    coords = np.array([[3, 4], [10, 20], [63, 47]])
    img, c2, keep = augment_side(va.rgb, coords,
                                 params=dict(rotation_rad=0.0, scale=1.0,
                                             shear=0.0))
    assert np.allclose(img, va.rgb)
    assert np.allclose(c2, coords)
    assert keep.all()


def test_quarter_turn_maps_coordinates():
    img = np.zeros((8, 8, 3))
    coords = np.array([[1, 2], [0, 0], [7, 7]])
    _, c2, keep = augment_side(img, coords,
                               params=dict(rotation_rad=np.pi / 2, scale=1.0,
                                           shear=0.0))
    w = 8
    expect = np.array([[2, w - 1 - 1], [0, w - 1 - 0], [7, w - 1 - 7]])
    assert keep.all()
    assert np.allclose(c2, expect, atol=1e-9)


def test_random_warps_keep_coords_in_bounds(pairs):
    va, _ = pairs[1]
    rng = stream(8, "warps")
    coords = np.column_stack(np.nonzero(va.mask))[:, ::-1]
    for _ in range(200):
        _, c2, keep = augment_side(va.rgb, coords, rng)
        kept = c2[keep]
        if len(kept):
            assert kept[:, 0].min() >= 0 and kept[:, 0].max() <= 63
            assert kept[:, 1].min() >= 0 and kept[:, 1].max() <= 47


def test_augmented_matches_stay_photometric(pairs):
    # bilinear resampling adds at most ~0.05 to the photometric disagreement
    va, vb = pairs[4]
    rng = stream(9, "aug_photo")
    mset = mine_matches(va, vb, 48, 0, rng)
    img_a, ca, keep_a = augment_side(va.rgb, mset.matches_a, rng)
    img_b, cb, keep_b = augment_side(vb.rgb, mset.matches_b, rng)
    keep = keep_a & keep_b
    sa = bilinear_sample(img_a, ca[keep][:, 0], ca[keep][:, 1])
    sb = bilinear_sample(img_b, cb[keep][:, 0], cb[keep][:, 1])
    assert np.abs(sa - sb).max(axis=1).max() <= 0.2 + 0.05 + 0.1


# ---------------------------------------------------------------------------
# loss


def _desc(vals):
    return nc.tensor(np.asarray(vals, dtype=float))


def test_loss_zero_when_matches_equal_and_nonmatches_far():
    d = np.zeros((4, 4, 2))
    d[0, 0] = [1.0, 0.0]
    d[1, 1] = [1.0, 0.0]
    d[3, 3] = [-5.0, 0.0]
    a, b = _desc(d), _desc(d)
    loss = contrastive_loss(a, b, [[0, 0]], [[1, 1]], [[0, 0]], [[3, 3]],
                            margin=0.5)
    assert float(loss.data) == pytest.approx(0.0, abs=1e-12)


def test_loss_single_match_hand_value():
    d1 = np.zeros((2, 2, 3))
    d2 = np.zeros((2, 2, 3))
    d2[0, 0, 0] = 0.2
    loss = contrastive_loss(_desc(d1), _desc(d2), [[0, 0]], [[0, 0]])
    assert float(loss.data) == pytest.approx(0.04, abs=1e-12)


def test_loss_single_nonmatch_hand_value():
    d1 = np.zeros((2, 2, 3))
    d2 = np.zeros((2, 2, 3))
    d2[1, 1, 0] = 0.3
    # one perfect match plus one non-match at distance 0.3 with margin 0.5
    loss = contrastive_loss(_desc(d1), _desc(d2), [[0, 0]], [[0, 0]],
                            [[0, 0]], [[1, 1]], margin=0.5)
    assert float(loss.data) == pytest.approx(0.2 ** 2, abs=1e-9)


def test_loss_requires_matches():
    d = _desc(np.zeros((2, 2, 3)))
    with pytest.raises(ValueError):
        contrastive_loss(d, d, [], [])


def test_loss_gradient_finite_difference():
    rng = stream(10, "lossfd")
    h, w, dd = 6, 8, 3
    base_b = rng.normal(size=(h, w, dd))
    ma = np.array([[0, 0], [3, 2], [7, 5]])
    mb = np.array([[1, 1], [4, 2], [6, 4]])
    nma = np.array([[0, 0], [2, 3]])
    nmb = np.array([[5, 5], [7, 0]])

    def f(x):
        a = nc.reshape(x, (h, w, dd))
        return contrastive_loss(a, nc.constant(base_b), ma, mb, nma, nmb)

    ok, err = nc.finite_difference_check(f, rng.normal(size=(h * w * dd,)),
                                         h=1e-5, tolerance=1e-3)
    assert ok, f"max rel err {err}"


# ---------------------------------------------------------------------------
# training


def test_training_on_identity_pairs_keeps_identity_accuracy(pairs):
    ident = [(va, va) for va, _ in pairs[:6]]
    cfg = CorrespondenceConfig(steps=60, n_matches=24, n_nonmatches=96,
                               holdout_fraction=0.34)
    net, report = train_descriptors(ident, cfg, seed=3)
    assert report.holdout_accuracy >= 0.99


def test_untrained_net_is_near_random(pairs):
    cfg = CorrespondenceConfig()
    net = DescriptorNet(3, rng=stream(0, "u"))
    res = evaluate_correspondence(net, pairs[:8], cfg, stream(1, "ue"))
    assert res["accuracy"] < 0.2


def test_short_training_beats_untrained(pairs):
    cfg = CorrespondenceConfig(steps=350, n_matches=32, n_nonmatches=256)
    net, report = train_descriptors(pairs, cfg, seed=5)
    untrained = evaluate_correspondence(DescriptorNet(3, rng=stream(0, "u2")),
                                        pairs[-3:], cfg, stream(2, "se"))
    assert report.holdout_accuracy > untrained["accuracy"] + 0.2


def test_shortfall_abort(pairs):
    from dataclasses import replace
    va, vb = pairs[0]
    occluded = replace(vb, depth=np.full_like(vb.depth, 0.2))
    bad_pairs = [(va, occluded)] * 4
    cfg = CorrespondenceConfig(steps=300, shortfall_window=50,
                               holdout_fraction=0.0)
    with pytest.raises(TrainAbort):
        train_descriptors(bad_pairs, cfg, seed=6)


def test_best_match_pixels_exact_on_one_hot():
    d = np.zeros((5, 7, 3))
    d[2, 4] = [1.0, -1.0, 0.5]
    out = best_match_pixels(d, np.array([[1.0, -1.0, 0.5]]))
    assert out.tolist() == [[4, 2]]
