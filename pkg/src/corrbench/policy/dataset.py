"""Demonstration dataset: recording, on-disk format, loading.

A dataset directory holds manifest.json plus one binary record per episode.
Each frame of an episode record stores, in order, both camera views as
netpbm blocks (PPM rgb, 16-bit PGM depth, PBM mask), then the 13-float
proprioceptive vector, the 5-float unscaled expert action, and an 8-float
world-truth snapshot (ee x y z yaw, gripper, object x y theta), all
little-endian float64.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..render import render
from ..render.camera import CameraModel
from ..render.imageio import (
    decode_pbm,
    decode_pgm16,
    decode_ppm,
    encode_pbm,
    encode_pgm16,
    encode_ppm,
    pbm_size,
    pgm16_size,
    ppm_size,
)
from ..render.raster import RenderedView
from ..seeding import stream
from ..simworld import (
    TaskSpec,
    expert_action,
    make_task,
    robot_observation,
    sample_task_config,
    step,
    success,
)

MANIFEST_NAME = "manifest.json"
FRAME_TAIL_FLOATS = 13 + 5 + 8


@dataclass
class EpisodeData:
    task_id: str
    seed: int
    initial_obj: np.ndarray          # (3,)
    start_yaw: float
    succeeded: bool
    score: float
    rgb: list                        # per camera: [T, H, W, 3] uint8
    depth: list                      # per camera: [T, H, W] float32
    mask: list                       # per camera: [T, H, W] bool
    proprio: np.ndarray              # [T, 13]
    actions: np.ndarray              # [T, 5] unscaled
    truth: np.ndarray                # [T, 8]

    @property
    def n_frames(self) -> int:
        return len(self.proprio)


@dataclass
class DemoDataset:
    task: TaskSpec
    cameras: list
    episodes: list
    seed: int
    split: str = "train"
    path: Path | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_frames(self) -> int:
        return sum(e.n_frames for e in self.episodes)

    def initial_configs(self) -> np.ndarray:
        return np.stack([e.initial_obj for e in self.episodes])


def frame_view(episode: EpisodeData, cam_index: int, t: int,
               camera: CameraModel) -> RenderedView:
    """Reassemble a RenderedView from stored arrays."""
    return RenderedView(
        rgb=episode.rgb[cam_index][t].astype(np.float64) / 255.0,
        depth=episode.depth[cam_index][t].astype(np.float64),
        mask=episode.mask[cam_index][t],
        camera=camera,
        time_index=t)


def record_expert_episode(task: TaskSpec, cameras, seed: int,
                          split: str = "train") -> EpisodeData:
    """Roll the scripted expert for the full step limit, rendering every
    camera at every step."""
    rng = stream(seed, "episode")
    state = sample_task_config(task, split, rng)
    ref = state
    start_yaw = float(state.ee[3])
    mem = None
    n_cam = len(cameras)
    rgb = [[] for _ in range(n_cam)]
    depth = [[] for _ in range(n_cam)]
    mask = [[] for _ in range(n_cam)]
    proprio, actions, truth = [], [], []
    for t in range(task.step_limit):
        for ci, cam in enumerate(cameras):
            view = render(state, cam, time_index=t)
            rgb[ci].append(np.clip(np.round(view.rgb * 255), 0, 255)
                           .astype(np.uint8))
            depth[ci].append(view.depth.astype(np.float32))
            mask[ci].append(view.mask)
        act, mem = expert_action(task, state, mem)
        proprio.append(robot_observation(state, start_yaw))
        actions.append(act.as_vector())
        truth.append(np.concatenate([state.ee, [state.gripper], state.obj]))
        state = step(state, act, rng, task.disturbance)
    ok, score = success(task, state, ref)
    return EpisodeData(
        task_id=task.task_id, seed=seed, initial_obj=ref.obj.copy(),
        start_yaw=start_yaw, succeeded=ok, score=score,
        rgb=[np.stack(r) for r in rgb],
        depth=[np.stack(d) for d in depth],
        mask=[np.stack(m) for m in mask],
        proprio=np.stack(proprio), actions=np.stack(actions),
        truth=np.stack(truth))


def generate_demos(task: TaskSpec, cameras, n_episodes: int, seed: int,
                   split: str = "train") -> DemoDataset:
    episodes = [record_expert_episode(task, cameras, int(s), split)
                for s in (seed + np.arange(n_episodes))]
    return DemoDataset(task=task, cameras=list(cameras), episodes=episodes,
                       seed=seed, split=split)


# ---------------------------------------------------------------------------
# disk format


def _episode_bytes(ep: EpisodeData) -> bytes:
    chunks = []
    for t in range(ep.n_frames):
        for ci in range(len(ep.rgb)):
            chunks.append(encode_ppm(ep.rgb[ci][t].astype(np.float64) / 255.0))
            chunks.append(encode_pgm16(ep.depth[ci][t].astype(np.float64)))
            chunks.append(encode_pbm(ep.mask[ci][t]))
        tail = np.concatenate([ep.proprio[t], ep.actions[t], ep.truth[t]])
        chunks.append(tail.astype("<f8").tobytes())
    return b"".join(chunks)


def _parse_episode(buf: bytes, n_frames: int, n_cams: int) -> dict:
    rgb = [[] for _ in range(n_cams)]
    depth = [[] for _ in range(n_cams)]
    mask = [[] for _ in range(n_cams)]
    tails = []
    pos = 0
    for _ in range(n_frames):
        for ci in range(n_cams):
            n = ppm_size(buf, pos)
            rgb[ci].append(np.clip(np.round(
                decode_ppm(buf[pos:pos + n]) * 255), 0, 255).astype(np.uint8))
            pos += n
            n = pgm16_size(buf, pos)
            depth[ci].append(decode_pgm16(buf[pos:pos + n]).astype(np.float32))
            pos += n
            n = pbm_size(buf, pos)
            mask[ci].append(decode_pbm(buf[pos:pos + n]))
            pos += n
        tails.append(np.frombuffer(buf, dtype="<f8", count=FRAME_TAIL_FLOATS,
                                   offset=pos))
        pos += FRAME_TAIL_FLOATS * 8
    tails = np.stack(tails)
    return {
        "rgb": [np.stack(r) for r in rgb],
        "depth": [np.stack(d) for d in depth],
        "mask": [np.stack(m) for m in mask],
        "proprio": tails[:, :13],
        "actions": tails[:, 13:18],
        "truth": tails[:, 18:26],
    }


def write_dataset(ds: DemoDataset, out_dir) -> Path:
    out_dir = Path(out_dir)
    (out_dir / "episodes").mkdir(parents=True, exist_ok=True)
    names = []
    for i, ep in enumerate(ds.episodes):
        name = f"ep_{i:05d}.bin"
        with open(out_dir / "episodes" / name, "wb") as f:
            f.write(_episode_bytes(ep))
        names.append(name)
    manifest = {
        "format_version": 1,
        "task": ds.task.task_id,
        "split": ds.split,
        "seed": ds.seed,
        "n_episodes": len(ds.episodes),
        "frames_per_episode": ds.task.step_limit,
        "cameras": [c.to_json() for c in ds.cameras],
        "episodes": [{
            "file": names[i],
            "seed": ep.seed,
            "initial_obj": ep.initial_obj.tolist(),
            "start_yaw": ep.start_yaw,
            "succeeded": bool(ep.succeeded),
            "score": ep.score,
        } for i, ep in enumerate(ds.episodes)],
        "meta": ds.meta,
    }
    with open(out_dir / MANIFEST_NAME, "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
    ds.path = out_dir
    return out_dir


def load_dataset(path, max_episodes: int | None = None) -> DemoDataset:
    path = Path(path)
    with open(path / MANIFEST_NAME) as f:
        manifest = json.load(f)
    task = make_task(manifest["task"])
    cameras = [CameraModel.from_json(c) for c in manifest["cameras"]]
    episodes = []
    entries = manifest["episodes"]
    if max_episodes is not None:
        entries = entries[:max_episodes]
    for entry in entries:
        buf = (path / "episodes" / entry["file"]).read_bytes()
        parsed = _parse_episode(buf, manifest["frames_per_episode"],
                                len(cameras))
        episodes.append(EpisodeData(
            task_id=manifest["task"], seed=entry["seed"],
            initial_obj=np.array(entry["initial_obj"]),
            start_yaw=entry["start_yaw"], succeeded=entry["succeeded"],
            score=entry["score"], **parsed))
    return DemoDataset(task=task, cameras=cameras, episodes=episodes,
                       seed=manifest["seed"], split=manifest["split"],
                       path=path, meta=manifest.get("meta", {}))
