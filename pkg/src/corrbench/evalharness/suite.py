"""Evaluation cells, reports, and table assembly."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..simworld import TaskSpec
from .rollout import EpisodeRecord, rollout


@dataclass
class EvalReport:
    method: str
    task: str
    n_attempts: int
    n_success: int
    episodes: list
    train_configs: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def success_rate(self) -> float:
        return self.n_success / self.n_attempts if self.n_attempts else 0.0

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "task": self.task,
            "n_attempts": self.n_attempts,
            "n_success": self.n_success,
            "success_rate": self.success_rate,
            "episodes": [e.to_json() for e in self.episodes],
            "train_configs": (self.train_configs.tolist()
                              if self.train_configs is not None else None),
            "meta": self.meta,
        }

    @staticmethod
    def from_json(d: dict) -> "EvalReport":
        eps = [EpisodeRecord(seed=e["seed"], initial=np.array(e["initial"]),
                             succeeded=e["success"], score=e["score"],
                             dt=e["dt"], dr=e["dr"]) for e in d["episodes"]]
        return EvalReport(method=d["method"], task=d["task"],
                          n_attempts=d["n_attempts"], n_success=d["n_success"],
                          episodes=eps,
                          train_configs=(np.array(d["train_configs"])
                                         if d["train_configs"] else None),
                          meta=d.get("meta", {}))


def evaluate_cell(policy, task: TaskSpec, method: str, n_episodes: int,
                  base_seed: int, cameras=None,
                  train_configs=None) -> EvalReport:
    """Roll `n_episodes` test-split episodes with per-cell fixed seeds."""
    episodes = [rollout(policy, task, base_seed + i, cameras)
                for i in range(n_episodes)]
    n_success = sum(e.succeeded for e in episodes)
    return EvalReport(method=method, task=task.task_id,
                      n_attempts=n_episodes, n_success=n_success,
                      episodes=episodes,
                      train_configs=(np.asarray(train_configs)
                                     if train_configs is not None else None))


def write_table_csv(path, methods, tasks, cells: dict):
    """cells maps (method, task) -> EvalReport or None ('--')."""
    lines = ["method," + ",".join(tasks)]
    for m in methods:
        row = [m]
        for t in tasks:
            rep = cells.get((m, t))
            row.append("--" if rep is None else f"{100 * rep.success_rate:.1f}")
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")
    return path


def write_table_json(path, methods, tasks, cells: dict):
    payload = {
        "methods": list(methods),
        "tasks": list(tasks),
        "cells": {f"{m}|{t}": (cells[(m, t)].to_json()
                               if cells.get((m, t)) else None)
                  for m in methods for t in tasks},
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=1, sort_keys=True)
    return path


def write_noise_ablation_csv(path, results: dict, demo_counts, methods):
    """results maps (noise_on, demos, method) -> EvalReport."""
    header = ["noise"] + [f"{m}@{d}" for d in demo_counts for m in methods]
    lines = [",".join(header)]
    for noise_on, label in ((False, "no_noise"), (True, "with_noise")):
        row = [label]
        for d in demo_counts:
            for m in methods:
                rep = results.get((noise_on, d, m))
                row.append("--" if rep is None
                           else f"{100 * rep.success_rate:.1f}")
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")
    return path
