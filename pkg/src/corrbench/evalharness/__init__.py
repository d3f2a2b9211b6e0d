"""Closed-loop evaluation: rollouts, success-rate tables, noise-ablation
comparisons, and configuration-space success maps with training convex
hulls."""

from .hull import convex_hull_2d, point_in_hull, DegenerateHullError
from .rollout import rollout, EpisodeRecord
from .suite import EvalReport, evaluate_cell, write_table_csv, write_table_json
from .successmap import success_map_export

__all__ = [
    "convex_hull_2d",
    "point_in_hull",
    "DegenerateHullError",
    "rollout",
    "EpisodeRecord",
    "EvalReport",
    "evaluate_cell",
    "write_table_csv",
    "write_table_json",
    "success_map_export",
]
