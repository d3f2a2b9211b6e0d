"""Policy networks.

MLP: two hidden layers of 128 units, ReLU, 20% dropout in each layer.
LSTM: two preprocessing layers of 100 units with 10% dropout, layer
normalization, then a single 100-unit LSTM layer. Both output the 5-vector
scaled action.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numcore as nc
from ..numcore.layers import dense_params, layer_norm_params, lstm_params
from .actions import ACTION_DIM


@dataclass
class PolicySpec:
    network: str = "mlp"             # "mlp" | "lstm"
    mlp_hidden: int = 128
    mlp_dropout: float = 0.2
    lstm_prep: int = 100
    lstm_units: int = 100
    lstm_dropout: float = 0.1

    def __post_init__(self):
        if self.network not in ("mlp", "lstm"):
            raise ValueError(f"unknown network {self.network!r}")

    def to_json(self) -> dict:
        return {"network": self.network, "mlp_hidden": self.mlp_hidden,
                "mlp_dropout": self.mlp_dropout, "lstm_prep": self.lstm_prep,
                "lstm_units": self.lstm_units,
                "lstm_dropout": self.lstm_dropout}

    @staticmethod
    def from_json(d: dict) -> "PolicySpec":
        return PolicySpec(**d)


class MlpPolicy:
    def __init__(self, spec: PolicySpec, input_dim: int,
                 rng: np.random.Generator):
        h = spec.mlp_hidden
        self.spec = spec
        self.input_dim = input_dim
        self.params = {}
        for name, (a, b) in {"l1": (input_dim, h), "l2": (h, h),
                             "out": (h, ACTION_DIM)}.items():
            w, bias = dense_params(rng, a, b)
            self.params[f"{name}.w"] = w
            self.params[f"{name}.b"] = bias
        self.params["out.w"].data *= 0.1   # start near zero action

    def forward(self, x: nc.Tensor, rng=None, training: bool = False) -> nc.Tensor:
        p = self.params
        d = self.spec.mlp_dropout
        h = nc.relu(nc.linear(x, p["l1.w"], p["l1.b"]))
        h = nc.dropout(h, d, rng, training)
        h = nc.relu(nc.linear(h, p["l2.w"], p["l2.b"]))
        h = nc.dropout(h, d, rng, training)
        return nc.linear(h, p["out.w"], p["out.b"])

    def act_np(self, x: np.ndarray) -> np.ndarray:
        out = self.forward(nc.constant(x[None]), training=False)
        return out.data[0]

    def set_trainable(self, trainable: bool):
        for t in self.params.values():
            t.requires_grad = trainable


class LstmPolicy:
    def __init__(self, spec: PolicySpec, input_dim: int,
                 rng: np.random.Generator):
        self.spec = spec
        self.input_dim = input_dim
        prep, units = spec.lstm_prep, spec.lstm_units
        self.params = {}
        for name, (a, b) in {"p1": (input_dim, prep), "p2": (prep, prep)}.items():
            w, bias = dense_params(rng, a, b)
            self.params[f"{name}.w"] = w
            self.params[f"{name}.b"] = bias
        g, b = layer_norm_params(prep)
        self.params["ln.g"] = g
        self.params["ln.b"] = b
        w, b = lstm_params(rng, prep, units)
        self.params["lstm.w"] = w
        self.params["lstm.b"] = b
        w, b = dense_params(rng, units, ACTION_DIM)
        self.params["out.w"] = w
        self.params["out.b"] = b
        self.params["out.w"].data *= 0.1

    def initial_state(self, batch: int):
        units = self.spec.lstm_units
        return (nc.constant(np.zeros((batch, units))),
                nc.constant(np.zeros((batch, units))))

    def step(self, x: nc.Tensor, state, rng=None, training: bool = False):
        """One timestep: returns (action [B,5], new state)."""
        p = self.params
        d = self.spec.lstm_dropout
        h = nc.relu(nc.linear(x, p["p1.w"], p["p1.b"]))
        h = nc.dropout(h, d, rng, training)
        h = nc.relu(nc.linear(h, p["p2.w"], p["p2.b"]))
        h = nc.dropout(h, d, rng, training)
        h = nc.layer_norm(h, p["ln.g"], p["ln.b"])
        hh, cc = nc.lstm_cell(h, state[0], state[1], p["lstm.w"], p["lstm.b"])
        out = nc.linear(hh, p["out.w"], p["out.b"])
        return out, (hh, cc)

    def set_trainable(self, trainable: bool):
        for t in self.params.values():
            t.requires_grad = trainable


def build_policy(spec: PolicySpec, input_dim: int, rng: np.random.Generator):
    if spec.network == "mlp":
        return MlpPolicy(spec, input_dim, rng)
    return LstmPolicy(spec, input_dim, rng)
