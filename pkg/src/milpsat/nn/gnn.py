"""Message-passing GNN on MILP-graphs predicting satisfiability.

Every learnable function is a two-layer perceptron ``in -> d (ReLU) -> out``.
Per round, constraint and variable embeddings are updated synchronously::

    hV_i <- gV(hV_i, sum_j E_ij fW(hW_j))
    hW_j <- gW(hW_j, sum_i E_ij fV(hV_i))

and the graph output is ``sigmoid(out(sum_i hV_i, sum_j hW_j))``.  Without
random node features the variable input embedding is one learnable vector
shared by all variable nodes.
"""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..graph import BatchedGraph, BipartiteGraph, batch as batch_graphs
from . import tensor as T
from .tensor import Tensor

CHECKPOINT_VERSION = 1
LOSS_KINDS = ("bce", "mse")


class DimensionError(ValueError):
    """Raised when graph features or checkpoint shapes do not fit a model."""


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out))


class Mlp:
    def __init__(self, name: str, n_in: int, hidden: int, n_out: int, rng: np.random.Generator | None = None):
        self.name = name
        self.dims = (n_in, hidden, n_out)
        if rng is None:
            w1, w2 = np.zeros((n_in, hidden)), np.zeros((hidden, n_out))
        else:
            w1, w2 = glorot(rng, n_in, hidden), glorot(rng, hidden, n_out)
        self.w1 = Tensor(w1, True, f"{name}.w1")
        self.b1 = Tensor(np.zeros(hidden), True, f"{name}.b1")
        self.w2 = Tensor(w2, True, f"{name}.w2")
        self.b2 = Tensor(np.zeros(n_out), True, f"{name}.b2")

    def parameters(self) -> list[Tensor]:
        return [self.w1, self.b1, self.w2, self.b2]

    def __call__(self, x: Tensor) -> Tensor:
        return T.relu(x @ self.w1 + self.b1) @ self.w2 + self.b2


@dataclass
class GnnConfig:
    d: int = 32
    rounds: int = 2
    rni_fraction: float = 0.0
    loss: str = "bce"

    def __post_init__(self):
        if self.d < 1 or self.rounds < 0:
            raise ValueError(f"bad model size d={self.d}, rounds={self.rounds}")
        if not 0.0 <= self.rni_fraction <= 1.0:
            raise ValueError("rni_fraction must be in [0, 1]")
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"loss must be one of {LOSS_KINDS}")

    @property
    def uses_rni(self) -> bool:
        return self.rni_fraction > 0.0

    @property
    def feature_dims(self) -> tuple[int, int]:
        return (2, 1) if self.uses_rni else (1, 0)


class GnnModel:
    """Parameters live in :class:`Tensor` objects; ``params`` maps name to tensor."""

    def __init__(self, config: GnnConfig, seed: int | None = 0):
        self.config = config
        d = config.d
        rng = None if seed is None else np.random.default_rng(seed)
        dc, dv = config.feature_dims
        self.in_v = Mlp("in_v", dc, d, d, rng)
        if config.uses_rni:
            self.in_w: Mlp | Tensor = Mlp("in_w", dv, d, d, rng)
        else:
            init = np.zeros(d) if rng is None else rng.uniform(-np.sqrt(3.0 / d), np.sqrt(3.0 / d), d)
            self.in_w = Tensor(init, True, "in_w.h")
        self.rounds = []
        for r in range(config.rounds):
            self.rounds.append({
                "f_v": Mlp(f"round{r}.f_v", d, d, d, rng),
                "f_w": Mlp(f"round{r}.f_w", d, d, d, rng),
                "g_v": Mlp(f"round{r}.g_v", 2 * d, d, d, rng),
                "g_w": Mlp(f"round{r}.g_w", 2 * d, d, d, rng),
            })
        self.out = Mlp("out", 2 * d, d, 1, rng)

    @classmethod
    def zeros(cls, config: GnnConfig) -> "GnnModel":
        return cls(config, seed=None)

    @property
    def params(self) -> "OrderedDict[str, Tensor]":
        ps: list[Tensor] = list(self.in_v.parameters())
        ps += self.in_w.parameters() if isinstance(self.in_w, Mlp) else [self.in_w]
        for rd in self.rounds:
            for key in ("f_v", "f_w", "g_v", "g_w"):
                ps += rd[key].parameters()
        ps += self.out.parameters()
        return OrderedDict((p.name, p) for p in ps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def get_state(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.params.items()}

    def set_state(self, state: dict[str, np.ndarray]) -> None:
        params = self.params
        if set(state) != set(params):
            raise DimensionError("parameter names do not match the model")
        for k, p in params.items():
            v = np.asarray(state[k], dtype=np.float64)
            if v.shape != p.data.shape:
                raise DimensionError(f"{k}: shape {v.shape} != expected {p.data.shape}")
            p.data = v.copy()

    def num_parameters(self) -> int:
        return sum(p.data.size for p in self.params.values())

    # -- computation --------------------------------------------------------

    def __call__(self, g: BatchedGraph | BipartiteGraph) -> Tensor:
        return forward(self, g)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(checkpoint_dict(self), fh)

    @classmethod
    def load(cls, path, expect: GnnConfig | None = None) -> "GnnModel":
        with open(path) as fh:
            return from_checkpoint_dict(json.load(fh), expect)


def _check_dims(model: GnnModel, g: BipartiteGraph) -> None:
    want = model.config.feature_dims
    if g.feature_dims != want:
        raise DimensionError(
            f"graph feature dims {g.feature_dims} do not match model dims {want} "
            f"(RNI slot {'expected' if model.config.uses_rni else 'not expected'})"
        )


def forward(model: GnnModel, g: BatchedGraph | BipartiteGraph) -> Tensor:
    """Per-member predictions in (0, 1), shape (members,)."""
    if isinstance(g, BipartiteGraph):
        g = batch_graphs([g])
    u = g.graph
    _check_dims(model, u)

    h_v = model.in_v(Tensor(u.con_features))
    if isinstance(model.in_w, Mlp):
        h_w = model.in_w(Tensor(u.var_features))
    else:
        h_w = T.broadcast_rows(model.in_w, u.n)

    for rd in model.rounds:
        agg_v = T.spmm(g.adjacency, rd["f_w"](h_w), g.adjacency_t)
        agg_w = T.spmm(g.adjacency_t, rd["f_v"](h_v), g.adjacency)
        h_v, h_w = (
            rd["g_v"](T.concat([h_v, agg_v], axis=1)),
            rd["g_w"](T.concat([h_w, agg_w], axis=1)),
        )

    pooled_v = T.spmm(g.con_pool, h_v)
    pooled_w = T.spmm(g.var_pool, h_w)
    logits = model.out(T.concat([pooled_v, pooled_w], axis=1))
    return T.sigmoid(T.reshape(logits, (g.members,)))


def predict(model: GnnModel, graphs: Iterable[BipartiteGraph], batch_size: int = 64) -> np.ndarray:
    graphs = list(graphs)
    out = []
    for s in range(0, len(graphs), batch_size):
        out.append(forward(model, batch_graphs(graphs[s : s + batch_size])).data)
    return np.concatenate(out) if out else np.zeros(0)


def classify(y_hat) -> np.ndarray | int:
    """1 iff the prediction is strictly above 1/2."""
    y = np.asarray(y_hat)
    out = (y > 0.5).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def loss(y_hat, y, kind: str = "bce") -> Tensor:
    """Mean BCE or MSE of predictions against 0/1 labels (a scalar tensor)."""
    pred = y_hat if isinstance(y_hat, Tensor) else Tensor(y_hat)
    y = np.asarray(y, dtype=np.float64)
    if pred.shape != y.shape:
        raise ValueError(f"prediction length {pred.shape} != label length {y.shape}")
    kind = kind.lower()
    if kind == "bce":
        return T.bce(pred, y)
    if kind == "mse":
        return T.mse(pred, y)
    raise ValueError(f"unknown loss kind {kind!r}")


def backward(model: GnnModel, g: BatchedGraph | BipartiteGraph, y, kind: str | None = None):
    """Loss value and gradients of every parameter (zeros for unused ones)."""
    model.zero_grad()
    out = forward(model, g)
    L = loss(out, y, kind or model.config.loss)
    L.backward()
    grads = OrderedDict(
        (k, p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for k, p in model.params.items()
    )
    return float(L.data), grads, out.data


@dataclass
class AdamState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray], state: AdamState,
              lr: float | None = None) -> AdamState:
    """In-place bias-corrected Adam update of ``params``."""
    lr = state.lr if lr is None else lr
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for k, p in params.items():
        g = grads[k]
        if g.shape != p.data.shape:
            raise DimensionError(f"{k}: gradient shape {g.shape} != parameter shape {p.data.shape}")
        m = state.m.get(k)
        if m is None:
            m = state.m[k] = np.zeros_like(p.data)
            state.v[k] = np.zeros_like(p.data)
        v = state.v[k]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return state


def checkpoint_dict(model: GnnModel) -> dict:
    c = model.config
    return {
        "format": "milpsat-gnn",
        "version": CHECKPOINT_VERSION,
        "d": c.d,
        "rounds": c.rounds,
        "rni_fraction": c.rni_fraction,
        "loss": c.loss,
        "params": {
            k: {"shape": list(v.shape), "values": v.ravel().tolist()}
            for k, v in model.get_state().items()
        },
    }


def from_checkpoint_dict(d: dict, expect: GnnConfig | None = None) -> GnnModel:
    if d.get("format") != "milpsat-gnn" or d.get("version") != CHECKPOINT_VERSION:
        raise DimensionError("not a supported checkpoint")
    config = GnnConfig(d=d["d"], rounds=d["rounds"], rni_fraction=d["rni_fraction"], loss=d["loss"])
    if expect is not None and (expect.d, expect.rounds, expect.uses_rni) != (
        config.d, config.rounds, config.uses_rni
    ):
        raise DimensionError(f"checkpoint config {config} does not match expected {expect}")
    model = GnnModel.zeros(config)
    state = {}
    for k, entry in d["params"].items():
        vals = np.asarray(entry["values"], dtype=np.float64)
        shape = tuple(entry["shape"])
        if vals.size != int(np.prod(shape)):
            raise DimensionError(f"{k}: {vals.size} values for shape {shape}")
        state[k] = vals.reshape(shape)
    model.set_state(state)
    return model
