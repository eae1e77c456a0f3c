"""Weighted bipartite MILP-graphs, random node initialisation and batching."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from .milp import MilpInstance


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Constraint nodes 0..m-1 and variable nodes 0..n-1 (0-based here).

    Edge ``e`` joins constraint ``edge_con[e]`` and variable ``edge_var[e]``
    with weight ``edge_weight[e]``; each edge is stored once and used in
    both directions.
    """

    m: int
    n: int
    edge_con: np.ndarray
    edge_var: np.ndarray
    edge_weight: np.ndarray
    con_features: np.ndarray  # (m, dc)
    var_features: np.ndarray  # (n, dv)
    rni: bool = False

    @property
    def feature_dims(self) -> tuple[int, int]:
        return self.con_features.shape[1], self.var_features.shape[1]

    @property
    def num_edges(self) -> int:
        return int(self.edge_con.shape[0])

    @property
    def order(self) -> int:
        return self.m + self.n

    def con_degree(self) -> np.ndarray:
        return np.bincount(self.edge_con, minlength=self.m)

    def var_degree(self) -> np.ndarray:
        return np.bincount(self.edge_var, minlength=self.n)

    def relabel(self, con_perm: Sequence[int], var_perm: Sequence[int]) -> "BipartiteGraph":
        """Move constraint node i to position con_perm[i] and variable j to var_perm[j] (0-based)."""
        con_perm = np.asarray(con_perm, dtype=np.int64)
        var_perm = np.asarray(var_perm, dtype=np.int64)
        cf = np.empty_like(self.con_features)
        cf[con_perm] = self.con_features
        vf = np.empty_like(self.var_features)
        vf[var_perm] = self.var_features
        return BipartiteGraph(
            self.m, self.n,
            con_perm[self.edge_con], var_perm[self.edge_var], self.edge_weight.copy(),
            cf, vf, self.rni,
        )

    def to_json(self) -> str:
        return json.dumps({
            "m": self.m,
            "n": self.n,
            "edges": [[int(i), int(j), int(w)] if float(w).is_integer() else [int(i), int(j), float(w)]
                      for i, j, w in zip(self.edge_con, self.edge_var, self.edge_weight)],
            "constraint_features": self.con_features.tolist(),
            "variable_features": self.var_features.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "BipartiteGraph":
        d = json.loads(text)
        m, n = int(d["m"]), int(d["n"])
        edges = np.asarray(d["edges"], dtype=np.float64).reshape(-1, 3)
        cf = np.asarray(d["constraint_features"], dtype=np.float64).reshape(m, -1)
        vf = np.asarray(d["variable_features"], dtype=np.float64).reshape(n, -1)
        return cls(
            m, n, edges[:, 0].astype(np.int64), edges[:, 1].astype(np.int64), edges[:, 2],
            cf, vf, rni=cf.shape[1] == 2,
        )


def to_graph(M: MilpInstance) -> BipartiteGraph:
    rows, cols = np.nonzero(M.A)  # row-major order
    return BipartiteGraph(
        m=M.m,
        n=M.n,
        edge_con=rows.astype(np.int64),
        edge_var=cols.astype(np.int64),
        edge_weight=M.A[rows, cols].astype(np.float64),
        con_features=M.b.astype(np.float64).reshape(-1, 1),
        var_features=np.zeros((M.n, 0)),
    )


@dataclass(frozen=True)
class RniConfig:
    fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError(f"RNI fraction must be in [0, 1], got {self.fraction}")


def apply_rni(g: BipartiteGraph, cfg: RniConfig, rng: np.random.Generator | None = None) -> BipartiteGraph:
    """Append one random-feature slot to every node.

    floor(fraction * (m + n)) nodes, chosen uniformly over both sides, get a
    U[0, 1) draw; the rest get 0.0.  With fraction 0 the graph is returned
    unchanged.
    """
    if cfg.fraction == 0.0:
        return g
    if g.rni:
        raise ValueError("graph already carries an RNI slot")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    total = g.m + g.n
    count = int(np.floor(cfg.fraction * total + 1e-12))
    slot = np.zeros(total)
    if count == total:
        slot[:] = rng.random(total)
    elif count:
        chosen = rng.choice(total, size=count, replace=False)
        slot[chosen] = rng.random(count)
    return BipartiteGraph(
        g.m, g.n, g.edge_con, g.edge_var, g.edge_weight,
        np.hstack([g.con_features, slot[: g.m, None]]),
        np.hstack([g.var_features, slot[g.m:, None]]),
        rni=True,
    )


@dataclass(frozen=True, eq=False)
class BatchedGraph:
    """Disjoint union of member graphs with per-node membership indices."""

    graph: BipartiteGraph
    con_member: np.ndarray
    var_member: np.ndarray
    members: int
    con_offsets: np.ndarray
    var_offsets: np.ndarray
    # sparse operators used by message passing and pooling
    adjacency: sparse.csr_matrix  # (m, n) edge weights
    adjacency_t: sparse.csr_matrix  # (n, m)
    con_pool: sparse.csr_matrix  # (members, m)
    var_pool: sparse.csr_matrix  # (members, n)

    def member_nodes(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return (np.flatnonzero(self.con_member == i), np.flatnonzero(self.var_member == i))


def batch(graphs: Sequence[BipartiteGraph]) -> BatchedGraph:
    if not graphs:
        raise ValueError("cannot batch zero graphs")
    dims = {g.feature_dims for g in graphs}
    if len(dims) != 1:
        raise ValueError(f"mixed feature dimensions in batch: {sorted(dims)}")
    ms = np.array([g.m for g in graphs], dtype=np.int64)
    ns = np.array([g.n for g in graphs], dtype=np.int64)
    con_off = np.concatenate([[0], np.cumsum(ms)])
    var_off = np.concatenate([[0], np.cumsum(ns)])
    union = BipartiteGraph(
        m=int(con_off[-1]),
        n=int(var_off[-1]),
        edge_con=np.concatenate([g.edge_con + o for g, o in zip(graphs, con_off)]),
        edge_var=np.concatenate([g.edge_var + o for g, o in zip(graphs, var_off)]),
        edge_weight=np.concatenate([g.edge_weight for g in graphs]),
        con_features=np.concatenate([g.con_features for g in graphs]),
        var_features=np.concatenate([g.var_features for g in graphs]),
        rni=graphs[0].rni,
    )
    members = np.arange(len(graphs))
    con_member = np.repeat(members, ms)
    var_member = np.repeat(members, ns)
    adj = sparse.csr_matrix(
        (union.edge_weight, (union.edge_con, union.edge_var)), shape=(union.m, union.n)
    )

    def pool(member, size):
        return sparse.csr_matrix(
            (np.ones(size), (member, np.arange(size))), shape=(len(graphs), size)
        )

    return BatchedGraph(
        union, con_member, var_member, len(graphs), con_off, var_off,
        adj, adj.T.tocsr(), pool(con_member, union.m), pool(var_member, union.n),
    )
