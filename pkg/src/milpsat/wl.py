"""1-WL colour refinement on MILP-graphs and its lift to k-CNF formulae.

Colours are small integers handed out by a :class:`ColourTable` the first
time a canonical key is seen.  Constraint and variable keys carry different
tags, so the two colour spaces never collide, and every refinement key
includes the iteration number, so each iteration draws fresh ids.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Hashable

from .cnf import Formula, xor_cycle6, xor_two_triangles
from .graph import BipartiteGraph, to_graph
from .milp import encode


class ColourTable:
    """Injective map from canonical keys to fresh natural numbers."""

    def __init__(self):
        self._ids: dict[Hashable, int] = {}

    def __call__(self, key: Hashable) -> int:
        c = self._ids.get(key)
        if c is None:
            c = self._ids[key] = len(self._ids)
        return c

    def __len__(self) -> int:
        return len(self._ids)


@dataclass(frozen=True)
class Colouring:
    """Per-iteration colours; ``con[t][i]`` and ``var[t][j]`` for t = 0..T."""

    con: tuple[tuple[int, ...], ...]
    var: tuple[tuple[int, ...], ...]

    @property
    def iterations(self) -> int:
        return len(self.con) - 1

    def histogram(self, t: int) -> tuple[Counter, Counter]:
        return Counter(self.con[t]), Counter(self.var[t])

    def num_classes(self, t: int) -> int:
        return len(set(self.con[t])) + len(set(self.var[t]))

    # formula view: clause i <-> constraint node i, letter p_j <-> variable node j-1
    def clause_colours(self, t: int = -1) -> tuple[int, ...]:
        return self.con[t]

    def letter_colours(self, t: int = -1) -> dict[int, int]:
        return {j + 1: c for j, c in enumerate(self.var[t])}


def _initial(g: BipartiteGraph, table: ColourTable) -> tuple[list[int], list[int]]:
    con = [table(("V", 0, tuple(row))) for row in g.con_features.tolist()]
    var = [table(("W", 0, tuple(row))) for row in g.var_features.tolist()]
    return con, var


def _adjacency(g: BipartiteGraph):
    con_nb: list[list[tuple[int, float]]] = [[] for _ in range(g.m)]
    var_nb: list[list[tuple[int, float]]] = [[] for _ in range(g.n)]
    for i, j, w in zip(g.edge_con.tolist(), g.edge_var.tolist(), g.edge_weight.tolist()):
        con_nb[i].append((j, w))
        var_nb[j].append((i, w))
    return con_nb, var_nb


class _Refiner:
    def __init__(self, g: BipartiteGraph, table: ColourTable):
        if g.rni:
            raise ValueError("WL colouring is defined on the base graph, not an RNI-augmented one")
        self.table = table
        self.con_nb, self.var_nb = _adjacency(g)
        con, var = _initial(g, table)
        self.con_hist = [tuple(con)]
        self.var_hist = [tuple(var)]

    def step(self, t: int) -> None:
        con, var = self.con_hist[-1], self.var_hist[-1]
        new_con = tuple(
            self.table(("V", t, con[i], tuple(sorted((var[j], w) for j, w in nb))))
            for i, nb in enumerate(self.con_nb)
        )
        new_var = tuple(
            self.table(("W", t, var[j], tuple(sorted((con[i], w) for i, w in nb))))
            for j, nb in enumerate(self.var_nb)
        )
        self.con_hist.append(new_con)
        self.var_hist.append(new_var)

    def relabel_step(self, t: int) -> None:
        # partition already stable: next colours are a fresh renaming of the current ones
        con, var = self.con_hist[-1], self.var_hist[-1]
        self.con_hist.append(tuple(self.table(("V", t, c, "stable")) for c in con))
        self.var_hist.append(tuple(self.table(("W", t, c, "stable")) for c in var))

    def classes(self) -> int:
        return len(set(self.con_hist[-1])) + len(set(self.var_hist[-1]))

    def result(self) -> Colouring:
        return Colouring(tuple(self.con_hist), tuple(self.var_hist))


def _joint_classes(refiners: list[_Refiner], t: int) -> int:
    return len({c for r in refiners for c in r.con_hist[t]}) + len(
        {c for r in refiners for c in r.var_hist[t]}
    )


def _run(refiners: list[_Refiner], iterations: int) -> None:
    """Refine all graphs in lockstep; once the joint partition is stable, only rename."""
    stable = False
    for t in range(1, iterations + 1):
        if stable:
            for r in refiners:
                r.relabel_step(t)
            continue
        for r in refiners:
            r.step(t)
        # refinement never merges classes, so an equal count means an equal partition
        stable = _joint_classes(refiners, t) == _joint_classes(refiners, t - 1)


def wl_colour(g: BipartiteGraph, table: ColourTable | None = None, iterations: int | None = None) -> Colouring:
    """1-WL colouring of a MILP-graph for ``m + n`` iterations (iteration 0 included)."""
    r = _Refiner(g, table if table is not None else ColourTable())
    _run([r], g.m + g.n if iterations is None else iterations)
    return r.result()


def wl_kcnf(f: Formula) -> Colouring:
    """Colour clauses and letters of ``f`` through its MILP-graph."""
    return wl_colour(to_graph(encode(f)))


def indistinguishable(f: Formula, h: Formula) -> bool:
    """True iff 1-WL with a shared colour table never separates the two MILP-graphs."""
    return wl_compare(f, h)["indistinguishable"]


def wl_compare(f: Formula, h: Formula) -> dict:
    gf, gh = to_graph(encode(f)), to_graph(encode(h))
    if (gf.m, gf.n) != (gh.m, gh.n):
        return {"indistinguishable": False, "first_difference": 0, "reason": "node counts differ"}
    table = ColourTable()
    rf, rh = _Refiner(gf, table), _Refiner(gh, table)
    _run([rf, rh], gf.m + gf.n)
    cf, ch = rf.result(), rh.result()
    for t in range(cf.iterations + 1):
        if cf.histogram(t) != ch.histogram(t):
            return {"indistinguishable": False, "first_difference": t, "reason": "histograms differ"}
    return {"indistinguishable": True, "first_difference": None, "reason": None}


def is_foldable(f: Formula) -> bool:
    c = wl_kcnf(f)
    clauses = c.con[-1]
    letters = c.var[-1]
    return len(set(clauses)) < len(clauses) or len(set(letters)) < len(letters)


def counterexample_pair() -> tuple[Formula, Formula]:
    """A satisfiable and an unsatisfiable 2-CNF that 1-WL cannot tell apart."""
    return xor_cycle6(), xor_two_triangles()


def wl_report(f: Formula, h: Formula | None = None) -> dict:
    """JSON-ready per-iteration histogram table plus the verdict."""

    def table_of(col: Colouring) -> list[dict]:
        rows = []
        for t in range(col.iterations + 1):
            hc, hv = col.histogram(t)
            rows.append({
                "iteration": t,
                "constraint_histogram": sorted(hc.values(), reverse=True),
                "variable_histogram": sorted(hv.values(), reverse=True),
                "classes": col.num_classes(t),
            })
        return rows

    if h is None:
        col = wl_kcnf(f)
        return {
            "foldable": is_foldable(f),
            "clause_colours": list(col.clause_colours()),
            "letter_colours": [col.letter_colours()[j] for j in range(1, f.n + 1)],
            "iterations": table_of(col),
        }
    cmp = wl_compare(f, h)
    return {
        **cmp,
        "foldable": [is_foldable(f), is_foldable(h)],
        "iterations": [table_of(wl_kcnf(f)), table_of(wl_kcnf(h))],
    }


__all__ = [
    "ColourTable", "Colouring", "wl_colour", "wl_kcnf", "indistinguishable", "wl_compare",
    "is_foldable", "counterexample_pair", "wl_report",
]
