import itertools
from collections import Counter

import numpy as np
from hypothesis import given, settings, strategies as st

from milpsat.cnf import Formula, FormulaPermutation, apply_permutation, enumerate_models, example1
from milpsat.graph import to_graph
from milpsat.milp import encode
from milpsat.wl import (
    ColourTable, counterexample_pair, indistinguishable, is_foldable, wl_colour, wl_compare,
    wl_kcnf, wl_report,
)

from conftest import graphs_isomorphic, random_formula


def naive_wl(formulas, rounds=None):
    """Plain 1-WL on the disjoint union of MILP-graphs; returns per-formula colour lists per round."""
    nodes, nbrs, colour = [], {}, {}
    for gi, f in enumerate(formulas):
        M = encode(f)
        for i in range(M.m):
            nodes.append(("c", gi, i))
            colour[("c", gi, i)] = ("c", int(M.b[i]))
            nbrs[("c", gi, i)] = [(("v", gi, j), int(M.A[i, j])) for j in range(M.n) if M.A[i, j]]
        for j in range(M.n):
            nodes.append(("v", gi, j))
            colour[("v", gi, j)] = ("v",)
            nbrs[("v", gi, j)] = [(("c", gi, i), int(M.A[i, j])) for i in range(M.m) if M.A[i, j]]
    history = [dict(colour)]
    for _ in range(rounds if rounds is not None else len(nodes)):
        sig = {u: (colour[u], tuple(sorted((colour[w], e) for w, e in nbrs[u]))) for u in nodes}
        names = {s: i for i, s in enumerate(sorted(set(sig.values()), key=repr))}
        colour = {u: names[sig[u]] for u in nodes}
        history.append(dict(colour))
    return history


def naive_foldable(f):
    final = naive_wl([f])[-1]
    cs = Counter(c for u, c in final.items() if u[0] == "c")
    vs = Counter(c for u, c in final.items() if u[0] == "v")
    return any(x > 1 for x in cs.values()) or any(x > 1 for x in vs.values())


def naive_indistinguishable(f, h):
    if (f.m, f.n) != (h.m, h.n):
        return False
    for col in naive_wl([f, h]):
        side = [Counter(c for u, c in col.items() if u[1] == gi) for gi in (0, 1)]
        if side[0] != side[1]:
            return False
    return True


def orbit_partition_nontrivial(f):
    """True if some nontrivial formula automorphism exists (brute force over letters and clauses)."""
    clauses = [frozenset(c) for c in f.to_ints()]
    target = set(clauses)
    for perm in itertools.permutations(range(1, f.n + 1)):
        mapped = [frozenset(perm[abs(x) - 1] * (1 if x > 0 else -1) for x in c) for c in clauses]
        if set(mapped) == target and (perm != tuple(range(1, f.n + 1)) or mapped != clauses):
            return True
    return False


def test_colour_table_injective():
    t = ColourTable()
    assert t("a") == 0 and t("b") == 1 and t("a") == 0 and len(t) == 2


def test_counterexample_pair():
    phi, psi = counterexample_pair()
    assert enumerate_models(phi) and not enumerate_models(psi)
    assert indistinguishable(phi, psi)
    assert is_foldable(phi) and is_foldable(psi)
    assert wl_compare(phi, psi)["first_difference"] is None


def test_example1_has_symmetry():
    # p1 <-> p2 maps the clause set onto itself, so 1-WL cannot separate x1, x2
    f = example1()
    g = apply_permutation(f, FormulaPermutation((1, 3, 2), (2, 1)))
    assert g == f
    col = wl_kcnf(f)
    letters = col.letter_colours()
    assert letters[1] == letters[2]
    clauses = col.clause_colours()
    assert clauses[1] == clauses[2] != clauses[0]
    assert is_foldable(f)


def test_unfoldable_example():
    f = Formula.from_clauses([(1, 2), (-1, 2), (-1, -2)])
    assert not is_foldable(f)
    col = wl_kcnf(f)
    assert len(set(col.clause_colours())) == 3
    assert len(set(col.letter_colours().values())) == 2


def test_different_sizes_are_distinguished():
    r = wl_compare(example1(), counterexample_pair()[0])
    assert r["indistinguishable"] is False and r["first_difference"] == 0


def test_iteration_count():
    g = to_graph(encode(example1()))
    col = wl_colour(g)
    assert col.iterations == g.m + g.n
    assert col.num_classes(0) == 3  # b = 1, b = 0, and the letters


def test_report_is_json():
    import json
    rep = wl_report(*counterexample_pair())
    json.dumps(rep)
    assert rep["indistinguishable"] is True
    single = wl_report(example1())
    assert single["foldable"] is True and len(single["letter_colours"]) == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_foldable_matches_naive(seed):
    f = random_formula(np.random.default_rng(seed), k=3, n_max=6, ratio=(0.5, 3.0))
    assert is_foldable(f) == naive_foldable(f)
    # an automorphism forces shared colours
    if orbit_partition_nontrivial(f):
        assert is_foldable(f)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_isomorphic_implies_indistinguishable(seed):
    rng = np.random.default_rng(seed)
    f = random_formula(rng, k=3, n_max=7)
    g = apply_permutation(f, FormulaPermutation.random(f.m, f.n, rng))
    assert indistinguishable(f, g)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_indistinguishable_matches_naive(s1, s2):
    # same (n, m) so the comparison is not decided at iteration 0
    r1, r2 = np.random.default_rng(s1), np.random.default_rng(s2)
    f = random_formula(r1, k=2, n_max=5, n_min=4, ratio=(1.0, 1.0))
    h = random_formula(r2, k=2, n_max=5, n_min=4, ratio=(1.0, 1.0))
    assert indistinguishable(f, h) == naive_indistinguishable(f, h)
    if graphs_isomorphic(f, h):
        assert indistinguishable(f, h)
