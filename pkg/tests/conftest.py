import itertools

import numpy as np
import pytest

from milpsat.cnf import Formula, all_clauses


def random_formula(rng, k=3, n_max=8, n_min=None, ratio=(1.0, 8.0)):
    """A random dense k-CNF with n <= n_max and m drawn from a broad ratio band."""
    n_min = n_min or k
    n = int(rng.integers(n_min, n_max + 1))
    pool = list(all_clauses(n, k))
    lo = max(1, int(ratio[0] * n))
    hi = min(len(pool), max(lo, int(ratio[1] * n)))
    m = int(rng.integers(lo, hi + 1))
    picked = rng.choice(len(pool), size=m, replace=False)
    return Formula.from_clauses([pool[int(i)] for i in picked], k=k)


def brute_models(f):
    """Models as sets of true variables, by direct truth-table evaluation."""
    out = set()
    for bits in itertools.product((False, True), repeat=f.n):
        if all(any(bits[abs(x) - 1] == (x > 0) for x in c) for c in f.to_ints()):
            out.add(bits)
    return out


def graphs_isomorphic(f, h):
    """Brute-force isomorphism of labelled MILP-graphs: some variable renaming maps clause set to clause set."""
    if (f.n, f.m) != (h.n, h.m):
        return False
    target = {frozenset(c) for c in h.to_ints()}
    for perm in itertools.permutations(range(1, f.n + 1)):
        mapped = {frozenset((perm[abs(x) - 1] if x > 0 else -perm[abs(x) - 1]) for x in c) for c in f.to_ints()}
        if mapped == target:
            return True
    return False


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def relu_margin(model, g):
    """Smallest |pre-activation| over every ReLU in a forward pass.

    Central differences only check a gradient where the loss is smooth over
    the step, so gradient checks draw (model, graph) pairs with a safe margin.
    """
    from milpsat.nn import gnn, tensor

    seen = []
    orig = tensor.relu

    def spy(a):
        if a.data.size:
            seen.append(float(np.abs(a.data).min()))
        return orig(a)

    tensor.relu = spy
    try:
        gnn.forward(model, g)
    finally:
        tensor.relu = orig
    return min(seen, default=np.inf)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
