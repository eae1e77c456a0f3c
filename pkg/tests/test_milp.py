import itertools
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from milpsat.cnf import Formula, enumerate_models, example1, xor_cycle6, xor_two_triangles
from milpsat.milp import MilpInstance, encode, feasible_bruteforce, feasible_solutions, to_mps

from conftest import random_formula


def test_example1_matrix():
    t0 = time.perf_counter()
    M = encode(example1())
    assert time.perf_counter() - t0 < 1e-3
    assert M.A.tolist() == [[1, 1], [1, -1], [-1, 1]]
    assert M.b.tolist() == [1, 0, 0]
    assert M.A.dtype == np.int8


def test_example1_feasible_set():
    assert [x.tolist() for x in feasible_solutions(encode(example1()))] == [[1, 1]]


def test_all_negative_clause():
    M = encode(Formula.from_clauses([(-1, -2, -3)]))
    assert M.A.tolist() == [[-1, -1, -1]] and M.b.tolist() == [-2]


def test_empty():
    M = encode(Formula.from_clauses([]))
    assert M.A.shape == (0, 0) and feasible_bruteforce(M)


def test_invariants_rejected():
    with pytest.raises(ValueError):
        MilpInstance(np.array([[2, 0]]), np.array([1]))
    with pytest.raises(ValueError):
        MilpInstance(np.array([[1, -1]]), np.array([1]))


def test_readonly():
    M = encode(example1())
    with pytest.raises(ValueError):
        M.A[0, 0] = 0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4]))
def test_solutions_are_models(seed, k):
    f = random_formula(np.random.default_rng(seed), k=k, n_max=9, n_min=max(3, k))
    M = encode(f)
    assert np.isin(M.A, (-1, 0, 1)).all()
    assert (np.count_nonzero(M.A, axis=1) == k).all()
    assert (M.b == 1 - (M.A == -1).sum(axis=1)).all()
    feas = {tuple(bool(v) for v in x) for x in feasible_solutions(M)}
    # independent check of A x >= b over every 0/1 vector
    direct = {bits for bits in itertools.product((False, True), repeat=f.n)
              if (M.A.astype(int) @ np.array(bits, int) >= M.b).all()}
    assert feas == direct == {w.values for w in enumerate_models(f)}
    assert feasible_bruteforce(M) == bool(feas)


def test_mps_example1_text():
    text = to_mps(encode(example1()), "EX1")
    lines = text.splitlines()
    assert lines[0] == "NAME          EX1"
    assert lines[1:6] == ["ROWS", " N  obj", " G  c1", " G  c2", " G  c3"]
    assert "    x1        c1        1" in lines
    assert "    x2        c2        -1" in lines
    assert "    RHS       c1        1" in lines
    assert "    RHS       c3        0" in lines
    assert " BV BND       x2" in lines
    assert lines[-1] == "ENDATA"
    assert text.endswith("\n")


def _parse_mps(text):
    """Minimal independent reader for the subset written here."""
    section, rows, A, b = None, [], {}, {}
    for line in text.splitlines():
        if not line.startswith(" "):
            section = line.split()[0]
            continue
        tok = line.split()
        if section == "ROWS" and tok[0] == "G":
            rows.append(tok[1])
        elif section == "COLUMNS" and "'MARKER'" not in tok:
            A[(tok[1], tok[0])] = int(tok[2])
        elif section == "RHS":
            b[tok[1]] = int(tok[2])
    return rows, A, b


@pytest.mark.parametrize("f", [example1(), xor_cycle6(), xor_two_triangles()])
def test_mps_roundtrip_own_reader(f):
    M = encode(f)
    rows, A, b = _parse_mps(to_mps(M))
    assert rows == [f"c{i + 1}" for i in range(M.m)]
    for i in range(M.m):
        assert b[f"c{i + 1}"] == M.b[i]
        for j in range(M.n):
            assert A.get((f"c{i + 1}", f"x{j + 1}"), 0) == M.A[i, j]


@pytest.mark.parametrize("f", [example1(), xor_cycle6(), xor_two_triangles()])
def test_mps_external_reader(f, tmp_path):
    highspy = pytest.importorskip("highspy")
    M = encode(f)
    p = tmp_path / "f.mps"
    p.write_text(to_mps(M))
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(p)) == highspy.HighsStatus.kOk
    lp = h.getLp()
    assert (lp.num_row_, lp.num_col_) == (M.m, M.n)
    dense = np.zeros((M.m, M.n))
    a = lp.a_matrix_
    for j in range(M.n):
        for e in range(a.start_[j], a.start_[j + 1]):
            dense[a.index_[e], j] = a.value_[e]
    assert np.array_equal(dense, M.A)
    assert np.array_equal(np.asarray(lp.row_lower_), M.b)
    assert np.all(np.asarray(lp.col_lower_) == 0) and np.all(np.asarray(lp.col_upper_) == 1)
    h.run()
    feasible = h.getModelStatus() == highspy.HighsModelStatus.kOptimal
    assert feasible == bool(enumerate_models(f))
