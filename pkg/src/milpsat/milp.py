"""k-CNF to 0/1 MILP feasibility encoding and fixed-format MPS export.

A literal p_j becomes x_j and ¬p_j becomes 1 - x_j; each clause becomes
``sum >= 1`` with the constants moved to the right-hand side, giving
``A x >= b`` with A in {-1, 0, 1} and b_i = 1 - (number of negative literals).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .cnf import ENUMERATION_CAP, CnfError, Formula


@dataclass(frozen=True, eq=False)
class MilpInstance:
    A: np.ndarray  # (m, n) int8
    b: np.ndarray  # (m,) int64
    k: int | None = None

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.int8)
        if A.ndim != 2:
            A = A.reshape(len(self.b), -1)
        b = np.asarray(self.b, dtype=np.int64).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows, b has {b.shape[0]} entries")
        if not np.isin(A, (-1, 0, 1)).all():
            raise ValueError("A entries must be in {-1, 0, 1}")
        if not np.array_equal(b, 1 - (A == -1).sum(axis=1)):
            raise ValueError("b_i must equal 1 - (number of -1 entries in row i)")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    def __eq__(self, other):
        if not isinstance(other, MilpInstance):
            return NotImplemented
        return np.array_equal(self.A, other.A) and np.array_equal(self.b, other.b)


def encode(f: Formula) -> MilpInstance:
    A = np.zeros((f.m, f.n), dtype=np.int8)
    for i, clause in enumerate(f.clauses):
        for lit in clause.literals:
            A[i, lit.var - 1] = 1 if lit.positive else -1
    b = 1 - (A == -1).sum(axis=1)
    return MilpInstance(A, b, f.k)


def feasible_solutions(M: MilpInstance, cap: int = ENUMERATION_CAP, chunk: int = 1 << 15):
    """Yield each x in {0,1}^n with A x >= b, in lexicographic order of x read as binary x_1 x_2 ... ."""
    n = M.n
    if n > cap:
        raise CnfError(f"{n} variables exceeds enumeration cap {cap}")
    A = M.A.astype(np.int64)
    # bit (n-1-j) of the counter is x_{j+1}
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    total = 1 << n
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        X = (idx[:, None] >> shifts[None, :]) & 1
        ok = (X @ A.T >= M.b[None, :]).all(axis=1)
        yield from X[ok]


def feasible_bruteforce(M: MilpInstance, cap: int = ENUMERATION_CAP) -> bool:
    return next(feasible_solutions(M, cap), None) is not None


def _field(s: str, width: int) -> str:
    if len(s) > width:
        raise ValueError(f"MPS name {s!r} longer than {width} characters")
    return s.ljust(width)


def _num(v: int) -> str:
    return _field(str(int(v)), 12)


def to_mps(M: MilpInstance, name: str = "MILPSAT") -> str:
    """Fixed-column MPS text for the feasibility problem ``A x >= b, x binary``.

    Rows are ``c{i}`` (type G), columns ``x{j}`` (1-based).  A free N row
    named ``obj`` is declared for reader compatibility but carries no
    coefficients.
    """
    out = io.StringIO()

    def w(line: str) -> None:
        out.write(line.rstrip() + "\n")

    w(f"NAME          {name}")
    w("ROWS")
    w(" N  obj")
    for i in range(M.m):
        w(f" G  c{i + 1}")
    w("COLUMNS")
    w("    MARKER                 'MARKER'                 'INTORG'")
    for j in range(M.n):
        col = _field(f"x{j + 1}", 8)
        rows = np.flatnonzero(M.A[:, j])
        if rows.size == 0:
            w(f"    {col}  {_field('obj', 8)}  {_num(0)}")
        for i in rows:
            w(f"    {col}  {_field(f'c{i + 1}', 8)}  {_num(M.A[i, j])}")
    w("    MARKER                 'MARKER'                 'INTEND'")
    w("RHS")
    for i in range(M.m):
        w(f"    {_field('RHS', 8)}  {_field(f'c{i + 1}', 8)}  {_num(M.b[i])}")
    w("BOUNDS")
    for j in range(M.n):
        w(f" BV {_field('BND', 8)}  {_field(f'x{j + 1}', 8)}")
    w("ENDATA")
    return out.getvalue()
