"""k-CNF formulae: representation, semantics, permutations and DIMACS I/O.

Clauses are stored as sorted tuples of literals (by variable index, negative
before positive), so two clauses with the same literals compare equal.  A
formula keeps its clauses in order, since clause order matters for the MILP
row order and for clause permutations, but formula equality is set equality.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

#: default cap on the number of variables for brute-force enumeration
ENUMERATION_CAP = 24


class CnfError(ValueError):
    """Raised for malformed or invalid CNF input."""


class Literal(NamedTuple):
    var: int
    positive: bool

    @classmethod
    def from_int(cls, lit: int) -> "Literal":
        if lit == 0:
            raise CnfError("0 is not a literal")
        return cls(abs(lit), lit > 0)

    def to_int(self) -> int:
        return self.var if self.positive else -self.var

    def complement(self) -> "Literal":
        return Literal(self.var, not self.positive)

    def __str__(self) -> str:
        return f"p{self.var}" if self.positive else f"¬p{self.var}"


@dataclass(frozen=True)
class Clause:
    """A disjunction of literals over pairwise distinct variables."""

    literals: tuple[Literal, ...]

    def __post_init__(self):
        lits = tuple(sorted(Literal(int(v), bool(p)) for v, p in self.literals))
        for lit in lits:
            if lit.var < 1:
                raise CnfError(f"variable index must be >= 1, got {lit.var}")
        vs = [lit.var for lit in lits]
        if len(set(vs)) != len(vs):
            raise CnfError(f"variable repeated within clause {[l.to_int() for l in lits]}")
        object.__setattr__(self, "literals", lits)

    @classmethod
    def of(cls, *lits: int) -> "Clause":
        return cls(tuple(Literal.from_int(int(x)) for x in lits))

    def to_ints(self) -> tuple[int, ...]:
        return tuple(lit.to_int() for lit in self.literals)

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(lit.var for lit in self.literals)

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.literals)

    def __str__(self) -> str:
        return "(" + " ∨ ".join(str(l) for l in self.literals) + ")"


@dataclass(frozen=True, eq=False)
class Formula:
    """A k-CNF formula over the dense variable set 1..n.

    Every variable in 1..n occurs in some clause, except in the empty formula
    which may declare any number of (unconstrained) variables.  ``k`` is None
    only for the empty formula.  ``comments`` and ``renaming`` are metadata and
    take no part in equality.
    """

    k: int | None
    n: int
    clauses: tuple[Clause, ...]
    comments: tuple[str, ...] = field(default=())
    renaming: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        clauses = tuple(self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if not clauses:
            if self.k is not None and self.k < 2:
                raise CnfError(f"k must be > 1, got {self.k}")
            if self.n < 0:
                raise CnfError("negative variable count")
            return
        k = self.k
        if k is None:
            k = len(clauses[0])
            object.__setattr__(self, "k", k)
        if k < 2:
            raise CnfError(f"k must be > 1, got {k}")
        widths = {len(c) for c in clauses}
        if widths != {k}:
            raise CnfError(f"non-uniform clause width {sorted(widths)}, expected {k}")
        if len(set(clauses)) != len(clauses):
            raise CnfError("duplicate clause")
        used = {v for c in clauses for v in c.variables}
        if used != set(range(1, self.n + 1)):
            raise CnfError(
                f"variables must be exactly 1..{self.n}, got {sorted(used)[:10]}..."
            )
        if len(clauses) > max_clause_count(self.n, k):
            raise CnfError("more clauses than distinct k-clauses")

    @classmethod
    def from_clauses(
        cls, clauses: Iterable[Iterable[int] | Clause], k: int | None = None, n: int | None = None
    ) -> "Formula":
        """Build a formula from DIMACS-style integer clauses.

        Variables are renumbered to 1..n (order preserving) when the used set
        has gaps; the renaming old -> new is recorded.
        """
        cs = [c if isinstance(c, Clause) else Clause.of(*c) for c in clauses]
        used = sorted({v for c in cs for v in c.variables})
        renaming: dict[int, int] = {}
        if used and used != list(range(1, len(used) + 1)):
            renaming = {old: new for new, old in enumerate(used, start=1)}
            cs = [
                Clause(tuple(Literal(renaming[l.var], l.positive) for l in c.literals))
                for c in cs
            ]
        if cs:
            n = len(used)
        elif n is None:
            n = 0
        return cls(k, n, tuple(cs), renaming=renaming)

    @property
    def m(self) -> int:
        return len(self.clauses)

    def to_ints(self) -> list[tuple[int, ...]]:
        return [c.to_ints() for c in self.clauses]

    def with_comments(self, comments: Sequence[str]) -> "Formula":
        return Formula(self.k, self.n, self.clauses, tuple(comments), self.renaming)

    def __eq__(self, other):
        if not isinstance(other, Formula):
            return NotImplemented
        return (
            self.n == other.n
            and (self.k == other.k or not self.clauses)
            and frozenset(self.clauses) == frozenset(other.clauses)
        )

    def __hash__(self):
        return hash((self.n, frozenset(self.clauses)))

    def __len__(self) -> int:
        return len(self.clauses)

    def __str__(self) -> str:
        return " ∧ ".join(str(c) for c in self.clauses) if self.clauses else "⊤"


@dataclass(frozen=True)
class World:
    """A total truth assignment; ``values[j - 1]`` is the value of p_j."""

    values: tuple[bool, ...]

    @classmethod
    def from_dict(cls, assignment: Mapping[int, bool]) -> "World":
        n = max(assignment, default=0)
        missing = set(range(1, n + 1)) - set(assignment)
        if missing:
            raise CnfError(f"world is not total, missing {sorted(missing)}")
        return cls(tuple(bool(assignment[j]) for j in range(1, n + 1)))

    @classmethod
    def from_bits(cls, bits: Iterable[int | bool]) -> "World":
        return cls(tuple(bool(b) for b in bits))

    @property
    def n(self) -> int:
        return len(self.values)

    def __getitem__(self, var: int) -> bool:
        if not 1 <= var <= len(self.values):
            raise KeyError(var)
        return self.values[var - 1]

    def as_dict(self) -> dict[int, bool]:
        return {j: v for j, v in enumerate(self.values, start=1)}

    def __str__(self) -> str:
        return "".join(f"p{j}" if v else f"p̄{j}" for j, v in enumerate(self.values, start=1))


@dataclass(frozen=True)
class FormulaPermutation:
    """A pair of bijections: ``clause_perm[i-1]`` is τᶜ(i), ``var_perm[j-1]`` is τᵖ(j)."""

    clause_perm: tuple[int, ...]
    var_perm: tuple[int, ...]

    def __post_init__(self):
        for name in ("clause_perm", "var_perm"):
            p = tuple(int(x) for x in getattr(self, name))
            if sorted(p) != list(range(1, len(p) + 1)):
                raise CnfError(f"{name} is not a bijection on 1..{len(p)}")
            object.__setattr__(self, name, p)

    @classmethod
    def identity(cls, m: int, n: int) -> "FormulaPermutation":
        return cls(tuple(range(1, m + 1)), tuple(range(1, n + 1)))

    @classmethod
    def random(cls, m: int, n: int, rng: np.random.Generator) -> "FormulaPermutation":
        return cls(
            tuple(int(x) + 1 for x in rng.permutation(m)),
            tuple(int(x) + 1 for x in rng.permutation(n)),
        )


def max_clause_count(n: int, k: int) -> int:
    """Number of distinct k-clauses over n variables, 2^k * C(n, k)."""
    if not 1 < k <= n:
        raise CnfError(f"need 1 < k <= n, got k={k}, n={n}")
    return 2**k * math.comb(n, k)


_HEADER = re.compile(r"^p\s+cnf\s+(\d+)\s+(\d+)\s*$")


def parse_dimacs(text: str) -> Formula:
    """Parse DIMACS CNF text into a :class:`Formula`.

    ``c`` lines are kept (without the leading ``c``) in ``Formula.comments``.
    Clause width must be uniform.  Variables are renumbered densely if the
    file leaves gaps.
    """
    header = None
    comments: list[str] = []
    tokens: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            comments.append(line[1:].strip())
            continue
        if line.startswith("%"):  # SATLIB trailer
            break
        if line.startswith("p"):
            if header is not None:
                raise CnfError(f"line {lineno}: second header")
            mt = _HEADER.match(line)
            if not mt:
                raise CnfError(f"line {lineno}: malformed header {line!r}")
            header = (int(mt.group(1)), int(mt.group(2)))
            continue
        if header is None:
            raise CnfError(f"line {lineno}: clause before header")
        try:
            tokens.extend(int(t) for t in line.split())
        except ValueError:
            raise CnfError(f"line {lineno}: non-integer token in {line!r}") from None
    if header is None:
        raise CnfError("missing 'p cnf' header")
    n_decl, m_decl = header

    clauses: list[tuple[int, ...]] = []
    cur: list[int] = []
    for t in tokens:
        if t == 0:
            clauses.append(tuple(cur))
            cur = []
        else:
            if abs(t) > n_decl:
                raise CnfError(f"literal {t} exceeds declared variable count {n_decl}")
            cur.append(t)
    if cur:
        raise CnfError("last clause not terminated by 0")
    if len(clauses) != m_decl:
        raise CnfError(f"header declares {m_decl} clauses, found {len(clauses)}")
    if any(len(c) == 0 for c in clauses):
        raise CnfError("empty clause")

    f = Formula.from_clauses(clauses, n=n_decl)
    return f.with_comments(comments)


def emit_dimacs(f: Formula) -> str:
    lines = [f"c {c}" if c else "c" for c in f.comments]
    lines.append(f"p cnf {f.n} {f.m}")
    lines.extend(" ".join(str(x) for x in c.to_ints()) + " 0" for c in f.clauses)
    return "\n".join(lines) + "\n"


def read_dimacs(path) -> Formula:
    with open(path, encoding="ascii") as fh:
        return parse_dimacs(fh.read())


def write_dimacs(f: Formula, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(emit_dimacs(f))


def evaluate(f: Formula, w: World) -> bool:
    if w.n < f.n:
        raise CnfError(f"world covers {w.n} variables, formula has {f.n}")
    vals = w.values
    return all(any(vals[l.var - 1] == l.positive for l in c.literals) for c in f.clauses)


def _clause_masks(f: Formula) -> tuple[np.ndarray, np.ndarray]:
    # clause i is falsified by x iff (x & var_mask) == false_pattern
    var_mask = np.zeros(f.m, dtype=np.int64)
    false_pat = np.zeros(f.m, dtype=np.int64)
    for i, c in enumerate(f.clauses):
        for lit in c.literals:
            bit = 1 << (lit.var - 1)
            var_mask[i] |= bit
            if not lit.positive:
                false_pat[i] |= bit
    return var_mask, false_pat


def model_bits(f: Formula, cap: int = ENUMERATION_CAP, chunk: int = 1 << 16) -> np.ndarray:
    """All satisfying worlds as integers (bit j-1 set iff p_j is true), ascending."""
    if f.n > cap:
        raise CnfError(f"{f.n} variables exceeds enumeration cap {cap}")
    var_mask, false_pat = _clause_masks(f)
    total = 1 << f.n
    found = []
    for start in range(0, total, chunk):
        x = np.arange(start, min(total, start + chunk), dtype=np.int64)
        ok = np.ones(x.shape, dtype=bool)
        for vm, fp in zip(var_mask, false_pat):
            ok &= (x & vm) != fp
        found.append(x[ok])
    return np.concatenate(found) if found else np.zeros(0, dtype=np.int64)


def enumerate_models(f: Formula, cap: int = ENUMERATION_CAP) -> set[World]:
    """Every model of ``f`` over its n variables, by exhaustive enumeration."""
    return {
        World(tuple(bool((int(x) >> j) & 1) for j in range(f.n)))
        for x in model_bits(f, cap)
    }


def is_satisfiable_bruteforce(f: Formula, cap: int = ENUMERATION_CAP) -> bool:
    return model_bits(f, cap).size > 0


def apply_permutation(f: Formula, sigma: FormulaPermutation) -> Formula:
    """Clause i of the result is clause τᶜ(i) of ``f`` with each p_j renamed to p_τᵖ(j)."""
    if len(sigma.clause_perm) != f.m or len(sigma.var_perm) != f.n:
        raise CnfError(
            f"permutation sizes ({len(sigma.clause_perm)}, {len(sigma.var_perm)}) "
            f"do not match formula ({f.m}, {f.n})"
        )
    vp = sigma.var_perm
    clauses = tuple(
        Clause(tuple(Literal(vp[l.var - 1], l.positive) for l in f.clauses[ci - 1].literals))
        for ci in sigma.clause_perm
    )
    return Formula(f.k, f.n, clauses, f.comments)


def permute_world(w: World, var_perm: Sequence[int]) -> World:
    if len(var_perm) != w.n:
        raise CnfError(f"permutation over {len(var_perm)} variables, world has {w.n}")
    out = [False] * w.n
    for j, v in enumerate(w.values, start=1):
        out[var_perm[j - 1] - 1] = v
    return World(tuple(out))


def all_clauses(n: int, k: int) -> Iterator[Clause]:
    for vs in itertools.combinations(range(1, n + 1), k):
        for signs in itertools.product((False, True), repeat=k):
            yield Clause(tuple(Literal(v, s) for v, s in zip(vs, signs)))


# -- reference formulae ------------------------------------------------------


def example1() -> Formula:
    """(p1 ∨ p2) ∧ (p1 ∨ ¬p2) ∧ (¬p1 ∨ p2), equivalent to p1 ∧ p2."""
    return Formula.from_clauses([(1, 2), (1, -2), (-1, 2)])


def _xor_chain(pairs: Sequence[tuple[int, int]]) -> Formula:
    clauses = []
    for a, b in pairs:
        clauses.append((a, b))
        clauses.append((-a, -b))
    return Formula.from_clauses(clauses)


def xor_cycle6() -> Formula:
    """XOR constraints around the 6-cycle p1..p6; satisfiable (alternate values)."""
    return _xor_chain([(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 1)])


def xor_two_triangles() -> Formula:
    """XOR constraints around two 3-cycles; unsatisfiable (odd cycles)."""
    return _xor_chain([(1, 2), (2, 3), (3, 1), (4, 5), (5, 6), (6, 4)])
