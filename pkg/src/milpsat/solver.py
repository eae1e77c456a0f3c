"""Complete DPLL decision procedure used to label datasets.

Unit propagation uses two watched literals per clause.  Pure literals are
fixed once at the root.  Branching picks the variable with the most
occurrences in the shortest not-yet-satisfied clauses, trying the positive
polarity first.  There is no clause learning; backtracking is chronological.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

from .cnf import Formula, World


class Status(enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class SolveBudget:
    max_decisions: float = math.inf
    wall_clock: float = math.inf  # seconds

    @classmethod
    def unlimited(cls) -> "SolveBudget":
        return cls()


@dataclass
class SolveStats:
    decisions: int = 0
    propagations: int = 0
    conflicts: int = 0
    elapsed: float = 0.0


@dataclass
class SolveResult:
    status: Status
    model: World | None = None
    stats: SolveStats = field(default_factory=SolveStats)

    @property
    def sat(self) -> bool:
        return self.status is Status.SAT


class _BudgetExhausted(Exception):
    pass


def _lit_index(lit: int) -> int:
    # literal +v -> 2v, -v -> 2v+1
    return 2 * lit if lit > 0 else -2 * lit + 1


class _Dpll:
    def __init__(self, f: Formula, budget: SolveBudget):
        self.n = f.n
        self.clauses = [list(c.to_ints()) for c in f.clauses]
        self.budget = budget
        self.stats = SolveStats()
        self.value = [0] * (self.n + 1)  # 0 unassigned, 1 true, -1 false
        self.trail: list[int] = []
        self.watches: list[list[int]] = [[] for _ in range(2 * self.n + 2)]
        self.t0 = time.perf_counter()

    def lit_value(self, lit: int) -> int:
        v = self.value[abs(lit)]
        return v if lit > 0 else -v

    def assign(self, lit: int) -> None:
        self.value[abs(lit)] = 1 if lit > 0 else -1
        self.trail.append(lit)

    def propagate(self, start: int) -> bool:
        """Propagate trail[start:]; False on conflict."""
        qhead = start
        while qhead < len(self.trail):
            false_lit = -self.trail[qhead]
            qhead += 1
            ws = self.watches[_lit_index(false_lit)]
            i = 0
            while i < len(ws):
                ci = ws[i]
                c = self.clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                if self.lit_value(c[0]) == 1:
                    i += 1
                    continue
                for t in range(2, len(c)):
                    if self.lit_value(c[t]) != -1:
                        c[1], c[t] = c[t], c[1]
                        self.watches[_lit_index(c[1])].append(ci)
                        ws[i] = ws[-1]
                        ws.pop()
                        break
                else:
                    other = self.lit_value(c[0])
                    if other == -1:
                        self.stats.conflicts += 1
                        return False
                    if other == 0:
                        self.assign(c[0])
                        self.stats.propagations += 1
                    i += 1
        return True

    def choose(self) -> int | None:
        best_len = None
        counts: dict[int, int] = {}
        for c in self.clauses:
            free = []
            for lit in c:
                lv = self.lit_value(lit)
                if lv == 1:
                    break
                if lv == 0:
                    free.append(abs(lit))
            else:
                if not free:
                    continue
                if best_len is None or len(free) < best_len:
                    best_len = len(free)
                    counts = {}
                if len(free) == best_len:
                    for v in free:
                        counts[v] = counts.get(v, 0) + 1
        if not counts:
            return None
        return min(counts, key=lambda v: (-counts[v], v))

    def check_budget(self) -> None:
        if self.stats.decisions > self.budget.max_decisions:
            raise _BudgetExhausted
        if self.budget.wall_clock != math.inf and (
            time.perf_counter() - self.t0 > self.budget.wall_clock
        ):
            raise _BudgetExhausted

    def init(self) -> bool:
        units = []
        for ci, c in enumerate(self.clauses):
            if len(c) == 1:
                units.append(c[0])
            else:
                self.watches[_lit_index(c[0])].append(ci)
                self.watches[_lit_index(c[1])].append(ci)
        for lit in units:
            lv = self.lit_value(lit)
            if lv == -1:
                return False
            if lv == 0:
                self.assign(lit)
        # pure literals at the root
        polarity: dict[int, set[bool]] = {}
        for c in self.clauses:
            for lit in c:
                polarity.setdefault(abs(lit), set()).add(lit > 0)
        for v in sorted(polarity):
            if len(polarity[v]) == 1 and self.value[v] == 0:
                self.assign(v if True in polarity[v] else -v)
        return self.propagate(0)

    def run(self) -> Status:
        if not self.init():
            return Status.UNSAT
        # decision stack entries: (trail length before decision, literal, flipped)
        stack: list[tuple[int, int, bool]] = []
        while True:
            v = self.choose()
            if v is None:
                return Status.SAT
            self.stats.decisions += 1
            self.check_budget()
            mark = len(self.trail)
            stack.append((mark, v, False))
            self.assign(v)
            ok = self.propagate(mark)
            while not ok:
                # undo to the most recent decision that has not been flipped
                while stack and stack[-1][2]:
                    mark, _, _ = stack.pop()
                    self.undo(mark)
                if not stack:
                    return Status.UNSAT
                mark, lit, _ = stack.pop()
                self.undo(mark)
                stack.append((mark, -lit, True))
                self.assign(-lit)
                ok = self.propagate(mark)
                self.check_budget()

    def undo(self, mark: int) -> None:
        for lit in self.trail[mark:]:
            self.value[abs(lit)] = 0
        del self.trail[mark:]

    def model(self) -> World:
        # variables left unassigned (all their clauses already satisfied) default to true
        return World(tuple(self.value[j] >= 0 for j in range(1, self.n + 1)))


def solve(f: Formula, budget: SolveBudget | None = None) -> SolveResult:
    """Decide satisfiability of ``f``.

    Returns UNKNOWN (never raises) when the budget runs out.  Deterministic:
    the same formula and budget give the same status.
    """
    solver = _Dpll(f, budget or SolveBudget())
    try:
        status = solver.run()
    except _BudgetExhausted:
        status = Status.UNKNOWN
    solver.stats.elapsed = time.perf_counter() - solver.t0
    model = solver.model() if status is Status.SAT else None
    return SolveResult(status, model, solver.stats)
