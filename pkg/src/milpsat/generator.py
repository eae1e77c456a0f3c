"""Labelled random k-CNF datasets around the satisfiability phase transition.

Hard formulae take m from a window around the transition point h'(n); the
remaining ones take m from a flat ratio band.  Candidates are produced from
independent RNG streams keyed by (seed, candidate index) and consumed in
index order, so the result does not depend on the number of workers.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator

import numpy as np

from .cnf import Clause, CnfError, Formula, Literal, all_clauses, emit_dimacs, max_clause_count, read_dimacs
from .solver import SolveBudget, Status, solve

log = logging.getLogger(__name__)

DEFAULT_EXPONENT = Fraction(-5, 3)
PRINTED_EXPONENT = Fraction(2, 3)
SPLITS = ("train", "valid", "test")
# ratio band for formulae outside the hard window
EASY_RATIO = (1.0, 6.0)


class DatasetError(RuntimeError):
    def __init__(self, message: str, stats: dict | None = None):
        super().__init__(message)
        self.stats = stats or {}


def parse_exponent(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


def phase_transition_m(n: int, exponent=DEFAULT_EXPONENT) -> int:
    """round(4.258 n + 58.26 n^exponent), halves rounded up."""
    if n < 1:
        raise ValueError("n must be >= 1")
    h = 4.258 * n + 58.26 * n ** float(parse_exponent(exponent))
    return int(math.floor(h + 0.5))


def hard_window(n: int, left: float, right: float, exponent=DEFAULT_EXPONENT) -> tuple[int, int]:
    """Integer clause counts m with h'(1 - left) <= m <= h'(1 + right)."""
    h = phase_transition_m(n, exponent)
    lo = math.ceil(round(h * (1.0 - left), 9))
    hi = math.floor(round(h * (1.0 + right), 9))
    return lo, hi


def gen_formula(k: int, n: int, m: int, rng: np.random.Generator) -> Formula:
    """m distinct uniformly random k-clauses over p1..pn.

    Each clause draws k distinct variables and independent fair polarities;
    duplicate clauses are redrawn.  Variables that end up unused are
    compacted away, so the result may have fewer than n variables.
    """
    bound = max_clause_count(n, k)
    if m > bound:
        raise CnfError(f"m={m} exceeds the {bound} distinct {k}-clauses over {n} variables")
    if 2 * m > bound:
        # dense regime: sample the clause set directly
        pool = list(all_clauses(n, k))
        picked = rng.choice(len(pool), size=m, replace=False)
        clauses = [pool[int(i)] for i in picked]
    else:
        seen: set[Clause] = set()
        clauses = []
        while len(clauses) < m:
            vs = rng.choice(n, size=k, replace=False) + 1
            signs = rng.integers(0, 2, size=k).astype(bool)
            c = Clause(tuple(Literal(int(v), bool(s)) for v, s in zip(vs, signs)))
            if c not in seen:
                seen.add(c)
                clauses.append(c)
    f = Formula.from_clauses(clauses, k=k, n=n)
    return Formula(f.k, f.n, f.clauses)


@dataclass(frozen=True)
class GenParams:
    k: int = 3
    n_min: int = 10
    n_max: int = 40
    size: int = 2000
    hard_fraction: float = 1.0
    window_left: float = 0.01
    window_right: float = 0.01
    seed: int = 0
    exponent: Fraction = DEFAULT_EXPONENT
    valid_fraction: float = 0.1
    test_fraction: float = 0.1
    max_decisions: int = 1_000_000
    max_candidates: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "exponent", parse_exponent(self.exponent))
        if self.size < 2 or self.size % 2:
            raise ValueError("dataset size must be even and >= 2")
        for name in ("hard_fraction", "window_left", "window_right"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not 1 <= self.n_min <= self.n_max:
            raise ValueError("need 1 <= n_min <= n_max")
        if self.k < 2 or self.k > self.n_min:
            raise ValueError("need 2 <= k <= n_min")

    def split_sizes(self) -> dict[str, int]:
        # each held-out split gets an even count so it can be balanced
        valid = 2 * int(self.size * self.valid_fraction // 2)
        test = 2 * int(self.size * self.test_fraction // 2)
        return {"train": self.size - valid - test, "valid": valid, "test": test}

    def to_json(self) -> dict:
        d = asdict(self)
        d["exponent"] = str(self.exponent)
        return d


@dataclass
class Entry:
    formula: Formula
    label: int
    split: str
    hard: bool = True
    stats: dict = field(default_factory=dict)


@dataclass
class Dataset:
    entries: list[Entry]
    manifest: dict = field(default_factory=dict)

    def split(self, name: str) -> list[Entry]:
        return [e for e in self.entries if e.split == name]

    def counts(self) -> dict[str, dict[str, int]]:
        out = {}
        for s in SPLITS:
            es = self.split(s)
            out[s] = {"sat": sum(e.label for e in es), "unsat": sum(1 - e.label for e in es)}
        return out

    def write(self, path) -> None:
        """Write ``{split}/{index}.cnf`` files and ``manifest.json`` (deterministic bytes)."""
        root = Path(path)
        root.mkdir(parents=True, exist_ok=True)
        for s in SPLITS:
            es = self.split(s)
            if not es:
                continue
            (root / s).mkdir(exist_ok=True)
            for idx, e in enumerate(es):
                f = e.formula.with_comments([
                    f"label {e.label}",
                    f"n {e.formula.n} m {e.formula.m}",
                    f"hard {int(e.hard)}",
                ])
                (root / s / f"{idx}.cnf").write_bytes(emit_dimacs(f).encode("ascii"))
        manifest = dict(self.manifest)
        manifest["counts"] = self.counts()
        (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _candidate(params: GenParams, index: int) -> dict:
    rng = np.random.default_rng([params.seed, index])
    n = int(rng.integers(params.n_min, params.n_max + 1))
    hard = bool(rng.random() < params.hard_fraction)
    bound = max_clause_count(n, params.k)
    lo, hi = hard_window(n, params.window_left, params.window_right, params.exponent)
    if hard:
        if lo > hi:
            lo = hi = phase_transition_m(n, params.exponent)
        lo, hi = max(1, min(lo, bound)), max(1, min(hi, bound))
        m = int(rng.integers(lo, hi + 1))
    else:
        e_lo = max(1, math.ceil(n * EASY_RATIO[0]))
        e_hi = min(bound, math.floor(n * EASY_RATIO[1]))
        choices = [x for x in range(e_lo, e_hi + 1) if not lo <= x <= hi]
        if not choices:
            choices = list(range(e_lo, e_hi + 1)) or [min(bound, e_lo)]
        m = choices[int(rng.integers(0, len(choices)))]
    f = gen_formula(params.k, n, m, rng)
    res = solve(f, SolveBudget(max_decisions=params.max_decisions))
    label = None if res.status is Status.UNKNOWN else int(res.status is Status.SAT)
    return {
        "index": index,
        "clauses": f.to_ints(),
        "n": f.n,
        "label": label,
        "hard": hard,
        "stats": {"decisions": res.stats.decisions, "propagations": res.stats.propagations},
    }


def _candidates(params: GenParams, workers: int) -> Iterator[dict]:
    index = 0
    if workers <= 1:
        while True:
            yield _candidate(params, index)
            index += 1
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = 8 * workers
        while True:
            idx = range(index, index + chunk)
            yield from pool.map(_candidate, [params] * chunk, idx)
            index += chunk


def resolve_workers(workers: int | None = None) -> int:
    env = os.environ.get("MSG_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, workers or 1)


def build_dataset(params: GenParams, workers: int | None = None) -> Dataset:
    """Generate a balanced labelled dataset.

    Candidates are accepted into (label, hard) buckets until each is full;
    UNKNOWN solver results are discarded.  Splits are then drawn from the
    shuffled SAT and UNSAT pools so every split is exactly balanced.
    """
    workers = resolve_workers(workers)
    half = params.size // 2
    hard_per_label = int(round(params.hard_fraction * half))
    target = {
        (1, True): hard_per_label, (1, False): half - hard_per_label,
        (0, True): hard_per_label, (0, False): half - hard_per_label,
    }
    buckets: dict[tuple[int, bool], list[dict]] = {key: [] for key in target}
    limit = params.max_candidates or 200 * params.size + 1000
    tried = unknown = 0
    totals = {"decisions": 0, "propagations": 0}
    gen = _candidates(params, workers)
    try:
        for cand in gen:
            tried += 1
            for key in totals:
                totals[key] += cand["stats"][key]
            if cand["label"] is None:
                unknown += 1
            else:
                key = (cand["label"], cand["hard"])
                if len(buckets[key]) < target[key]:
                    buckets[key].append(cand)
            if all(len(buckets[k]) == target[k] for k in target):
                break
            if tried >= limit:
                stats = {"tried": tried, "unknown": unknown,
                         "filled": {f"{k[0]}/{int(k[1])}": len(v) for k, v in buckets.items()}}
                raise DatasetError(f"could not balance dataset after {tried} candidates", stats)
    finally:
        gen.close()

    rng = np.random.default_rng([params.seed, 0x5EED])
    pools = {}
    for label in (1, 0):
        pool = buckets[(label, True)] + buckets[(label, False)]
        pool.sort(key=lambda c: c["index"])
        pools[label] = [pool[int(i)] for i in rng.permutation(len(pool))]
    entries: list[Entry] = []
    start = 0
    for s, size in params.split_sizes().items():
        chosen = []
        for label in (1, 0):
            chosen += [(label, c) for c in pools[label][start : start + size // 2]]
        start += size // 2
        for i in rng.permutation(len(chosen)):
            label, c = chosen[int(i)]
            f = Formula.from_clauses(c["clauses"], k=params.k)
            entries.append(Entry(f, label, s, c["hard"], c["stats"]))

    manifest = {
        "params": params.to_json(),
        "seed": params.seed,
        "candidates_tried": tried,
        "unknown_discarded": unknown,
        "solver_totals": totals,
        "split_sizes": params.split_sizes(),
    }
    log.info("dataset: %d entries from %d candidates (%d unknown)", len(entries), tried, unknown)
    return Dataset(entries, manifest)


def _label_from(f: Formula, path: Path) -> int:
    for c in f.comments:
        parts = c.split()
        if len(parts) == 2 and parts[0] == "label" and parts[1] in ("0", "1"):
            return int(parts[1])
    for part in reversed(path.parts[:-1]):
        if part.lower() in ("sat", "unsat"):
            return int(part.lower() == "sat")
    raise CnfError(f"{path}: no 'c label' comment and no sat/unsat directory")


_SPLIT_ALIASES = {"train": "train", "valid": "valid", "val": "valid", "validation": "valid", "test": "test"}


def load_dataset(path, seed: int = 0) -> Dataset:
    """Read a dataset directory.

    Files under ``train``/``valid``/``test`` keep their split.  A directory
    without split folders is split 80/10/10 per label with ``seed``.  Labels
    come from ``c label`` comments or a ``sat``/``unsat`` parent directory.
    """
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(root)
    files = sorted(root.rglob("*.cnf"), key=lambda p: (str(p.parent), _numeric_key(p)))
    if not files:
        raise FileNotFoundError(f"no .cnf files under {root}")
    entries: list[Entry] = []
    unsplit: list[Entry] = []
    for p in files:
        f = read_dimacs(p)
        label = _label_from(f, p)
        rel = p.relative_to(root).parts
        split = _SPLIT_ALIASES.get(rel[0].lower()) if len(rel) > 1 else None
        hard = not any(c.strip() == "hard 0" for c in f.comments)
        e = Entry(f, label, split or "", hard)
        (entries if split else unsplit).append(e)
    if unsplit:
        rng = np.random.default_rng(seed)
        for label in (1, 0):
            group = [e for e in unsplit if e.label == label]
            order = rng.permutation(len(group))
            n_hold = len(group) // 10
            for rank, i in enumerate(order):
                group[int(i)].split = "valid" if rank < n_hold else "test" if rank < 2 * n_hold else "train"
        entries += unsplit
    manifest = {}
    if (root / "manifest.json").exists():
        manifest = json.loads((root / "manifest.json").read_text())
    return Dataset(entries, manifest)


def _numeric_key(p: Path):
    return (0, int(p.stem), "") if p.stem.isdigit() else (1, 0, p.stem)
