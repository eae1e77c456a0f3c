"""k-SAT formulae as MILP-graphs, Weisfeiler-Leman analysis and a small GNN satisfiability classifier."""

from .cnf import Clause, CnfError, Formula, FormulaPermutation, Literal, World, parse_dimacs, emit_dimacs
from .graph import BipartiteGraph, RniConfig, apply_rni, batch, to_graph
from .milp import MilpInstance, encode, feasible_bruteforce, to_mps
from .solver import SolveBudget, Status, solve
from .wl import counterexample_pair, indistinguishable, is_foldable, wl_kcnf

__version__ = "0.1.0"

__all__ = [
    "BipartiteGraph", "Clause", "CnfError", "Formula", "FormulaPermutation", "Literal", "MilpInstance",
    "RniConfig", "SolveBudget", "Status", "World", "apply_rni", "batch", "counterexample_pair", "emit_dimacs",
    "encode", "feasible_bruteforce", "indistinguishable", "is_foldable", "parse_dimacs", "solve", "to_graph",
    "to_mps", "wl_kcnf",
]
