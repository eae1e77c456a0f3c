"""From a DIMACS formula to a 0/1 MILP, its MPS file and its bipartite graph.

    python3 demos/01_cnf_to_milp.py
"""

from milpsat.cnf import enumerate_models, parse_dimacs
from milpsat.graph import to_graph
from milpsat.milp import encode, feasible_solutions, to_mps

text = """c three clauses over two letters
p cnf 2 3
1 2 0
1 -2 0
-1 2 0
"""
f = parse_dimacs(text)
print(f"k={f.k} n={f.n} m={f.m}")

# each literal p becomes x, each ¬p becomes 1 - x; constants move to the right
M = encode(f)
print("A =", M.A.tolist())
print("b =", M.b.tolist())

# the feasible 0/1 points are exactly the models
print("models:  ", sorted(str(w) for w in enumerate_models(f)))
print("feasible:", [x.tolist() for x in feasible_solutions(M)])

print(to_mps(M, "EX1"))

g = to_graph(M)
print(f"graph: {g.m} constraint nodes, {g.n} variable nodes, {g.num_edges} weighted edges")
for i, j, w in zip(g.edge_con, g.edge_var, g.edge_weight):
    print(f"  c{i + 1} -- x{j + 1}  weight {w:+.0f}")
