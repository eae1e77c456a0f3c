"""Two 2-CNF formulae that 1-WL cannot tell apart, though one is SAT and one is not.

phi chains six letters in an XOR cycle (p1 xor p2, ..., p6 xor p1); psi is two
XOR triangles.  An odd XOR cycle is unsatisfiable, an even one is not, but
every node in both MILP-graphs sees the same local picture.

    python3 demos/02_wl_counterexample.py
"""

import json

from milpsat.cnf import enumerate_models, example1
from milpsat.graph import to_graph
from milpsat.milp import encode
from milpsat.nn import GnnConfig, GnnModel, forward
from milpsat.wl import counterexample_pair, indistinguishable, is_foldable, wl_report

phi, psi = counterexample_pair()
print("phi models:", sorted(str(w) for w in enumerate_models(phi)))
print("psi models:", sorted(str(w) for w in enumerate_models(psi)))
print("indistinguishable:", indistinguishable(phi, psi))
print("foldable:", is_foldable(phi), is_foldable(psi))

rep = wl_report(phi, psi)
print(json.dumps({k: rep[k] for k in ("indistinguishable", "first_difference")}))

# so no message-passing GNN without random features can separate them
for seed in range(3):
    model = GnnModel(GnnConfig(d=16, rounds=3), seed=seed)
    a = forward(model, to_graph(encode(phi))).data[0]
    b = forward(model, to_graph(encode(psi))).data[0]
    print(f"model {seed}: F(phi)={a:.6f} F(psi)={b:.6f}")

# symmetry makes a formula foldable: swapping p1 and p2 maps this one to itself
print("example formula foldable:", is_foldable(example1()))
