"""Balanced SAT/UNSAT datasets at the 3-SAT phase transition.

    python3 demos/04_phase_transition_dataset.py [out_dir]
"""

import sys

from milpsat.generator import PRINTED_EXPONENT, GenParams, build_dataset, phase_transition_m

for n in (10, 20, 40, 100):
    m = phase_transition_m(n)
    print(f"n={n:3d}  h'(n)={m:4d}  ratio {m / n:.2f}")
print("with the +2/3 exponent, h'(10) =", phase_transition_m(10, PRINTED_EXPONENT))

params = GenParams(n_min=10, n_max=20, size=100, seed=7)
ds = build_dataset(params)
print("counts:", ds.counts())
print("candidates tried:", ds.manifest["candidates_tried"])
e = ds.split("train")[0]
print(f"first entry: n={e.formula.n} m={e.formula.m} label={e.label} (h'={phase_transition_m(e.formula.n)})")

if len(sys.argv) > 1:
    ds.write(sys.argv[1])
    print("written to", sys.argv[1])
