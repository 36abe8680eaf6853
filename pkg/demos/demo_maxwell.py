"""Maxwell eigenvalues on (0, pi)^2 in fitted subdivision spaces.

Run: python3 demos/demo_maxwell.py   (~30 s)
"""

import math

from subdivforms.bench import ExperimentConfig, analytic_eigenvalues, run_maxwell

cfg = ExperimentConfig(n=8, bounds=(0.0, 0.0, math.pi, math.pi), n_eigs=10)
res = run_maxwell(cfg, "ii", pairs=[(1, 3), (2, 4), (3, 5)])
exact = analytic_eigenvalues(10)
print("exact:   " + " ".join(f"{x:7.4f}" for x in exact))
for r in res.runs:
    print(f"(l,L)=({r.l},{r.L}) dofs={r.dofs:6d} zeros={r.zero_count}/{r.interior_vertices} "
          f"spurious={r.n_spurious}")
    print("         " + " ".join(f"{x:7.4f}" for x in r.eigenvalues[:10]))
