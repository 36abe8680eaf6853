"""Subdivide an irregular disk and check the discrete de Rham structure.

Run: python3 demos/demo_derham.py
"""

from subdivforms import meshgen
from subdivforms.derham import betti, check_commutation, dd_residual
from subdivforms.subdivision import build_hierarchy

mesh = meshgen.irregular_disk()
print(f"coarse mesh: {mesh.count(0)} vertices, {mesh.count(1)} edges, {mesh.count(2)} faces")
print("Betti numbers (absolute, relative):", betti(mesh).betti, betti(mesh, relative=True).betti)

for scheme in ("whitney", "loopwang"):
    h = build_hierarchy(mesh, 3, scheme)
    print(f"\n{scheme}: finest level has {h.meshes[-1].count(1)} edges")
    print("  max |D D| over levels:", max(dd_residual(m) for m in h.meshes))
    for k in (0, 1):
        res, mode = check_commutation(h, k, 0, 3)
        print(f"  k={k}: S D = D S residual {res:.1e} ({mode})")
