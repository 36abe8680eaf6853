"""Fit a coarse mesh so that its Loop limit reproduces the unit square's corners.

Run: python3 demos/demo_fit.py
"""

from subdivforms import meshgen
from subdivforms.geomfit import FitConfig, corner_deviation, fit_initial_mesh

square = meshgen.structured_square(8)
cfg = FitConfig(L=3)
T0, res = fit_initial_mesh(square, cfg=cfg)
print("vertex classes:", res.class_counts)
print("relative residual of the normal equations:", max(res.relative_residuals()))
print(f"corner deviation after 3 Loop steps: unfitted {corner_deviation(square, square, 3, cfg):.4f}, "
      f"fitted {corner_deviation(T0, square, 3, cfg):.4f}")
moved = abs(T0.vertices - square.vertices).max(axis=1)
print(f"largest vertex displacement {moved.max():.4f} ({(moved > 1e-12).sum()} vertices moved)")
