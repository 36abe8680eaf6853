"""L2 projection of the reference forms into the subdivision spaces (l, L).

Run: python3 demos/demo_projection.py [L_max]   (default 4; 6 takes ~20 s)
"""

import sys

from subdivforms.bench import run_projection

L_max = int(sys.argv[1]) if len(sys.argv) > 1 else 4
res = run_projection(L_max=L_max)

for k in (0, 1, 2):
    print(f"\nk={k}: error by coarse level l (rows) and smoothing steps n_s = L - l (columns)")
    for l in range(L_max + 1):
        errs = [res.error(k, l, L) for L in range(l, L_max + 1)]
        print(f"  l={l}: " + " ".join(f"{e:.3e}" for e in errs))
    print(f"  saturation onset at l=1: n_s = {res.onsets[(k, 1)]}")

print("\nconvergence orders (least-squares fit over l at fixed n_s):")
for o in res.orders:
    print(f"  k={o['k']} n_s={o['n_s']}: {o['slope_fit']:.2f} (last pair {o['slope_last']:.2f})")
