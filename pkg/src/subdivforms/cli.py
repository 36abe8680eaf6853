"""Command line interface: ``subdivforms {verify,project,maxwell,timing,fit,plot}``.

Options come from the subcommand defaults, then an optional ``--config``
file, then flags (flags win). Exit codes: 0 success, 1 a check failed,
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench.config import ExperimentConfig, parse_pairs, read_config
from .errors import MissingInput, SubdivFormsError

DEFAULTS = {
    "verify": {"pairs": [(0, 3)]},
    "project": {"n": 4, "bounds": (0.0, 0.0, 1.0, 1.0), "pairs": [(0, 6)], "fit": False},
    "maxwell": {"pairs": [(l, 4) for l in range(5)]},
    "timing": {"pairs": [(l, 5) for l in range(6)], "n_eigs": 50},
    "fit": {"n": 8, "bounds": (0.0, 0.0, 1.0, 1.0), "pairs": [(0, 3)]},
    "plot": {},
}


def _parser():
    p = argparse.ArgumentParser(prog="subdivforms", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file")
    common.add_argument("--scheme", choices=("loopwang", "whitney"))
    common.add_argument("--levels", help="comma-separated l:L pairs (or a single L)")
    common.add_argument("--mesh", help="'square' or an OFF/OBJ file")
    common.add_argument("--n", type=int, help="cells per side of the built-in square")
    common.add_argument("--k", help="form degrees, e.g. 0,1,2")
    common.add_argument("--n-eigs", type=int, dest="n_eigs")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--no-fit", action="store_true", help="skip the initial-mesh fit")

    v = sub.add_parser("verify", parents=[common], help="structure checks")
    v.add_argument("--stencils", help="stencil table file replacing the built-in rules")
    v.add_argument("--all-meshes", action="store_true",
                   help="square, irregular disk and annulus instead of the configured mesh")
    sub.add_parser("project", parents=[common], help="L2 projection study")
    m = sub.add_parser("maxwell", parents=[common], help="Maxwell eigenvalue benchmark")
    m.add_argument("--case", choices=("i", "ii"), default="i")
    m.add_argument("--modes", type=int, default=0, help="eigenmodes to export")
    m.add_argument("--workers", type=int, default=1)
    sub.add_parser("timing", parents=[common], help="timing and speed-up table")
    sub.add_parser("fit", parents=[common], help="fit an initial mesh to a domain")
    pl = sub.add_parser("plot", parents=[common], help="render SVG plots from result CSVs")
    pl.add_argument("results", nargs="?", help="directory with result CSVs (default --out)")
    return p


def _config(args):
    cfg = ExperimentConfig().updated(**DEFAULTS[args.command])
    if args.config:
        cfg = read_config(args.config, cfg)
    kw = {"scheme": args.scheme, "mesh": args.mesh, "n": args.n, "n_eigs": args.n_eigs,
          "seed": args.seed, "out": args.out}
    if args.levels:
        kw["pairs"] = parse_pairs(args.levels)
    if args.k:
        kw["k"] = [int(t) for t in args.k.replace(",", " ").split()]
    if args.no_fit:
        kw["fit"] = False
    return cfg.updated(**kw)


def _cmd_verify(cfg, args):
    from .bench.verify import default_meshes, reports_json, run_verify
    from .stencils import StencilTable

    table = StencilTable.read(args.stencils) if args.stencils else None
    meshes = default_meshes() if args.all_meshes else None
    reports, code = run_verify(cfg, meshes=meshes, schemes=[cfg.scheme], table=table)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify.json").write_text(reports_json(reports), encoding="utf-8")
    for r in reports:
        print(f"{r.mesh:16s} {r.scheme:9s} L={r.L} {'PASS' if r.passed else 'FAIL'}")
        for c in r.failures():
            print(f"    {c.name}: {c.value} {c.detail}")
    return code


def _cmd_project(cfg, args):
    from .bench.projection import run_projection

    res = run_projection(cfg)
    out = Path(cfg.out)
    res.to_csv(out / "projection.csv")
    res.orders_csv(out / "projection_orders.csv")
    for o in res.orders:
        print(f"k={o['k']} n_s={o['n_s']} slope(last)={o['slope_last']:.3f} slope(fit)={o['slope_fit']:.3f}")
    return 0


def _cmd_maxwell(cfg, args):
    from .bench.maxwell import run_maxwell

    res = run_maxwell(cfg, args.case, export_modes=args.modes, workers=args.workers)
    res.write(cfg.out)
    ok = True
    for r in res.runs:
        good = r.zero_cluster_ok and r.n_spurious == 0
        ok &= good
        lam = " ".join(f"{x:.4f}" for x in r.eigenvalues[:10])
        print(f"({r.l},{r.L}) dofs={r.dofs} zeros={r.zero_count}/{r.interior_vertices} "
              f"spurious={r.n_spurious} e50={r.e50:.3g} [{lam}]")
    return 0 if ok else 1


def _cmd_timing(cfg, args):
    from .bench.maxwell import run_timing, timing_csv

    L = max(L for _, L in cfg.pairs)
    levels = sorted({l for l, _ in cfg.pairs})
    recs = run_timing(cfg, L=L, levels=levels, n_eigs=cfg.n_eigs)
    print(timing_csv(recs, Path(cfg.out) / "timing.csv"), end="")
    return 0


def _cmd_fit(cfg, args):
    from .geomfit import corner_deviation, fit_initial_mesh
    from .mesh_io import write_off

    L = max(L for _, L in cfg.pairs)
    T_FE = cfg.initial_mesh()
    fc = cfg.fit_config(L)
    T0, res = fit_initial_mesh(T_FE, L, fc)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_off(T0, out / "fitted.off")
    info = json.loads(res.to_json())
    info["corner_deviation_fitted"] = corner_deviation(T0, T_FE, L, fc)
    info["corner_deviation_unfitted"] = corner_deviation(T_FE, T_FE, L, fc)
    info.pop("positions")
    (out / "fit.json").write_text(json.dumps(info, indent=2, sort_keys=True), encoding="utf-8")
    rel = max(res.relative_residuals())
    print(f"relative residual {rel:.3e}; corner deviation fitted "
          f"{info['corner_deviation_fitted']:.4g} vs unfitted {info['corner_deviation_unfitted']:.4g}")
    return 0 if rel <= 1e-10 else 1


def _cmd_plot(cfg, args):
    from .bench.plots import emit_plots

    svgs = emit_plots(args.results or cfg.out, cfg.out)
    for name in sorted(svgs):
        print(name)
    return 0


COMMANDS = {"verify": _cmd_verify, "project": _cmd_project, "maxwell": _cmd_maxwell,
            "timing": _cmd_timing, "fit": _cmd_fit, "plot": _cmd_plot}


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = _config(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg, args)
    except MissingInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SubdivFormsError as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
