"""Command-line pipeline: synth / reconstruct / mesh / metrics / sweep / bench.

Exit codes: 0 success, 2 validation error (bad flags, malformed or
inconsistent inputs), 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import stack_io
from .curvature import (curvature_report, write_histogram_csv, write_report_csv,
                        write_summary_json)
from .errors import ConfigError, DivergenceError, SlicesurfError
from .grid import ScalarField3D, read_rvol, write_rvol
from .mesh import extract_isosurface, read_obj, write_obj
from .phasefield import PhaseFieldParams, init_phase_field
from .solvers import (SolverConfig, parse_eps_rule, parse_tau_rule, run,
                      sweep_admm, write_sweep_csv, write_trace_csv)
from .spectral import get_plan, set_fft_workers
from .solvers import _clamp, _pgdm_update  # bench drives the raw step
from .synth import generate_example, subsample_slices
from .constraints import assemble_constraints


def _parse_pair(text: str, what: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"{what} must look like a:b, got {text!r}")
    return float(parts[0]), float(parts[1])


def _parse_range(text: str, what: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"{what} must look like start:stop:step, got {text!r}")
    a, b, s = (float(p) for p in parts)
    if s <= 0:
        raise ConfigError(f"{what} step must be > 0")
    return [float(v) for v in np.arange(a, b + 0.5 * s, s)]


def _cmd_synth(args) -> int:
    vol = generate_example(args.example, args.n)
    write_rvol(args.out, vol)
    if args.stack:
        gaps = _parse_pair(args.gaps, "--gaps")
        stack = subsample_slices(vol, count=args.slices,
                                 gap_range=(int(gaps[0]), int(gaps[1])),
                                 seed=args.seed)
        stack_io.write_stack(args.stack, stack)
    return 0


def _cmd_reconstruct(args) -> int:
    set_fft_workers(args.threads)
    stack = stack_io.read_stack(args.stack)
    n = stack.grid.shape[stack.axis]
    eps = parse_eps_rule(args.eps_rule)(n)
    tau = parse_tau_rule(args.tau_rule)(eps)
    cfg = SolverConfig(args.formulation, eps, tau, method=args.method,
                       rho=args.rho, max_iters=args.max_iters,
                       tol_rel=args.tol_rel, obstacle_mode=args.mode,
                       record_trace=bool(args.trace))
    result = run(stack, cfg, alpha=args.alpha, erosion=args.erosion)
    write_rvol(args.out, result.final_u)
    if args.trace:
        write_trace_csv(args.trace, result)
    print(f"{result.termination_reason} after {result.iters_done} iterations")
    return 0


def _cmd_mesh(args) -> int:
    field = read_rvol(args.infile)
    if not isinstance(field, ScalarField3D):
        raise ConfigError(f"{args.infile} holds a binary volume, not a field")
    write_obj(args.out, extract_isosurface(field, args.level))
    return 0


def _cmd_metrics(args) -> int:
    mesh = read_obj(args.infile)
    report = curvature_report(mesh, bins=args.bins)
    write_summary_json(args.out, report)
    if args.hist:
        write_histogram_csv(args.hist, report)
    if args.csv:
        write_report_csv(args.csv, report)
    print(f"sigma_gc={report.sigma_gc:.6g} sigma_mc={report.sigma_mc:.6g} "
          f"vertices={report.n_included} skipped={report.skipped_boundary_vertices}")
    return 0


def _cmd_sweep(args) -> int:
    set_fft_workers(1)  # cells run in parallel; keep each cell deterministic
    vol = generate_example(args.example, args.n)
    gaps = _parse_pair(args.gaps, "--gaps")
    stack = subsample_slices(vol, count=args.slices,
                             gap_range=(int(gaps[0]), int(gaps[1])),
                             seed=args.seed)
    cells = sweep_admm(stack, _parse_range(args.rho, "--rho"),
                       _parse_range(args.epsn, "--epsn"), args.tau_rule,
                       args.criterion_sigma_gc, max_iters=args.max_iters,
                       check_every=args.check_every, n_jobs=args.threads)
    write_sweep_csv(args.out, cells)
    n_pass = sum(c.passed for c in cells)
    print(f"{n_pass}/{len(cells)} cells pass")
    return 0


def _cmd_bench(args) -> int:
    set_fft_workers(args.threads)
    rows = ["n,iters,mean_iter_ms"]
    for n in (int(v) for v in args.n.split(",")):
        vol = generate_example(args.example, n)
        stack = subsample_slices(vol, count=args.slices, gap_range=(4, 5),
                                 seed=args.seed)
        eps = parse_eps_rule(args.eps_rule)(n)
        tau = parse_tau_rule(args.tau_rule)(eps)
        cfg = SolverConfig("elastica", eps, tau, max_iters=args.iters, tol_rel=0.0)
        params = PhaseFieldParams(eps)
        e0, obst, _ = assemble_constraints(stack, params)
        u = init_phase_field(e0, params).data
        plan = get_plan(e0.spec)
        lo, hi = obst.lower.data, obst.upper.data
        u = _pgdm_update(_clamp(u, lo, hi), cfg, plan)  # warm the plan caches
        t0 = time.perf_counter()
        for _ in range(args.iters):
            u = _pgdm_update(_clamp(u, lo, hi), cfg, plan)
        mean_ms = (time.perf_counter() - t0) / args.iters * 1e3
        rows.append(f"{n},{args.iters},{float(mean_ms)!r}")
        print(f"n={n}: {mean_ms:.2f} ms/iter")
    with open(args.out, "w") as fh:
        fh.write("\n".join(rows) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slicesurf",
        description="Surface reconstruction from parallel binary cross-sections")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic example volume")
    p.add_argument("--example", required=True, choices=("sphere", "branching"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--slices", type=int, default=5)
    p.add_argument("--gaps", default="4:5")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stack", default=None,
                   help="also write the subsampled slice stack here")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("reconstruct", help="solve a formulation on a slice stack")
    p.add_argument("--stack", required=True)
    p.add_argument("--formulation", required=True,
                   choices=("perimeter", "willmore", "elastica"))
    p.add_argument("--method", default="pgdm", choices=("pgdm", "admm"))
    p.add_argument("--eps-rule", default="1.5/N")
    p.add_argument("--tau-rule", default="eps^4")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--mode", default="indicator", choices=("indicator", "exact"))
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--tol-rel", type=float, default=1e-4)
    p.add_argument("--erosion", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", default=None)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("mesh", help="extract the half-level isosurface")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--level", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mesh)

    p = sub.add_parser("metrics", help="discrete curvature benchmark of a mesh")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--out", required=True)
    p.add_argument("--hist", default=None)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("sweep", help="penalty/width sensitivity map (splitting method)")
    p.add_argument("--example", default="sphere", choices=("sphere", "branching"))
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--rho", required=True, help="start:stop:step")
    p.add_argument("--epsn", required=True, help="start:stop:step for eps*N")
    p.add_argument("--tau-rule", default="eps^3")
    p.add_argument("--criterion-sigma-gc", type=float, required=True)
    p.add_argument("--slices", type=int, default=5)
    p.add_argument("--gaps", default="4:5")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--check-every", type=int, default=25)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("bench", help="per-iteration wall time vs resolution")
    p.add_argument("--example", default="sphere", choices=("sphere", "branching"))
    p.add_argument("--n", required=True, help="comma-separated resolutions")
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--slices", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps-rule", default="1.5/N")
    p.add_argument("--tau-rule", default="eps^4")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (SlicesurfError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
