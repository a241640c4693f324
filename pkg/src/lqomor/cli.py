"""Command-line interface.

Subcommands:
  generate   build a benchmark or random test model and write its bundle
  reduce     run the fixed-point reduction on a bundle
  verify     evaluate interpolatory optimality residuals of a reduced model
  evaluate   time-domain simulation (optionally against a reference model)
  norms      H2 norm breakdown of a bundle

Exit codes: 0 success, 1 numerical/library failure, 2 usage or I/O error.
"""

import argparse
import json
import os
import sys as _sys


def _fmt(x):
    return f"{x:.6g}"


def build_parser():
    ap = argparse.ArgumentParser(
        prog="lqomor",
        description="H2 model reduction for quadratic-output systems",
    )
    ap.add_argument("--threads", type=int, default=None,
                    help="cap BLAS/OpenMP threads")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a model bundle")
    g.add_argument("model", choices=["advec-diff", "random"])
    g.add_argument("--n", type=int, default=3000)
    g.add_argument("--alpha", type=float, default=1.0)
    g.add_argument("--beta", type=float, default=1.0)
    g.add_argument("--m", type=int, default=2)
    g.add_argument("--p", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--outdir", required=True)

    r = sub.add_parser("reduce", help="reduce a model bundle")
    r.add_argument("bundle")
    r.add_argument("-r", "--order", type=int, required=True)
    r.add_argument("--init", choices=["eigs", "imag"], default="eigs")
    r.add_argument("--tol", type=float, default=1e-10)
    r.add_argument("--max-iter", type=int, default=200)
    r.add_argument("--no-reflect", action="store_true",
                   help="do not mirror unstable candidate points")
    r.add_argument("-o", "--outdir", required=True)

    v = sub.add_parser("verify", help="optimality residuals")
    v.add_argument("full_bundle")
    v.add_argument("reduced_bundle")
    v.add_argument("-o", "--output", default=None,
                   help="write residual report JSON here")

    e = sub.add_parser("evaluate", help="simulate a bundle")
    e.add_argument("bundle")
    e.add_argument("--input", choices=["sinc", "exp"], default="sinc")
    e.add_argument("--steps", type=int, default=1000)
    e.add_argument("--t1", type=float, default=10.0)
    e.add_argument("--reference", default=None,
                   help="bundle of a reference model for error metrics")
    e.add_argument("-o", "--output", default=None,
                   help="write trajectory CSV here")

    n = sub.add_parser("norms", help="H2 norm breakdown")
    n.add_argument("bundle")
    n.add_argument("--quadrature", action="store_true",
                   help="also run the quadrature cross-check (small dense)")
    return ap


def cmd_generate(args):
    from . import benchmarks, io
    if args.model == "advec-diff":
        model = benchmarks.advection_diffusion(
            n=args.n, alpha=args.alpha, beta=args.beta)
        params = {"model": "advec-diff", "n": args.n,
                  "alpha": args.alpha, "beta": args.beta}
    else:
        model = benchmarks.random_stable_lqo(
            args.n, args.m, args.p, seed=args.seed)
        params = {"model": "random", "n": args.n, "m": args.m,
                  "p": args.p, "seed": args.seed}
    io.write_system_bundle(model, args.outdir, name=args.model)
    io.write_run_manifest(
        args.outdir, "generate", params,
        outputs=[os.path.join(args.outdir, "manifest.json")])
    print(f"wrote {args.model} bundle (n={model.n}, m={model.m}, "
          f"p={model.p}) to {args.outdir}")
    return 0


def cmd_reduce(args):
    from . import io
    from .irka import IrkaConfig, lqo_irka
    model, _ = io.read_system_bundle(args.bundle)
    cfg = IrkaConfig(r=args.order, tol=args.tol, max_iter=args.max_iter,
                     init=args.init, reflect_unstable=not args.no_reflect)
    red, report = lqo_irka(model, cfg)
    io.write_system_bundle(red, args.outdir, name="reduced")
    rpath = os.path.join(args.outdir, "irka_report.json")
    with open(rpath, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    io.write_run_manifest(
        args.outdir, "reduce",
        {"order": args.order, "init": args.init, "tol": args.tol,
         "max_iter": args.max_iter},
        inputs=[os.path.join(args.bundle, "manifest.json")],
        outputs=[os.path.join(args.outdir, "manifest.json"), rpath])
    status = "converged" if report.converged else "NOT converged"
    print(f"{status} after {report.iterations} iterations; "
          f"final pole change {_fmt(report.pole_change_history[-1])}")
    if report.final_residuals is not None:
        print("max relative optimality residual "
              f"{_fmt(report.final_residuals.max_relative)}")
    return 0


def cmd_verify(args):
    from . import io
    from .interpolation import verify_h2_optimality
    full, _ = io.read_system_bundle(args.full_bundle)
    red, _ = io.read_system_bundle(args.reduced_bundle)
    res = verify_h2_optimality(full, red)
    print(f"max relative optimality residual {_fmt(res.max_relative)}")
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(res.to_dict(), fh, indent=2)
    return 0


def cmd_evaluate(args):
    import numpy as np
    from . import benchmarks, io
    from .simulate import SimConfig, relerr_l2, relerr_linf, simulate
    model, _ = io.read_system_bundle(args.bundle)
    u = benchmarks.benchmark_inputs()[args.input]
    if model.m == 1:
        base = u
        u = lambda t: base(t)[..., :1]
    cfg = SimConfig(t1=args.t1, steps=args.steps)
    traj = simulate(model, u, cfg)
    print(f"simulated {args.steps} steps on [0, {_fmt(args.t1)}], "
          f"max|y| = {_fmt(np.max(np.abs(traj.outputs)))}")
    if args.reference:
        ref_model, _ = io.read_system_bundle(args.reference)
        ref = simulate(ref_model, u, cfg)
        print(f"relerr_l2 = {_fmt(relerr_l2(ref.outputs, traj.outputs))}  "
              f"relerr_linf = {_fmt(relerr_linf(ref.outputs, traj.outputs))}")
    if args.output:
        header = "t," + ",".join(f"y{k}" for k in range(traj.p))
        np.savetxt(args.output,
                   np.column_stack([traj.times, traj.outputs]),
                   delimiter=",", header=header, comments="")
    return 0


def cmd_norms(args):
    from . import io
    from .h2 import h2_norm, h2_norm_full, h2_norm_quadrature
    from .systems import DENSE_CAP, ReducedLqoSystem
    model, _ = io.read_system_bundle(args.bundle)
    if isinstance(model, ReducedLqoSystem):
        bd = h2_norm(model)
    else:
        bd, _ = h2_norm_full(model)
    print(f"H2 norm {_fmt(bd.norm)} "
          f"(linear part {_fmt(bd.linear_part)}, "
          f"quadratic part {_fmt(bd.quadratic_part)})")
    if args.quadrature:
        if model.n > DENSE_CAP:
            print(f"quadrature cross-check skipped (n={model.n} > "
                  f"{DENSE_CAP})")
        else:
            qd = h2_norm_quadrature(model)
            rel = abs(qd.total - bd.total) / max(bd.total, 1e-300)
            print(f"quadrature H2 norm {_fmt(qd.norm)} "
                  f"(relative gap {_fmt(rel)})")
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "reduce": cmd_reduce,
    "verify": cmd_verify,
    "evaluate": cmd_evaluate,
    "norms": cmd_norms,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    from .exceptions import LqoError
    try:
        return _COMMANDS[args.command](args)
    except LqoError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}),
              file=_sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"I/O error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    _sys.exit(main())
