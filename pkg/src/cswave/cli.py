"""Command-line interface.

Subcommands: recipe, pattern, gramian, coherence, balancing, solve, run,
sweep, diagnose, oracle.  Exit codes: 0 success, 2 precondition error,
3 solver non-convergence under --strict.
"""

import argparse
import json
import struct
import sys

import numpy as np

from .diagnostics import (LevelSparsity, gripl_constant_bruteforce,
                          rip_constant_bruteforce)
from .errors import PreconditionError, SolverDivergenceError
from .experiment import (CSV_HEADER, METHODS, SweepConfig, emit_plot, make_fk,
                         run_sweep, trial_seed)
from .fourier import balancing_constant, coherence_table, cross_gramian
from .recipes import (fourier_params, gauss_params, optimal_params, run_fourier,
                      run_gauss, run_optimal)
from .sampling import LevelScheme, draw_multilevel, draw_symmetric
from .solvers import (SolveOptions, basis_pursuit, oracle_min_l1,
                      weighted_basis_pursuit, weighted_sqrt_lasso)
from .wavelets import daubechies


def _parse_wavelet(text):
    if not text.startswith("db"):
        raise PreconditionError("wavelet must look like db1, db2, ...")
    try:
        p = int(text[2:])
    except ValueError:
        raise PreconditionError(f"bad wavelet name {text!r}") from None
    return daubechies(p)


def _global_flags(sp):
    sp.add_argument("--wavelet", default="db1", help="dbP wavelet family member")
    sp.add_argument("--alpha", type=float, default=None,
                    help="smoothness order (default: the wavelet's p)")
    sp.add_argument("--delta", type=float, default=1e-5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--m", type=int, default=None, help="measurement budget")
    sp.add_argument("--dim", type=int, default=4096, help="working dimension N")
    sp.add_argument("--mode", choices=("theory", "experiment"), default="experiment")
    sp.add_argument("--out", default=None, help="output path (default: stdout)")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--strict", action="store_true",
                    help="treat solver non-convergence as a failure (exit 3)")


def _need(args, name):
    val = getattr(args, name.lstrip("-").replace("-", "_"))
    if val is None:
        raise PreconditionError(f"{name} is required for this subcommand")
    return val


def _sink(args):
    return open(args.out, "w") if args.out else sys.stdout


def _load_array(path):
    if path.endswith(".npy"):
        return np.load(path)
    return np.loadtxt(path, delimiter=",", dtype=complex, ndmin=1)


def _maybe_real(a):
    a = np.asarray(a)
    if np.iscomplexobj(a) and np.max(np.abs(a.imag), initial=0.0) == 0.0:
        return a.real
    return a


# ---------------------------------------------------------------- subcommands


def _cmd_recipe(args):
    spec = _parse_wavelet(args.wavelet)
    alpha = args.alpha if args.alpha is not None else float(spec.p)
    m = _need(args, "--m")
    if args.method == "gauss":
        rec = gauss_params(m, alpha, N=args.dim)
    elif args.method == "optimal":
        rec = optimal_params(m, alpha, N=args.dim)
    else:
        rec = fourier_params(m, alpha, p=spec.p, delta=args.delta,
                             mode=args.mode, N=args.dim)
    out = _sink(args)
    for key, val in vars(rec).items():
        if key == "weights":
            val = ",".join(f"{v:.12g}" for v in np.unique(val))
        elif isinstance(val, tuple):
            val = ",".join(str(v) for v in val)
        out.write(f"{key} = {val}\n")
    if out is not sys.stdout:
        out.close()
    return 0


def _cmd_pattern(args):
    spec = _parse_wavelet(args.wavelet)
    alpha = args.alpha if args.alpha is not None else float(spec.p)
    m = _need(args, "--m")
    rec = fourier_params(m, alpha, p=spec.p, delta=args.delta, mode=args.mode, N=args.dim)
    scheme = LevelScheme(N_levels=tuple(2 ** (rec.j0 + k) for k in range(1, rec.r + 1)),
                         m_local=rec.m_local, saturation=rec.r_tilde)
    if args.mode == "experiment":
        pat = draw_symmetric(scheme, args.seed)
    else:
        pat = draw_multilevel(scheme, args.seed, mode="theory")
    out = _sink(args)
    out.write("level,signed_frequency,natural_index,multiplicity\n")
    for row in pat.to_rows():
        out.write("%d,%d,%d,%d\n" % row)
    summary = "m per level: " + " ".join(str(v) for v in scheme.m_local)
    if out is sys.stdout:
        print(summary, file=sys.stderr)
    else:
        out.close()
        print(summary)
    return 0


def _cmd_gramian(args):
    spec = _parse_wavelet(args.wavelet)
    N = args.dim
    M = args.cols or N
    path = _need(args, "--out")
    U = cross_gramian(spec, N, M)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", N, M))
        fh.write(np.ascontiguousarray(U.entries.astype("<c16")).tobytes())
    csv_path = path + ".coherence.csv"
    with open(csv_path, "w") as fh:
        fh.write("k,l,mu\n")
        for k, l, mu in coherence_table(U):
            fh.write(f"{k},{l},{mu:.12e}\n")
    print(f"wrote {path} ({N}x{M} complex128) and {csv_path}")
    return 0


def read_gramian_binary(path):
    """Counterpart of the `gramian` output: header (N, M) then entries."""
    with open(path, "rb") as fh:
        N, M = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != N * M:
        raise PreconditionError("truncated Gramian file")
    return data.reshape(N, M)


def _cmd_coherence(args):
    spec = _parse_wavelet(args.wavelet)
    U = cross_gramian(spec, args.dim, args.cols or args.dim)
    out = _sink(args)
    out.write("k,l,mu\n")
    for k, l, mu in coherence_table(U):
        out.write(f"{k},{l},{mu:.12e}\n")
    if out is not sys.stdout:
        out.close()
    return 0


def _cmd_balancing(args):
    spec = _parse_wavelet(args.wavelet)
    M = args.cols or args.dim
    U = cross_gramian(spec, args.dim, M)
    theta = balancing_constant(U)
    print(f"theta = {theta:.12g}")
    return 0


def _solve_opts(args):
    return SolveOptions(max_iters=args.max_iters)


def _cmd_solve(args):
    A = np.atleast_2d(_load_array(_need(args, "--matrix")))
    y = _load_array(_need(args, "--rhs")).ravel()
    opts = _solve_opts(args)
    if args.decoder == "bp":
        xhat, rep = basis_pursuit(A, y, opts)
    else:
        w = (np.real(_load_array(args.weights)).ravel() if args.weights
             else np.ones(A.shape[1]))
        if args.decoder == "wbp":
            xhat, rep = weighted_basis_pursuit(A, y, w, opts)
        else:
            if args.lam is None:
                raise PreconditionError("--lam is required for wsrlasso")
            xhat, rep = weighted_sqrt_lasso(A, y, w, args.lam, opts)
    out = _sink(args)
    for v in _maybe_real(xhat):
        out.write(f"{v}\n")
    report = {"status": rep.status, "iterations": rep.iterations,
              "residual": rep.primal_residual, "objective": rep.objective}
    line = json.dumps(report)
    if out is sys.stdout:
        print(line, file=sys.stderr)
    else:
        out.close()
        print(line)
    if args.strict and rep.status not in ("Converged", "MaxIters"):
        raise SolverDivergenceError(f"solver status {rep.status}")
    if args.strict and rep.status == "MaxIters":
        raise SolverDivergenceError("iteration budget exhausted in strict mode")
    return 0


def _cmd_oracle(args):
    A = np.atleast_2d(_load_array(_need(args, "--matrix")))
    y = _load_array(_need(args, "--rhs")).ravel()
    w = np.real(_load_array(args.weights)).ravel() if args.weights else None
    x = oracle_min_l1(A, y, w=w, s_max=args.s_max)
    out = _sink(args)
    for v in _maybe_real(x):
        out.write(f"{v}\n")
    if out is not sys.stdout:
        out.close()
    return 0


def _row_from_result(method, args, spec, res):
    from .experiment import ResultRow
    return ResultRow(method=method, p=spec.p, K=args.K, m=args.m, trial=0,
                     seed=args.seed, rel_l2_error=res.rel_l2_error,
                     iterations=res.report.iterations, runtime_ms=0.0,
                     status=res.report.status)


def _cmd_run(args):
    spec = _parse_wavelet(args.wavelet)
    alpha = args.alpha if args.alpha is not None else float(spec.p)
    m = _need(args, "--m")
    f = make_fk(args.K, override_breakpoints=args.override_breakpoints)
    opts = _solve_opts(args)
    method = args.method
    if method == "gauss_bp":
        res = run_gauss(f, m, alpha, args.seed, N=args.dim, spec=spec, opts=opts)
    elif method == "optimal_bp":
        res = run_optimal(f, m, alpha, args.seed, N=args.dim, spec=spec, opts=opts)
    else:
        decoder = {"fourier_bp": "bp", "fourier_wbp": "wbp",
                   "fourier_wsrlasso": "wsrlasso"}[method]
        res = run_fourier(f, m, alpha, p=spec.p, delta=args.delta, decoder=decoder,
                          mode=args.mode, seed=args.seed, N=args.dim, spec=spec, opts=opts)
    out = _sink(args)
    out.write(CSV_HEADER + "\n")
    out.write(_row_from_result(method, args, spec, res).to_csv() + "\n")
    if out is not sys.stdout:
        out.close()
    if args.strict and res.report.status != "Converged":
        raise SolverDivergenceError(f"solver status {res.report.status}")
    return 0


def _read_config(path):
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PreconditionError(f"bad config line: {raw.strip()!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            values[key] = val
    return values


_CONFIG_KEYS = {
    "methods": lambda v: tuple(s.strip() for s in v.split(",") if s.strip()),
    "p": int, "K": int,
    "m_grid": lambda v: tuple(int(s) for s in v.split(",") if s.strip()),
    "alpha": float, "delta": float, "N_dim": int, "trials": int,
    "master_seed": int, "output_path": str, "jobs": int,
}


def _sweep_config(args):
    fields = {}
    if args.config:
        for key, val in _read_config(args.config).items():
            if key not in _CONFIG_KEYS:
                raise PreconditionError(f"unknown config key {key!r}")
            fields[key] = _CONFIG_KEYS[key](val)
    spec = _parse_wavelet(args.wavelet)
    overrides = {
        "p": spec.p if args.wavelet != "db1" or "p" not in fields else None,
        "K": args.K,
        "alpha": args.alpha,
        "delta": args.delta if args.delta != 1e-5 else None,
        "N_dim": args.dim if args.dim != 4096 else None,
        "trials": args.trials if args.trials != 10 else None,
        "master_seed": args.seed if args.seed != 0 else None,
        "output_path": args.out,
        "jobs": args.jobs if args.jobs != 1 else None,
    }
    if args.methods:
        fields["methods"] = tuple(s.strip() for s in args.methods.split(","))
    if args.m_grid:
        fields["m_grid"] = tuple(int(s) for s in args.m_grid.split(","))
    for key, val in overrides.items():
        if val is not None:
            fields[key] = val
    fields.setdefault("K", 10)
    return SweepConfig(**fields)


def _cmd_sweep(args):
    config = _sweep_config(args)
    rows, summary = run_sweep(config)
    if config.output_path:
        svg = config.output_path.rsplit(".", 1)[0] + ".svg"
        finite = [r for r in rows if np.isfinite(r.rel_l2_error)]
        if finite:
            emit_plot(finite, svg)
            print(f"wrote {config.output_path} and {svg}")
    for method, med in summary["medians"].items():
        pieces = " ".join(f"m={m}:{e:.4e}" for m, e in med.items())
        slope = summary["slopes"].get(method)
        tail = f"  slope={slope:.3f}" if slope is not None else ""
        print(f"{method}: {pieces}{tail}")
    return 0


def _cmd_diagnose(args):
    out = _sink(args)
    if args.kind == "rip":
        A = np.atleast_2d(_load_array(_need(args, "--matrix")))
        rep = rip_constant_bruteforce(A, args.s)
        out.write("order,constant,supports_checked\n")
        out.write(f"{rep.order},{rep.constant:.12e},{rep.supports_checked}\n")
    elif args.kind == "gripl":
        A = np.atleast_2d(_load_array(_need(args, "--matrix")))
        if args.levels is None or args.sparsities is None:
            raise PreconditionError("--levels and --sparsities are required for gripl")
        plan = LevelSparsity(tuple(int(s) for s in args.levels.split(",")),
                             tuple(int(s) for s in args.sparsities.split(",")))
        G = (np.atleast_2d(_load_array(args.g_matrix)) if args.g_matrix
             else np.eye(plan.dim))
        rep = gripl_constant_bruteforce(A, G, plan)
        out.write("order,constant,supports_checked\n")
        out.write(f"\"{rep.order}\",{rep.constant:.12e},{rep.supports_checked}\n")
    elif args.kind == "coherence":
        spec = _parse_wavelet(args.wavelet)
        U = cross_gramian(spec, args.dim, args.cols or args.dim)
        out.write("k,l,mu\n")
        for k, l, mu in coherence_table(U):
            out.write(f"{k},{l},{mu:.12e}\n")
    else:  # balancing
        spec = _parse_wavelet(args.wavelet)
        U = cross_gramian(spec, args.dim, args.cols or args.dim)
        out.write("N,M,theta\n")
        out.write(f"{U.N},{U.M},{balancing_constant(U):.12e}\n")
    if out is not sys.stdout:
        out.close()
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="cswave",
                                     description="Wavelet compressed-sensing strategies: "
                                                 "recipes, sampling, solvers, experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("recipe", help="print derived recipe parameters")
    _global_flags(sp)
    sp.add_argument("--method", choices=("gauss", "optimal", "fourier"), default="fourier")
    sp.set_defaults(fn=_cmd_recipe)

    sp = sub.add_parser("pattern", help="draw and print a sampling pattern")
    _global_flags(sp)
    sp.set_defaults(fn=_cmd_pattern)

    sp = sub.add_parser("gramian", help="write the cross-Gramian (binary) plus coherences")
    _global_flags(sp)
    sp.add_argument("--cols", type=int, default=None, help="column count M (default: N)")
    sp.set_defaults(fn=_cmd_gramian)

    sp = sub.add_parser("coherence", help="per-block local coherences as CSV")
    _global_flags(sp)
    sp.add_argument("--cols", type=int, default=None)
    sp.set_defaults(fn=_cmd_coherence)

    sp = sub.add_parser("balancing", help="balancing constant theta")
    _global_flags(sp)
    sp.add_argument("--cols", type=int, default=None)
    sp.set_defaults(fn=_cmd_balancing)

    sp = sub.add_parser("solve", help="solve a problem bundle (matrix + rhs)")
    _global_flags(sp)
    sp.add_argument("--matrix", help="CSV or .npy matrix")
    sp.add_argument("--rhs", help="CSV or .npy right-hand side")
    sp.add_argument("--decoder", choices=("bp", "wbp", "wsrlasso"), default="bp")
    sp.add_argument("--weights", default=None)
    sp.add_argument("--lam", type=float, default=None)
    sp.add_argument("--max-iters", type=int, default=10000)
    sp.set_defaults(fn=_cmd_solve)

    sp = sub.add_parser("run", help="one pipeline trial, CSV row output")
    _global_flags(sp)
    sp.add_argument("--method", choices=METHODS, default="fourier_bp")
    sp.add_argument("-K", type=int, default=10)
    sp.add_argument("--override-breakpoints", type=lambda v: [float(s) for s in v.split(",")],
                    default=None, help="comma list; replaces the default jump locations")
    sp.add_argument("--max-iters", type=int, default=10000)
    sp.set_defaults(fn=_cmd_run)

    sp = sub.add_parser("sweep", help="full (method, m, trial) grid")
    _global_flags(sp)
    sp.add_argument("--config", default=None, help="key = value file; flags override")
    sp.add_argument("--methods", default=None, help="comma list of methods")
    sp.add_argument("--m-grid", default=None, help="comma list of budgets")
    sp.add_argument("-K", type=int, default=None)
    sp.set_defaults(fn=_cmd_sweep)

    sp = sub.add_parser("diagnose", help="rip | gripl | coherence | balancing")
    _global_flags(sp)
    sp.add_argument("--kind", choices=("rip", "gripl", "coherence", "balancing"),
                    required=True)
    sp.add_argument("--matrix", default=None)
    sp.add_argument("--g-matrix", default=None)
    sp.add_argument("--s", type=int, default=2)
    sp.add_argument("--levels", default=None)
    sp.add_argument("--sparsities", default=None)
    sp.add_argument("--cols", type=int, default=None)
    sp.set_defaults(fn=_cmd_diagnose)

    sp = sub.add_parser("oracle", help="brute-force minimum-l1 on tiny instances")
    _global_flags(sp)
    sp.add_argument("--matrix", default=None)
    sp.add_argument("--rhs", default=None)
    sp.add_argument("--weights", default=None)
    sp.add_argument("--s-max", type=int, default=4)
    sp.set_defaults(fn=_cmd_oracle)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SolverDivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
