"""Command-line front end: thresholds, curves, kernels, DE runs, simulations and the oracle suite.

Every table goes out as CSV preceded by one comment line carrying the
tool version, a hash of the effective configuration and the seed.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .channels import BEC, BSC, parse_channel
from .degree import EnsembleSpec, design_rate, parse_ensemble
from .density import LLRGrid, NotConverged, bec_it_threshold, bsc_bp_threshold, de_bms
from .exit_gexit import (
    PreconditionError,
    exit_curve_table,
    gexit_exit_sweep,
    kernel_table,
    maxwell_area_predictions,
    ml_threshold_bec,
    pml_de_bound,
)
from .maxwell import run_trial
from .peeling import residual_fractions

EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_ORACLE = 3


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# output


class Output:
    """CSV writer that prefixes the provenance comment and keeps bytes stable."""

    def __init__(self, args, command: str):
        self.args = args
        self.command = command
        self.buf = io.StringIO()

    def header(self, columns):
        self.buf.write(f"# ldpc-maxwell {__version__} command={self.command} config={config_hash(self.args)} seed={self.args.seed} units=bits\n")
        self.buf.write(",".join(columns) + "\n")

    def row(self, values):
        self.buf.write(",".join(fmt(v) for v in values) + "\n")

    def comment(self, text):
        self.buf.write(f"# {text}\n")

    def flush(self, path=None):
        text = self.buf.getvalue()
        target = path or self.args.out
        if target:
            Path(target).parent.mkdir(parents=True, exist_ok=True)
            Path(target).write_text(text)
        else:
            sys.stdout.write(text)


def fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


IGNORED_KEYS = {"out", "threads", "config", "handler", "trace_dir", "dump"}


def config_hash(args) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in IGNORED_KEYS}
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def read_config(path) -> dict[str, str]:
    """key=value lines; blank lines and # comments are skipped."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        key, eq, value = text.partition("=")
        if not eq or not key.strip():
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line.strip()!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


# ---------------------------------------------------------------------------
# argument helpers


def ensemble_arg(text):
    try:
        lam, rho = parse_ensemble(text)
        design_rate(lam, rho)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad ensemble {text!r}: {exc}") from None
    return text


def channel_arg(text):
    try:
        parse_channel(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def float_list(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def odd_bins(text):
    v = int(text)
    if v < 3 or v % 2 == 0:
        raise argparse.ArgumentTypeError("bins must be odd and >= 3")
    return v


def grid_of(args) -> LLRGrid:
    return LLRGrid(args.l_max, args.bins)


def pool_map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# commands


def cmd_thresholds(args):
    lam, rho = parse_ensemble(args.ensemble)
    out = Output(args, "thresholds")
    out.header(["quantity", "value"])
    out.row(["rate", design_rate(lam, rho)])
    if args.channel == "bec":
        it = bec_it_threshold(lam, rho)
        out.row(["eps_it", it.epsilon])
        out.row(["x_it", it.x])
        try:
            ml = ml_threshold_bec(lam, rho)
        except PreconditionError as exc:
            out.comment(f"no Maxwell jump: {exc}")
        else:
            areas = maxwell_area_predictions(lam, rho, ml.epsilon)
            out.row(["eps_ml", ml.epsilon])
            out.row(["eps_ml_balance", ml.balance_epsilon])
            out.row(["guess_area_at_eps_ml", areas.guess_area])
            out.row(["unstable_area", ml.unstable_area])
    else:
        grid = grid_of(args)
        out.row(["p_it", bsc_bp_threshold(lam, rho, grid, tol=args.tol)])
        res = pml_de_bound(lam, rho, grid, args.points, args.tol)
        out.row(["p_ml_de", res.parameter])
        out.row(["w_ml_de", res.w])
    out.flush()


def cmd_exit_curve(args):
    lam, rho = parse_ensemble(args.ensemble)
    table = exit_curve_table(lam, rho, args.points)
    out = Output(args, "exit-curve")
    out.header(["x", "w", "branch", "exit", "gexit"])
    for r in table.rows():
        out.row(r[:5])
    out.flush()


def cmd_gexit_curve(args):
    lam, rho = parse_ensemble(args.ensemble)
    table = gexit_exit_sweep(lam, rho, args.channel, args.points, grid_of(args), args.w_min, args.max_iter)
    out = Output(args, "gexit-curve")
    out.header(["x", "w", "branch", "exit", "gexit", "converged"])
    for r in table.rows():
        out.row(r)
    failed = table.converged.count(False)
    if failed:
        out.comment(f"{failed} points did not converge")
    out.flush()


def cmd_kernels(args):
    ch = parse_channel(args.channel)
    out = Output(args, "kernels")
    out.header(["l", "k_L", "k_D", "k_absL", "k_absD"])
    for r in kernel_table(ch, np.linspace(args.l_lo, args.l_hi, args.points)):
        out.row(r)
    out.flush()


def cmd_pml_bound(args):
    lam, rho = parse_ensemble(args.ensemble)
    res = pml_de_bound(lam, rho, grid_of(args), args.points, args.tol, args.max_iter)
    out = Output(args, "pml-bound")
    out.header(["x", "w", "branch", "exit", "gexit"])
    for pt in res.points:
        out.row([pt.channel.p, pt.w, "stable", pt.exit, pt.gexit])
    out.comment(f"p_ml_de={fmt(res.parameter)} w={fmt(res.w)} rate={fmt(res.rate)}")
    out.flush()
    print(f"p_ML,DE = {res.parameter:.6f}", file=sys.stderr)


def cmd_de_run(args):
    lam, rho = parse_ensemble(args.ensemble)
    grid = grid_of(args)
    kind = args.channel
    out = Output(args, "de-run")
    out.header(["p", "iterations", "residual", "error_prob"])
    failed = 0
    for val in args.params:
        ch = BSC(val) if kind == "bsc" else BEC(val)
        fp = de_bms(lam, rho, ch, grid, args.tol, args.max_iter, raise_on_fail=False)
        failed += fp.residual >= args.tol
        out.row([val, fp.iterations, fp.residual, fp.density.error_probability()])
        if args.dump:
            Path(args.dump).mkdir(parents=True, exist_ok=True)
            fp.density.save(Path(args.dump) / f"density_{kind}_{val:.6g}.bin")
    out.flush()
    if failed:
        print(f"{failed} DE runs did not converge", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def _peel_job(job):
    ensemble, n, eps, trials, seed = job
    lam, rho = parse_ensemble(ensemble)
    return residual_fractions(EnsembleSpec(lam, rho, n), eps, trials, seed)


def cmd_peel_sim(args):
    jobs = [(args.ensemble, args.n, eps, args.trials, args.seed) for eps in args.eps]
    results = pool_map(_peel_job, jobs, args.threads)
    out = Output(args, "peel-sim")
    out.header(["epsilon", "trial", "residual_fraction"])
    for eps, r in zip(args.eps, results):
        for t, frac in enumerate(r):
            out.row([eps, t, frac])
    out.flush()


def _maxwell_job(job):
    ensemble, n, eps, seed, trial = job
    lam, rho = parse_ensemble(ensemble)
    res = run_trial(EnsembleSpec(lam, rho, n), eps, seed, trial, record_trace=True)
    return res.total_guesses, res.total_resolutions, res.h_final, res.trace.peak(), res.trace.as_array()


def cmd_maxwell_sim(args):
    lam, rho = parse_ensemble(args.ensemble)
    jobs = [(args.ensemble, args.n, args.eps, args.seed, t) for t in range(args.trials)]
    results = pool_map(_maxwell_job, jobs, args.threads)
    if args.trace_dir:
        tdir = Path(args.trace_dir)
        tdir.mkdir(parents=True, exist_ok=True)
        for t, r in enumerate(results):
            tr = Output(args, "maxwell-sim")
            tr.header(["trial", "ell", "h", "guesses", "resolutions"])
            for row in r[4]:
                tr.row([t] + row.tolist())
            tr.flush(tdir / f"trace_{t:04d}.csv")
    stats = np.array([r[:4] for r in results], dtype=float) / args.n
    try:
        pred = maxwell_area_predictions(lam, rho, args.eps)
        predicted = [pred.guess_area, pred.resolution_area, pred.h_final]
    except ValueError:
        # below eps_IT peeling finishes and nothing is guessed
        predicted = [0.0, 0.0, 0.0]
    out = Output(args, "maxwell-sim")
    out.header(["statistic", "mean", "std", "predicted"])
    names = ["guesses_per_n", "resolutions_per_n", "h_final_per_n", "peak_h_per_n"]
    for k, name in enumerate(names):
        std = stats[:, k].std(ddof=1) if len(stats) > 1 else 0.0
        out.row([name, stats[:, k].mean(), std, predicted[k] if k < 3 else "nan"])
    out.flush()


def _oracle_job(job):
    from .oracle import check_code

    name, H = job
    return check_code(name, H)


def cmd_oracle_check(args):
    from .oracle import fdt_defect, gaussian_single_symbol, small_code_corpus, two_derivatives_defect

    corpus = small_code_corpus(args.count, args.corpus_seed, args.n_max)
    results = pool_map(_oracle_job, corpus, args.threads)
    out = Output(args, "oracle-check")
    out.header(["check", "channel", "position", "chain_defect", "formula_fd_gap", "exit_gap", "status"])
    failures = 0
    for rows in results:
        for r in rows:
            ok = r.passed()
            failures += not ok
            out.row([r.code, r.channel, r.position, r.decomposition_defect, r.formula_fd_gap,
                     "" if r.exit_gap is None else r.exit_gap, "PASS" if ok else "FAIL"])
    ys = np.linspace(-4.0, 4.0, 33)
    for snr in (0.1, 0.5, 1.0, 2.0, 5.0):
        g = gaussian_single_symbol(snr)
        gap = abs(g.gexit + g.mmse / 2)
        d2 = two_derivatives_defect(snr, ys)
        fd = fdt_defect(snr, ys)
        ok = max(gap, d2, fd) <= 1e-6
        failures += not ok
        out.row([f"gaussian-snr-{snr:g}", "biawgn", "", max(d2, fd), gap, "", "PASS" if ok else "FAIL"])
    out.comment(f"failures={failures}")
    out.flush()
    return EXIT_ORACLE if failures else 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> Parser:
    common = Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="top-level seed (default 0)")
    common.add_argument("--threads", type=positive_int, default=1, help="worker processes")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--config", default=None, help="key=value file supplying option defaults")

    p = Parser(prog="ldpc-maxwell", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", parser_class=Parser, required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, parents=[common])
        sp.set_defaults(handler=fn)
        return sp

    def ensemble(sp):
        sp.add_argument("--ensemble", type=ensemble_arg, required=True, help='e.g. "(x^2,x^5)" or "3,6"')

    def grid(sp, bins=1201):
        sp.add_argument("--l-max", type=float, default=30.0)
        sp.add_argument("--bins", type=odd_bins, default=bins)
        sp.add_argument("--max-iter", type=positive_int, default=2000)

    sp = add("thresholds", cmd_thresholds, "IT/ML thresholds and balance areas")
    ensemble(sp)
    sp.add_argument("--channel", choices=["bec", "bsc"], default="bec")
    sp.add_argument("--points", type=positive_int, default=200)
    sp.add_argument("--tol", type=float, default=1e-4)
    grid(sp)

    sp = add("exit-curve", cmd_exit_curve, "parametric BEC EXIT curve, both branches")
    ensemble(sp)
    sp.add_argument("--points", type=positive_int, default=200)

    sp = add("gexit-curve", cmd_gexit_curve, "EXIT and GEXIT of the DE fixed point over a noise sweep")
    ensemble(sp)
    sp.add_argument("--channel", choices=["bec", "bsc"], default="bsc")
    sp.add_argument("--points", type=positive_int, default=200)
    sp.add_argument("--w-min", type=float, default=0.02)
    grid(sp)

    sp = add("kernels", cmd_kernels, "GEXIT kernel table in the L, D, |L| and |D| domains")
    sp.add_argument("--channel", type=channel_arg, required=True, help="e.g. bsc:0.1")
    sp.add_argument("--l-lo", type=float, default=-10.0)
    sp.add_argument("--l-hi", type=float, default=10.0)
    sp.add_argument("--points", type=positive_int, default=201)

    sp = add("pml-bound", cmd_pml_bound, "DE upper bound on the BSC ML threshold")
    ensemble(sp)
    sp.add_argument("--points", type=positive_int, default=200)
    sp.add_argument("--tol", type=float, default=1e-4)
    grid(sp)

    sp = add("de-run", cmd_de_run, "quantized density evolution at given channel parameters")
    ensemble(sp)
    sp.add_argument("--channel", choices=["bec", "bsc"], default="bsc")
    sp.add_argument("--params", type=float_list, required=True, help="comma-separated p (or eps) values")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--dump", default=None, help="directory for binary density files")
    grid(sp)

    sp = add("peel-sim", cmd_peel_sim, "Monte-Carlo peeling decoder on sampled graphs")
    ensemble(sp)
    sp.add_argument("--n", type=positive_int, required=True)
    sp.add_argument("--eps", type=float_list, required=True)
    sp.add_argument("--trials", type=positive_int, default=100)

    sp = add("maxwell-sim", cmd_maxwell_sim, "Maxwell decoder traces and guess/resolution totals")
    ensemble(sp)
    sp.add_argument("--n", type=positive_int, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--trials", type=positive_int, default=10)
    sp.add_argument("--trace-dir", default=None, help="directory for per-trial trace CSVs")

    sp = add("oracle-check", cmd_oracle_check, "exact identity suite on small codes")
    sp.add_argument("--count", type=int, default=50, help="number of random codes")
    sp.add_argument("--n-max", type=int, default=10)
    sp.add_argument("--corpus-seed", type=int, default=2005)
    return p


def parse_args(argv):
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cfg = read_config(known.config)
        subs = parser._subparsers._group_actions[0].choices
        name = next((a for a in argv if a in subs), None)
        if name is None:
            raise UsageError("a subcommand is required")
        sp = subs[name]
        valid = {a.dest for a in sp._actions} - {"help", "config"}
        unknown = sorted(set(cfg) - valid)
        if unknown:
            raise UsageError(f"{known.config}: unknown keys {', '.join(unknown)}")
        # config values act as defaults; explicit flags still win
        for action in sp._actions:
            if action.dest in cfg:
                action.required = False
        sp.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"ldpc-maxwell: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code = args.handler(args)
    except (NotConverged, ArithmeticError, PreconditionError) as exc:
        print(f"ldpc-maxwell: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"ldpc-maxwell: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
