"""Command-line front end.

Exit codes: 0 success, 1 configuration problems (bad flags, bad config file,
bad CSV header), 2 runtime failures (overflow, non-convergence treated as
fatal, I/O errors mid-run).
"""

from __future__ import annotations

import argparse
import sys
import traceback

from . import harness, pruning
from .diagnostics import classify_stability, fit_growth_rate
from .errors import ConfigError, JacspecError
from .randomness import derive_stream, sample_gaussians


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _add_run_flags(p, approx=False):
    p.add_argument("--config", required=True, help="TOML experiment config")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", default=None, help="CSV output path (default: config out_path)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads; JACSPEC_THREADS overrides this")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")
    if not approx:
        p.add_argument("--max-tasks", type=int, default=None, help=argparse.SUPPRESS)


def build_parser() -> _Parser:
    parser = _Parser(prog="jacspec", description="Jacobian spectra of random ReLU nets")
    sub = parser.add_subparsers(dest="command", metavar="command")

    for name, doc in (
        ("sweep", "depth sweep over (sigma_w2, L, seed)"),
        ("prune-sweep", "pruned-network sweep over (entry, L, seed)"),
        ("corr-sweep", "correlated-ensemble sweep over (eta, L, seed)"),
    ):
        _add_run_flags(sub.add_parser(name, help=doc))

    _add_run_flags(sub.add_parser("verify-approx", help="indicator independence battery"), approx=True)

    p = sub.add_parser("check-conditions", help="Monte Carlo stability condition estimates")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("fit", help="growth-rate fits and stability verdicts from a sweep CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--lmin", type=int, default=20)
    p.add_argument("--lmax", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=0.02)

    p = sub.add_parser("scale-factor", help="pruning rescale factors for one setting")
    p.add_argument("--method", required=True,
                   choices=["random", "magnitude_threshold", "magnitude_top_r"])
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--retention", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)

    return parser


_RUNNERS = {
    "sweep": harness.run_depth_sweep,
    "prune-sweep": harness.run_pruning_sweep,
    "corr-sweep": harness.run_correlation_sweep,
}


def _cmd_run_sweep(args) -> int:
    config = harness.load_config(args.config)
    out = args.out if args.out is not None else config.out_path
    result = _RUNNERS[args.command](
        config, master_seed=args.seed, threads=args.threads, out_path=out,
        max_tasks=args.max_tasks, quiet=args.quiet,
    )
    if args.max_tasks is not None and not result.manifest:
        if not args.quiet:
            print(f"stopped after {len(result.rows)} tasks; partial file kept", file=sys.stderr)
        return 0
    if out is None:
        sys.stdout.write(result.csv_body)
    elif not args.quiet:
        print(f"wrote {result.manifest['rows']} rows to {out}", file=sys.stderr)
    return 0


def _cmd_verify_approx(args) -> int:
    config = harness.load_config(args.config)
    out = args.out if args.out is not None else config.out_path
    report = harness.run_approx_verification(
        config, master_seed=args.seed, threads=args.threads, out_path=out, quiet=args.quiet,
    )
    for line in report.summary_lines():
        print(line)
    return 0


def _cmd_check_conditions(args) -> int:
    config = harness.load_config(args.config)
    for label, rep in harness.run_condition_check(config, master_seed=args.seed):
        print(f"[{label}] n={rep.n} mc_samples={rep.mc_samples} beta_n={rep.beta_n:.6g}")
        print(f"  (i)   (ln n)^4/n * beta_n^2 = {rep.cond1:.6g}")
        print(f"  (ii)  row second-moment deviation: pooled {rep.cond2_pooled:.6g}"
              f" (stderr {rep.cond2_pooled_stderr:.3g}), max-row {rep.cond2_max_row:.6g}")
        print(f"  (iii) n * mean masked entry: pooled {rep.cond3_pooled:.6g}"
              f" (stderr {rep.cond3_pooled_stderr:.3g}), max-entry {rep.cond3_max_entry:.6g}")
    return 0


def _fmt_group_field(v) -> str:
    return "-" if v is None else str(v)


def _cmd_fit(args) -> int:
    try:
        with open(args.csv) as fh:
            rows = harness.parse_csv(fh.read())
    except FileNotFoundError:
        raise ConfigError(f"CSV not found: {args.csv}") from None
    if not rows:
        raise ConfigError(f"{args.csv} holds no data rows")
    groups = {}
    for r in rows:
        key = (r.experiment_id, r.kind, r.sigma_w2, r.method, r.sparsity, r.scaling_mode, r.eta, r.k)
        groups.setdefault(key, {}).setdefault(r.L, []).append(r.log_jac_norm)
    for key in sorted(groups, key=lambda k: tuple(str(x) for x in k)):
        exp_id, kind, s2, method, sparsity, scaling, eta, k = key
        by_depth = groups[key]
        points = [(L, sum(vals) / len(vals)) for L, vals in sorted(by_depth.items())]
        label = (f"{exp_id} kind={kind} sigma_w2={s2} method={method}"
                 f" sparsity={_fmt_group_field(sparsity)} scaling={scaling}"
                 f" eta={_fmt_group_field(eta)} k={k}")
        try:
            fit = fit_growth_rate(points, lmin=args.lmin, lmax=args.lmax)
        except ConfigError as exc:
            print(f"{label} : fit failed ({exc})")
            continue
        verdict = classify_stability(fit, epsilon=args.epsilon)
        print(f"{label} : slope={fit.slope:+.6f} intercept={fit.intercept:.4f}"
              f" rms={fit.residual_rms:.4f} points={fit.n_points}"
              f" window=[{fit.lmin},{fit.lmax}] verdict={verdict.label}")
    return 0


def _cmd_scale_factor(args) -> int:
    if args.method == "random":
        if args.s is None:
            raise ConfigError("--method random needs --s")
        if not 0.0 <= args.s < 1.0:
            raise ConfigError(f"--s must be in [0, 1), got {args.s}")
        print(repr(1.0 / (1.0 - args.s) ** 0.5))
        return 0
    if args.n is None:
        raise ConfigError(f"--method {args.method} needs --n to draw a weight matrix")
    n = args.n
    if args.method == "magnitude_top_r":
        r = args.r
        if args.retention is not None:
            if r is not None:
                raise ConfigError("give --r or --retention, not both")
            r = max(1, min(n * n, round(args.retention * n * n)))
        if r is None:
            raise ConfigError("--method magnitude_top_r needs --r or --retention")
    elif args.t is None:
        raise ConfigError("--method magnitude_threshold needs --t")
    stream = derive_stream(args.seed, "scale-factor", n)
    w = sample_gaussians(stream, n * n, 2.0 / n).reshape(n, n)
    if args.method == "magnitude_threshold":
        mask = pruning.magnitude_mask_threshold(w, n, args.t, "none")
    else:
        mask = pruning.magnitude_mask_top_r(w, n, r, "none")
    rep = pruning.scale_report(w, mask, n)
    print(f"method={rep.method} n={n} t={mask.t!r} kept={mask.kept_count}"
          f" kept_fraction={mask.kept_count / (n * n)!r}")
    print(f"analytic_scale={rep.analytic!r}")
    print(f"calibrated_scale={rep.calibrated!r}")
    print(f"ratio_analytic_over_calibrated={rep.ratio!r}")
    print(f"second_moment_at_analytic={rep.second_moment_stat!r}")
    for w_line in rep.warnings:
        print(f"warning: {w_line}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            print("error: a command is required", file=sys.stderr)
            return 1
        if args.command in _RUNNERS:
            return _cmd_run_sweep(args)
        if args.command == "verify-approx":
            return _cmd_verify_approx(args)
        if args.command == "check-conditions":
            return _cmd_check_conditions(args)
        if args.command == "fit":
            return _cmd_fit(args)
        return _cmd_scale_factor(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except JacspecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 2
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
