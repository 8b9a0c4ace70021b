"""Command-line front end.

Subcommands: tau, nsoliton, asymptotic, verify, shield, match.  Every
subcommand accepts ``--config FILE`` (YAML, nested sections) plus override
flags; flag > file > built-in default.  ``verify`` exits nonzero when any
invariant check fails; usage errors exit 2 (argparse).  Scenario
subcommands write their tables and figures under the output directory and
print a short summary; point/profile modes print delimited rows to stdout
and optionally dump a gnuplot-friendly two-column file.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness
from .elliptic import AsymptoticProfile
from .fredholm import log_tau_2d, log_tau_hankel
from .geometry import quadrature_2d
from .harness import RunConfig, load_config
from .nsoliton import condense_2d, condense_segment, log_tau_n, psi_n

_PROFILE_HEADER = "x,re_psi,im_psi,abs_psi"


def _parse_beta(text: str) -> tuple:
    try:
        return tuple(complex(tok) for tok in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"bad coefficient list {text!r}: {exc}") from None


def _parse_int_list(text: str) -> tuple:
    try:
        return tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(
            f"bad integer list {text!r}: {exc}") from None


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE",
                   help="YAML run configuration")
    p.add_argument("--output", metavar="DIR", dest="output_dir",
                   help="directory for tables and figures")
    p.add_argument("--workers", type=int, help="worker pool size "
                   "(default: SOLGAS_WORKERS or 1)")
    p.add_argument("--alpha1", type=float, help="lower focus height")
    p.add_argument("--alpha2", type=float, help="upper focus height")
    p.add_argument("--rho", type=float, help="ellipse thickness parameter")
    p.add_argument("--beta", type=_parse_beta, dest="beta_coefficients",
                   metavar="C0,C1,...", help="density polynomial "
                   "coefficients (complex literals accepted)")
    p.add_argument("--exponent-budget", type=float, dest="exponent_budget",
                   help="largest tolerated kernel exponent")


def _grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x", type=float, help="single evaluation point")
    p.add_argument("--x-start", type=float)
    p.add_argument("--x-stop", type=float)
    p.add_argument("--x-step", type=float)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--out", metavar="FILE", help="write rows to FILE "
                   "instead of stdout")
    p.add_argument("--gnuplot", metavar="FILE",
                   help="also dump two columns: x abs_psi")


_CONFIG_FIELD_FLAGS = ("output_dir", "workers", "alpha1", "alpha2", "rho",
                       "beta_coefficients", "exponent_budget", "n_list",
                       "segment_m", "hankel_nodes", "block_radial",
                       "block_angular", "match_window", "match_step",
                       "tail_window", "match_tolerance", "fd_step")


def _config_from_args(args) -> RunConfig:
    overrides = {}
    for key in _CONFIG_FIELD_FLAGS:
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = tuple(val) if isinstance(val, list) else val
    return load_config(args.config, overrides)


def _x_grid_from_args(args, config: RunConfig) -> np.ndarray:
    if args.x is not None:
        return np.array([args.x])
    if args.x_start is not None or args.x_stop is not None:
        if None in (args.x_start, args.x_stop, args.x_step):
            raise SystemExit("--x-start/--x-stop/--x-step go together")
        if args.x_step <= 0:
            raise SystemExit("--x-step must be positive")
        return np.arange(args.x_start, args.x_stop + 0.5 * args.x_step,
                         args.x_step)
    return config.x_array()


def _emit(lines, out_path) -> None:
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _gnuplot_dump(path, xs, values) -> None:
    with open(path, "w") as fh:
        for x, v in zip(xs, values):
            fh.write(f"{harness._fmt(x)} {harness._fmt(v)}\n")


# ----------------------------------------------------------------------
# subcommand handlers
# ----------------------------------------------------------------------

def _cmd_tau(args) -> int:
    config = _config_from_args(args)
    if args.x is None:
        result = harness.run_crosscheck(config)
        print(f"wrote {result.csv_path}")
        print(f"wrote {result.diffs_path}")
        print(f"wrote {result.figure_path}")
        for pair, d in sorted(result.anchor_diffs.items()):
            print(f"anchor (0,0) {pair}: {d:.3e}")
        return 0

    x, t = float(args.x), float(args.t)
    domain, beta = config.domain(), config.density()
    methods = (("hankel", "block", "nsoliton") if args.method == "all"
               else (args.method,))
    rows = []
    for method in methods:
        if method == "hankel":
            ev = log_tau_hankel(x, t, domain, beta, n=config.hankel_nodes,
                                exponent_budget=config.exponent_budget)
            rows.append(harness._tau_row(x, t, ev.method, ev.log_tau,
                                         ev.n_nodes, "ok"))
        elif method == "block":
            rule = quadrature_2d(domain, config.block_radial,
                                 config.block_angular)
            ev = log_tau_2d(x, t, domain, beta, rule=rule,
                            exponent_budget=config.exponent_budget)
            rows.append(harness._tau_row(x, t, ev.method, ev.log_tau,
                                         ev.n_nodes, "ok"))
        else:
            n = args.n if args.n else max(config.n_list)
            if beta.is_zero:
                rows.append(harness._tau_row(x, t, f"nsoliton_{n}", 0.0,
                                             0, "ok"))
            else:
                spec = condense_2d(domain, beta, int(n))
                val = log_tau_n(spec, x, t,
                                exponent_budget=config.exponent_budget)
                rows.append(harness._tau_row(x, t, f"nsoliton_{n}", val,
                                             spec.n, "ok"))
    _emit(["x,t,method,log_tau,n_nodes,status"] + rows, args.out)
    return 0


def _cmd_nsoliton(args) -> int:
    config = _config_from_args(args)
    domain, beta = config.domain(), config.density()
    xs = _x_grid_from_args(args, config)
    n = args.n if args.n else max(config.n_list)
    if beta.is_zero:
        psis = np.zeros(len(xs), dtype=complex)
        spec = None
    else:
        build = condense_segment if args.source == "segment" else condense_2d
        spec = build(domain, beta, int(n))
        psis = np.array([psi_n(spec, float(x), float(args.t),
                               engine=args.engine,
                               exponent_budget=config.exponent_budget)
                         for x in xs])
    if args.dump_spectral:
        if spec is None:
            raise SystemExit("nothing to dump: the density is zero")
        spec.dump(args.dump_spectral)
    _emit([_PROFILE_HEADER] + list(harness._profile_rows(xs, psis)),
          args.out)
    if args.gnuplot:
        _gnuplot_dump(args.gnuplot, xs, np.abs(psis))
    return 0


def _cmd_asymptotic(args) -> int:
    config = _config_from_args(args)
    profile = AsymptoticProfile(config.domain(), config.density())
    if args.constants:
        p = profile.params
        rows = ["key,value"]
        for key, val in (("m", p.m), ("m_prime", p.m_prime), ("K", p.K),
                         ("K_prime", p.K_prime), ("kappa", p.kappa),
                         ("Omega", p.Omega), ("Delta_im", p.Delta.imag),
                         ("g_infty", p.g_infty),
                         ("phi_infty", p.phi_infty), ("x0", p.x0)):
            rows.append(f"{key},{harness._fmt(val)}")
        _emit(rows, args.out)
        return 0
    xs = _x_grid_from_args(args, config)
    psis = profile.psi0_theta(xs)
    _emit([_PROFILE_HEADER] + list(harness._profile_rows(xs, psis)),
          args.out)
    if args.gnuplot:
        _gnuplot_dump(args.gnuplot, xs, np.abs(psis))
    return 0


def _cmd_verify(args) -> int:
    config = _config_from_args(args)
    result = harness.run_verify(config)
    for check in result.checks:
        print(check.line())
    print(f"wrote {result.report_path}")
    if result.ok:
        print(f"verify: all {len(result.checks)} checks passed")
        return 0
    failed = sum(not c.passed for c in result.checks)
    print(f"verify: {failed} of {len(result.checks)} checks FAILED")
    return 1


def _cmd_shield(args) -> int:
    config = _config_from_args(args)
    result = harness.run_shielding(config)
    for n, d in sorted(result.sup_diffs.items()):
        print(f"n={n}: sup |psi_2d - psi_segment| = {d:.6e}")
    print(f"decreasing: {result.decreasing}")
    print(f"wrote {result.report_path}")
    print(f"wrote {result.figure_path}")
    return 0


def _cmd_match(args) -> int:
    config = _config_from_args(args)
    report = harness.run_matching(config)
    print(f"window {config.match_window}: relative mismatch "
          f"{report.window_mismatch:.4e} "
          f"({'ok' if report.success else 'above tolerance'})")
    print(f"x0 = {report.x0:.12f}")
    print(f"left-tail rate c- = {report.c_minus:.4f}")
    print(f"right-tail rate c+ = {report.c_plus:.4f} "
          f"(R^2 = {report.tail_r_squared:.6f})")
    print(f"wrote {report.report_path}")
    print(f"wrote {report.residuals_path}")
    print(f"wrote {report.figure_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="solgas",
        description="soliton-gas tau functions: exact N-soliton, Fredholm "
                    "determinant, and elliptic asymptotic routes")
    sub = parser.add_subparsers(dest="command", required=True)

    p_tau = sub.add_parser(
        "tau", help="log tau at a point (--x) or the full grid crosscheck")
    _common_flags(p_tau)
    p_tau.add_argument("--x", type=float, help="evaluation point "
                       "(omit to run the grid crosscheck scenario)")
    p_tau.add_argument("--t", type=float, default=0.0)
    p_tau.add_argument("--method", default="all",
                       choices=("all", "hankel", "block", "nsoliton"))
    p_tau.add_argument("--n", type=int, help="soliton count for the "
                       "nsoliton method (default: largest configured)")
    p_tau.add_argument("--hankel-nodes", type=int, dest="hankel_nodes")
    p_tau.add_argument("--block-radial", type=int, dest="block_radial")
    p_tau.add_argument("--block-angular", type=int, dest="block_angular")
    p_tau.add_argument("--out", metavar="FILE")
    p_tau.set_defaults(handler=_cmd_tau)

    p_nsol = sub.add_parser(
        "nsoliton", help="psi_N profile from a condensed gas")
    _common_flags(p_nsol)
    _grid_flags(p_nsol)
    p_nsol.add_argument("--n", type=int, help="soliton count "
                        "(default: largest configured)")
    p_nsol.add_argument("--source", default="2d",
                        choices=("2d", "segment"))
    p_nsol.add_argument("--engine", default="auto",
                        choices=("auto", "double", "dd"))
    p_nsol.add_argument("--dump-spectral", metavar="FILE",
                        help="save the (z_j, c_j) table")
    p_nsol.set_defaults(handler=_cmd_nsoliton)

    p_asym = sub.add_parser(
        "asymptotic", help="closed-form left-asymptotic profile psi0")
    _common_flags(p_asym)
    _grid_flags(p_asym)
    p_asym.add_argument("--constants", action="store_true",
                        help="print the derived constants instead")
    p_asym.set_defaults(handler=_cmd_asymptotic)

    p_verify = sub.add_parser(
        "verify", help="run the invariant suite; exit nonzero on failure")
    _common_flags(p_verify)
    p_verify.set_defaults(handler=_cmd_verify)

    p_shield = sub.add_parser(
        "shield", help="2-D vs segment condensate profiles")
    _common_flags(p_shield)
    p_shield.add_argument("--n-list", type=_parse_int_list, dest="n_list",
                          metavar="N1,N2,...")
    p_shield.add_argument("--segment-m", type=int, dest="segment_m")
    p_shield.set_defaults(handler=_cmd_shield)

    p_match = sub.add_parser(
        "match", help="dn-envelope matching and tail decay fits")
    _common_flags(p_match)
    p_match.add_argument("--segment-m", type=int, dest="segment_m")
    p_match.add_argument("--window", type=float, nargs=2,
                         dest="match_window", metavar=("LO", "HI"))
    p_match.add_argument("--step", type=float, dest="match_step")
    p_match.add_argument("--tail", type=float, nargs=2, dest="tail_window",
                         metavar=("LO", "HI"))
    p_match.add_argument("--tolerance", type=float, dest="match_tolerance")
    p_match.set_defaults(handler=_cmd_match)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError, RuntimeError, FloatingPointError) as exc:
        print(f"solgas: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
