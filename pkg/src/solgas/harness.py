"""Scenario drivers tying the three tau routes together.

This module owns run configuration (a YAML file with nested sections plus
programmatic overrides), the cross-validation scenarios (crosscheck,
shielding, step-like matching), the fast invariant suite behind ``verify``,
and all machine-readable outputs.  Scenarios write delimited files with
fixed column schemas and render a matplotlib figure next to each table:

* tau tables:      x, t, method, log_tau, n_nodes, status
* profile tables:  x, re_psi, im_psi, abs_psi
* report tables:   key, value

Failure policy: scenario loops never abort on a single bad grid point; the
row is flushed with an ``error:<Type>`` status marker and the sweep
continues, so convergence studies survive isolated overflows.  Reruns with
the same configuration produce byte-identical outputs (all sampling is
deterministic and floats are printed with a fixed format).
"""
from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np
import yaml

from .elliptic import AsymptoticProfile
from .fredholm import log_tau_2d, log_tau_hankel
from .geometry import (EllipseDomain, SolitonDensity, cut_function_r,
                       quadrature_2d)
from .nsoliton import (DEFAULT_EXPONENT_BUDGET, SolitonRangeError,
                       SpectralData, condense_2d, condense_segment,
                       gram_residue_check, log_tau_n, psi_n)
from .special import elliptic_E, elliptic_K, jacobi_dn, theta3

__all__ = [
    "RunConfig",
    "load_config",
    "CrosscheckResult",
    "ShieldingResult",
    "MatchingReport",
    "VerifyResult",
    "run_crosscheck",
    "run_shielding",
    "run_matching",
    "run_verify",
]

_EXPECTED_ERRORS = (SolitonRangeError, FloatingPointError, ValueError,
                    RuntimeError, ArithmeticError)


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("SOLGAS_WORKERS", "1")))
    except ValueError:
        return 1


def _default_x_grid() -> tuple:
    return tuple(float(v) for v in np.arange(-10.0, 10.0 + 0.5, 1.0))


@dataclass(frozen=True)
class RunConfig:
    """Everything a scenario needs, with defaults matching the desk-scale
    study: ellipse (0.5, 1.5, 0.75), constant density, soliton counts
    {64, 256, 1024}.

    The scan_* quadrature orders are deliberately lighter than the
    single-point defaults: grid sweeps touch every (x, t) pair and only
    need qualitative agreement, while anchor-point comparisons use the
    full orders.
    """

    alpha1: float = 0.5
    alpha2: float = 1.5
    rho: float = 0.75
    beta_coefficients: tuple = (1.0,)
    n_list: tuple = (64, 256, 1024)
    segment_m: int = 1024
    crosscheck_n: int = 64
    hankel_nodes: int = 128
    block_radial: int = 24
    block_angular: int = 48
    scan_hankel_nodes: int = 64
    scan_block_radial: int = 12
    scan_block_angular: int = 24
    x_grid: tuple = field(default_factory=_default_x_grid)
    t_grid: tuple = (0.0, 0.5)
    match_window: tuple = (-15.0, -5.0)
    match_step: float = 0.5
    tail_window: tuple = (5.0, 15.0)
    match_tolerance: float = 5e-2
    fd_step: float = 5e-3
    exponent_budget: float = DEFAULT_EXPONENT_BUDGET
    output_dir: str = "runs"
    workers: int = field(default_factory=_default_workers)

    def __post_init__(self):
        self.domain()            # validates the ellipse triple
        if len(self.x_grid) == 0 or len(self.t_grid) == 0:
            raise ValueError("x and t grids must be nonempty")
        if self.fd_step <= 0.0:
            raise ValueError(f"fd_step must be positive, got {self.fd_step}")
        if self.match_step <= 0.0 or self.match_tolerance <= 0.0:
            raise ValueError("matching step and tolerance must be positive")
        if len(self.n_list) == 0 or any(n < 1 for n in self.n_list):
            raise ValueError(f"bad soliton counts {self.n_list}")
        if self.segment_m < 1 or self.crosscheck_n < 1:
            raise ValueError("condensation counts must be >= 1")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if not (self.match_window[0] < self.match_window[1]
                and self.tail_window[0] < self.tail_window[1]):
            raise ValueError("matching windows must be increasing intervals")

    def domain(self) -> EllipseDomain:
        return EllipseDomain(self.alpha1, self.alpha2, self.rho)

    def density(self) -> SolitonDensity:
        return SolitonDensity(self.beta_coefficients)

    def x_array(self) -> np.ndarray:
        return np.asarray(self.x_grid, dtype=float)

    def t_array(self) -> np.ndarray:
        return np.asarray(self.t_grid, dtype=float)

    def out_path(self, name: str) -> Path:
        out = Path(self.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return out / name


_CONFIG_SECTIONS = {
    "domain": {"alpha1": "alpha1", "alpha2": "alpha2", "rho": "rho"},
    "condensation": {"n_list": "n_list", "segment_m": "segment_m",
                     "crosscheck_n": "crosscheck_n"},
    "quadrature": {"hankel_nodes": "hankel_nodes",
                   "block_radial": "block_radial",
                   "block_angular": "block_angular",
                   "scan_hankel_nodes": "scan_hankel_nodes",
                   "scan_block_radial": "scan_block_radial",
                   "scan_block_angular": "scan_block_angular"},
    "matching": {"window": "match_window", "step": "match_step",
                 "tail": "tail_window", "tolerance": "match_tolerance"},
    "evaluation": {"fd_step": "fd_step",
                   "exponent_budget": "exponent_budget"},
    "output": {"directory": "output_dir"},
}


def _grid_from_spec(spec) -> tuple:
    """Accept either an explicit list or a {start, stop, step} mapping."""
    if isinstance(spec, dict):
        missing = {"start", "stop", "step"} - set(spec)
        if missing:
            raise ValueError(f"grid mapping needs start/stop/step, "
                             f"missing {sorted(missing)}")
        start, stop, step = (float(spec[k]) for k in ("start", "stop", "step"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        return tuple(float(v) for v in
                     np.arange(start, stop + 0.5 * step, step))
    return tuple(float(v) for v in spec)


def _flatten_config(raw: dict) -> dict:
    data = {}
    for section, keys in _CONFIG_SECTIONS.items():
        block = raw.get(section, {})
        if block is None:
            continue
        if not isinstance(block, dict):
            raise ValueError(f"config section {section!r} must be a mapping")
        unknown = set(block) - set(keys)
        if unknown:
            raise ValueError(
                f"unknown keys in section {section!r}: {sorted(unknown)}")
        for src, dst in keys.items():
            if src in block:
                val = block[src]
                if isinstance(val, list):
                    val = tuple(val)
                data[dst] = val
    if "beta" in raw:
        data["beta_coefficients"] = tuple(raw["beta"])
    if "workers" in raw:
        data["workers"] = int(raw["workers"])
    grid = raw.get("grid", {})
    if grid:
        if "x" in grid:
            data["x_grid"] = _grid_from_spec(grid["x"])
        if "t" in grid:
            data["t_grid"] = _grid_from_spec(grid["t"])
    known = set()
    for keys in _CONFIG_SECTIONS.values():
        known.update(keys)
    extra = set(raw) - set(_CONFIG_SECTIONS) - {"beta", "workers", "grid"}
    if extra:
        raise ValueError(f"unknown top-level config keys: {sorted(extra)}")
    return data


def load_config(path=None, overrides=None) -> RunConfig:
    """Build a RunConfig from defaults <- YAML file <- explicit overrides."""
    data = {}
    if path is not None:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ValueError(f"config file {path} must hold a mapping")
        data = _flatten_config(raw)
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})
    valid = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(data) - valid
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**data)


# ----------------------------------------------------------------------
# output helpers
# ----------------------------------------------------------------------

def _fmt(v) -> str:
    return format(float(v), ".17g")


def _write_rows(path: Path, header: str, rows) -> Path:
    lines = [header]
    lines.extend(rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def _tau_row(x, t, method, log_tau, n_nodes, status) -> str:
    lt = "nan" if log_tau is None else _fmt(log_tau)
    return f"{_fmt(x)},{_fmt(t)},{method},{lt},{int(n_nodes)},{status}"


def _profile_rows(xs, psis):
    for x, p in zip(xs, psis):
        yield (f"{_fmt(x)},{_fmt(p.real)},{_fmt(p.imag)},{_fmt(abs(p))}")


def _pool_map(fn, items, workers: int):
    """Deterministic map: worker pool for the grid, merged in input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _figure(path: Path, draw) -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig = draw(plt)
    fig.savefig(path, dpi=120, metadata={"Software": "solgas"})
    plt.close(fig)
    return path


# ----------------------------------------------------------------------
# crosscheck scenario
# ----------------------------------------------------------------------

@dataclass
class CrosscheckResult:
    rows: list
    diffs: list
    anchor_diffs: dict
    csv_path: Path
    diffs_path: Path
    figure_path: Path

    def grid_log_tau(self, method: str) -> dict:
        return {(r[0], r[1]): r[3] for r in self.rows
                if r[2] == method and r[5] == "ok"}


def _eval_tau(kind, x, t, domain, beta, spec, cfg) -> tuple:
    """One tau evaluation -> (x, t, method, log_tau, n_nodes, status)."""
    try:
        if kind == "hankel":
            ev = log_tau_hankel(x, t, domain, beta, n=cfg["hankel_n"],
                                rule=cfg["symbol_rule"],
                                exponent_budget=cfg["budget"])
            return (x, t, ev.method, ev.log_tau, ev.n_nodes, "ok")
        if kind == "block":
            ev = log_tau_2d(x, t, domain, beta, rule=cfg["block_rule"],
                            exponent_budget=cfg["budget"])
            return (x, t, ev.method, ev.log_tau, ev.n_nodes, "ok")
        if kind == "nsoliton":
            if spec is None:                      # empty gas: tau == 1
                return (x, t, f"nsoliton_{cfg['label_n']}", 0.0, 0, "ok")
            val = log_tau_n(spec, x, t, exponent_budget=cfg["budget"])
            return (x, t, f"nsoliton_{cfg['label_n']}", val, spec.n, "ok")
        raise ValueError(f"unknown evaluation kind {kind!r}")
    except _EXPECTED_ERRORS as exc:
        method = {"hankel": "hankel_halfline", "block": "block_2d",
                  "nsoliton": f"nsoliton_{cfg.get('label_n', 0)}"}[kind]
        return (x, t, method, None, 0, f"error:{type(exc).__name__}")


def _crosscheck_point(args) -> list:
    x, t, domain, beta, spec, cfg = args
    out = []
    out.append(_eval_tau("hankel", x, t, domain, beta, None, cfg))
    out.append(_eval_tau("block", x, t, domain, beta, None, cfg))
    out.append(_eval_tau("nsoliton", x, t, domain, beta, spec, cfg))
    return out


def run_crosscheck(config: RunConfig) -> CrosscheckResult:
    """log tau by all three routes over the (x, t) grid, plus anchor rows.

    Grid rows use the light scan orders and the crosscheck_n-soliton gas;
    the anchor point (0, 0) additionally gets full-order Hankel and block
    rows and the whole n_list soliton sweep, which is where the
    representation identity and condensation convergence are measured.
    Pairwise |differences| are tabulated per grid point.
    """
    domain = config.domain()
    beta = config.density()
    empty = beta.is_zero
    spec_scan = None if empty else condense_2d(domain, beta,
                                               config.crosscheck_n)
    scan_cfg = {
        "hankel_n": config.scan_hankel_nodes,
        "symbol_rule": quadrature_2d(domain, config.scan_block_radial,
                                     config.scan_block_angular),
        "block_rule": quadrature_2d(domain, config.scan_block_radial,
                                    config.scan_block_angular),
        "budget": config.exponent_budget,
        "label_n": config.crosscheck_n,
    }
    points = [(float(x), float(t), domain, beta, spec_scan, scan_cfg)
              for t in config.t_array() for x in config.x_array()]
    per_point = _pool_map(_crosscheck_point, points, config.workers)

    rows, diffs = [], []
    for (x, t, *_), triple in zip(points, per_point):
        rows.extend(triple)
        ok = {r[2]: r[3] for r in triple if r[5] == "ok"}
        names = sorted(ok)
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                diffs.append((x, t, f"{a}|{b}", abs(ok[a] - ok[b])))

    # anchor: full orders and the condensation sweep at (0, 0)
    anchor_cfg = {
        "hankel_n": config.hankel_nodes,
        "symbol_rule": None,
        "block_rule": quadrature_2d(domain, config.block_radial,
                                    config.block_angular),
        "budget": config.exponent_budget,
        "label_n": 0,
    }
    anchor_rows = [
        _eval_tau("hankel", 0.0, 0.0, domain, beta, None, anchor_cfg),
        _eval_tau("block", 0.0, 0.0, domain, beta, None, anchor_cfg),
    ]
    for n in config.n_list:
        spec_n = None if empty else condense_2d(domain, beta, int(n))
        cfg_n = dict(anchor_cfg, label_n=int(n))
        anchor_rows.append(
            _eval_tau("nsoliton", 0.0, 0.0, domain, beta, spec_n, cfg_n))
    rows.extend(anchor_rows)

    anchor_ok = {r[2]: r[3] for r in anchor_rows if r[5] == "ok"}
    anchor_diffs = {}
    if "hankel_halfline" in anchor_ok:
        href = anchor_ok["hankel_halfline"]
        for name, val in anchor_ok.items():
            if name != "hankel_halfline":
                anchor_diffs[f"{name}|hankel_halfline"] = abs(val - href)
                diffs.append((0.0, 0.0, f"{name}|hankel_halfline",
                              abs(val - href)))

    csv_path = _write_rows(
        config.out_path("tau_crosscheck.csv"),
        "x,t,method,log_tau,n_nodes,status",
        (_tau_row(*r) for r in rows))
    diffs_path = _write_rows(
        config.out_path("tau_diffs.csv"),
        "x,t,pair,abs_diff",
        (f"{_fmt(x)},{_fmt(t)},{pair},{_fmt(d)}" for x, t, pair, d in diffs))

    def draw(plt):
        ts = list(config.t_array())
        fig, axes = plt.subplots(1, len(ts), figsize=(6 * len(ts), 4.2),
                                 squeeze=False)
        for ax, t in zip(axes[0], ts):
            for method, marker in (("hankel_halfline", "o"),
                                   ("block_2d", "s"),
                                   (f"nsoliton_{config.crosscheck_n}", "^")):
                pts = sorted((r[0], r[3]) for r in rows
                             if r[1] == t and r[2] == method and r[5] == "ok")
                if pts:
                    xs, vals = zip(*pts)
                    ax.plot(xs, vals, marker=marker, ms=3.5, lw=1.0,
                            label=method)
            ax.set_title(f"log tau at t={t:g}")
            ax.set_xlabel("x")
            ax.set_ylabel("log tau")
            ax.legend(fontsize=8)
        fig.tight_layout()
        return fig

    figure_path = _figure(config.out_path("tau_crosscheck.png"), draw)
    return CrosscheckResult(rows=rows, diffs=diffs, anchor_diffs=anchor_diffs,
                            csv_path=csv_path, diffs_path=diffs_path,
                            figure_path=figure_path)


# ----------------------------------------------------------------------
# shielding scenario
# ----------------------------------------------------------------------

@dataclass
class ShieldingResult:
    sup_diffs: dict
    decreasing: bool
    profile_paths: dict
    report_path: Path
    figure_path: Path


def _psi_profile_point(args):
    x, spec, budget = args
    if spec is None:
        return (x, 0.0 + 0.0j, "ok")
    try:
        return (x, psi_n(spec, x, 0.0, exponent_budget=budget), "ok")
    except _EXPECTED_ERRORS as exc:
        return (x, complex("nan"), f"error:{type(exc).__name__}")


def run_shielding(config: RunConfig) -> ShieldingResult:
    """|psi(x, 0)| from the 2-D and the segment condensates, side by side.

    For each count n in n_list both gases are condensed with n solitons and
    evaluated over the x grid; the sup-norm of the profile difference is
    reported per count.  The segment gas is the "shielded" effective gas:
    the differences shrinking with n is the quantitative form of the
    shielding statement.
    """
    domain = config.domain()
    beta = config.density()
    empty = beta.is_zero
    xs = config.x_array()
    profiles = {}
    statuses = {}
    profile_paths = {}
    for n in config.n_list:
        n = int(n)
        for source, build in (("2d", condense_2d),
                              ("segment", condense_segment)):
            spec = None if empty else build(domain, beta, n)
            pts = [(float(x), spec, config.exponent_budget) for x in xs]
            vals = _pool_map(_psi_profile_point, pts, config.workers)
            psis = np.array([v[1] for v in vals])
            profiles[(source, n)] = psis
            statuses[(source, n)] = [v[2] for v in vals]
            path = _write_rows(
                config.out_path(f"shield_profile_{source}_{n}.csv"),
                "x,re_psi,im_psi,abs_psi",
                _profile_rows(xs, psis))
            profile_paths[(source, n)] = path

    sup_diffs = {}
    for n in config.n_list:
        n = int(n)
        d = np.abs(np.abs(profiles[("2d", n)])
                   - np.abs(profiles[("segment", n)]))
        good = np.isfinite(d)
        sup_diffs[n] = float(np.max(d[good])) if np.any(good) else math.nan

    ns = [int(n) for n in config.n_list]
    decreasing = all(sup_diffs[a] > sup_diffs[b]
                     for a, b in zip(ns, ns[1:])
                     if math.isfinite(sup_diffs[a])
                     and math.isfinite(sup_diffs[b]))

    report_rows = []
    for n in ns:
        report_rows.append(f"sup_diff_{n},{_fmt(sup_diffs[n])}")
    report_rows.append(f"decreasing,{str(decreasing).lower()}")
    for key, status_list in statuses.items():
        bad = [s for s in status_list if s != "ok"]
        if bad:
            report_rows.append(f"errors_{key[0]}_{key[1]},{len(bad)}")
    report_path = _write_rows(config.out_path("shielding_report.csv"),
                              "key,value", report_rows)

    def draw(plt):
        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
        n_big = ns[-1]
        ax1.plot(xs, np.abs(profiles[("2d", n_big)]), "-o", ms=3,
                 label=f"2-D gas, n={n_big}")
        ax1.plot(xs, np.abs(profiles[("segment", n_big)]), "-s", ms=3,
                 label=f"segment gas, n={n_big}")
        ax1.set_ylabel("|psi(x, 0)|")
        ax1.legend(fontsize=8)
        ax1.set_title("shielding: 2-D vs segment condensate")
        for n in ns:
            d = np.abs(np.abs(profiles[("2d", n)])
                       - np.abs(profiles[("segment", n)]))
            ax2.semilogy(xs, np.maximum(d, 1e-300), "-o", ms=2.5,
                         label=f"n={n}")
        ax2.set_xlabel("x")
        ax2.set_ylabel("|difference|")
        ax2.legend(fontsize=8)
        fig.tight_layout()
        return fig

    figure_path = _figure(config.out_path("shielding.png"), draw)
    return ShieldingResult(sup_diffs=sup_diffs, decreasing=decreasing,
                           profile_paths=profile_paths,
                           report_path=report_path,
                           figure_path=figure_path)


# ----------------------------------------------------------------------
# step-like matching scenario
# ----------------------------------------------------------------------

@dataclass
class MatchingReport:
    """Left-window dn match plus fitted tail decay rates.

    success means the window mismatch beat the configured tolerance;
    when it does, both fitted rates come out positive (the left-tail rate
    from the residual shrinking toward -infinity, the right-tail rate from
    |psi| decaying toward +infinity).
    """

    c_minus: float
    c_plus: float
    tail_r_squared: float
    window_mismatch: float
    x0: float
    success: bool
    residual_table: np.ndarray
    report_path: Path
    residuals_path: Path
    figure_path: Path


def _fit_line(x, y):
    """Least-squares slope/intercept plus R^2 of the fit."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def run_matching(config: RunConfig) -> MatchingReport:
    """Compare the discrete segment gas with the closed-form dn profile.

    The segment condensate with segment_m solitons is evaluated at t = 0 on
    the left window and compared against the elliptic envelope
    (a1+a2)*dn((a1+a2)(x-x0); m) with every constant computed from the
    domain; the window residual slope estimates the left matching rate.
    The right tail fits an exponential decay rate to |psi|.  A window
    beyond the exponent budget raises SolitonRangeError: widen the budget
    or shrink the window.
    """
    domain = config.domain()
    beta = config.density()
    if beta.is_zero:
        raise ValueError("matching needs a nonzero density")
    profile = AsymptoticProfile(domain, beta)
    x0 = profile.params.x0

    lo, hi = config.match_window
    n_pts = int(round((hi - lo) / config.match_step)) + 1
    xs = lo + config.match_step * np.arange(n_pts)
    spec = condense_segment(domain, beta, config.segment_m)
    vals = _pool_map(partial(_matching_point, spec=spec,
                             budget=config.exponent_budget),
                     [float(x) for x in xs], config.workers)
    abs_psi = np.array([abs(v) for v in vals])
    env = profile.envelope(xs)
    resid = np.abs(abs_psi - env)
    peak = float(np.max(env))
    mismatch = float(np.max(resid)) / peak
    success = mismatch < config.match_tolerance

    keep = resid > 1e-300
    c_minus, _, _ = _fit_line(xs[keep], np.log(resid[keep]))

    tlo, thi = config.tail_window
    n_tail = int(round((thi - tlo) / config.match_step)) + 1
    xt = tlo + config.match_step * np.arange(n_tail)
    tail_vals = _pool_map(partial(_matching_point, spec=spec,
                                  budget=config.exponent_budget),
                          [float(x) for x in xt], config.workers)
    tail_abs = np.array([abs(v) for v in tail_vals])
    keep_t = tail_abs > 1e-300
    slope, _, r2 = _fit_line(xt[keep_t], np.log(tail_abs[keep_t]))
    c_plus = -slope

    table = np.column_stack([xs, abs_psi, env, resid])
    residuals_path = _write_rows(
        config.out_path("matching_residuals.csv"),
        "x,abs_psi,envelope,residual",
        (",".join(_fmt(v) for v in row) for row in table))
    report_rows = [
        f"segment_m,{config.segment_m}",
        f"x0,{_fmt(x0)}",
        f"window_lo,{_fmt(lo)}",
        f"window_hi,{_fmt(hi)}",
        f"window_mismatch,{_fmt(mismatch)}",
        f"c_minus,{_fmt(c_minus)}",
        f"c_plus,{_fmt(c_plus)}",
        f"tail_r_squared,{_fmt(r2)}",
        f"success,{str(success).lower()}",
    ]
    report_path = _write_rows(config.out_path("matching_report.csv"),
                              "key,value", report_rows)

    def draw(plt):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))
        ax1.plot(xs, abs_psi, "o", ms=3, label=f"|psi|, m={config.segment_m}")
        xf = np.linspace(lo, hi, 400)
        ax1.plot(xf, profile.envelope(xf), "-", lw=1.2, label="dn envelope")
        ax1.set_xlabel("x")
        ax1.set_ylabel("|psi(x, 0)|")
        ax1.set_title(f"left window, mismatch {mismatch:.2e}")
        ax1.legend(fontsize=8)
        ax2.semilogy(xt[keep_t], tail_abs[keep_t], "o", ms=3, label="|psi|")
        ax2.semilogy(xt, np.exp(slope * xt + _fit_line(
            xt[keep_t], np.log(tail_abs[keep_t]))[1]), "-", lw=1.2,
            label=f"fit, rate {c_plus:.3f}, R2 {r2:.4f}")
        ax2.set_xlabel("x")
        ax2.set_ylabel("|psi(x, 0)|")
        ax2.set_title("right tail decay")
        ax2.legend(fontsize=8)
        fig.tight_layout()
        return fig

    figure_path = _figure(config.out_path("matching.png"), draw)
    return MatchingReport(c_minus=c_minus, c_plus=c_plus,
                          tail_r_squared=r2, window_mismatch=mismatch,
                          x0=x0, success=success, residual_table=table,
                          report_path=report_path,
                          residuals_path=residuals_path,
                          figure_path=figure_path)


def _matching_point(x, spec, budget):
    return psi_n(spec, x, 0.0, exponent_budget=budget)


# ----------------------------------------------------------------------
# verify: the fast invariant suite
# ----------------------------------------------------------------------

@dataclass
class VerifyCheck:
    name: str
    residual: float
    tol: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        flag = "ok" if self.passed else "FAIL"
        note = f"  ({self.note})" if self.note else ""
        return (f"[{flag:4s}] {self.name:32s} residual {self.residual:.3e}"
                f"  tol {self.tol:.1e}{note}")


@dataclass
class VerifyResult:
    checks: list
    report_path: Path

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def _check(name, tol, fn, checks):
    try:
        residual = float(fn())
        checks.append(VerifyCheck(name, residual, tol, residual <= tol))
    except Exception as exc:                      # noqa: BLE001
        checks.append(VerifyCheck(name, math.inf, tol, False,
                                  note=f"{type(exc).__name__}: {exc}"))


def run_verify(config: RunConfig) -> VerifyResult:
    """Fast invariant suite: special functions, geometry, all three tau
    routes, and the asymptotic constants, each reduced to one residual."""
    domain = config.domain()
    beta = config.density()
    checks = []

    def legendre():
        m = 0.75
        K, Kp = elliptic_K(m), elliptic_K(1.0 - m)
        E, Ep = elliptic_E(m), elliptic_E(1.0 - m)
        return abs(E * Kp + Ep * K - K * Kp - 0.5 * np.pi)

    _check("legendre_relation", 1e-13, legendre, checks)

    def theta_periodicity():
        tau = 1.25j
        worst = 0.0
        for z in (0.1, 0.37 + 0.2j, -0.6 + 0.05j):
            base = theta3(z, tau)
            worst = max(worst, abs(theta3(z + 1.0, tau) / base - 1.0))
            law = base * np.exp(-2j * np.pi * z - 1j * np.pi * tau)
            worst = max(worst, abs(theta3(z + tau, tau) / law - 1.0))
        return worst

    _check("theta_quasi_periodicity", 1e-12, theta_periodicity, checks)

    def dn_identity():
        m = 0.75
        K = elliptic_K(m)
        u = np.linspace(-3.0, 3.0, 31)
        return float(np.max(np.abs(jacobi_dn(u + K, m) * jacobi_dn(u, m)
                                   - math.sqrt(1.0 - m))))

    _check("dn_shift_identity", 1e-12, dn_identity, checks)

    def area_quadrature():
        rule = quadrature_2d(domain, 12, 24)
        return abs(rule.integrate(np.ones_like(rule.nodes, dtype=float))
                   - domain.area) / domain.area

    _check("ellipse_area_quadrature", 1e-12, area_quadrature, checks)

    def segment_mass():
        m = 4000
        spec = condense_segment(domain, beta, m)
        rule = quadrature_2d(domain, 24, 48)
        bulk = rule.integrate(np.asarray(beta(rule.nodes)) ** 2) / np.pi
        return abs(np.sum(spec.c) + bulk) / abs(bulk)

    _check("segment_mass_rule", 1e-6, segment_mass, checks)

    def one_soliton():
        z0 = 0.4 + 0.9j
        c0 = 1.7 - 0.6j
        spec = SpectralData(z=np.array([z0]), c=np.array([c0]))
        b = z0.imag
        x_peak = math.log(abs(c0) / (2.0 * b)) / (2.0 * b)
        xs = np.linspace(x_peak - 3.0, x_peak + 3.0, 41)
        worst = 0.0
        for x in xs:
            envelope = 2.0 * b / math.cosh(2.0 * b * (x - x_peak))
            worst = max(worst, abs(abs(psi_n(spec, float(x), 0.0))
                                   - envelope))
        return worst

    _check("one_soliton_envelope", 1e-10, one_soliton, checks)

    def gram():
        rng = np.random.default_rng(20240817)
        z = rng.uniform(-1, 1, 4) + 1j * rng.uniform(0.4, 1.4, 4)
        c = rng.normal(size=4) + 1j * rng.normal(size=4)
        spec = SpectralData(z=z, c=c)
        return gram_residue_check(spec, 0.3, 0.2)

    _check("gram_identity_n4", 1e-6, gram, checks)

    def kay_moses():
        spec = condense_2d(domain, beta, 8)
        x, t = 0.3, 0.1
        h = config.fd_step

        def second_diff(hh):
            vals = [log_tau_n(spec, x + k * hh, t) for k in (-1, 0, 1)]
            return (vals[0] - 2.0 * vals[1] + vals[2]) / hh ** 2

        extrap = (4.0 * second_diff(h / 2) - second_diff(h)) / 3.0
        return abs(extrap - abs(psi_n(spec, x, t)) ** 2)

    _check("kay_moses_consistency_n8", 1e-6, kay_moses, checks)

    def representation_anchor():
        ev_h = log_tau_hankel(0.0, 0.0, domain, beta,
                              n=config.scan_hankel_nodes,
                              rule=quadrature_2d(domain,
                                                 config.scan_block_radial,
                                                 config.scan_block_angular))
        ev_b = log_tau_2d(0.0, 0.0, domain, beta,
                          rule=quadrature_2d(domain,
                                             config.scan_block_radial,
                                             config.scan_block_angular))
        return abs(ev_h.log_tau - ev_b.log_tau)

    _check("hankel_vs_block_anchor", 1e-4, representation_anchor, checks)

    def positivity_spots():
        worst = 0.0
        rule = quadrature_2d(domain, config.scan_block_radial,
                             config.scan_block_angular)
        for (x, t) in ((-3.0, 0.5), (2.0, 0.0), (0.0, 0.25)):
            val = log_tau_hankel(x, t, domain, beta,
                                 n=config.scan_hankel_nodes,
                                 rule=rule).log_tau
            worst = max(worst, -min(val, 0.0))
        return worst

    _check("tau_positivity_spots", 1e-12, positivity_spots, checks)

    profile_holder = {}

    def elliptic_constants():
        profile = AsymptoticProfile(domain, beta)
        profile_holder["p"] = profile
        s = domain.alpha1 + domain.alpha2
        vals = [
            abs(profile.abel_alpha_cycle() - 1.0),
            profile.x0_residual / s,
            abs(np.real(profile.params.Delta)),
            abs(profile.params.g_infty),
            abs(profile.params.phi_infty + 0.5 * np.pi),
        ]
        return max(vals)

    _check("elliptic_constants", 1e-6, elliptic_constants, checks)

    def psi0_identity():
        profile = profile_holder.get("p") or AsymptoticProfile(domain, beta)
        xs = np.linspace(-30.0, 0.0, 61)
        return float(np.max(np.abs(profile.psi0_theta(xs)
                                   - profile.psi0_dn(xs))))

    _check("psi0_theta_vs_dn", 1e-10, psi0_identity, checks)

    def rhp_jump_spots():
        profile = profile_holder.get("p") or AsymptoticProfile(domain, beta)
        a1, a2 = domain.alpha1, domain.alpha2
        y_cut = 0.5 * (a1 + a2)
        worst = 0.0
        gp = profile.g_boundary(y_cut, "+")
        gm = profile.g_boundary(y_cut, "-")
        worst = max(worst, abs(gp + gm + 2j * y_cut))
        fp = profile.f_boundary(y_cut, "+")
        fm = profile.f_boundary(y_cut, "-")
        r = complex(np.atleast_1d(
            cut_function_r(domain, beta, y_cut, plus_side="left"))[0])
        worst = max(worst, abs(fp * fm * r - 1.0))
        up = profile.u_boundary(y_cut, "+")
        um = profile.u_boundary(y_cut, "-")
        v = up + um + 0.5           # must land on the lattice Z + tau Z
        tau_im = float(np.imag(profile.params.tau_modulus))
        v -= round(v.imag / tau_im) * profile.params.tau_modulus
        worst = max(worst, abs(v.real - round(v.real)) + abs(v.imag))
        Xp = profile.model_X_boundary(y_cut, -4.0, "+")
        Xm = profile.model_X_boundary(y_cut, -4.0, "-")
        J = np.array([[0.0, 1.0], [-1.0, 0.0]])
        worst = max(worst, float(np.max(np.abs(Xp - Xm @ J))))
        return worst

    _check("rhp_jump_spots", 1e-6, rhp_jump_spots, checks)

    rows = []
    for c in checks:
        rows.append(f"{c.name}_residual,{_fmt(c.residual)}")
        rows.append(f"{c.name}_status,{'ok' if c.passed else 'fail'}")
    report_path = _write_rows(config.out_path("verify_report.csv"),
                              "key,value", rows)
    return VerifyResult(checks=checks, report_path=report_path)
