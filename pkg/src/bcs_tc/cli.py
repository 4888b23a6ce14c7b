"""Command-line front end: ``bcs-tc <subcommand> [--config FILE] [--out FILE]``.

Configuration is INI-style text with four optional sections.  Keys given
before any section header are looked up by name.

=============  ==============  ==========================================
section        key             default
=============  ==============  ==========================================
potential      kind            square_well (gaussian, exponential,
                               tabulated, zero)
potential      depth           1.0
potential      length          1.0 (radius, width or range)
potential      file            (two-column table, for ``tabulated``)
grid           n               160 radial nodes
grid           order           16 (Gauss panel order, radial and momentum)
grid           r_max           support radius of V
grid           p_max           30
grid           p_panel         1.0
grid           window          0.5 (Fermi window half-width / μ)
grid           q_max           60 (momentum-space kernels)
grid           q_panel         0.5
tolerances     eig_tol         1e-9
tolerances     log_tol         1e-12
tolerances     gap_tol         1e-8
tolerances     fit_tol         1e-6
run            mu              0.1
run            T               0.01
run            mu_list         1e-2, 1e-3, 1e-4 (strictly decreasing)
run            t_ratio         0.1 (T = t_ratio·μ for mmu and diagnose)
run            t_list          (absolute temperatures for ``gap``)
run            t_factors       0.6, 0.8, 0.9, 0.95, 1.05, 1.1, 1.25
                               (multiples of T_c when t_list is unset)
run            delta0          0.1·μ
run            method          position (or momentum)
run            mc_samples      20000
=============  ==============  ==========================================

Every CSV starts with ``#`` manifest lines (version, subcommand, config
hash, tolerances, grid sizes, seed, wall time), then a header row.  Floats
are written with 17 significant digits.  Exit status: 0 on success, 1 if
any row failed (the row is still written, with its ``error`` column
filled), 2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .critical_temp import (
    TARGET_CONSTANT,
    decomposition_residual,
    hs_norm_a,
    lemma2_diagnostic,
    m_mu,
    m_mu_asymptotic,
    sweep,
    tc_asymptotic,
    tc_solve,
)
from .gap_equation import transition_scan
from .potentials import Potential, load_tabulated, validate_assumptions
from .radial_ops import GridSpec, a_kernel_monte_carlo, a_kernel_reduced
from .scattering import appendix_identity_check, scattering_length_bs, scattering_length_ode

__all__ = ["ConfigError", "RunConfig", "parse_config", "run", "main", "SUBCOMMANDS"]

SUBCOMMANDS = ("scatter", "tc", "mmu", "sweep", "gap", "diagnose", "validate")


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


@dataclass(frozen=True)
class RunConfig:
    kind: str = "square_well"
    depth: float = 1.0
    length: float = 1.0
    file: str | None = None
    n: int = 160
    order: int = 16
    r_max: float | None = None
    p_max: float = 30.0
    p_panel: float = 1.0
    window: float = 0.5
    q_max: float = 60.0
    q_panel: float = 0.5
    eig_tol: float = 1e-9
    log_tol: float = 1e-12
    gap_tol: float = 1e-8
    fit_tol: float = 1e-6
    mu: float = 0.1
    T: float = 0.01
    mu_list: tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    t_ratio: float = 0.1
    t_list: tuple[float, ...] | None = None
    t_factors: tuple[float, ...] = (0.6, 0.8, 0.9, 0.95, 1.05, 1.1, 1.25)
    delta0: float | None = None
    method: str = "position"
    mc_samples: int = 20000

    def grids(self) -> GridSpec:
        return GridSpec(n_r=self.n, r_order=self.order, r_max=self.r_max, p_max=self.p_max,
                        p_panel=self.p_panel, p_order=self.order, window=self.window,
                        q_max=self.q_max, q_panel=self.q_panel)

    def potential(self) -> Potential:
        if self.kind == "square_well":
            return Potential.square_well(self.depth, self.length)
        if self.kind == "gaussian":
            return Potential.gaussian(self.depth, self.length)
        if self.kind == "exponential":
            return Potential.exponential(self.depth, self.length)
        if self.kind == "zero":
            return Potential.zero()
        return load_tabulated(self.file)

    def digest(self) -> str:
        text = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


_SECTIONS = {
    "potential": ("kind", "depth", "length", "file"),
    "grid": ("n", "order", "r_max", "p_max", "p_panel", "window", "q_max", "q_panel"),
    "tolerances": ("eig_tol", "log_tol", "gap_tol", "fit_tol"),
    "run": ("mu", "T", "mu_list", "t_ratio", "t_list", "t_factors", "delta0", "method", "mc_samples"),
}
_TOP = "__top__"
_INTS = {"n", "order", "mc_samples"}
_LISTS = {"mu_list", "t_list", "t_factors"}
_STRINGS = {"kind", "file", "method"}
_POSITIVE = {"depth", "length", "n", "order", "r_max", "p_max", "p_panel", "window", "q_max", "q_panel",
             "eig_tol", "log_tol", "gap_tol", "fit_tol", "mu", "T", "t_ratio", "mc_samples"}


def _convert(key: str, raw: str):
    if key in _STRINGS:
        return raw
    try:
        if key in _LISTS:
            vals = tuple(float(x) for x in raw.replace(",", " ").split())
            if not vals:
                raise ValueError("empty list")
            return vals
        if key in _INTS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})") from None


def _validate(cfg: RunConfig) -> RunConfig:
    for key in _POSITIVE:
        val = getattr(cfg, key)
        if val is not None and not (math.isfinite(val) and val > 0):
            raise ConfigError(f"{key} must be positive and finite, got {val}")
    if cfg.kind not in ("square_well", "gaussian", "exponential", "tabulated", "zero"):
        raise ConfigError(f"kind: unknown potential kind {cfg.kind!r}")
    if cfg.kind == "tabulated" and not cfg.file:
        raise ConfigError("file: required for kind = tabulated")
    if cfg.method not in ("position", "momentum"):
        raise ConfigError(f"method: must be position or momentum, got {cfg.method!r}")
    if cfg.window >= 1:
        raise ConfigError("window must be below 1")
    if cfg.n < cfg.order:
        raise ConfigError(f"n must be at least order ({cfg.order})")
    if cfg.mc_samples < 2:
        raise ConfigError("mc_samples must be at least 2")
    for key in ("mu_list", "t_list", "t_factors"):
        vals = getattr(cfg, key)
        if vals is not None and any(not (math.isfinite(v) and v > 0) for v in vals):
            raise ConfigError(f"{key}: all entries must be positive")
    if any(b >= a for a, b in zip(cfg.mu_list, cfg.mu_list[1:])):
        raise ConfigError("mu_list must be strictly decreasing")
    if cfg.delta0 is not None and not math.isfinite(cfg.delta0):
        raise ConfigError("delta0 must be finite")
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse INI-style configuration text into a validated :class:`RunConfig`.

    Keys before the first section header may come from any section.
    Syntax errors carry the offending line number; unknown sections or
    keys and out-of-range values raise :class:`ConfigError` naming the key.
    """
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",),
        strict=True, empty_lines_in_values=False,
    )
    parser.optionxform = str
    lines = text.splitlines()

    def at(lineno: int) -> str:
        # the implicit header shifts every line number by one
        n = lineno - 1
        shown = lines[n - 1].strip() if 0 < n <= len(lines) else ""
        return f"line {n}: {shown!r}"

    try:
        parser.read_string(f"[{_TOP}]\n" + text)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"{at(exc.lineno)}: duplicate section [{exc.section}]") from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{at(exc.lineno)}: duplicate key {exc.option!r}") from None
    except configparser.ParsingError as exc:
        raise ConfigError(f"{at(exc.errors[0][0])}: expected 'key = value' or '[section]'") from None
    except configparser.Error as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    owner = {key: sec for sec, keys in _SECTIONS.items() for key in keys}
    values = {}
    for section in parser.sections():
        if section != _TOP and section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in owner or (section != _TOP and owner[key] != section):
                raise ConfigError(f"unknown key {key!r}" + ("" if section == _TOP else f" in [{section}]"))
            if key in values:
                raise ConfigError(f"{key}: given twice")
            if raw is None or raw.strip() == "":
                raise ConfigError(f"{key}: missing value")
            values[key] = _convert(key, raw.strip())
    return _validate(RunConfig(**values))


# ---------------------------------------------------------------------------
# subcommands: each returns (header, rows, extra manifest lines)
# ---------------------------------------------------------------------------
def _do_scatter(cfg: RunConfig, pot: Potential, grids: GridSpec, threads: int, seed: int):
    grid = grids.radial(pot)
    row = {"kind": pot.kind, "depth": pot.depth, "length": pot.length}
    err = []
    try:
        bs = scattering_length_bs(pot, grid)
        row.update(a_bs=bs.a, bs_error=bs.error_estimate)
    except Exception as exc:
        err.append(f"bs: {type(exc).__name__}: {exc}")
    try:
        ode = scattering_length_ode(pot, fit_tol=cfg.fit_tol)
        row.update(a_ode=ode.a, ode_error=ode.error_estimate)
    except Exception as exc:
        err.append(f"ode: {type(exc).__name__}: {exc}")
    if "a_bs" in row and "a_ode" in row:
        row["abs_gap"] = abs(row["a_bs"] - row["a_ode"])
    row["error"] = "; ".join(err)
    header = ["kind", "depth", "length", "a_bs", "a_ode", "abs_gap", "bs_error", "ode_error", "error"]
    return header, [row], [f"radial_nodes: {grid.n}"]


def _do_tc(cfg, pot, grids, threads, seed):
    grid = grids.radial(pot)
    row = {"mu": cfg.mu}
    try:
        res = tc_solve(pot, cfg.mu, grids, eig_tol=cfg.eig_tol, log_tol=cfg.log_tol, grid=grid, method=cfg.method)
        row.update(tc=res.tc, bracket_lo=res.bracket[0], bracket_hi=res.bracket[1],
                   eig_residual=res.eig_residual, iterations=res.iterations, upper_bound=res.upper_bound_used)
        a = scattering_length_bs(pot, grid).a
        row["a"] = a
        if a < 0:
            row["asymptotic_tc"] = tc_asymptotic(cfg.mu, a)
        row["error"] = ""
    except Exception as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    header = ["mu", "tc", "bracket_lo", "bracket_hi", "eig_residual", "iterations", "upper_bound", "a",
              "asymptotic_tc", "error"]
    return header, [row], [f"radial_nodes: {grid.n}"]


def _do_mmu(cfg, pot, grids, threads, seed):
    rows = []
    for mu in cfg.mu_list:
        T = cfg.t_ratio * mu
        row = {"mu": mu, "T": T}
        try:
            val = m_mu(T, mu, grids)
            row.update(m=val.value, m_asymptotic=m_mu_asymptotic(T, mu),
                       normalised_deviation=val.value * 2 * math.pi**2 / math.sqrt(mu)
                       - (math.log(mu / T) - TARGET_CONSTANT),
                       quadrature_error=val.quadrature_error, error="")
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    header = ["mu", "T", "m", "m_asymptotic", "normalised_deviation", "quadrature_error", "error"]
    return header, rows, []


def _do_sweep(cfg, pot, grids, threads, seed):
    out = sweep(pot, cfg.mu_list, grids, threads=threads)
    header = ["mu", "tc", "a", "m_at_tc", "m_limit", "asymptotic_tc", "deviation", "eig_residual", "error"]
    rows = [{k: getattr(r, k) for k in header} for r in out]
    return header, rows, [f"radial_nodes: {grids.radial(pot).n}"]


def _do_gap(cfg, pot, grids, threads, seed):
    extra = []
    if cfg.t_list is not None:
        temps = list(cfg.t_list)
    else:
        res = tc_solve(pot, cfg.mu, grids, eig_tol=cfg.eig_tol, log_tol=cfg.log_tol)
        if not res.tc > 0:
            raise RuntimeError("tc_solve returned 0; give t_list explicitly")
        temps = [f * res.tc for f in cfg.t_factors]
        extra.append(f"tc_solve: {res.tc:.16e}")
    rows_raw = transition_scan(pot, cfg.mu, temps, grids, delta0=cfg.delta0, threads=threads, tol=cfg.gap_tol)
    header = ["T", "max_delta", "residual", "iterations", "classification", "error"]
    rows = [{k: getattr(r, k) for k in header} for r in rows_raw]
    extra.append(f"momentum_nodes: {grids.momentum_partner(cfg.mu, min(temps)).n}")
    return header, rows, extra


def _do_diagnose(cfg, pot, grids, threads, seed):
    grid = grids.radial(pot)
    rng = np.random.default_rng(seed)
    rows = []
    for mu in cfg.mu_list:
        T = cfg.t_ratio * mu
        row = {"mu": mu, "T": T}
        try:
            l1 = hs_norm_a(pot, T, mu, grids, grid)
            l2 = lemma2_diagnostic(pot, T, mu, grids, grid)
            pgrid = grids.momentum(mu, T, grid.r_max)
            r1, r2 = 0.3 * grid.r_max, 0.7 * grid.r_max
            mc, se = a_kernel_monte_carlo(r1, r2, pgrid, cfg.mc_samples, rng)
            row.update(m=l1.m, hs_norm_a=l1.value, lemma1_ratio=l1.ratio, lemma2_value=l2.value,
                       lemma2_ratio=l2.ratio,
                       decomposition_residual=decomposition_residual(pot, T, mu, grids, grid),
                       a_kernel=a_kernel_reduced(r1, r2, pgrid), a_kernel_mc=mc, a_kernel_mc_stderr=se, error="")
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    header = ["mu", "T", "m", "hs_norm_a", "lemma1_ratio", "lemma2_value", "lemma2_ratio",
              "decomposition_residual", "a_kernel", "a_kernel_mc", "a_kernel_mc_stderr", "error"]
    return header, rows, [f"radial_nodes: {grid.n}", f"mc_samples: {cfg.mc_samples}"]


def _do_validate(cfg, pot, grids, threads, seed):
    grid = grids.radial(pot)
    row = {"kind": pot.kind}
    try:
        rep = validate_assumptions(pot, grid)
        row.update(l1=rep.moments[0], weighted_l1=rep.moments[1], l32=rep.moments[2], **{"lambda": rep.lambda_},
                   spectrum_ok=rep.spectrum_ok, a=rep.scattering_length, d_constant=rep.d_constant)
        if rep.spectrum_ok and not pot.is_zero:
            row["identity_gap"] = appendix_identity_check(pot)
        row["error"] = "" if rep.spectrum_ok else "spectral assumption fails: the potential binds"
    except Exception as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    header = ["kind", "l1", "weighted_l1", "l32", "lambda", "spectrum_ok", "a", "d_constant", "identity_gap", "error"]
    return header, [row], [f"radial_nodes: {grid.n}"]


_HANDLERS = {
    "scatter": _do_scatter,
    "tc": _do_tc,
    "mmu": _do_mmu,
    "sweep": _do_sweep,
    "gap": _do_gap,
    "diagnose": _do_diagnose,
    "validate": _do_validate,
}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".16e")
    return str(value)


@dataclass
class RunOutcome:
    text: str
    failures: int
    manifest: list[str] = field(default_factory=list)


def run(subcommand: str, cfg: RunConfig, threads: int = 1, seed: int = 0, timing: bool = True) -> RunOutcome:
    """Execute one subcommand and render its CSV (manifest preamble included)."""
    if subcommand not in _HANDLERS:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    t0 = time.perf_counter()
    pot = cfg.potential()
    grids = cfg.grids()
    header, rows, extra = _HANDLERS[subcommand](cfg, pot, grids, threads, seed)
    wall = time.perf_counter() - t0
    manifest = [
        f"bcs_tc {__version__} {subcommand}",
        f"config_sha256: {cfg.digest()}",
        "config: " + json.dumps(asdict(cfg), sort_keys=True, separators=(",", ":")),
        f"tolerances: eig_tol={cfg.eig_tol!r} log_tol={cfg.log_tol!r} gap_tol={cfg.gap_tol!r} fit_tol={cfg.fit_tol!r}",
        f"grid: n={cfg.n} order={cfg.order} r_max={cfg.r_max!r} p_max={cfg.p_max!r} p_panel={cfg.p_panel!r} "
        f"window={cfg.window!r} q_max={cfg.q_max!r} q_panel={cfg.q_panel!r}",
        *extra,
        f"seed: {seed}",
    ]
    if timing:
        manifest.append(f"wall_time_s: {wall:.3f}")
    buf = io.StringIO()
    for line in manifest:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row.get(k)) for k in header])
    failures = sum(1 for row in rows if row.get("error"))
    return RunOutcome(buf.getvalue(), failures, manifest)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bcs-tc", description="Low-density BCS critical temperature toolkit.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS, help="what to compute")
    ap.add_argument("--config", type=Path, help="INI-style configuration file")
    ap.add_argument("--out", type=Path, help="CSV output path (default: stdout)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads for sweeps and scans")
    ap.add_argument("--seed", type=int, default=0, help="seed for the Monte-Carlo kernel cross-check")
    ap.add_argument("--no-timing", action="store_true", help="omit the wall-time manifest line")
    return ap


def main(argv=None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    if args.threads < 1:
        ap.error("--threads must be at least 1")
    if not 0 <= args.seed < 2**64:
        ap.error("--seed must be an unsigned 64-bit integer")
    try:
        text = args.config.read_text() if args.config else ""
    except OSError as exc:
        print(f"bcs-tc: cannot read config {args.config}: {exc.strerror}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
        if cfg.file and not Path(cfg.file).is_absolute() and args.config:
            cfg = replace(cfg, file=str(args.config.parent / cfg.file))
    except ConfigError as exc:
        where = f"{args.config}: " if args.config else ""
        print(f"bcs-tc: {where}{exc}", file=sys.stderr)
        return 2
    try:
        outcome = run(args.subcommand, cfg, threads=args.threads, seed=args.seed, timing=not args.no_timing)
    except Exception as exc:
        print(f"bcs-tc {args.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.out:
        try:
            args.out.write_text(outcome.text)
        except OSError as exc:
            print(f"bcs-tc: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(outcome.text)
    if outcome.failures:
        print(f"bcs-tc {args.subcommand}: {outcome.failures} row(s) failed", file=sys.stderr)
        return 1
    return 0
