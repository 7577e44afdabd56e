"""Command-line front end: single runs, convergence sweeps, CSV comparison.

Configuration is a flat ``key = value`` text file; command-line flags
override file values.  The default output root comes from ``HWK_OUTPUT_DIR``.
Exit codes: 0 success, 1 comparison mismatch, 2 configuration error,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .advect import SCHEMES, SchemeConfig
from .grid import ConfigurationError, write_csv, write_snapshot
from .models import (BeamSetup, DiocotronSetup, Transport1DSetup,
                     run_experiment, save_run, transport_errors)

EXIT_OK = 0
EXIT_DIFFERS = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

EXPERIMENTS = ("transport1d", "beam", "diocotron", "convergence")
PROFILES = ("sine", "step", "composite")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: str = "transport1d"
    scheme: str = "sl-hweno5"
    profile: str = "sine"
    n: int = 200
    ny: int | None = None
    ns: tuple[int, ...] = (200, 400, 800)
    cfl: float = 2.5
    cfl_fd: float = 0.85
    t_end: float | None = None
    dt: float | None = None
    eps: float = 1e-6
    snapshots: tuple[float, ...] | None = None
    out: str | None = None
    tag: str | None = None

    def validate(self) -> "RunConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}")
        for name in ("n",):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.ny is not None and self.ny <= 0:
            raise ConfigError("ny must be positive")
        if any(n <= 0 for n in self.ns):
            raise ConfigError("every sweep resolution must be positive")
        if self.cfl <= 0 or self.cfl_fd <= 0:
            raise ConfigError("CFL numbers must be positive")
        if self.t_end is not None and self.t_end <= 0:
            raise ConfigError("t_end must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.eps <= 0:
            raise ConfigError("eps must be positive")
        return self

    def output_dir(self) -> str:
        return self.out or os.environ.get("HWK_OUTPUT_DIR", "hwk_out")


_INT_KEYS = {"n", "ny"}
_FLOAT_KEYS = {"cfl", "cfl_fd", "t_end", "dt", "eps"}
_LIST_INT_KEYS = {"ns"}
_LIST_FLOAT_KEYS = {"snapshots"}
_STR_KEYS = {"experiment", "scheme", "profile", "out", "tag"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _LIST_INT_KEYS | _LIST_FLOAT_KEYS | _STR_KEYS


def _coerce(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _LIST_INT_KEYS:
            return tuple(int(p) for p in raw.split(",") if p.strip())
        if key in _LIST_FLOAT_KEYS:
            return tuple(float(p) for p in raw.split(",") if p.strip())
        return raw
    except ValueError:
        raise ConfigError(f"malformed value for {key!r}: {raw!r}") from None


def parse_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    """Read a flat key=value file (``#`` comments), apply overrides, validate."""
    values: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        for lineno, line in enumerate(lines, 1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key not in _ALL_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, raw)
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def _scheme_config(cfg: RunConfig) -> SchemeConfig:
    return SchemeConfig(scheme=cfg.scheme, cfl_linear=cfg.cfl,
                        cfl_nonlinear=cfg.cfl_fd, eps=cfg.eps)


def _make_setup(cfg: RunConfig, n: int | None = None,
                fd_dt_subordinate: bool = False):
    n = n if n is not None else cfg.n
    if cfg.experiment == "transport1d":
        return Transport1DSetup(profile=cfg.profile, n=n,
                                t_end=cfg.t_end or 8.0,
                                fd_dt_subordinate=fd_dt_subordinate)
    if cfg.experiment == "beam":
        return BeamSetup(n=n, t_end=cfg.t_end or 20.0, dt=cfg.dt)
    if cfg.experiment == "diocotron":
        return DiocotronSetup(n=n, t_end=cfg.t_end or 60.0)
    raise ConfigError(f"experiment {cfg.experiment!r} is not a single run")


# ---------------------------------------------------------------------------
# convergence harness

@dataclass
class ConvergenceReport:
    scheme: str
    profile: str
    rows: list[tuple[int, float, float, float]] = field(default_factory=list)
    # rows: (n, l1_error, order, tv_error); order is NaN on the coarsest row

    def as_text(self) -> str:
        lines = [f"# {self.scheme} on {self.profile}",
                 f"{'n':>6s} {'L1 error':>14s} {'order':>7s} {'TV error':>14s}"]
        for n, l1, order, tv in self.rows:
            otxt = f"{order:7.3f}" if math.isfinite(order) else "      -"
            lines.append(f"{n:6d} {l1:14.6e} {otxt} {tv:14.6e}")
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("n,l1_error,order,tv_error\n")
            for n, l1, order, tv in self.rows:
                fh.write(f"{n},{l1:.17g},{order:.17g},{tv:.17g}\n")


def convergence_harness(cfg: RunConfig, ns=None) -> ConvergenceReport:
    """Run the transport problem over a resolution sweep and report L1
    errors against the exact translated profile with observed orders."""
    if cfg.experiment not in ("transport1d", "convergence"):
        raise ConfigError("convergence sweeps are defined for transport1d")
    ns = tuple(ns) if ns is not None else cfg.ns
    subordinate = cfg.scheme.startswith("fd-")
    report = ConvergenceReport(scheme=cfg.scheme, profile=cfg.profile)
    prev: tuple[int, float] | None = None
    for n in ns:
        setup = Transport1DSetup(profile=cfg.profile, n=n,
                                 t_end=cfg.t_end or 8.0,
                                 fd_dt_subordinate=subordinate)
        result = run_experiment(setup, _scheme_config(cfg))
        errs = transport_errors(setup, result)
        order = math.nan
        if prev is not None and n == 2 * prev[0] and errs["l1"] > 0:
            order = math.log2(prev[1] / errs["l1"])
        report.rows.append((n, errs["l1"], order, errs["tv_error"]))
        prev = (n, errs["l1"])
    return report


# ---------------------------------------------------------------------------
# subcommands

def _cmd_run(args) -> int:
    overrides = {k: getattr(args, k) for k in
                 ("experiment", "scheme", "profile", "n", "cfl", "cfl_fd",
                  "t_end", "dt", "out", "tag", "snapshots")}
    if overrides.get("snapshots") is not None:
        overrides["snapshots"] = _coerce("snapshots", overrides["snapshots"])
    cfg = parse_config(args.config, overrides)
    if cfg.experiment == "convergence":
        return _emit_convergence(cfg)
    setup = _make_setup(cfg)
    snap = cfg.snapshots
    result = run_experiment(setup, _scheme_config(cfg),
                            snapshot_times=snap)
    out = cfg.output_dir()
    tag = cfg.tag or f"{cfg.experiment}_{cfg.scheme}_n{cfg.n}"
    save_run(result, out, tag)
    write_csv(os.path.join(out, f"{tag}_final.csv"), result.final)
    write_snapshot(os.path.join(out, f"{tag}_final.hwk"), result.final)
    if cfg.experiment == "transport1d":
        errs = transport_errors(setup, result)
        print(f"{tag}: L1 error {errs['l1']:.6e}, TV error {errs['tv_error']:.6e}")
    else:
        last = result.records[-1]
        print(f"{tag}: t={last.t:g} mass={last.mass:.12g} "
              f"rel_mass={last.rel_mass:.3e} energy={last.energy:.12g}")
        if result.switch_time is not None:
            print(f"{tag}: switched to finite differences at t={result.switch_time:g}")
    print(f"outputs in {out}")
    return EXIT_OK


def _emit_convergence(cfg: RunConfig, ns=None) -> int:
    report = convergence_harness(cfg, ns)
    out = cfg.output_dir()
    os.makedirs(out, exist_ok=True)
    tag = cfg.tag or f"converge_{cfg.profile}_{cfg.scheme}"
    report.write_csv(os.path.join(out, f"{tag}.csv"))
    text = report.as_text()
    with open(os.path.join(out, f"{tag}.txt"), "w") as fh:
        fh.write(text + "\n")
    print(text)
    print(f"outputs in {out}")
    return EXIT_OK


def _cmd_converge(args) -> int:
    overrides = {k: getattr(args, k) for k in
                 ("scheme", "profile", "cfl", "cfl_fd", "t_end", "out", "tag")}
    overrides["experiment"] = "transport1d"
    if args.ns is not None:
        overrides["ns"] = _coerce("ns", args.ns)
    cfg = parse_config(args.config, overrides)
    return _emit_convergence(cfg)


def _cmd_compare(args) -> int:
    """Column-wise comparison of two time-series CSVs with a tolerance on
    |a - b| <= tol * max(1, |a|, |b|)."""
    a = np.genfromtxt(args.first, delimiter=",", names=True)
    b = np.genfromtxt(args.second, delimiter=",", names=True)
    cols_a = set(a.dtype.names or ())
    cols_b = set(b.dtype.names or ())
    shared = sorted(cols_a & cols_b)
    if not shared:
        raise ConfigError("the files share no columns")
    if a.shape != b.shape:
        print(f"row count differs: {a.shape} vs {b.shape}")
        return EXIT_DIFFERS
    worst = 0.0
    worst_at = ""
    for name in shared:
        va = np.atleast_1d(a[name])
        vb = np.atleast_1d(b[name])
        both_nan = np.isnan(va) & np.isnan(vb)
        scale = np.maximum(1.0, np.maximum(np.abs(va), np.abs(vb)))
        rel = np.abs(va - vb) / scale
        rel[both_nan] = 0.0
        k = int(np.nanargmax(rel))
        if rel[k] > worst:
            worst = float(rel[k])
            worst_at = f"{name}[{k}]"
    if worst > args.tol:
        print(f"differs: max deviation {worst:.3e} at {worst_at} (tol {args.tol:g})")
        return EXIT_DIFFERS
    print(f"match within {args.tol:g} (max deviation {worst:.3e})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hwk",
        description="Hermite-WENO transport simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment")
    run_p.add_argument("config", nargs="?", help="key=value config file")
    run_p.add_argument("--experiment", choices=EXPERIMENTS)
    run_p.add_argument("--scheme", choices=SCHEMES)
    run_p.add_argument("--profile", choices=PROFILES)
    run_p.add_argument("--n", type=int)
    run_p.add_argument("--cfl", type=float, help="semi-Lagrangian CFL number")
    run_p.add_argument("--cfl-fd", dest="cfl_fd", type=float,
                       help="finite-difference CFL number")
    run_p.add_argument("--t-end", dest="t_end", type=float)
    run_p.add_argument("--dt", type=float, help="fixed time step (beam)")
    run_p.add_argument("--snapshots", help="comma-separated snapshot times")
    run_p.add_argument("--out", help="output directory")
    run_p.add_argument("--tag", help="output file prefix")
    run_p.set_defaults(func=_cmd_run)

    conv_p = sub.add_parser("converge", help="transport1d resolution sweep")
    conv_p.add_argument("config", nargs="?")
    conv_p.add_argument("--scheme", choices=SCHEMES)
    conv_p.add_argument("--profile", choices=PROFILES)
    conv_p.add_argument("--ns", help="comma-separated resolutions, e.g. 200,400,800")
    conv_p.add_argument("--cfl", type=float)
    conv_p.add_argument("--cfl-fd", dest="cfl_fd", type=float)
    conv_p.add_argument("--t-end", dest="t_end", type=float)
    conv_p.add_argument("--out", help="output directory")
    conv_p.add_argument("--tag", help="output file prefix")
    conv_p.set_defaults(func=_cmd_converge)

    cmp_p = sub.add_parser("compare", help="diff two time-series CSVs")
    cmp_p.add_argument("first")
    cmp_p.add_argument("second")
    cmp_p.add_argument("--tol", type=float, default=0.0)
    cmp_p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ConfigurationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # engine/runtime failures
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
