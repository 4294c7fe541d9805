"""Command-line entry point: ``chshear <command> [options]``.

Exit codes: 0 success (a BlowUp termination included), 1 configuration
error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ChShearError, ConfigError
from .operators import load_shear_profile, shear_profile

OUT_DIR_ENV = "CHSHEAR_OUT_DIR"

log = logging.getLogger("chshear")


def _out_dir(args):
    d = args.out_dir or os.environ.get(OUT_DIR_ENV) or "."
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _say(args, text):
    if not args.quiet:
        print(text)


def _load(fn, *a):
    """Config-stage call: any validation problem becomes exit code 1."""
    try:
        return fn(*a)
    except ConfigError:
        raise
    except (ValueError, ChShearError) as exc:
        raise ConfigError(str(exc)) from None


def _profile(grid, name, path, m):
    if name == "file":
        return load_shear_profile(path, grid, m)
    return shear_profile(name, grid)


# ------------------------------------------------------------------ commands

def cmd_run(args):
    from .experiments.config import load_run_config
    from .experiments.scenario import run_scenario

    cfg = _load(load_run_config, args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    res = run_scenario(cfg, _out_dir(args))
    st = res.status_dict()
    _say(args, f"status: {st['status']}  t = {st['t_final']!r}  final_l2 = {st['final_l2']!r}")
    if res.fit is not None:
        _say(args, f"tail fit: rate = {res.fit.rate!r}  r2 = {res.fit.r_squared!r}")
    if res.bootstrap is not None:
        b = res.bootstrap
        _say(args, f"bootstrap: worst ratio1 = {b.worst_ratio1:.4g}  worst ratio2 = {b.worst_ratio2:.4g}"
                   f"  holds = {b.holds}")
    for kind, path in res.files.items():
        _say(args, f"wrote {kind}: {path}")
    return 0


def cmd_sweep(args):
    from .experiments.config import read_config, run_config, sweep_spec
    from .experiments.sweep_map import monotonicity_violations, sweep, write_sweep

    cp = _load(read_config, args.config)
    base = _load(run_config, cp, args.config)
    spec = _load(sweep_spec, cp)
    if args.seed is not None:
        base = base.with_seed(args.seed)
    rows = sweep(base, spec, jobs=args.jobs)
    out = _out_dir(args) / "sweep.csv"
    write_sweep(rows, out)
    bad = monotonicity_violations(rows)
    failed = [r for r in rows if r.error]
    _say(args, f"{len(rows)} cells, {len(failed)} failed, {len(bad)} non-monotone; wrote {out}")
    return 0


def cmd_semigroup(args):
    from .experiments.config import read_config, semigroup_spec
    from .experiments.initial import probe_field
    from .semigroup import scaling_exponent

    cp = _load(read_config, args.config)
    spec = _load(semigroup_spec, cp, args.config)
    seed = spec.probe_seed if args.seed is None else args.seed
    g0 = probe_field(spec.grid, seed, (1, spec.band_max))
    v = _load(_profile, spec.grid, spec.shear_name, spec.shear_path, spec.shear_m)
    out = _out_dir(args)
    res = scaling_exponent(spec.params, v, spec.gammas, g0, jobs=args.jobs)
    summary = res.summary()
    if spec.control:
        ctl = scaling_exponent(spec.params, shear_profile("none", spec.grid), spec.gammas, g0,
                               jobs=args.jobs)
        ctl.to_csv(out / "scaling_control.csv")
        summary["control_slope"] = ctl.slope
        summary["control_slope_r2"] = ctl.slope_r2
    res.to_csv(out / "scaling.csv")
    with open(out / "scaling_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    _say(args, f"measured slope = {res.slope:.4f}  predicted = {res.predicted}")
    if "control_slope" in summary:
        _say(args, f"no-shear control slope = {summary['control_slope']:.4f}")
    if summary["slope_in_reported_band"] is False:
        log.warning("measured slope %.4f lies outside the reported band [0.25, 0.75]", res.slope)
    return 0


def cmd_mixing(args):
    from .experiments.config import mixing_spec, read_config
    from .experiments.initial import probe_field
    from .semigroup import fit_power_law, mixing_decay_curve

    cp = _load(read_config, args.config)
    spec = _load(mixing_spec, cp, args.config)
    seed = spec.probe_seed if args.seed is None else args.seed
    g0 = probe_field(spec.grid, seed, (1, spec.band_max))
    v = _load(_profile, spec.grid, spec.shear_name, spec.shear_path, spec.shear_m)
    times = np.geomspace(max(spec.t_min, 1e-3), spec.t_max, spec.n_times)
    if spec.t_min == 0:
        times = np.concatenate([[0.0], times])
    curve = mixing_decay_curve(g0, v, times, spec.amplitude)
    fit = fit_power_law(curve, spec.t_min, spec.t_max)
    out = _out_dir(args)
    with open(out / "mixing.csv", "w") as fh:
        fh.write("t,h_minus1\n")
        for t, n in curve:
            fh.write(f"{t!r},{n!r}\n")
    with open(out / "mixing_fit.json", "w") as fh:
        json.dump({"profile": v.name, "q": fit.rate, "r2": fit.r_squared,
                   "t_lo": fit.t_lo, "t_hi": fit.t_hi}, fh, indent=2)
        fh.write("\n")
    _say(args, f"power-law exponent q = {fit.rate:.4f}  r2 = {fit.r_squared:.4f}")
    return 0


def cmd_thresholds(args):
    from .experiments.config import read_config, thresholds_inputs
    from .experiments.thresholds import ThresholdInputs, threshold_report

    if args.config:
        inputs = _load(thresholds_inputs, _load(read_config, args.config))
    else:
        if args.epsilon is None:
            raise ConfigError("--epsilon is required without --config")
        inputs = ThresholdInputs(
            epsilon=args.epsilon, a=args.a, b=args.b, fluct0=args.fluct0, mean0=args.mean0,
            B1=args.b1, B2=args.b2, B3=args.b3, L=args.l, L_prime=args.l_prime,
            lambda1=args.lambda1,
        )
    rep = _load(threshold_report, inputs)
    if args.json:
        print(json.dumps(rep.to_dict(), indent=2))
    else:
        for line in rep.lines():
            print(line)
    return 0


def cmd_validate(args):
    from .experiments.config import validate

    kinds = validate(args.config)
    print("ok")
    log.info("supports: %s", ", ".join(kinds))
    return 0


def cmd_version(args):
    print(__version__)
    return 0


# -------------------------------------------------------------------- parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", help=f"output directory (env {OUT_DIR_ENV}; default: cwd)")
    common.add_argument("--seed", type=int, help="override the seed in the config")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes for sweeps (default: all cores)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    ap = argparse.ArgumentParser(prog="chshear", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")

    def with_config(name, fn, help_, required=True):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--config", required=required, help="INI config file")
        p.set_defaults(func=fn)
        return p

    with_config("run", cmd_run, "integrate one scenario")
    with_config("sweep", cmd_sweep, "(a, A) suppression map")
    with_config("semigroup", cmd_semigroup, "enhanced-dissipation scaling in gamma")
    with_config("mixing", cmd_mixing, "H^-1 decay under pure shear transport")
    with_config("validate", cmd_validate, "check a config file")
    th = with_config("thresholds", cmd_thresholds, "evaluate the smallness conditions", required=False)
    th.add_argument("--epsilon", type=float)
    th.add_argument("--a", type=float, default=0.0)
    th.add_argument("--b", type=float, default=0.0)
    th.add_argument("--fluct0", type=float, default=1.0)
    th.add_argument("--mean0", type=float, default=0.0)
    for name in ("b1", "b2", "b3", "l", "l-prime", "lambda1"):
        th.add_argument(f"--{name}", type=float, default=1.0)
    th.add_argument("--json", action="store_true", help="print the report as JSON")
    v = sub.add_parser("version", parents=[common], help="print the package version")
    v.set_defaults(func=cmd_version)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors count as config errors
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
