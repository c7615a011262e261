"""``gammaod`` command line: diagnose, simulate, table, list-catalog.

Exit codes: 0 computed (whatever the verdict), 2 bad input, 3 execution failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import re
import sys

import numpy as np
import yaml

from . import diagnostics, montecarlo, quadrature, reporting
from .errors import DomainError, ExecutionError, QuadratureError, UsageError
from .integrands import catalog, parse

log = logging.getLogger("gammaod")

EXIT_OK, EXIT_INPUT, EXIT_EXEC = 0, 2, 3
CONFIG_SCHEMA_VERSION = 1
_SCHED = re.compile(r"^([^:]+):([^:]+):(geom|lin)(\d+)$")


class BadInput(Exception):
    pass


def parse_times(spec):
    """``"10:1e6:geom32"`` / ``"0:5:lin11"`` or a comma list ``"10,100,1000"``."""
    if isinstance(spec, (list, tuple)):
        return tuple(float(x) for x in spec)
    spec = str(spec).strip()
    m = _SCHED.match(spec)
    try:
        if m:
            a, b, kind, n = float(m[1]), float(m[2]), m[3], int(m[4])
            pts = np.geomspace(a, b, n) if kind == "geom" else np.linspace(a, b, n)
            return tuple(float(x) for x in pts)
        return tuple(float(x) for x in spec.split(",") if x.strip())
    except ValueError:
        raise BadInput(f"cannot parse time schedule {spec!r}") from None


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise BadInput(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise BadInput("config file must hold a mapping")
    version = data.pop("schema_version", None)
    if version != CONFIG_SCHEMA_VERSION:
        raise BadInput(f"config schema_version must be {CONFIG_SCHEMA_VERSION}, got {version!r}")
    return data


def _common(p):
    g = p.add_argument_group("global")
    g.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    g.add_argument("--jobs", type=int, default=None, help="worker threads (default: all cores)")
    g.add_argument("--out", default=".", help="output directory")
    g.add_argument("--tol", type=float, default=None, help="quadrature relative tolerance")
    g.add_argument("--config", default=None, help="YAML config file (flags override it)")
    g.add_argument("--svg", action="store_true", help="also write SVG line plots")
    g.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    ap = argparse.ArgumentParser(prog="gammaod", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("diagnose", help="deterministic diagnostics and classifier verdicts")
    d.add_argument("integrand")
    d.add_argument("--t", default=None, help="schedule, e.g. 10:1e6:geom32 or 10,100,1000")
    _common(d)

    s = sub.add_parser("simulate", help="Monte Carlo experiment")
    s.add_argument("mode", choices=["wlln", "lp", "slln", "dist-limit", "dist_limit", "bridge"])
    s.add_argument("integrand")
    s.add_argument("--t", default=None)
    s.add_argument("--reps", type=int, default=None)
    s.add_argument("--eps", type=float, default=None)
    s.add_argument("--p", default=None, help="moment orders, comma separated")
    s.add_argument("--s", default=None, help="Laplace arguments, comma separated")
    s.add_argument("--lag", type=int, default=None)
    s.add_argument("--weights", choices=["cell", "left", "right"], default=None)
    s.add_argument("--step", type=float, default=None, help="grid cell width")
    _common(s)

    t = sub.add_parser("table", help="regenerate the table of test functions")
    t.add_argument("--t-range", default="1e2:1e6", help="lo:hi of the fitting window")
    t.add_argument("--points", type=int, default=32)
    _common(t)

    c = sub.add_parser("list-catalog", help="print integrand identifiers")
    _common(c)
    return ap


# ------------------------------------------------------------ commands ---

def cmd_diagnose(args, cfg):
    ident = args.integrand
    f = parse(ident)
    ts = parse_times(args.t or cfg.get("t_schedule", "10:1e6:geom32"))
    tol = args.tol or cfg.get("tol", quadrature.DEFAULT_TOL)
    config = {"integrand": ident, "t_schedule": list(ts), "tol": tol}
    man = reporting.RunManifest("diagnose", config, None)
    out = args.out
    base = os.path.join(out, reporting.stem(ident))

    series = diagnostics.diagnostic_series(f, ts, tol)
    man.add(reporting.write_text(base + ".diag.csv", series.to_csv()))

    verdicts = [diagnostics.classify_wlln(f, ts)]
    try:
        verdicts += diagnostics.classify_slln(f, probe_horizon=ts[-1])
    except UsageError as exc:
        verdicts.append(diagnostics.ClassifierVerdict("slln", "not-applicable", {"reason": str(exc)}))
    verdicts.append(diagnostics.is_lnF_concave(f, ts))
    payload = {
        "integrand": ident,
        "verdicts": [v.to_dict() for v in verdicts],
        "fits": diagnostics._jsonable(reporting.fits_summary(series, diagnostics.fit_rate)),
        "h_analytic": series.h_analytic,
    }
    man.add(reporting.write_text(base + ".verdicts.json", reporting.dump_json(payload)))
    if args.svg:
        svg = reporting.svg_lineplot(series.t, {"v": series.v, "b": series.b}, title=ident)
        man.add(reporting.write_text(base + ".diag.svg", svg))
    man.write(out)
    for v in verdicts:
        print(f"{v.criterion:>16s}: {v.verdict}")
    return EXIT_OK


def _sim_config(args, cfg):
    mode = args.mode.replace("-", "_")
    d = dict(cfg)
    d["integrand"] = args.integrand
    d["mode"] = mode
    overrides = {
        "t_schedule": parse_times(args.t) if args.t else None,
        "replicates": args.reps, "epsilon": args.eps, "master_seed": args.seed,
        "p_list": args.p, "s_list": args.s, "lag": args.lag, "bridge_weights": args.weights,
        "grid_step": args.step,
    }
    d.update({k: v for k, v in overrides.items() if v is not None})
    if "t_schedule" in d and isinstance(d["t_schedule"], str):
        d["t_schedule"] = parse_times(d["t_schedule"])
    d.pop("tol", None)
    return montecarlo.ExperimentConfig.from_dict(d)


def cmd_simulate(args, cfg):
    config = _sim_config(args, cfg)
    rep = montecarlo.run(config, jobs=args.jobs)
    out = args.out
    base = os.path.join(out, f"{reporting.stem(config.integrand)}.{config.mode}")
    man = reporting.RunManifest("simulate", config.to_dict(), config.master_seed)
    man.add(reporting.write_text(base + ".report.json", rep.to_json()))
    man.add(reporting.write_text(base + ".report.csv", rep.to_csv()))
    if args.svg:
        stats = sorted({e.statistic for e in rep.estimates})
        pick = [s for s in stats if s.startswith(("tail_prob", "abs_moment", "tail_sup"))]
        if pick:
            t, _ = rep.series(pick[0])
            svg = reporting.svg_lineplot(t, {s: rep.series(s)[1] for s in pick},
                                         title=f"{config.mode} {config.integrand}")
            man.add(reporting.write_text(base + ".svg", svg))
    man.write(out)
    for k, v in rep.verdicts.items():
        print(f"{k}: {v}")
    return EXIT_OK


def cmd_table(args, cfg):
    lo, _, hi = args.t_range.partition(":")
    try:
        t_range = (float(lo), float(hi))
    except ValueError:
        raise BadInput(f"bad --t-range {args.t_range!r}") from None
    cells = diagnostics.a5_table(t_range, args.points)
    man = reporting.RunManifest("table", {"t_range": list(t_range), "points": args.points}, None)
    man.add(reporting.write_text(os.path.join(args.out, "a5_table.csv"), reporting.table_csv(cells)))
    man.write(args.out)
    for c in cells:
        print(f"{c['integrand']:>22s} {c['column']:>8s} claimed ({c['claimed_t_exp']:+.2f}, "
              f"{c['claimed_log_exp']:+.2f}) fitted ({c['fitted_t_exp']:+.3f}, "
              f"{c['fitted_log_exp']:+.3f}) {'pass' if c['pass'] else 'FAIL'}")
    return EXIT_OK


def cmd_list_catalog(args, cfg):
    for ident, desc in catalog().items():
        print(f"{ident:28s} {desc}")
    return EXIT_OK


COMMANDS = {"diagnose": cmd_diagnose, "simulate": cmd_simulate, "table": cmd_table,
            "list-catalog": cmd_list_catalog}


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except (BadInput, DomainError, UsageError, ValueError, TypeError) as exc:
        print(f"gammaod: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ExecutionError, QuadratureError, MemoryError, OSError) as exc:
        print(f"gammaod: execution failed: {exc}", file=sys.stderr)
        return EXIT_EXEC


if __name__ == "__main__":
    sys.exit(main())
