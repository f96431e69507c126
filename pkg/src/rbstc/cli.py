"""Command-line interface.

Commands: analyze, simulate, tau-e, calibrate-sigma, periodic. Exit codes:
0 success, 1 configuration/usage error, 2 standing-assumption violation.
The environment variable RBSTC_SEED overrides the config seed.
"""

import argparse
import json
import os
import sys as _sys
from dataclasses import replace

import numpy as np

from .calibrate import calibrate_sigma
from .config import ConfigError, load_config
from .errors import (AssumptionViolationError, CalibrationError,
                     InvalidArgumentError)
from .gamma import detect_steady_state, simulate, trace_to_dict, write_trace_csv
from .pipeline import analyze, build_partition
from .regions import estimate_tau_bounds, sphere_samples
from .report import dumps_canonical
from .system import transition_matrix

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ASSUMPTION = 2


def _load(path):
    config = load_config(path)
    env_seed = os.environ.get("RBSTC_SEED")
    if env_seed is not None:
        try:
            config = replace(config, seed=int(env_seed))
        except ValueError:
            raise ConfigError("RBSTC_SEED must be an integer") from None
    return config


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)


def _parse_vector(text, n):
    try:
        if text.strip().startswith("["):
            vals = json.loads(text)
        else:
            vals = [float(v) for v in text.split(",")]
        x = np.asarray(vals, float)
    except (ValueError, json.JSONDecodeError):
        raise ConfigError(f"--x0 must be {n} comma-separated numbers") from None
    if x.shape != (n,):
        raise ConfigError(f"--x0 must have exactly {n} components")
    if np.linalg.norm(x) == 0.0:
        raise ConfigError("--x0 must be nonzero")
    return x


def _cmd_analyze(args):
    config = _load(args.config)
    report = analyze(config, jobs=args.jobs)
    _emit(dumps_canonical(report), args.out)
    return EXIT_OK if report["assumption_a1"]["passed"] else EXIT_ASSUMPTION


def _cmd_periodic(args):
    config = _load(args.config)
    per = dict(config.analysis.get("periodic") or
               {"max_period": 20, "harvest": 8, "max_length": 1})
    if args.max_length is not None:
        per["max_length"] = args.max_length
    if args.harvest is not None:
        per["harvest"] = args.harvest
    if args.max_period is not None:
        per["max_period"] = args.max_period
    analysis = dict(config.analysis)
    analysis["periodic"] = per
    config = replace(config, analysis=analysis)
    report = analyze(config, jobs=args.jobs)
    _emit(dumps_canonical(report), args.out)
    return EXIT_OK if report["assumption_a1"]["passed"] else EXIT_ASSUMPTION


def _cmd_simulate(args):
    config = _load(args.config)
    partition = build_partition(config)
    x0 = _parse_vector(args.x0, config.system.n)
    Gs = [transition_matrix(config.system, t) for t in partition.taus]
    trace = simulate(partition, Gs, x0, args.events, config.tolerances)
    ss = detect_steady_state(trace, window=args.window,
                             max_period=args.max_period)
    summary = {
        "steady_state": {
            "kind": ss.kind,
            "pattern": list(ss.pattern),
            "region_pattern": list(ss.region_pattern),
            "onset_index": ss.onset_index,
        },
        "events": len(trace),
    }
    if args.out:
        write_trace_csv(trace, args.out)
        json_path = os.path.splitext(args.out)[0] + ".json"
        with open(json_path, "w") as fh:
            fh.write(dumps_canonical(trace_to_dict(trace)))
        _sys.stdout.write(dumps_canonical(summary))
    else:
        _sys.stderr.write(dumps_canonical(summary))
        import io

        buf = io.StringIO()
        write_trace_csv(trace, buf)
        _sys.stdout.write(buf.getvalue())
    return EXIT_OK


def _cmd_tau_e(args):
    config = _load(args.config)
    if config.trigger is None:
        _sys.stderr.write("tau-e requires a trigger block in the config\n")
        return EXIT_CONFIG
    from .regions import RelativeTrigger

    trig = RelativeTrigger(config.system, config.sigma, config.horizon,
                           tol=config.tolerances)
    X = sphere_samples(config.system.n, args.samples, [config.seed, 1])
    te = trig.tau_e_batch(X)
    lines = [",".join([f"x{j}" for j in range(config.system.n)] + ["tau_e"])]
    for row, t in zip(X, te):
        lines.append(",".join(format(v, ".17g") for v in row)
                     + "," + format(t, ".17g"))
    csv_text = "\n".join(lines) + "\n"
    summary = {"tau_min": float(te.min()), "tau_max": float(te.max()),
               "samples": int(args.samples)}
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv_text)
        _sys.stdout.write(dumps_canonical(summary))
    else:
        _sys.stderr.write(dumps_canonical(summary))
        _sys.stdout.write(csv_text)
    return EXIT_OK


def _cmd_calibrate(args):
    config = _load(args.config)
    if args.target_tmax is not None and not (args.target_tmin < args.target_tmax):
        _sys.stderr.write("targets must satisfy tmin < tmax\n")
        return EXIT_CONFIG
    result = calibrate_sigma(
        config.system, args.target_tmin, args.target_tmax,
        horizon=config.horizon if config.trigger else 1.0,
        samples=args.samples, seed=config.seed,
        tol=config.tolerances)
    _emit(dumps_canonical(result), args.out)
    return EXIT_OK


def make_parser():
    p = argparse.ArgumentParser(
        prog="rbstc",
        description="Inter-event time analysis for linear systems under "
                    "region-based self-triggered control")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="full eigenstructure/PIS/stability report")
    a.add_argument("config")
    a.add_argument("--out", default=None)
    a.add_argument("--jobs", type=int, default=1)
    a.set_defaults(fn=_cmd_analyze)

    s = sub.add_parser("simulate", help="closed-loop event simulation")
    s.add_argument("config")
    s.add_argument("--x0", required=True)
    s.add_argument("--events", type=int, default=200)
    s.add_argument("--window", type=int, default=100)
    s.add_argument("--max-period", type=int, default=20)
    s.add_argument("--out", default=None)
    s.set_defaults(fn=_cmd_simulate)

    t = sub.add_parser("tau-e", help="inter-event-time field on the unit sphere")
    t.add_argument("config")
    t.add_argument("--samples", type=int, default=4096)
    t.add_argument("--out", default=None)
    t.set_defaults(fn=_cmd_tau_e)

    c = sub.add_parser("calibrate-sigma",
                       help="recover the relative threshold from tau bounds")
    c.add_argument("config")
    c.add_argument("--target-tmin", type=float, required=True)
    c.add_argument("--target-tmax", type=float, default=None)
    c.add_argument("--samples", type=int, default=2048)
    c.add_argument("--out", default=None)
    c.set_defaults(fn=_cmd_calibrate)

    g = sub.add_parser("periodic", help="analyze with pattern enumeration flags")
    g.add_argument("config")
    g.add_argument("--max-length", type=int, default=None)
    g.add_argument("--harvest", type=int, default=None)
    g.add_argument("--max-period", type=int, default=None)
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--out", default=None)
    g.set_defaults(fn=_cmd_periodic)
    return p


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, InvalidArgumentError) as exc:
        _sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except CalibrationError as exc:
        _sys.stderr.write(f"calibration failed: {exc}\n")
        return EXIT_CONFIG
    except AssumptionViolationError as exc:
        _sys.stderr.write(f"assumption violated: {exc}\n")
        return EXIT_ASSUMPTION


if __name__ == "__main__":
    raise SystemExit(main())
