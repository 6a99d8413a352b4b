"""Command line interface: batch runs, the live serve loop, and config
checking.

    teleokin run --config cfg.yaml [--trajectory id] [--out file.csv]
    teleokin serve --config cfg.yaml --bind host:port
    teleokin check-config cfg.yaml

TELEOKIN_LOG sets the log level (default INFO).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time

import numpy as np

from .config import ConfigError, RunConfig, build_sim, load_config
from .telemetry import write_csv

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_BIND = 3

# tolerated discrete-time overshoot of the safe distance (on the radius,
# i.e. sqrt of the square-distance bound)
ES_VIOLATION_MARGIN = 0.01

log = logging.getLogger("teleokin")


def run_batch(config: RunConfig, out_path=None) -> int:
    """Execute a scripted run; returns the process exit code.

    Exit 0 only when every solve was optimal, joints stayed in bounds, and
    the entry-sphere square distance never exceeded D_safe by more than the
    discrete-time margin.
    """
    out_path = out_path or config.out
    n_ticks = int(round(config.duration / config.dt))
    t_wall = time.perf_counter()
    try:
        sim = build_sim(config)
    except ConfigError as e:
        log.error("config error: %s", e)
        return EXIT_CONFIG
    telemetry = sim.run(n_ticks)
    wall = time.perf_counter() - t_wall

    code = EXIT_OK
    for a, arm in zip(telemetry, sim.arms):
        bad = np.flatnonzero(a.status != 0)
        if bad.size:
            log.error("arm %d: solver status %s at tick %d",
                      a.arm, a.record(int(bad[0])).status, int(bad[0]))
            code = EXIT_INVARIANT
        if arm.spheres:
            d_lim = arm.spheres[0].d_safe * (1.0 + ES_VIOLATION_MARGIN) ** 2
            viol = np.flatnonzero(a.d_es_sq > d_lim)
            if viol.size:
                log.error("arm %d: entry sphere violated at tick %d "
                          "(D=%.3e > %.3e)", a.arm, int(viol[0]),
                          float(a.d_es_sq[viol[0]]), d_lim)
                code = EXIT_INVARIANT
        qbad = np.flatnonzero(
            np.any((a.q < arm.model.q_min - 1e-9)
                   | (a.q > arm.model.q_max + 1e-9), axis=1))
        if qbad.size:
            log.error("arm %d: joint limits violated at tick %d",
                      a.arm, int(qbad[0]))
            code = EXIT_INVARIANT

    write_csv(out_path, telemetry)
    for a in telemetry:
        dmax = float(np.nanmax(a.d_es_sq)) if len(a) else float("nan")
        print(f"arm {a.arm}: ticks={len(a)} "
              f"max sqrt(D_ES)={1e3 * math.sqrt(max(dmax, 0.0)):.3f} mm "
              f"final |t_err|={a.t_err_norm[-1]:.3e} m "
              f"final |r_err|={a.r_err_norm[-1]:.3e}")
    print(f"wrote {out_path} ({n_ticks} ticks/arm) in {wall:.2f} s wall")
    return code


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("TELEOKIN_LOG", "INFO").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(prog="teleokin",
                                     description="entry-sphere constrained "
                                     "teleoperation engine")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="batch simulation to CSV")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--trajectory", help="override the trajectory id")
    p_run.add_argument("--out", help="override the CSV output path")
    p_run.add_argument("--duration", type=float, help="override duration [s]")

    p_serve = sub.add_parser("serve", help="live websocket steering endpoint")
    p_serve.add_argument("--config", required=True)
    p_serve.add_argument("--bind", help="host:port (overrides config)")
    p_serve.add_argument("--out", help="override the CSV output path")

    p_check = sub.add_parser("check-config", help="validate a config file")
    p_check.add_argument("config")

    args = parser.parse_args(argv)

    if args.cmd == "check-config":
        try:
            cfg = load_config(args.config)
            build_sim(cfg)  # instantiate everything, then throw it away
        except ConfigError as e:
            print(f"config error: {e}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"{args.config}: ok ({len(cfg.arms)} arms, dt={cfg.dt} s)")
        return EXIT_OK

    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if args.cmd == "run":
        if args.trajectory:
            cfg.trajectories = [{"id": args.trajectory, "params": {}}
                                for _ in cfg.arms]
        if args.duration is not None:
            cfg.duration = args.duration
        try:
            return run_batch(cfg, out_path=args.out)
        except ConfigError as e:
            print(f"config error: {e}", file=sys.stderr)
            return EXIT_CONFIG

    if args.cmd == "serve":
        from .server import serve_forever
        bind = args.bind or cfg.bind
        return serve_forever(cfg, bind, out_path=args.out)

    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
