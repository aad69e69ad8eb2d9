"""Command-line entry point: ``dcmstep run|sweep|tune-timing``.

Exit codes: 0 completed, 2 diverged, 1 configuration error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from ..errors import ConfigError
from .config import ScenarioConfig, load_config
from .runner import DIVERGED, run_scenario, tune_timing

log = logging.getLogger("dcmstep")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2


def parse_vary(arg):
    """``key=start:stop:num`` (inclusive linspace) or ``key=v1,v2,...``."""
    if "=" not in arg:
        raise ConfigError(f"--vary expects key=range, got {arg!r}")
    key, rng = arg.split("=", 1)
    key = key.strip()
    if key not in ScenarioConfig.__dataclass_fields__:
        raise ConfigError(f"unknown config key {key!r} in --vary")
    try:
        if ":" in rng:
            start, stop, num = rng.split(":")
            values = np.linspace(float(start), float(stop), int(num)).tolist()
        else:
            values = [yaml.safe_load(v) for v in rng.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad range {rng!r}: {exc}") from None
    return key, values


def cmd_run(args):
    cfg = load_config(args.config)
    result = run_scenario(cfg)
    result.write(args.out, cfg.name)
    log.info("%s: %s after %d steps, max mod %.4g m", cfg.name, result.status, result.steps_completed, result.max_mod)
    return EXIT_DIVERGED if result.status == DIVERGED else EXIT_OK


def cmd_sweep(args):
    cfg = load_config(args.config)
    key, values = parse_vary(args.vary)
    out = Path(args.out)
    rows = []
    any_diverged = False
    for k, value in enumerate(values):
        run_cfg = cfg.replace(**{key: value, "name": f"{cfg.name}_{key}_{k:03d}"})
        result = run_scenario(run_cfg)
        result.write(out, run_cfg.name)
        any_diverged |= result.status == DIVERGED
        rows.append({key: value, "status": result.status, "steps_completed": result.steps_completed,
                     "max_mod": result.max_mod, "max_dcm_error": max(result.step_max_dcm_error, default=0.0)})
        log.info("%s=%s: %s", key, value, result.status)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{cfg.name}_sweep.json").write_text(json.dumps(rows, indent=2))
    return EXIT_DIVERGED if any_diverged else EXIT_OK


def cmd_tune(args):
    cfg = load_config(args.config)
    period, residual, scale = tune_timing(cfg, tol=args.tol)
    print(json.dumps({"step_period": repr(period), "residual": residual, "scale": scale}))
    if args.write:
        data = cfg.to_dict()
        data["step_period"] = float(period)
        Path(args.write).write_text(yaml.safe_dump(data, sort_keys=False))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="dcmstep", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario and write its CSV log and summary")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a scenario over a range of one config key")
    p.add_argument("--config", required=True)
    p.add_argument("--vary", required=True, help="key=start:stop:num or key=v1,v2,...")
    p.add_argument("--out", default="sweep_out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tune-timing", help="find the step period giving mirror-periodic stepping")
    p.add_argument("--config", required=True)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--write", help="write a copy of the config with the tuned period")
    p.set_defaults(func=cmd_tune)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
