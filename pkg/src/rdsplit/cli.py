"""Command line front end.

Subcommands map one-to-one onto the experiment runners; every invocation
takes a config file and an output directory, echoes the resolved config to
``<out>/config.resolved``, and writes CSV results. Exit codes: 0 on success,
2 for configuration problems, 3 when a solve fails (non-convergence or loss
of positivity).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import InvalidConfig, NonConvergence, PositivityViolation
from .harness import (parse_config, run_cauchy_convergence, run_energy_trace,
                      run_ode_convergence, run_single, write_resolved_config)

log = logging.getLogger("rdsplit")

_KIND_FOR_COMMAND = {
    "run": "single_run",
    "ode-convergence": "ode_convergence",
    "cauchy": "cauchy_convergence",
    "energy-trace": "energy_trace",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdsplit",
        description="Structure-preserving reaction-diffusion solver")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, kind in _KIND_FOR_COMMAND.items():
        p = sub.add_parser(command, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True, help="path to the config file")
        p.add_argument("--out", required=True, help="output directory (created if absent)")
        p.add_argument("--threads", type=int, default=1,
                       help="independent resolutions solved concurrently (cauchy only)")
        p.add_argument("--verbose", action="store_true", help="log progress to stderr")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = parse_config(args.config)
        expected = _KIND_FOR_COMMAND[args.command]
        if cfg.kind != expected:
            raise InvalidConfig(
                f"{args.config}: kind = {cfg.kind!r} does not match "
                f"subcommand {args.command!r} (expected {expected!r})", key="kind")
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_resolved_config(cfg, out_dir / "config.resolved")
        log.info("running %s into %s", cfg.kind, out_dir)
        if cfg.kind == "single_run":
            run_single(cfg, out_dir)
        elif cfg.kind == "ode_convergence":
            run_ode_convergence(cfg, out_dir)
        elif cfg.kind == "cauchy_convergence":
            run_cauchy_convergence(cfg, out_dir, threads=max(1, args.threads))
        else:
            run_energy_trace(cfg, out_dir)
    except InvalidConfig as e:
        print(f"rdsplit: invalid config: {e}", file=sys.stderr)
        return 2
    except (NonConvergence, PositivityViolation) as e:
        print(f"rdsplit: solve failed: {e}", file=sys.stderr)
        return 3
    log.info("done")
    return 0


if __name__ == "__main__":
    sys.exit(main())
