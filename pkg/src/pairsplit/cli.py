"""Command-line front end.

    pairsplit validate --config run.yaml
    pairsplit run --config run.yaml [--out DIR] [--scenario NAME] [--seed N]
    pairsplit sweep --config run.yaml [--out DIR]

Exit codes: 0 success, 1 invalid configuration, 2 computation failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from . import config as cfg
from .pipeline import ScenarioError, run

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pairsplit", description="Polarizing pair-splitter models and figure data.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, text in (
        ("validate", "check a configuration and list every violation"),
        ("run", "run the configured scenario"),
        ("sweep", "run the coupler design sweep of the configuration"),
    ):
        sp = sub.add_parser(verb, help=text)
        sp.add_argument("--config", required=True, help="run configuration (YAML); 'preset:NAME' for a shipped preset")
        sp.add_argument("--out", help="output directory (overrides output_dir)")
        sp.add_argument("--scenario", choices=cfg.SCENARIOS, help="override the configured scenario")
        sp.add_argument("--seed", type=int, help="seed for randomized generators")
    return p


def _load(spec: str) -> tuple[cfg.RunConfig, Path]:
    if spec.startswith("preset:"):
        return cfg.preset(spec[len("preset:") :]), Path.cwd()
    path = Path(spec)
    return cfg.load(path), path.resolve().parent


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config, base_dir = _load(args.config)
    except (OSError, cfg.ConfigError) as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    # --out is taken relative to the working directory, not the config file
    out = str(Path(args.out).resolve()) if args.out else None
    scenario = "sweep" if args.verb == "sweep" else args.scenario
    config = config.with_overrides(output_dir=out, scenario=scenario, seed=args.seed)

    violations = cfg.validate(config)
    if violations:
        for v in violations:
            print(f"{args.config}: {v}", file=sys.stderr)
        return EXIT_INVALID
    if args.verb == "validate":
        print(f"{args.config}: ok (scenario {config.scenario})")
        return EXIT_OK
    try:
        summary = run(config, base_dir)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    yaml.safe_dump(summary, sys.stdout, sort_keys=False)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
