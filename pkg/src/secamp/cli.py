"""Command-line entry point: ``secamp <subcommand> --config PATH [--seed N] [--out PATH]``.

Exit codes: 0 success, 2 configuration error, 3 capacity exceeded,
4 contract violation (including a failed audit check).  Errors are reported
on stderr as a single JSON object; a JSON summary is printed there on success.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import MODES, load_config
from .exceptions import CapacityError, ConfigError, ContractViolation, DimensionError, InvalidRateError
from .harness import COMMANDS

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY, EXIT_CONTRACT = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="secamp", description="Secure distributed compression lab")
    ap.add_argument("subcommand", choices=MODES)
    ap.add_argument("--config", required=True, help="YAML experiment configuration")
    ap.add_argument("--seed", type=int, help="override the config's master seed")
    ap.add_argument("--out", help="write CSV here instead of stdout")
    return ap


def _fail(kind: str, code: int, exc: Exception) -> int:
    diag = {"status": "error", "kind": kind, "message": str(exc)}
    for attr in ("field", "line"):
        if getattr(exc, attr, None) is not None:
            diag[attr] = getattr(exc, attr)
    print(json.dumps(diag), file=sys.stderr)
    return code


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.mode is not None and cfg.mode != args.subcommand:
            raise ConfigError(f"config is for '{cfg.mode}', not '{args.subcommand}'", field="mode")
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be >= 0", field="--seed")
            cfg = cfg.with_seed(args.seed)
        result = COMMANDS[args.subcommand](cfg)
    except (ConfigError, InvalidRateError, DimensionError) as exc:
        return _fail("config_error", EXIT_CONFIG, exc)
    except CapacityError as exc:
        return _fail("capacity_error", EXIT_CAPACITY, exc)
    except ContractViolation as exc:
        return _fail("contract_violation", EXIT_CONTRACT, exc)

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(result.text)
    else:
        sys.stdout.write(result.text)
    status = "pass" if result.passed else "fail"
    print(json.dumps({"status": status, "subcommand": args.subcommand, **result.summary}), file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_CONTRACT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
