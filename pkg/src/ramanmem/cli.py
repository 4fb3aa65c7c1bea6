"""``simulate <preset|config-path> [--out DIR] [--threads N] [--override key=value ...]``.

Exit status 0 on success, 1 for an invalid configuration, 2 for a numeric
failure. Errors are reported as one JSON line on stderr and any files of
the failed run are removed.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path

from . import __version__
from .config import ConfigError, apply_overrides, list_presets, load_config
from .runner import NUMERIC_ERRORS, evaluate, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"command line: {message}")


def _parser() -> argparse.ArgumentParser:
    p = _ArgParser(prog="simulate", description="Dressed-state EIT, pulse transport and Raman memory runs.",
                   epilog=f"presets: {', '.join(list_presets())}")
    p.add_argument("config", help="preset name or path to a YAML config")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for sweeps and carrier sets")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="set a dotted config key, e.g. control.rabi=10 (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _fail(kind: str, code: int, exc: BaseException) -> int:
    msg = " ".join(str(exc).split()) or type(exc).__name__
    print(json.dumps({"status": "error", "kind": kind, "type": type(exc).__name__, "message": msg}),
          file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = load_config(args.config)
        if args.override:
            cfg = apply_overrides(cfg, args.override)
        if args.out:
            cfg = apply_overrides(cfg, [("output_dir", str(args.out))])
    except ConfigError as exc:
        return _fail("config", EXIT_CONFIG, exc)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    out = Path(cfg.output_dir)
    fresh = not out.exists()
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail("config", EXIT_CONFIG, exc)
    code = _run(cfg, out, args.threads)
    if code != EXIT_OK and fresh:
        try:
            out.rmdir()
        except OSError:
            pass
    return code


def _run(cfg, out: Path, threads: int) -> int:
    sweep = cfg.experiment == "sweep" and len(cfg.sweep.axes) > 0
    if sweep:
        # the table itself is the resume state, so it is written in place
        try:
            files = run_sweep(cfg, out, threads)
        except ConfigError as exc:
            return _fail("config", EXIT_CONFIG, exc)
        except NUMERIC_ERRORS as exc:
            for name in ("sweep.json", "sweep.csv.tmp"):
                (out / name).unlink(missing_ok=True)
            return _fail("numeric", EXIT_NUMERIC, exc)
    else:
        staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
        try:
            _, files = evaluate(cfg, staging, threads)
            for name in files:
                os.replace(staging / name, out / name)
        except ConfigError as exc:
            return _fail("config", EXIT_CONFIG, exc)
        except NUMERIC_ERRORS as exc:
            return _fail("numeric", EXIT_NUMERIC, exc)
        finally:
            shutil.rmtree(staging, ignore_errors=True)
    print(json.dumps({"status": "ok", "output_dir": str(out), "files": files}))
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
