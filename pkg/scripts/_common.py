"""Shared helpers for the figure scripts."""
import argparse
import csv
import json
from pathlib import Path

from ramanmem.config import apply_overrides, load_config
from ramanmem.runner import evaluate


def parser(description: str, preset: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out", default=f"out/{preset}", help="output directory")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    return p


def run(preset: str, args) -> tuple[dict, Path]:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = apply_overrides(load_config(preset), list(args.override) + [("output_dir", str(out))])
    scalars, _ = evaluate(cfg, out, args.threads)
    return scalars, out


def read_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    cols = {h: [] for h in rows[0]}
    for r in rows[1:]:
        for h, v in zip(rows[0], r):
            try:
                cols[h].append(float(v))
            except ValueError:
                cols[h].append(v)
    return cols


def sidecar(path) -> dict:
    return json.loads(Path(path).with_suffix(".json").read_text())


def pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt
