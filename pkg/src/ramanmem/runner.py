"""Experiment driver behind the ``simulate`` command.

``evaluate`` runs one spectrum / pulse / memory experiment and returns its
scalar outcomes, optionally writing CSV data with JSON sidecars into a
directory. ``run_sweep`` evaluates a grid of configs on a bounded process
pool and streams rows through a single writer.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__
from .atomic import AtomModel
from .config import UNITS, UNITS_NOTE, ConfigError, ExperimentConfig, apply_overrides
from .memory import Grid, ProtocolConfig, retrieve, store
from .susceptibility import (
    ControlField,
    MomentumDistribution,
    eit_diagnostics,
    find_at_resonances,
    scan_spectrum,
    susceptibility,
    write_spectrum_csv,
)
from .transport import MediumSpec, PulseSpec, propagate_pulse, pulse_metrics, write_waveform_csv

log = logging.getLogger(__name__)

__all__ = ["evaluate", "run_sweep", "scalar_columns", "reference_carrier", "sweep_points", "NUMERIC_ERRORS"]

# failures of the numerics, as opposed to configuration mistakes
NUMERIC_ERRORS = (ArithmeticError, ValueError, np.linalg.LinAlgError)


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.15e}"
    return json.dumps(x, sort_keys=True)


def _mode_tag(q: int) -> str:
    return f"q{q:+d}"


def build_atom(cfg: ExperimentConfig) -> AtomModel:
    return AtomModel(nuclear_spin=Fraction(cfg.atom.nuclear_spin).limit_denominator(2),
                     hyperfine_splitting=cfg.atom.hyperfine_splitting)


def build_distribution(cfg: ExperimentConfig) -> MomentumDistribution:
    th = cfg.spectrum.thermal
    return MomentumDistribution(kind=th.kind, mass=th.mass, temperature=th.temperature,
                                quadrature_order=th.quadrature_order, include_recoil=th.include_recoil)


def reference_carrier(atom: AtomModel, control: ControlField, reference: str) -> float:
    """Probe detuning that carrier offsets are measured from."""
    if reference == "line":
        return 0.0
    d, half = control.detuning, 2.0 * control.rabi + 10.0
    grid = np.linspace(d - half, d + half, int(round(2 * half / 0.005)) + 1)
    peaks = find_at_resonances(scan_spectrum(atom, control, grid))
    if not peaks:
        raise ValueError("no Autler-Townes resonance found near the control detuning")
    return min(peaks, key=lambda r: abs(r.center - d)).center


def scalar_columns(cfg: ExperimentConfig) -> list[str]:
    kind = cfg.run_kind
    if kind == "spectrum":
        return ["at_center", "at_height", "eit_shift", "residual_absorption"]
    cols = []
    for q in cfg.pulse.modes:
        t = _mode_tag(q)
        if kind == "pulse":
            cols += [f"delay_{t}", f"transmission_{t}", f"tail_{t}"]
        else:
            cols += [f"leakage_{t}"] + [f"efficiency_{d}_{t}" for d in cfg.memory.directions]
    return cols


class _Writer:
    """Writes data files and their sidecars into one directory."""

    def __init__(self, directory: Optional[Path], cfg: ExperimentConfig):
        self.dir = directory
        self.cfg = cfg
        self.files: list[str] = []

    def sidecar(self, name: str, extra: dict) -> dict:
        return {
            "file": name,
            "units": UNITS,
            "units_note": UNITS_NOTE,
            "code_version": __version__,
            "config": self.cfg.to_dict(),
            **extra,
        }

    def data(self, name: str, write: Callable[[Path], None], extra: dict) -> None:
        if self.dir is None:
            return
        write(self.dir / name)
        stem = name.rsplit(".", 1)[0]
        _write_json(self.dir / f"{stem}.json", self.sidecar(name, extra))
        self.files += [name, f"{stem}.json"]

    def json(self, name: str, payload: dict) -> None:
        if self.dir is None:
            return
        _write_json(self.dir / name, self.sidecar(name, payload))
        self.files.append(name)


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, Fraction):
        return float(o)
    raise TypeError(f"not serializable: {type(o)}")


def _nan_to_none(d: dict) -> dict:
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


def _spectrum(cfg: ExperimentConfig, out: _Writer) -> dict:
    atom = build_atom(cfg)
    dist = build_distribution(cfg)
    sp = cfg.spectrum
    detunings = list(sp.detunings) or [cfg.control.detuning]
    scalars: dict = {}
    for k, det in enumerate(detunings):
        control = ControlField.for_atom(atom, float(det), cfg.control.rabi)
        shift = float(det) if sp.relative else 0.0
        grid = np.linspace(sp.start, sp.stop, sp.points) + shift
        for model in sp.models:
            spec = scan_spectrum(atom, control, grid, dist, model)
            peaks = find_at_resonances(spec)
            near = min(peaks, key=lambda r: abs(r.center - det)) if peaks else None
            try:
                eit = eit_diagnostics(spec) if model != "bare" else (math.nan, math.nan)
            except ValueError:
                eit = (math.nan, math.nan)
            summary = {
                "at_center": near.center if near else math.nan,
                "at_height": near.height if near else math.nan,
                "eit_shift": eit[0],
                "residual_absorption": eit[1],
            }
            if k == 0 and model == sp.models[0]:
                scalars = summary
            name = f"spectrum_{model}.csv" if len(detunings) == 1 else f"spectrum_D{float(det):+g}_{model}.csv"
            out.data(name, lambda p, s=spec: write_spectrum_csv(p, s), {
                "columns": ["delta_bar_gamma", "chi_re", "chi_im", "model"],
                "model": model,
                "control_detuning": float(det),
                "chi_units": "n0 * lambdabar**3",
                "resonances": [[r.center, r.height, r.fwhm] for r in peaks],
                "diagnostics": _nan_to_none(summary),
            })
    return scalars


def _pulse_specs(cfg: ExperimentConfig, atom: AtomModel, control: ControlField):
    ref = reference_carrier(atom, control, cfg.pulse.carrier_reference)
    offset = ref + cfg.pulse.carrier_offset
    return ref, [PulseSpec(cfg.pulse.duration, carrier_offset=offset, mode_index=q) for q in cfg.pulse.modes]


def _pulse(cfg: ExperimentConfig, out: _Writer) -> dict:
    atom = build_atom(cfg)
    control = ControlField.for_atom(atom, cfg.control.detuning, cfg.control.rabi)
    medium = MediumSpec(cfg.medium.depth * cfg.medium.density_scale, 1.0, cfg.medium.retardation)
    ref, pulses = _pulse_specs(cfg, atom, control)
    dist = build_distribution(cfg)
    chi = lambda d: susceptibility(atom, control, d, dist, "full")  # noqa: E731
    scalars = {}
    p = cfg.pulse
    for q, pulse in zip(p.modes, pulses):
        rec = propagate_pulse(pulse, medium, chi, samples_per_period=p.samples_per_period,
                              t_before=p.t_before, t_after=p.t_after)
        delay, trans, tail = pulse_metrics(rec, pulse)
        t = _mode_tag(q)
        scalars.update({f"delay_{t}": delay, f"transmission_{t}": trans, f"tail_{t}": tail})
        out.data(f"waveform_{t}.csv", lambda path, r=rec: write_waveform_csv(path, r.time_grid, r.amplitude), {
            "columns": ["t_gamma", "re_alpha", "im_alpha", "abs2"],
            "mode_index": q,
            "carrier": pulse.carrier,
            "reference_carrier": ref,
            "pulse": pulse.to_dict(),
            "metrics": {"delay": delay, "transmission": trans, "tail_fraction": tail},
            "solver": rec.metadata,
        })
        if q == p.modes[0]:
            out.data("waveform_input.csv",
                     lambda path, r=rec: write_waveform_csv(path, r.time_grid, r.input_amplitude),
                     {"columns": ["t_gamma", "re_alpha", "im_alpha", "abs2"], "pulse": pulse.to_dict(),
                      "note": "input envelope, equal to the output without atoms"})
    return scalars


def _protocol(cfg: ExperimentConfig, atom, control, pulse, direction: str) -> ProtocolConfig:
    m = cfg.memory
    medium = MediumSpec(cfg.medium.depth * cfg.medium.density_scale, 1.0, cfg.medium.retardation)
    return ProtocolConfig(
        atom=atom, pulse=pulse, medium=medium, control=control, write_off_time=m.write_off_time,
        storage_time=m.storage_time, read_direction=direction, switch_profile=m.switch_profile,
        ramp_time=m.ramp_time, spin_decay=m.spin_decay, settle_time=m.settle_time,
        read_time=m.read_time, grid=Grid(nz=m.nz, dt=m.dt),
    )


def _memory_mode(cfg_dict: dict, q: int) -> dict:
    """One carrier: write-in, storage, then each requested read direction."""
    cfg = ExperimentConfig.from_dict(cfg_dict)
    atom = build_atom(cfg)
    control = ControlField.for_atom(atom, cfg.control.detuning, cfg.control.rabi)
    ref, pulses = _pulse_specs(cfg, atom, control)
    pulse = pulses[cfg.pulse.modes.index(q)]
    dirs = cfg.memory.directions
    rep, state = store(_protocol(cfg, atom, control, pulse, dirs[0]))
    res = {
        "mode_index": q, "carrier": pulse.carrier, "reference_carrier": ref,
        "leakage": rep.leakage, "input_energy": rep.input_energy, "stored_energy": rep.stored_energy,
        "zeta": rep.zeta, "sigma": rep.spin_wave, "sigma_at_switch": rep.spin_wave_at_switch,
        "leak_t": rep.write.t, "leak_alpha": rep.write.output, "write_dissipated": rep.dissipated,
        "reads": {},
    }
    for d in dirs:
        rd = retrieve(_protocol(cfg, atom, control, pulse, d), state, rep.input_energy)
        tr = rd.read
        res["reads"][d] = {
            "efficiency": rd.efficiency, "dissipated": rd.dissipated,
            "residual": float(tr.optical_energy[-1] + tr.spin_energy[-1]) / rep.input_energy,
            "local_error": max(rep.write.local_error, tr.local_error),
            "t": rd.retrieved_waveform.time_grid, "alpha": rd.retrieved_waveform.amplitude,
        }
    return res


def _pool_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as ex:
        futs = [ex.submit(fn, *it) for it in items]
        return [f.result() for f in futs]


def _write_sigma(path, zeta, sigma) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["zeta", "re_sigma", "im_sigma", "abs2"])
        for z, s in zip(zeta, sigma):
            w.writerow([f"{z:.15e}", f"{s.real:.15e}", f"{s.imag:.15e}", f"{abs(s) ** 2:.15e}"])


def _memory(cfg: ExperimentConfig, out: _Writer, threads: int = 1) -> dict:
    d = cfg.to_dict()
    results = _pool_map(_memory_mode, [(d, q) for q in cfg.pulse.modes], threads)
    scalars = {}
    for res in results:
        t = _mode_tag(res["mode_index"])
        scalars[f"leakage_{t}"] = res["leakage"]
        for dname, rd in res["reads"].items():
            scalars[f"efficiency_{dname}_{t}"] = rd["efficiency"]
        common = {"mode_index": res["mode_index"], "carrier": res["carrier"],
                  "reference_carrier": res["reference_carrier"]}
        out.data(f"sigma_{t}.csv", lambda p, r=res: _write_sigma(p, r["zeta"], r["sigma"]), {
            **common, "columns": ["zeta", "re_sigma", "im_sigma", "abs2"],
            "note": "spin wave at the end of the dark interval; int |sigma|^2 dzeta is the stored energy",
        })
        out.data(f"leakage_{t}.csv", lambda p, r=res: write_waveform_csv(p, r["leak_t"], r["leak_alpha"]), {
            **common, "columns": ["t_gamma", "re_alpha", "im_alpha", "abs2"], "leakage": res["leakage"],
        })
        for dname, rd in res["reads"].items():
            out.data(f"retrieved_{t}_{dname}.csv",
                     lambda p, r=rd: write_waveform_csv(p, r["t"], r["alpha"]),
                     {**common, "columns": ["t_gamma", "re_alpha", "im_alpha", "abs2"],
                      "direction": dname, "efficiency": rd["efficiency"]})
        out.json(f"memory_{t}.json", {
            **common,
            "leakage": res["leakage"],
            "input_energy": res["input_energy"],
            "stored_energy": res["stored_energy"],
            "write_dissipated": res["write_dissipated"],
            "retrieval": {k: {kk: v[kk] for kk in ("efficiency", "dissipated", "residual", "local_error")}
                          for k, v in res["reads"].items()},
            "grids": {"nz": cfg.memory.nz, "dt": cfg.memory.dt, "zeta": res["zeta"]},
            "spin_wave": {"re": res["sigma"].real, "im": res["sigma"].imag},
        })
    return scalars


def evaluate(cfg: ExperimentConfig, directory: Optional[Path] = None, threads: int = 1) -> tuple[dict, list[str]]:
    """Run ``cfg.run_kind`` once; returns (scalars, files written)."""
    out = _Writer(Path(directory) if directory is not None else None, cfg)
    kind = cfg.run_kind
    if kind == "spectrum":
        scalars = _spectrum(cfg, out)
    elif kind == "pulse":
        scalars = _pulse(cfg, out)
    else:
        scalars = _memory(cfg, out, threads)
    if directory is not None:
        payload = {"experiment": kind, "scalars": _nan_to_none(scalars)}
        if kind == "spectrum":
            # one scalar set per run: the first detuning and model; sidecars hold the rest
            payload["scalars_from"] = {"model": cfg.spectrum.models[0],
                                       "control_detuning": (cfg.spectrum.detunings or [cfg.control.detuning])[0]}
        out.json("summary.json", payload)
    return scalars, out.files


def sweep_points(cfg: ExperimentConfig) -> list[tuple]:
    return list(itertools.product(*[a.values for a in cfg.sweep.axes]))


def _point(cfg_dict: dict, names: tuple, values: tuple) -> dict:
    cfg = apply_overrides(ExperimentConfig.from_dict(cfg_dict), list(zip(names, values)))
    scalars, _ = evaluate(cfg)
    return scalars


def _row_key(values) -> tuple:
    return tuple(_fmt(v) for v in values)


def run_sweep(cfg: ExperimentConfig, directory: Path, threads: int = 1) -> list[str]:
    """Tabulate scalar outcomes over the sweep grid into ``sweep.csv``.

    Rows already present with status ``ok`` are kept and not recomputed.
    Failed points become rows tagged ``error:<type>``. The finished table
    is rewritten in grid order, so reruns are byte-identical.
    """
    directory = Path(directory)
    names = tuple(a.name for a in cfg.sweep.axes)
    cols = scalar_columns(cfg)
    header = list(names) + cols + ["status"]
    path = directory / "sweep.csv"
    done: dict = {}
    if path.exists():
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if rows and rows[0] == header:
            for r in rows[1:]:
                if len(r) == len(header) and r[-1] == "ok":
                    done[tuple(r[: len(names)])] = r
        else:
            log.warning("existing sweep.csv has a different header; recomputing all points")
    points = sweep_points(cfg)
    todo = [p for p in points if _row_key(p) not in done]
    log.info("sweep: %d points, %d already done", len(points), len(points) - len(todo))

    # rows are appended as they finish so an interrupted sweep can resume
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in done.values():
            w.writerow(r)
        fh.flush()

        def emit(p, scalars, status):
            row = list(_row_key(p)) + [_fmt(float(scalars.get(c, math.nan))) for c in cols] + [status]
            done[_row_key(p)] = row
            w.writerow(row)
            fh.flush()

        base = cfg.to_dict()
        if threads <= 1:
            for p in todo:
                try:
                    emit(p, _point(base, names, p), "ok")
                except (ConfigError, *NUMERIC_ERRORS) as exc:
                    emit(p, {}, _status(exc))
        elif todo:
            with ProcessPoolExecutor(max_workers=threads) as ex:
                futs = {ex.submit(_point, base, names, p): p for p in todo}
                for f in as_completed(futs):
                    try:
                        emit(futs[f], f.result(), "ok")
                    except (ConfigError, *NUMERIC_ERRORS) as exc:
                        emit(futs[f], {}, _status(exc))

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for p in points:
        w.writerow(done[_row_key(p)])
    tmp = path.with_suffix(".csv.tmp")
    tmp.write_text(buf.getvalue())
    os.replace(tmp, path)
    out = _Writer(directory, cfg)
    _write_json(directory / "sweep.json", out.sidecar("sweep.csv", {
        "columns": header, "axes": {a.name: a.values for a in cfg.sweep.axes}, "measure": cfg.sweep.measure,
    }))
    return ["sweep.csv", "sweep.json"]


def _status(exc: BaseException) -> str:
    msg = " ".join(str(exc).split()).replace(",", ";")
    return f"error:{type(exc).__name__}:{msg}"
