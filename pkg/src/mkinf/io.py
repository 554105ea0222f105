"""JSON and CSV formats for measures, curves, processes and couplings."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any

import numpy as np

from .measures import DiscreteMeasure, MeasureCurve, SampleFlags, TimeGrid
from .ot_core import Coupling, TransportMap
from .process import ProcessRepresentation


class FormatError(ValueError):
    """Input file does not match the expected schema."""


def dumps(obj: Any) -> str:
    """Deterministic JSON text (sorted keys, round-trip float repr)."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def read_json(path: str | Path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc


def write_json(obj: Any, path: str | Path) -> None:
    Path(path).write_text(dumps(obj))


def _floats(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def measure_to_dict(mu: DiscreteMeasure) -> dict:
    return {"dim": mu.dim, "points": _floats(mu.points), "weights": _floats(mu.weights)}


def measure_from_dict(d: dict) -> DiscreteMeasure:
    try:
        dim = int(d["dim"])
        points = np.asarray(d["points"], dtype=float).reshape(-1, dim)
        weights = d["weights"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad measure object: {exc}") from exc
    try:
        return DiscreteMeasure(points, weights)
    except ValueError as exc:
        raise FormatError(f"invalid measure: {exc}") from exc


def curve_to_dict(curve: MeasureCurve) -> dict:
    samples = []
    for t, mu, f in zip(curve.times, curve.measures, curve.flags):
        s = {"t": float(t), "measure": measure_to_dict(mu)}
        if f.is_ac:
            s["is_ac"] = True
        if f.linf is not None:
            s["linf"] = float(f.linf)
        samples.append(s)
    return {"samples": samples, "interpolation": curve.interpolation}


def curve_from_dict(d: dict) -> MeasureCurve:
    try:
        samples = d["samples"]
        times = [float(s["t"]) for s in samples]
        measures = tuple(measure_from_dict(s["measure"]) for s in samples)
        flags = tuple(
            SampleFlags(bool(s.get("is_ac", False)), None if s.get("linf") is None else float(s["linf"]))
            for s in samples
        )
        return MeasureCurve(times, measures, d.get("interpolation", "nearest"), flags)
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad curve object: {exc}") from exc


def process_to_dict(proc: ProcessRepresentation) -> dict:
    return {
        "base": measure_to_dict(proc.base),
        "barycenter": measure_to_dict(proc.barycenter),
        "maps": [
            {"t": float(t), "weight": float(w), "kind": m.kind, "images": _floats(m.images)}
            for (t, m), w in zip(proc.time_maps, proc.grid.weights)
        ],
    }


def process_from_dict(d: dict) -> ProcessRepresentation:
    try:
        base = measure_from_dict(d["base"])
        bary = measure_from_dict(d["barycenter"]) if "barycenter" in d else base
        entries = d["maps"]
        times = [float(e["t"]) for e in entries]
        if all("weight" in e for e in entries):
            weights = [float(e["weight"]) for e in entries]
        else:
            weights = [1.0 / len(entries)] * len(entries)
        maps = tuple(
            (t, TransportMap(base, np.asarray(e["images"], dtype=float).reshape(-1, base.dim), e.get("kind", "exact_monge")))
            for t, e in zip(times, entries)
        )
        return ProcessRepresentation(base, maps, TimeGrid(times, weights), bary)
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad process object: {exc}") from exc


def load_measure(path) -> DiscreteMeasure:
    return measure_from_dict(read_json(path))


def load_curve(path) -> MeasureCurve:
    return curve_from_dict(read_json(path))


def load_process(path) -> ProcessRepresentation:
    return process_from_dict(read_json(path))


def coupling_csv(plan: Coupling) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row", "col", "mass"])
    for i, j, m in plan.to_rows():
        writer.writerow([i, j, repr(m)])
    return buf.getvalue()
