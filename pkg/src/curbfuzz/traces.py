"""Traces: time-indexed signal valuations produced by one SUT run."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

TRACE_FORMAT_VERSION = 1


@dataclass
class Trace:
    """Ordered scenes (index 0 = simulation start) stored column-wise.

    ``signals`` maps each signal name to a float64 array; all arrays share
    one length >= 1.  ``step_seconds`` maps step indices to wall time and
    is metadata only - the monitor works in steps.
    """

    signals: dict[str, np.ndarray]
    step_seconds: float = 0.1

    def __post_init__(self) -> None:
        if not self.signals:
            raise ValueError("trace must declare at least one signal")
        if self.step_seconds <= 0:
            raise ValueError("step_seconds must be positive")
        lengths = {name: len(v) for name, v in self.signals.items()}
        n = next(iter(lengths.values()))
        if n == 0 or any(m != n for m in lengths.values()):
            raise ValueError(f"inconsistent or empty signal lengths: {lengths}")
        self.signals = {
            name: np.asarray(v, dtype=np.float64) for name, v in self.signals.items()
        }

    def __len__(self) -> int:
        return len(next(iter(self.signals.values())))

    @property
    def signal_names(self) -> tuple[str, ...]:
        return tuple(self.signals)

    def scene(self, t: int) -> dict[str, float]:
        """Valuation of every signal at step ``t``."""
        return {name: float(v[t]) for name, v in self.signals.items()}

    @classmethod
    def from_scenes(
        cls, scenes: Iterable[Mapping[str, float]], step_seconds: float = 0.1
    ) -> "Trace":
        rows = list(scenes)
        if not rows:
            raise ValueError("trace must contain at least one scene")
        names = list(rows[0])
        for i, row in enumerate(rows):
            if set(row) != set(names):
                raise ValueError(f"scene {i} signal set differs from scene 0")
        cols = {
            name: np.array([row[name] for row in rows], dtype=np.float64)
            for name in names
        }
        return cls(cols, step_seconds)


def trace_to_csv(trace: Trace) -> str:
    """CSV with header ``t,<signal>,...`` and one row per time step."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = list(trace.signal_names)
    writer.writerow(["t"] + names)
    for t in range(len(trace)):
        writer.writerow([t] + [repr(float(trace.signals[n][t])) for n in names])
    return buf.getvalue()


def trace_from_csv(text: str, step_seconds: float = 0.1) -> Trace:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or header[0] != "t":
        raise ValueError("trace CSV must start with a 't,<signal>,...' header")
    names = header[1:]
    cols: list[list[float]] = [[] for _ in names]
    for row in reader:
        if not row:
            continue
        for i, cell in enumerate(row[1:]):
            cols[i].append(float(cell))
    return Trace({n: np.array(c, dtype=np.float64) for n, c in zip(names, cols)},
                 step_seconds)


def trace_to_json(trace: Trace) -> dict:
    return {
        "format_version": TRACE_FORMAT_VERSION,
        "step_seconds": trace.step_seconds,
        "signals": {n: [float(x) for x in trace.signals[n]] for n in trace.signal_names},
    }


def trace_from_json(obj: Mapping) -> Trace:
    return Trace(
        {n: np.array(v, dtype=np.float64) for n, v in obj["signals"].items()},
        float(obj.get("step_seconds", 0.1)),
    )


def save_trace_json(trace: Trace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(trace_to_json(trace), fh, indent=2)
        fh.write("\n")


def load_trace_json(path) -> Trace:
    with open(path, encoding="utf-8") as fh:
        return trace_from_json(json.load(fh))
