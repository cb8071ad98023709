"""Black-box system-under-test contract: scenario in, trace out."""
from __future__ import annotations

import json
import subprocess
import tempfile
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

from .library import ObjectLibrary
from .scenario import Scenario, save_scenario
from .traces import Trace, load_trace_json


class SutFailure(RuntimeError):
    """The SUT failed to produce a trace; carries the wrapped cause."""

    def __init__(self, message: str, cause: BaseException | None = None):
        self.cause = cause
        super().__init__(message)


class SignalContractViolation(ValueError):
    def __init__(self, missing: Sequence[str], extra: Sequence[str] = ()):
        self.missing = tuple(missing)
        self.extra = tuple(extra)
        parts = []
        if missing:
            parts.append(f"missing signals: {', '.join(missing)}")
        if extra:
            parts.append(f"undeclared signals: {', '.join(extra)}")
        super().__init__("; ".join(parts) or "signal contract violation")


@runtime_checkable
class SutInterface(Protocol):
    """Anything that maps scenarios to traces deterministically."""

    parallel_safe: bool

    @property
    def declared_signals(self) -> Sequence[str]: ...

    def run(self, scenario: Scenario) -> Trace: ...


def run_sut(scenario: Scenario, sut: SutInterface) -> Trace:
    """Execute the SUT and enforce its declared-signal contract."""
    try:
        trace = sut.run(scenario)
    except SutFailure:
        raise
    except Exception as exc:
        raise SutFailure(f"SUT raised {type(exc).__name__}: {exc}", exc) from exc
    declared = set(sut.declared_signals)
    present = set(trace.signal_names)
    if declared != present:
        raise SignalContractViolation(
            sorted(declared - present), sorted(present - declared)
        )
    return trace


class SubprocessSutAdapter:
    """Drives an external SUT process through the file-based protocol:

    ``<command...> --scenario <path> --map <path> --out <path>``

    exit 0 with trace JSON written at ``<path>``; any nonzero exit raises
    :class:`SutFailure`.
    """

    parallel_safe = False

    def __init__(
        self,
        command: Sequence[str],
        map_path: str,
        lib: ObjectLibrary,
        declared_signals: Sequence[str],
        timeout_s: float = 300.0,
    ):
        self.command = list(command)
        self.map_path = str(map_path)
        self.lib = lib
        self._declared = tuple(declared_signals)
        self.timeout_s = timeout_s

    @property
    def declared_signals(self) -> tuple[str, ...]:
        return self._declared

    def run(self, scenario: Scenario) -> Trace:
        with tempfile.TemporaryDirectory(prefix="curbfuzz-sut-") as tmp:
            scenario_path = Path(tmp) / "scenario.json"
            out_path = Path(tmp) / "trace.json"
            save_scenario(scenario, self.lib, scenario_path)
            cmd = self.command + [
                "--scenario", str(scenario_path),
                "--map", self.map_path,
                "--out", str(out_path),
            ]
            try:
                proc = subprocess.run(
                    cmd, capture_output=True, text=True, timeout=self.timeout_s
                )
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise SutFailure(f"adapter failed to run: {exc}", exc) from exc
            if proc.returncode != 0:
                raise SutFailure(
                    f"adapter exited {proc.returncode}: {proc.stderr.strip()[:500]}"
                )
            try:
                return load_trace_json(out_path)
            except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
                raise SutFailure(f"adapter produced no readable trace: {exc}", exc) from exc
