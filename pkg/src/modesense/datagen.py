"""Synthetic labeled sensor traces for five transportation modes.

Real recordings of this kind are not redistributable, so every downstream
stage is exercised against a generator with documented per-mode signatures.
Each mode is a sum of sinusoids on the accelerometer axes plus Gaussian
noise; gyroscope and rotation-vector channels are scaled, time-shifted
copies with independent noise. Signatures (dominant frequency Hz / amplitude):

    Walk   2.0 / 1.0
    Run    3.0 / 2.5
    Bike   1.2 / 0.8
    Car    0.3 / 0.35  plus engine vibration 15.0 / 0.08
    Bus    0.2 / 0.4   amplitude-modulated (stop-and-go) at 0.05 Hz

The Car main-tone and vibration amplitudes were tuned (from 0.3/0.1) so the
dominant-bin property below holds: the 15 Hz vibration aliases to 10 Hz
through the 25 Hz base sampling and its spectral line must stay below the
main tone's worst-phase leakage into bin 1.

With noise=0 and jitter=0 the strongest non-DC DFT bin of every 1-second
accelerometer window is the mode's documented dominant bin (`DOMINANT_BIN`).
Sample timestamps sit on the nominal base-rate grid; interior samples get
uniform jitter while the first and last samples are pinned to 0 and the
trace duration, so a duration-D trace always spans exactly [0, D].
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .util import atomic_write_text, subseed

SENSORS = ("accel", "gyro", "rotvec")
AXES = ("x", "y", "z")

#: Per-axis amplitude scale and phase offset applied to every tone.
_AXIS_SCALE = {"x": 1.0, "y": 0.7, "z": 0.45}
_AXIS_PHASE = {"x": 0.0, "y": 2.1, "z": 4.2}

#: Copies on the other sensors: (amplitude scale, time shift in seconds).
_SENSOR_COPY = {"accel": (1.0, 0.0), "gyro": (0.5, 0.12), "rotvec": (0.25, 0.23)}


class ModeLabel(IntEnum):
    """The five transportation modes; index order is fixed and used for
    tie-breaking throughout (lower index wins)."""

    BIKE = 0
    CAR = 1
    WALK = 2
    RUN = 3
    BUS = 4

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def from_name(cls, name: str) -> "ModeLabel":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown mode label: {name!r}") from None


#: (frequency Hz, amplitude) tones per mode, strongest first.
SIGNATURES: dict[ModeLabel, tuple[tuple[float, float], ...]] = {
    ModeLabel.WALK: ((2.0, 1.0),),
    ModeLabel.RUN: ((3.0, 2.5),),
    ModeLabel.BIKE: ((1.2, 0.8),),
    ModeLabel.CAR: ((0.3, 0.35), (15.0, 0.08)),
    ModeLabel.BUS: ((0.2, 0.4),),
}

#: Stop-and-go envelope for the bus: never drops below 0.3 of full amplitude.
_BUS_MOD_HZ = 0.05

#: Strongest non-DC bin of a clean 1-s window at 100 Hz, per mode.
DOMINANT_BIN = {
    ModeLabel.BIKE: 1,
    ModeLabel.CAR: 1,
    ModeLabel.WALK: 2,
    ModeLabel.RUN: 3,
    ModeLabel.BUS: 1,
}


@dataclass(frozen=True)
class GenSpec:
    """Generator parameters; the seed fully determines the output."""

    duration_s: float = 1800.0  # per mode
    base_hz: float = 25.0
    jitter: float = 0.1  # fraction of the nominal sample interval
    noise: float = 0.2  # Gaussian sigma, sensor units
    seed: int = 0

    def validate(self) -> None:
        if not self.duration_s > 0:
            raise ValueError(f"per-mode duration must be > 0, got {self.duration_s}")
        if not 1.0 <= self.base_hz <= 100.0:
            raise ValueError(f"base sample rate must be in [1, 100] Hz, got {self.base_hz}")
        if not 0.0 <= self.jitter < 0.5:
            raise ValueError(f"jitter fraction must be in [0, 0.5), got {self.jitter}")
        if self.noise < 0:
            raise ValueError(f"noise sigma must be >= 0, got {self.noise}")

    def to_dict(self) -> dict:
        return {
            "duration_s": self.duration_s,
            "base_hz": self.base_hz,
            "jitter": self.jitter,
            "noise": self.noise,
            "seed": int(self.seed),
        }


@dataclass
class SensorTrace:
    """One labeled recording: 9 channels of (timestamp, value) samples.

    channels maps (sensor, axis) to a pair of equal-length float arrays
    (timestamps seconds, values). Timestamps are strictly increasing per
    channel; axes of one sensor share a time base but are stored separately.
    """

    mode: ModeLabel
    channels: dict[tuple[str, str], tuple[np.ndarray, np.ndarray]]

    def validate(self) -> None:
        expected = {(s, a) for s in SENSORS for a in AXES}
        present = set(self.channels)
        if present != expected:
            missing = sorted(expected - present)
            extra = sorted(present - expected)
            raise ValueError(f"trace channels mismatch: missing {missing}, unexpected {extra}")
        for key, (ts, vals) in self.channels.items():
            if len(ts) != len(vals):
                raise ValueError(f"channel {key}: {len(ts)} timestamps vs {len(vals)} values")
            if len(ts) < 2:
                raise ValueError(f"channel {key}: needs at least 2 samples, got {len(ts)}")
            if not np.all(np.diff(ts) > 0):
                raise ValueError(f"channel {key}: timestamps must be strictly increasing")

    def duration(self) -> float:
        return min(ts[-1] for ts, _ in self.channels.values()) - max(
            ts[0] for ts, _ in self.channels.values()
        )


def _clean_signal(mode: ModeLabel, t: np.ndarray, axis: str) -> np.ndarray:
    """Noise-free continuous signal for one accel axis evaluated at times t."""
    scale = _AXIS_SCALE[axis]
    phase = _AXIS_PHASE[axis]
    out = np.zeros_like(t)
    for k, (freq, amp) in enumerate(SIGNATURES[mode]):
        out += amp * np.sin(2.0 * np.pi * freq * t + phase + 0.9 * k)
    if mode is ModeLabel.BUS:
        out *= 0.65 + 0.35 * np.sin(2.0 * np.pi * _BUS_MOD_HZ * t + 0.3 * phase)
    return scale * out


def _sample_times(n: int, duration_s: float, base_hz: float, jitter: float,
                  rng: np.random.Generator) -> np.ndarray:
    ts = np.arange(n) / base_hz
    if jitter > 0 and n > 2:
        ts[1:-1] += rng.uniform(-jitter, jitter, n - 2) / base_hz
    ts[-1] = duration_s
    return ts


def generate_trace(mode: ModeLabel, duration_s: float, spec: GenSpec) -> SensorTrace:
    """Generate one labeled trace.

    Pure function of (mode, duration_s, spec): the RNG is seeded from
    (spec.seed, mode index), so repeated calls are bit-identical and the
    per-mode traces of a dataset are mutually independent.
    """
    spec.validate()
    if not duration_s > 0:
        raise ValueError(f"trace duration must be > 0, got {duration_s}")
    rng = np.random.default_rng(subseed(spec.seed, "trace", int(mode)))
    n = int(round(duration_s * spec.base_hz)) + 1

    channels: dict[tuple[str, str], tuple[np.ndarray, np.ndarray]] = {}
    for sensor in SENSORS:
        scale, shift = _SENSOR_COPY[sensor]
        ts = _sample_times(n, duration_s, spec.base_hz, spec.jitter, rng)
        for axis in AXES:
            vals = scale * _clean_signal(mode, ts - shift, axis)
            if spec.noise > 0:
                vals = vals + rng.normal(0.0, spec.noise, n)
            channels[(sensor, axis)] = (ts, vals)

    trace = SensorTrace(mode=mode, channels=channels)
    trace.validate()
    return trace


def generate_dataset(spec: GenSpec) -> list[SensorTrace]:
    """One trace per mode, equal durations (balanced by construction)."""
    spec.validate()
    return [generate_trace(mode, spec.duration_s, spec) for mode in ModeLabel]


# ---------------------------------------------------------------------------
# Disk format: one CSV per trace (timestamp,sensor,axis,value) plus a JSON
# manifest naming the files, modes, and generator spec.
# ---------------------------------------------------------------------------

TRACE_HEADER = "timestamp,sensor,axis,value"
MANIFEST_NAME = "manifest.json"


def trace_filename(mode: ModeLabel) -> str:
    return f"trace_{mode.label.lower()}.csv"


def write_trace_csv(trace: SensorTrace, path: str | os.PathLike) -> None:
    lines = [TRACE_HEADER]
    for sensor in SENSORS:
        for axis in AXES:
            ts, vals = trace.channels[(sensor, axis)]
            lines.extend(
                f"{t!r},{sensor},{axis},{v!r}" for t, v in zip(ts.tolist(), vals.tolist())
            )
    lines.append("")
    atomic_write_text(path, "\n".join(lines))


def read_trace_csv(path: str | os.PathLike, mode: ModeLabel) -> SensorTrace:
    raw: dict[tuple[str, str], tuple[list, list]] = {}
    with open(path, "r") as handle:
        header = handle.readline().strip()
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: expected header {TRACE_HEADER!r}, got {header!r}")
        for lineno, line in enumerate(handle, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
            t, sensor, axis, v = parts
            raw.setdefault((sensor, axis), ([], []))
            raw[(sensor, axis)][0].append(float(t))
            raw[(sensor, axis)][1].append(float(v))
    channels = {
        key: (np.asarray(ts, dtype=float), np.asarray(vals, dtype=float))
        for key, (ts, vals) in raw.items()
    }
    trace = SensorTrace(mode=mode, channels=channels)
    trace.validate()
    return trace


def write_dataset(traces: list[SensorTrace], directory: str | os.PathLike,
                  spec: GenSpec) -> Path:
    """Write per-trace CSVs and the manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for trace in traces:
        fname = trace_filename(trace.mode)
        write_trace_csv(trace, directory / fname)
        entries.append({"file": fname, "mode": trace.mode.label})
    manifest = {
        "format_version": 1,
        "spec": spec.to_dict(),
        "traces": entries,
    }
    path = directory / MANIFEST_NAME
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_dataset(directory: str | os.PathLike) -> list[SensorTrace]:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    try:
        with open(manifest_path, "r") as handle:
            manifest = json.load(handle)
    except FileNotFoundError:
        raise ValueError(f"no {MANIFEST_NAME} in {directory}") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"{manifest_path}: invalid JSON ({exc})") from None
    traces = []
    for entry in manifest["traces"]:
        mode = ModeLabel.from_name(entry["mode"])
        traces.append(read_trace_csv(directory / entry["file"], mode))
    return traces
