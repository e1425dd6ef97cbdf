"""Resampling, summation channels, windowing, and first differences.

Raw channels are asynchronous; they are linearly interpolated onto a shared
100 Hz grid spanning [latest first timestamp, earliest last timestamp] so no
channel is ever extrapolated. Per-sensor summation channels are the
algebraic sum x+y+z (a Euclidean-norm variant is available via ``method``).
Windows are non-overlapping 1-second cuts; a trailing partial window is
dropped, never padded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datagen import AXES, SENSORS, ModeLabel, SensorTrace

TARGET_HZ = 100
WINDOW_SAMPLES = 100
DT = 1.0 / TARGET_HZ

AXIS_CHANNELS = tuple(f"{sensor}_{axis}" for sensor in SENSORS for axis in AXES)
SUM_CHANNELS = tuple(f"{sensor}_sum" for sensor in SENSORS)
ALL_CHANNELS = AXIS_CHANNELS + SUM_CHANNELS


@dataclass
class ResampledChannels:
    """Synchronized uniform-rate streams, one equal-length array per channel."""

    rate_hz: float
    start_time: float
    channels: dict[str, np.ndarray]

    def length(self) -> int:
        return len(next(iter(self.channels.values())))


@dataclass
class Window:
    """One 1-second snapshot: 100 samples per channel; the classification unit."""

    mode: ModeLabel
    channels: dict[str, np.ndarray]

    def validate(self) -> None:
        for name, arr in self.channels.items():
            if len(arr) != WINDOW_SAMPLES:
                raise ValueError(f"window channel {name}: {len(arr)} samples, want {WINDOW_SAMPLES}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"window channel {name}: non-finite samples")


def interpolate_resample(trace: SensorTrace, target_hz: float = TARGET_HZ) -> ResampledChannels:
    """Linear interpolation of every channel onto one uniform grid.

    The grid starts at the latest first timestamp over all channels and ends
    at or before the earliest last timestamp, so values are always
    interpolated between recorded samples.
    """
    trace.validate()
    t_start = max(ts[0] for ts, _ in trace.channels.values())
    t_end = min(ts[-1] for ts, _ in trace.channels.values())
    if t_end <= t_start:
        raise ValueError("channels do not overlap in time; nothing to resample")
    n = int(math.floor((t_end - t_start) * target_hz)) + 1
    grid = t_start + np.arange(n) / target_hz

    channels = {}
    for (sensor, axis), (ts, vals) in trace.channels.items():
        channels[f"{sensor}_{axis}"] = np.interp(grid, ts, vals)
    return ResampledChannels(rate_hz=target_hz, start_time=t_start, channels=channels)


def derive_sum_channels(resampled: ResampledChannels, method: str = "sum") -> ResampledChannels:
    """Add one summation channel per sensor: x+y+z per sample.

    method="norm" switches to sqrt(x^2+y^2+z^2) for the variant reading of
    a combined-magnitude channel.
    """
    if method not in ("sum", "norm"):
        raise ValueError(f"summation method must be 'sum' or 'norm', got {method!r}")
    channels = dict(resampled.channels)
    for sensor in SENSORS:
        try:
            x, y, z = (channels[f"{sensor}_{axis}"] for axis in AXES)
        except KeyError as exc:
            raise ValueError(f"missing axis channel {exc.args[0]!r} for sensor {sensor!r}") from None
        if method == "sum":
            channels[f"{sensor}_sum"] = x + y + z
        else:
            channels[f"{sensor}_sum"] = np.sqrt(x * x + y * y + z * z)
    return ResampledChannels(resampled.rate_hz, resampled.start_time, channels)


def segment_windows(resampled: ResampledChannels, mode: ModeLabel,
                    width_s: float = 1.0) -> list[Window]:
    """Cut non-overlapping windows of width_s; the remainder tail is dropped.

    Fewer samples than one window yields an empty list.
    """
    step = int(round(width_s * resampled.rate_hz))
    n = resampled.length()
    count = n // step
    windows = []
    for w in range(count):
        sl = slice(w * step, (w + 1) * step)
        windows.append(Window(mode=mode, channels={
            name: arr[sl] for name, arr in resampled.channels.items()
        }))
    return windows


def derivative(series: np.ndarray, dt: float = DT) -> np.ndarray:
    """Forward difference (s[k+1] - s[k]) / dt; output is one shorter."""
    series = np.asarray(series, dtype=float)
    if series.size < 2:
        raise ValueError(f"derivative needs at least 2 samples, got {series.size}")
    return np.diff(series) / dt


def trace_to_windows(trace: SensorTrace, sum_method: str = "sum") -> list[Window]:
    """Convenience: resample, add summation channels, and window one trace."""
    resampled = derive_sum_channels(interpolate_resample(trace), method=sum_method)
    return segment_windows(resampled, trace.mode)


def resampled_debug_csv(resampled: ResampledChannels) -> str:
    """Debug dump: long-format CSV `timestamp,channel,value`."""
    lines = ["timestamp,channel,value"]
    n = resampled.length()
    times = resampled.start_time + np.arange(n) / resampled.rate_hz
    for name in ALL_CHANNELS:
        if name not in resampled.channels:
            continue
        arr = resampled.channels[name]
        lines.extend(f"{t!r},{name},{v!r}" for t, v in zip(times.tolist(), arr.tolist()))
    lines.append("")
    return "\n".join(lines)
