"""Waveform primitives: resampling, zero-crossing detection, windowing, RMS.

All functions are pure and operate on immutable records, so callers are free
to parallelize over records.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import firwin, resample_poly

from .errors import InvalidArgumentError, UnsupportedError

DEFAULT_MAINS_HZ = 60.0


def _readonly_series(values, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"{name} must be a one-dimensional series")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class WaveformRecord:
    """Aligned voltage/current series of one appliance at a fixed sample rate."""

    voltage: np.ndarray
    current: np.ndarray
    sample_rate: float
    label: str

    def __post_init__(self) -> None:
        voltage = _readonly_series(self.voltage, "voltage")
        current = _readonly_series(self.current, "current")
        if voltage.size != current.size:
            raise InvalidArgumentError(
                f"voltage ({voltage.size}) and current ({current.size}) lengths differ"
            )
        if voltage.size < 2:
            raise InvalidArgumentError("a record needs at least 2 samples")
        if not self.sample_rate > 0:
            raise InvalidArgumentError("sample_rate must be positive")
        object.__setattr__(self, "voltage", voltage)
        object.__setattr__(self, "current", current)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self) -> int:
        return int(self.voltage.size)

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


def resample(record: WaveformRecord, target_rate: float) -> WaveformRecord:
    """Downsample a record to ``target_rate`` with an anti-alias FIR filter.

    The filter is a windowed-sinc low-pass with passband edge at 0.45 x the
    target rate (90% of the output Nyquist), applied polyphase before
    decimation. Output length is round(n * target_rate / sample_rate).
    """
    if not target_rate > 0:
        raise InvalidArgumentError("target_rate must be positive")
    if target_rate > record.sample_rate:
        raise UnsupportedError(
            f"upsampling not supported: target {target_rate} Hz exceeds "
            f"source {record.sample_rate} Hz"
        )
    if target_rate == record.sample_rate:
        return record

    ratio = Fraction(target_rate / record.sample_rate).limit_denominator(1_000_000)
    up, down = ratio.numerator, ratio.denominator
    half_len = 10 * max(up, down)
    taps = firwin(2 * half_len + 1, 0.45 * target_rate, fs=record.sample_rate * up)
    n_out = int(round(len(record) * target_rate / record.sample_rate))
    voltage = resample_poly(record.voltage, up, down, window=taps)[:n_out]
    current = resample_poly(record.current, up, down, window=taps)[:n_out]
    return WaveformRecord(voltage, current, target_rate, record.label)


def abscissa_crossings(voltage) -> np.ndarray:
    """Fractional positions of negative-to-positive zero crossings.

    Positions are linearly interpolated between the bracketing samples and
    strictly increasing. A series that opens at or below zero counts its
    first rise as a crossing. Returns an empty array when no crossing exists.
    """
    v = np.asarray(voltage, dtype=np.float64)
    if v.ndim != 1 or v.size < 2:
        raise InvalidArgumentError("need a one-dimensional series of length >= 2")
    positions = []
    below = v[0] <= 0.0
    for i in range(1, v.size):
        x = v[i]
        if below:
            if x > 0.0:
                prev = v[i - 1]
                positions.append((i - 1) + prev / (prev - x))
                below = False
        elif x < 0.0:
            below = True
    return np.asarray(positions, dtype=np.float64)


def extract_windows(
    record: WaveformRecord,
    periods_per_window: int,
    mains_hz: float = DEFAULT_MAINS_HZ,
) -> list[WaveformRecord]:
    """Cut a record into consecutive crossing-aligned windows.

    The first window starts at the first voltage abscissa crossing; all
    windows have the identical length round(periods_per_window * rate /
    mains_hz) and pairwise-disjoint source ranges. Records too short for a
    single window (or without any crossing) yield an empty list.
    """
    if periods_per_window < 1:
        raise InvalidArgumentError("periods_per_window must be >= 1")
    if not mains_hz > 0:
        raise InvalidArgumentError("mains_hz must be positive")
    window_len = int(round(periods_per_window * record.sample_rate / mains_hz))
    if window_len < 2 or window_len > len(record):
        return []
    crossings = abscissa_crossings(record.voltage)
    if crossings.size == 0:
        return []
    start = int(np.ceil(crossings[0]))
    windows = []
    while start + window_len <= len(record):
        sl = slice(start, start + window_len)
        windows.append(
            WaveformRecord(
                record.voltage[sl], record.current[sl], record.sample_rate, record.label
            )
        )
        start += window_len
    return windows


def rms(series) -> float:
    """Root mean square, sqrt(mean(x^2))."""
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise InvalidArgumentError("rms of an empty series is undefined")
    return float(np.sqrt(np.mean(np.square(x))))
