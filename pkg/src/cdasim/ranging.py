"""Time-of-flight estimation from a repeated ranging return."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import fft as sfft
from scipy.interpolate import CubicSpline

from . import _io
from .channel import active_power
from .constants import SPEED_OF_LIGHT
from .waveform import SignalBuffer, WaveformSpec

SPLINE_HALF_WINDOW = 3
DEFAULT_OVERSAMPLE = 8
DEFAULT_REFINE_POINTS = 1000


@dataclass(frozen=True, eq=False)
class CorrelationBuffer:
    """Matched-filter magnitude on a uniform lag grid.

    ``values[i]`` is the magnitude at lag ``first_lag + i * lag_axis``
    seconds.  ``complex_values`` keeps the underlying complex correlation.
    """

    values: np.ndarray
    lag_axis: float
    peak_index: int
    first_lag: float = 0.0
    complex_values: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size == 0:
            raise ValueError("empty correlation")
        if not 0 <= self.peak_index < v.size or v[self.peak_index] < v.max():
            raise ValueError("peak_index does not maximize values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def lags(self) -> np.ndarray:
        return self.first_lag + np.arange(self.values.size) * self.lag_axis

    @property
    def peak_lag(self) -> float:
        return self.first_lag + self.peak_index * self.lag_axis


@dataclass(frozen=True)
class RangeEstimate:
    delay: float
    range: float
    peak_value: float
    timestamp: int = 0


def matched_filter(
    received: SignalBuffer,
    template: SignalBuffer,
    *,
    oversample: int = DEFAULT_OVERSAMPLE,
    max_lag: float | None = None,
) -> CorrelationBuffer:
    """Correlate ``received`` against ``template`` over all lags.

    The lag grid is refined ``oversample`` times by zero-padding the cross
    spectrum, which is exact for band-limited inputs.  ``max_lag`` (seconds)
    restricts the output to ``|lag| <= max_lag``; this is the range gate.
    Ties in the peak search go to the smaller lag.
    """
    if len(received) == 0 or len(template) == 0:
        raise ValueError("empty input")
    if len(template) > len(received):
        raise ValueError("template longer than received signal")
    if received.sample_rate != template.sample_rate:
        raise ValueError("sample rates differ")
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    fs = received.sample_rate
    lr, ls = len(received), len(template)
    if max_lag is None:
        lo, hi = -(ls - 1), lr - 1
        size = sfft.next_fast_len(lr + ls - 1)
    else:
        m = int(math.floor(max_lag * fs + 1e-9))
        lo, hi = -min(m, ls - 1), min(m, lr - 1)
        size = sfft.next_fast_len(max(lr, ls) + m + 1)
    size += size % 2
    spec = sfft.fft(received.samples, size) * np.conj(sfft.fft(template.samples, size))
    if oversample > 1:
        h = size // 2
        padded = np.zeros(size * oversample, dtype=complex)
        padded[:h] = spec[:h]
        padded[-h + 1 :] = spec[h + 1 :]
        padded[h] = padded[-h] = spec[h] / 2
        spec = padded
    full = sfft.ifft(spec) * oversample
    idx = np.arange(lo * oversample, hi * oversample + 1)
    if max_lag is not None:
        idx = idx[np.abs(idx) <= max_lag * fs * oversample + 1e-9]
    corr = full[idx % full.size]
    mag = np.abs(corr)
    return CorrelationBuffer(
        values=mag,
        lag_axis=1 / (fs * oversample),
        peak_index=int(np.argmax(mag)),
        first_lag=idx[0] / (fs * oversample),
        complex_values=corr,
    )


def _refine(corr: CorrelationBuffer, refine_points: int) -> tuple[float, float]:
    k = corr.peak_index
    if refine_points <= 1:
        return corr.peak_lag, float(corr.values[k])
    if k < SPLINE_HALF_WINDOW or k >= corr.values.size - SPLINE_HALF_WINDOW:
        raise ValueError("correlation peak too close to the buffer edge to interpolate")
    offsets = np.arange(-SPLINE_HALF_WINDOW, SPLINE_HALF_WINDOW + 1)
    spline = CubicSpline(offsets, corr.values[k + offsets])
    grid = np.linspace(-1.0, 1.0, refine_points)
    fitted = spline(grid)
    best = int(np.argmax(fitted))
    return corr.first_lag + (k + grid[best]) * corr.lag_axis, float(fitted[best])


def interpolate_peak(corr: CorrelationBuffer, refine_points: int = DEFAULT_REFINE_POINTS) -> float:
    """Sub-lag peak position from a cubic spline through the 7 lags around the maximum.

    The spline is evaluated at ``refine_points`` evenly spaced lags within
    one grid step either side of the discrete peak.
    """
    return _refine(corr, refine_points)[0]


def interpolation_tolerance(sample_rate: float) -> float:
    """Worst-case noiseless delay error allowed for the spline peak (seconds).

    One thousandth of an input sample period.
    """
    return 1e-3 / sample_rate


def ambiguity_gate(spec: WaveformSpec) -> float:
    """Half the two-tone envelope period; the largest unambiguous ``|delay|``."""
    return 0.5 / spec.tone_spacing


def delay_to_range(delay: float, c: float = SPEED_OF_LIGHT) -> float:
    return c * delay / 2


def estimate_range(
    received: SignalBuffer,
    template: SignalBuffer,
    *,
    max_delay: float | None = None,
    oversample: int = DEFAULT_OVERSAMPLE,
    refine_points: int = DEFAULT_REFINE_POINTS,
    c: float = SPEED_OF_LIGHT,
    timestamp: int = 0,
) -> RangeEstimate:
    corr = matched_filter(received, template, oversample=oversample, max_lag=max_delay)
    delay, value = _refine(corr, refine_points)
    return RangeEstimate(delay=delay, range=delay_to_range(delay, c), peak_value=value, timestamp=timestamp)


def matched_filter_gain_db(template: SignalBuffer) -> float:
    """Coherent processing gain of the simulated matched filter.

    Input SNR is active-portion power over complex noise variance; output
    SNR is peak power over the noise variance in the signal's quadrature,
    ``2E/sigma^2``.  Their ratio is twice the number of active samples.
    """
    return 10 * math.log10(2 * template.energy() / active_power(template.samples))


def post_snr_db(template: SignalBuffer, noise_variance: float) -> float:
    """Matched-filter output SNR ``2E/sigma^2`` for complex noise variance ``sigma^2``."""
    return 10 * math.log10(2 * template.energy() / noise_variance)


def noise_variance_for_post_snr(template: SignalBuffer, post_snr: float) -> float:
    return 2 * template.energy() / 10 ** (post_snr / 10)


def write_range_log(path, rows: Iterable[tuple[int, str, RangeEstimate]]):
    """CSV with columns ``step,node_id,delay_s,range_m,peak_value``."""
    body = ((step, node, r.delay, r.range, r.peak_value) for step, node, r in rows)
    return _io.write_csv(path, ("step", "node_id", "delay_s", "range_m", "peak_value"), body)
