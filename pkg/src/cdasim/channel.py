"""Free-space propagation between nodes and through the primary's repeater."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np
from scipy import fft as sfft

from .constants import DOWNLINK_CARRIER, REFERENCE_DISTANCE, SPEED_OF_LIGHT, UPLINK_CARRIER
from .waveform import SignalBuffer

# integer delays closer than this (in samples) are treated as exact shifts
_INTEGER_TOL = 1e-9
_ACTIVE_WINDOW = 64
_ACTIVE_FLOOR = 1e-3


@dataclass(frozen=True)
class ArrayGeometry:
    """Node coordinates along a single axis, in meters."""

    positions: Mapping[str, float]
    receiver_position: float = 0.0

    def __post_init__(self):
        pos = {str(k): float(v) for k, v in dict(self.positions).items()}
        if len(pos) != len(dict(self.positions)):
            raise ValueError("node ids must be unique")
        if not all(math.isfinite(v) for v in pos.values()) or not math.isfinite(self.receiver_position):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", MappingProxyType(pos))
        object.__setattr__(self, "receiver_position", float(self.receiver_position))

    def distance(self, a: str, b: str) -> float:
        return abs(self.positions[a] - self.positions[b])

    def range_to_receiver(self, node: str) -> float:
        return abs(self.positions[node] - self.receiver_position)

    def moved(self, node: str, delta: float) -> "ArrayGeometry":
        pos = dict(self.positions)
        pos[node] += delta
        return ArrayGeometry(pos, self.receiver_position)


@dataclass(frozen=True)
class LinkParams:
    """Radio link settings for ranging.

    ``carrier_frequency`` is the uplink (secondary to primary) carrier and
    ``downlink_frequency`` the repeater's retransmit carrier.  ``snr_db`` is
    applied independently on every leg; ``math.inf`` disables noise.
    """

    carrier_frequency: float = UPLINK_CARRIER
    snr_db: float = math.inf
    repeater_gain: float = 0.0
    seed: int = 0
    downlink_frequency: float = DOWNLINK_CARRIER
    speed_of_light: float = field(default=SPEED_OF_LIGHT)

    def __post_init__(self):
        if not self.carrier_frequency > 0 or not self.downlink_frequency > 0:
            raise ValueError("carrier frequencies must be positive")
        if not self.speed_of_light > 0:
            raise ValueError("speed_of_light must be positive")


def fractional_delay(signal: SignalBuffer, delay: float) -> SignalBuffer:
    """Delay ``signal`` by ``delay`` seconds with band-limited interpolation.

    The shift is applied as a linear phase in the frequency domain over a
    zero-padded block, so content pushed past either end is dropped rather
    than wrapped.  Whole-sample delays are done as exact index shifts.
    """
    x = signal.samples
    n = x.size
    shift = delay * signal.sample_rate
    if not abs(delay) < signal.duration:
        raise ValueError(f"delay {delay!r} s exceeds buffer duration {signal.duration!r} s")
    k = round(shift)
    if abs(shift - k) < _INTEGER_TOL:
        y = np.zeros_like(x)
        if k >= 0:
            y[k:] = x[: n - k]
        else:
            y[: n + k] = x[-k:]
        return signal.replace(y)
    size = sfft.next_fast_len(n + int(math.ceil(abs(shift))) + 16)
    f = sfft.fftfreq(size)
    y = sfft.ifft(sfft.fft(x, size) * np.exp(-2j * np.pi * f * shift))[:n]
    return signal.replace(y)


def active_power(samples: np.ndarray) -> float:
    """Mean power over the transmitted (non-gap) portion of a pulsed signal.

    A sample counts as active when the local power, smoothed over a short
    window to ride through two-tone beat nulls, is within 30 dB of the peak.
    """
    p = np.abs(np.asarray(samples)) ** 2
    if not np.any(p > 0):
        raise ValueError("signal has zero power")
    w = min(_ACTIVE_WINDOW, p.size)
    smooth = np.convolve(p, np.ones(w) / w, mode="same")
    mask = smooth >= _ACTIVE_FLOOR * smooth.max()
    return float(p[mask].mean())


def add_awgn(
    signal: SignalBuffer,
    snr_db: float,
    seed=None,
    *,
    reference_power: float | None = None,
) -> SignalBuffer:
    """Add circular complex white Gaussian noise.

    The per-sample noise variance is ``P / 10**(snr_db/10)`` where ``P`` is
    the active-portion power of ``signal`` (or ``reference_power``).
    ``seed`` may be an int, a SeedSequence or a Generator.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return signal
    power = active_power(signal.samples) if reference_power is None else float(reference_power)
    if not power > 0:
        raise ValueError("signal has zero power")
    variance = power / 10 ** (snr_db / 10)
    rng = np.random.default_rng(seed)
    n = signal.samples.size
    noise = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return signal.replace(signal.samples + math.sqrt(variance / 2) * noise)


def spreading_amplitude(distance: float) -> float:
    return REFERENCE_DISTANCE / distance


def _propagate_clean(signal, distance, carrier, c):
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance!r}")
    delayed = fractional_delay(signal, distance / c)
    rot = spreading_amplitude(distance) * np.exp(-2j * np.pi * carrier * distance / c)
    return delayed.replace(delayed.samples * rot)


def propagate(
    signal: SignalBuffer,
    distance: float,
    link: LinkParams,
    *,
    carrier: float | None = None,
    seed=None,
    reference_power: float | None = None,
) -> SignalBuffer:
    """One free-space hop: delay ``d/c``, 1/R amplitude, carrier phase, noise.

    ``carrier`` defaults to the link's uplink carrier.  Noise is referenced
    to the clean received power, i.e. the input's active power (or
    ``reference_power``) scaled by the spreading loss.
    """
    carrier = link.carrier_frequency if carrier is None else carrier
    out = _propagate_clean(signal, distance, carrier, link.speed_of_light)
    if math.isinf(link.snr_db):
        return out
    p_in = active_power(signal.samples) if reference_power is None else reference_power
    seed = link.seed if seed is None else seed
    return add_awgn(out, link.snr_db, seed, reference_power=p_in * spreading_amplitude(distance) ** 2)


def relay(
    transmissions: Mapping[str, SignalBuffer],
    positions: Mapping[str, float],
    primary_pos: float,
    link: LinkParams,
    seed=None,
) -> dict[str, SignalBuffer]:
    """Simultaneous ranging through the primary's repeater.

    Every secondary's transmission travels to the primary on the uplink
    carrier; the primary adds receiver noise to the summed signal, applies
    ``link.repeater_gain`` and retransmits on the downlink carrier, and each
    secondary receives the whole repeated sum with its own receiver noise.
    """
    if not transmissions:
        raise ValueError("nothing to relay")
    c = link.speed_of_light
    ids = list(transmissions)
    for node in ids:
        if positions[node] == primary_pos:
            raise ValueError(f"node {node!r} coincides with the primary")
    seed = link.seed if seed is None else seed
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(1 + len(ids))

    at_primary = None
    clean_power = 0.0
    for node in ids:
        tx = transmissions[node]
        d = abs(positions[node] - primary_pos)
        hop = _propagate_clean(tx, d, link.carrier_frequency, c)
        at_primary = hop.samples if at_primary is None else at_primary + hop.samples
    clean = SignalBuffer(at_primary, transmissions[ids[0]].sample_rate)
    clean_power = active_power(clean.samples)
    noisy = add_awgn(clean, link.snr_db, children[0], reference_power=clean_power)

    gain = 10 ** (link.repeater_gain / 20)
    repeated = noisy.replace(noisy.samples * gain)
    out = {}
    for node, child in zip(ids, children[1:]):
        d = abs(positions[node] - primary_pos)
        rx = _propagate_clean(repeated, d, link.downlink_frequency, c)
        ref = clean_power * (gain * spreading_amplitude(d)) ** 2
        out[node] = add_awgn(rx, link.snr_db, child, reference_power=ref)
    return out


def round_trip(
    signal: SignalBuffer,
    secondary_pos: float,
    primary_pos: float,
    link: LinkParams,
    seed=None,
) -> SignalBuffer:
    """Secondary to primary, through the repeater, and back; total delay ``2d/c``."""
    if secondary_pos == primary_pos:
        raise ValueError("secondary and primary positions coincide")
    return relay({"s": signal}, {"s": secondary_pos}, primary_pos, link, seed)["s"]
