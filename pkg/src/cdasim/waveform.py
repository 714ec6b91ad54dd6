"""Two-tone stepped-frequency waveform (TTSFW) synthesis and spectral moments.

Every pulse carries a pair of tones separated by ``N * delta_f``; successive
pulses step the pair by ``delta_f``.  The order in which a node visits the
frequency steps is its pulse signature, so up to ``N!`` nodes can range
against the same repeater at once.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.signal.windows import tukey

from . import _io
from .constants import DEFAULT_SAMPLE_RATE


@dataclass(frozen=True)
class WaveformSpec:
    """Parameters of a TTSFW.

    ``delta_f_step`` is the pulse-to-pulse frequency step; the upper tone sits
    ``n_pulses * delta_f_step`` above the lower one, and the occupied
    bandwidth is ``(2 * n_pulses - 1) * delta_f_step``.
    """

    n_pulses: int
    f1: float
    delta_f_step: float
    duty_cycle: float = 0.5
    pulse_period: float = 1e-3
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        _check_spec(self)

    @classmethod
    def from_bandwidth(cls, bandwidth: float, n_pulses: int, f1: float, **kwargs) -> "WaveformSpec":
        return cls(n_pulses=n_pulses, f1=f1, delta_f_step=derive_step(bandwidth, n_pulses), **kwargs)

    @property
    def tone_spacing(self) -> float:
        """Separation between the two tones of a pulse (``N * delta_f``)."""
        return self.n_pulses * self.delta_f_step

    @property
    def f2(self) -> float:
        return self.f1 + self.tone_spacing

    @property
    def bandwidth(self) -> float:
        return (2 * self.n_pulses - 1) * self.delta_f_step

    @property
    def highest_frequency(self) -> float:
        return self.f2 + (self.n_pulses - 1) * self.delta_f_step

    @property
    def active_duration(self) -> float:
        return self.pulse_period * self.duty_cycle

    @property
    def samples_per_pulse(self) -> int:
        return int(round(self.pulse_period * self.sample_rate))

    @property
    def active_samples_per_pulse(self) -> int:
        return max(1, int(round(self.active_duration * self.sample_rate)))

    @property
    def duration(self) -> float:
        return self.n_pulses * self.pulse_period

    def tones(self, step: int) -> tuple[float, float]:
        lo = self.f1 + step * self.delta_f_step
        return lo, lo + self.tone_spacing

    def to_dict(self) -> dict:
        return asdict(self)


def _check_spec(spec: WaveformSpec) -> None:
    if int(spec.n_pulses) != spec.n_pulses or spec.n_pulses < 1:
        raise ValueError(f"n_pulses must be a positive integer, got {spec.n_pulses!r}")
    if not spec.f1 > 0:
        raise ValueError(f"f1 must be positive, got {spec.f1!r}")
    if spec.delta_f_step < 0:
        raise ValueError("delta_f_step must be non-negative")
    if spec.delta_f_step == 0 and spec.n_pulses > 1:
        raise ValueError("delta_f_step may only be zero for a single-pulse waveform")
    if not 0 < spec.duty_cycle <= 1:
        raise ValueError(f"duty_cycle must lie in (0, 1], got {spec.duty_cycle!r}")
    if not spec.pulse_period > 0 or not spec.sample_rate > 0:
        raise ValueError("pulse_period and sample_rate must be positive")
    if spec.highest_frequency >= spec.sample_rate / 2:
        raise ValueError(
            f"highest tone {spec.highest_frequency:.6g} Hz violates Nyquist "
            f"for sample rate {spec.sample_rate:.6g} Hz"
        )


def validate_spec(spec: WaveformSpec, n_connections: int) -> WaveformSpec:
    """Return ``spec`` if it can give ``n_connections`` nodes distinct signatures."""
    _check_spec(spec)
    if n_connections < 1:
        raise ValueError("n_connections must be at least 1")
    available = math.factorial(spec.n_pulses)
    if available < n_connections:
        raise ValueError(
            f"{spec.n_pulses}! = {available} signatures cannot serve {n_connections} connections"
        )
    return spec


def derive_step(bandwidth: float, n_pulses: int) -> float:
    """Frequency step for a waveform spanning ``bandwidth`` with ``n_pulses`` pulses."""
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    if n_pulses < 1:
        raise ValueError("n_pulses must be at least 1")
    return bandwidth / (2 * n_pulses - 1)


def tone_spacing(bandwidth: float, n_pulses: int) -> float:
    """Upper-minus-lower tone separation ``N * delta_f``."""
    return n_pulses * derive_step(bandwidth, n_pulses)


# --------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class PulseSignature:
    node_index: int
    pulse_order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(k) for k in self.pulse_order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"pulse_order {self.pulse_order!r} is not a permutation")
        object.__setattr__(self, "pulse_order", order)

    @property
    def n_pulses(self) -> int:
        return len(self.pulse_order)


def assign_signatures(n_pulses: int, n_nodes: int) -> tuple[PulseSignature, ...]:
    """Deterministic signatures for nodes ``1..n_nodes``.

    Node 1 steps up through the band, node 2 steps down, and any further node
    takes the lexicographically next permutation not yet used.
    """
    if n_nodes < 1:
        return ()
    if n_nodes > math.factorial(n_pulses):
        raise ValueError(f"{n_pulses} pulses give only {math.factorial(n_pulses)} signatures")
    ascending = tuple(range(n_pulses))
    orders = [ascending]
    if n_nodes >= 2:
        orders.append(ascending[::-1])
    if n_nodes > 2:
        used = set(orders)
        for perm in itertools.permutations(ascending):
            if len(orders) == n_nodes:
                break
            if perm not in used:
                orders.append(perm)
                used.add(perm)
    return tuple(PulseSignature(i + 1, order) for i, order in enumerate(orders))


def signature_for(node_index: int, n_pulses: int) -> PulseSignature:
    return assign_signatures(n_pulses, node_index)[-1]


# --------------------------------------------------------------------------
# sampled signals


@dataclass(frozen=True, eq=False)
class SignalBuffer:
    """Uniformly sampled complex baseband signal."""

    samples: np.ndarray
    sample_rate: float
    start_time: float = 0.0

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.complex128, copy=True).reshape(-1)
        if x.size < 1:
            raise ValueError("a signal buffer needs at least one sample")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.samples.size) / self.sample_rate

    def energy(self) -> float:
        return float(np.vdot(self.samples, self.samples).real)

    def real(self) -> np.ndarray:
        """Real-valued export of the complex baseband samples."""
        return self.samples.real.copy()

    def replace(self, samples) -> "SignalBuffer":
        return SignalBuffer(samples, self.sample_rate, self.start_time)

    def __eq__(self, other):
        if not isinstance(other, SignalBuffer):
            return NotImplemented
        return (
            self.sample_rate == other.sample_rate
            and self.start_time == other.start_time
            and np.array_equal(self.samples, other.samples)
        )


def _default_signature(spec: WaveformSpec) -> PulseSignature:
    return PulseSignature(1, tuple(range(spec.n_pulses)))


def pulse_steps(spec: WaveformSpec, signature: PulseSignature | None = None) -> np.ndarray:
    """Frequency-step index carried by each transmitted pulse."""
    signature = signature or _default_signature(spec)
    if signature.n_pulses != spec.n_pulses:
        raise ValueError("signature length does not match n_pulses")
    return np.asarray(signature.pulse_order)


def active_mask(spec: WaveformSpec) -> np.ndarray:
    ns, na = spec.samples_per_pulse, spec.active_samples_per_pulse
    return np.tile(np.arange(ns) < na, spec.n_pulses)


def synthesize(
    spec: WaveformSpec,
    signature: PulseSignature | None = None,
    *,
    normalize_energy: bool = False,
) -> SignalBuffer:
    """Sample the pulse-modulated two-tone waveform for one node.

    Tones use absolute time, so pulse ``k`` continues the phase of an
    uninterrupted oscillator at its frequency.  The ``1/N`` amplitude factor
    is always applied; ``normalize_energy`` additionally scales to unit energy.
    """
    steps = pulse_steps(spec, signature)
    ns = spec.samples_per_pulse
    n = np.arange(spec.n_pulses * ns)
    t = n / spec.sample_rate
    lo = spec.f1 + steps[n // ns] * spec.delta_f_step
    x = (np.exp(2j * np.pi * lo * t) + np.exp(2j * np.pi * (lo + spec.tone_spacing) * t)) / spec.n_pulses
    x[~active_mask(spec)] = 0.0
    if normalize_energy:
        x /= np.sqrt(np.vdot(x, x).real)
    return SignalBuffer(x, spec.sample_rate)


def separation_template(
    spec: WaveformSpec,
    signature: PulseSignature,
    others: Iterable[PulseSignature] = (),
    *,
    taper: float = 0.05,
) -> SignalBuffer:
    """Receive template for a node sharing the repeater with ``others``.

    Pulse slots in which another active signature transmits the same tone
    pair are blanked, and each remaining pulse gets a Tukey edge taper of
    fraction ``taper`` to suppress rect-edge leakage between tones.
    """
    own = pulse_steps(spec, signature)
    clash = np.zeros(spec.n_pulses, dtype=bool)
    for other in others:
        clash |= pulse_steps(spec, other) == own
    if clash.all():
        raise ValueError("every pulse slot collides with another signature")
    ns, na = spec.samples_per_pulse, spec.active_samples_per_pulse
    window = np.zeros(ns)
    window[:na] = tukey(na, taper) if taper > 0 else 1.0
    weights = np.concatenate([np.zeros(ns) if c else window for c in clash])
    return SignalBuffer(synthesize(spec, signature).samples * weights, spec.sample_rate)


# --------------------------------------------------------------------------
# mean-squared bandwidth


def msbw_analytic(spec: WaveformSpec, bandwidth: float | None = None) -> float:
    """Closed-form TTSFW mean-squared bandwidth in rad^2/s^2.

    ``bandwidth`` overrides the waveform's own ``(2N-1) * delta_f`` so the formula
    can be evaluated for a quoted bandwidth that differs from the step plan.
    """
    n = spec.n_pulses
    bw = spec.bandwidth if bandwidth is None else bandwidth
    sum_sq = sum(k * k for k in range(n))
    return math.pi**2 * (bw / (2 - 1 / n)) ** 2 + (2 * math.pi * bw) ** 2 / (n * (4 * n * n + 4 * n + 1)) * sum_sq


def msbw_numeric(signal: SignalBuffer, *, centered: bool = False) -> float:
    """Mean-squared bandwidth from the sampled spectrum.

    Frequencies are signed baseband offsets up to Nyquist.  With
    ``centered=True`` the second moment is taken about the spectral centroid,
    which is what governs envelope (magnitude) delay estimation.
    """
    spectrum = np.abs(np.fft.fft(signal.samples)) ** 2
    total = spectrum.sum()
    if total <= 0:
        raise ValueError("mean-squared bandwidth of an all-zero signal is undefined")
    f = np.fft.fftfreq(signal.samples.size, d=1 / signal.sample_rate)
    if centered:
        f = f - np.dot(f, spectrum) / total
    return float(np.dot((2 * np.pi * f) ** 2, spectrum) / total)


# --------------------------------------------------------------------------
# export / import


def write_waveform(
    path,
    signal: SignalBuffer,
    spec: WaveformSpec | None = None,
    signature: PulseSignature | None = None,
) -> tuple[Path, Path]:
    """Write ``time_s,re,im`` CSV plus a JSON sidecar next to it."""
    path = Path(path)
    rows = zip(signal.times(), signal.samples.real, signal.samples.imag)
    csv_path = _io.write_csv(path, ("time_s", "re", "im"), rows)
    meta = {
        "sample_rate": signal.sample_rate,
        "start_time": signal.start_time,
        "n_samples": len(signal),
        "spec": spec.to_dict() if spec is not None else None,
        "signature": (
            {"node_index": signature.node_index, "pulse_order": list(signature.pulse_order)}
            if signature is not None
            else None
        ),
    }
    meta_path = _io.write_json(path.with_suffix(".json"), meta)
    return csv_path, meta_path


def read_waveform(path) -> tuple[SignalBuffer, WaveformSpec | None, PulseSignature | None]:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    with open(path) as fh:
        header = fh.readline().strip().replace(" ", "")
        if header != "time_s,re,im":
            raise ValueError(f"unexpected waveform header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    buf = SignalBuffer(data[:, 1] + 1j * data[:, 2], meta["sample_rate"], meta.get("start_time", 0.0))
    spec = WaveformSpec(**meta["spec"]) if meta.get("spec") else None
    sig = meta.get("signature")
    signature = PulseSignature(sig["node_index"], tuple(sig["pulse_order"])) if sig else None
    return buf, spec, signature
