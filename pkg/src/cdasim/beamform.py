"""Range-driven phase correction and coherent summation at the receiver."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constants import REFERENCE_DISTANCE, SPEED_OF_LIGHT

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class NodeEmission:
    """One transmitter's contribution: ``channel_gain * amplitude * exp(j*phase_offset)``."""

    amplitude: float
    channel_gain: complex = 1.0
    phase_offset: float = 0.0
    position: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")


@dataclass(frozen=True)
class GainResult:
    coherent_gain: float
    actual_amplitude: float
    ideal_amplitude: float


def phase_correction(d: float, wavelength: float, theta: float = 0.0) -> float:
    """Carrier phase ``2*pi*(d/lambda)*cos(theta)`` reduced to ``[0, 2*pi)``.

    The result is the phase by which a node ``d`` meters nearer the target
    (along the steering direction) than the reference must lag its carrier.
    """
    if not wavelength > 0:
        raise ValueError("wavelength must be positive")
    phi = math.fmod(TWO_PI * d / wavelength * math.cos(theta), TWO_PI)
    if phi < 0:
        phi += TWO_PI
    # fold values that are 2*pi up to rounding back onto 0
    return 0.0 if math.isclose(phi, TWO_PI, rel_tol=0, abs_tol=1e-12) else phi


def received_sum(
    nodes: Sequence[NodeEmission],
    f: float,
    t: float = 0.0,
    *,
    receiver_position: float | None = None,
    c: float = SPEED_OF_LIGHT,
) -> complex:
    """Complex carrier amplitude at the receiver at time ``t``.

    Without ``receiver_position`` each node contributes
    ``h * a * exp(j*(2*pi*f*t + phase_offset))``.  With it, the exact path
    length ``R`` to the receiver adds a ``1/R`` spreading factor and a path
    phase of ``-2*pi*R/lambda``.
    """
    if not nodes:
        raise ValueError("no nodes")
    total = 0j
    for node in nodes:
        term = node.channel_gain * node.amplitude * np.exp(1j * (TWO_PI * f * t + node.phase_offset))
        if receiver_position is not None:
            r = abs(node.position - receiver_position)
            term *= (REFERENCE_DISTANCE / r) * np.exp(-1j * TWO_PI * f * r / c)
        total += term
    return complex(total)


def coherent_gain(
    nodes_with_errors: Sequence[NodeEmission],
    nodes_ideal: Sequence[NodeEmission],
    f: float = 1.0,
    **kwargs,
) -> GainResult:
    """Beamformed power relative to the perfectly aligned array."""
    if len(nodes_with_errors) != len(nodes_ideal):
        raise ValueError("node lists differ in length")
    actual = abs(received_sum(nodes_with_errors, f, **kwargs))
    ideal = abs(received_sum(nodes_ideal, f, **kwargs))
    if ideal == 0:
        raise ValueError("ideal amplitude is zero")
    return GainResult((actual / ideal) ** 2, actual, ideal)


def endfire_phases(d: np.ndarray, range_errors: np.ndarray, wavelength: float) -> np.ndarray:
    """Applied end-fire phases ``2*pi/lambda * (d + delta_d)``."""
    return TWO_PI / wavelength * (np.asarray(d) + np.asarray(range_errors))


def endfire_gain(range_errors, wavelength: float, amplitudes=None) -> np.ndarray:
    """Vectorised end-fire coherent gain over the last axis of ``range_errors``.

    Each node applies the phase from :func:`endfire_phases` and its path to
    the target contributes ``-2*pi*d_n/lambda``, so only the range errors
    survive.  Equivalent to :func:`coherent_gain` with those channel gains.
    """
    err = np.asarray(range_errors, dtype=float)
    a = np.ones(err.shape[-1]) if amplitudes is None else np.asarray(amplitudes, dtype=float)
    s = np.exp(1j * TWO_PI / wavelength * err) @ a
    return np.abs(s) ** 2 / a.sum() ** 2
