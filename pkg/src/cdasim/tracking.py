"""One-dimensional Kalman refinement of per-round ranging measurements."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

from . import _io

#: Measurement and process variances quoted for the hardware tracker.
PAPER_MEASUREMENT_VARIANCE = 3e-5
PAPER_PROCESS_VARIANCE = 5e-6
#: Innovation (in correlation samples) above which an update is flagged.
DEFAULT_INNOVATION_THRESHOLD = 3.0


@dataclass(frozen=True)
class KalmanState:
    estimate: float
    variance: float
    measurement_variance: float = PAPER_MEASUREMENT_VARIANCE
    process_variance: float = PAPER_PROCESS_VARIANCE
    step: int = 0
    gain: float = 0.0
    diverged: bool = False
    innovation_threshold: float = DEFAULT_INNOVATION_THRESHOLD


def kalman_init(
    z0: float,
    sigma0_sq: float | None = None,
    sigma_m_sq: float = PAPER_MEASUREMENT_VARIANCE,
    sigma_c_sq: float = PAPER_PROCESS_VARIANCE,
    *,
    innovation_threshold: float = DEFAULT_INNOVATION_THRESHOLD,
) -> KalmanState:
    """Start a tracker at the first measurement.

    ``sigma0_sq`` defaults to the measurement variance.  A zero process
    variance is accepted so the no-dynamics limit can be studied.
    """
    sigma0_sq = sigma_m_sq if sigma0_sq is None else sigma0_sq
    if not (sigma0_sq > 0 and sigma_m_sq > 0 and sigma_c_sq >= 0):
        raise ValueError("variances must be positive")
    return KalmanState(
        estimate=float(z0),
        variance=float(sigma0_sq),
        measurement_variance=float(sigma_m_sq),
        process_variance=float(sigma_c_sq),
        innovation_threshold=float(innovation_threshold),
    )


def kalman_update(state: KalmanState, z: float) -> KalmanState:
    # gain, then estimate, then variance
    gain = state.variance / (state.variance + state.measurement_variance)
    innovation = z - state.estimate
    estimate = state.estimate + gain * innovation
    variance = (1 - gain) * state.variance + state.process_variance
    return replace(
        state,
        estimate=estimate,
        variance=variance,
        step=state.step + 1,
        gain=gain,
        diverged=abs(innovation) > state.innovation_threshold,
    )


def steady_state_variance(sigma_m_sq: float, sigma_c_sq: float) -> float:
    """Fixed point of the variance recursion."""
    return (sigma_c_sq + math.sqrt(sigma_c_sq**2 + 4 * sigma_c_sq * sigma_m_sq)) / 2


def steady_state_gain(sigma_m_sq: float, sigma_c_sq: float) -> float:
    s = steady_state_variance(sigma_m_sq, sigma_c_sq)
    return s / (s + sigma_m_sq)


def run_filter(measurements: Iterable[float], **init_kwargs) -> list[KalmanState]:
    """Initialise on the first measurement and update on the rest."""
    it = iter(measurements)
    try:
        first = next(it)
    except StopIteration:
        return []
    states = [kalman_init(first, **init_kwargs)]
    for z in it:
        states.append(kalman_update(states[-1], z))
    return states


def write_kalman_log(path, rows: Iterable[tuple[float, KalmanState]]):
    """CSV with columns ``step,z,estimate,variance,gain,diverged_flag``."""
    body = ((s.step, z, s.estimate, s.variance, s.gain, s.diverged) for z, s in rows)
    return _io.write_csv(path, ("step", "z", "estimate", "variance", "gain", "diverged_flag"), body)
