"""Cramér-Rao bounds, processing gain and coherent-gain probability sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import _io
from .beamform import endfire_gain
from .constants import BEAMFORMING_CARRIER, SPEED_OF_LIGHT

#: End-fire coherent-gain rule: range std must stay below lambda/20.
MAX_FREQUENCY_FACTOR = 20
DEFAULT_TRIALS = 10_000
PAPER_TRIALS = 100_000
_BLOCK = 2048


@dataclass(frozen=True)
class CrlbReport:
    delay_variance: float
    range_std: float
    post_snr_db: float
    processing_gain_db: float
    max_frequency: float
    msbw: float
    snr_db: float
    speed_of_light: float = SPEED_OF_LIGHT

    @property
    def delay_std(self) -> float:
        return math.sqrt(self.delay_variance)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["delay_std"] = self.delay_std
        return d


def processing_gain(n_pulses: int, t_r: float, noise_bw: float) -> float:
    """Time-bandwidth product ``N * T_r * BW_n`` in dB."""
    if n_pulses < 1 or not t_r > 0 or not noise_bw > 0:
        raise ValueError("processing gain inputs must be positive")
    return 10 * math.log10(n_pulses * t_r * noise_bw)


def max_frequency(range_std: float, c: float = SPEED_OF_LIGHT) -> float:
    """Highest beamforming carrier supported by a two-way range std."""
    return c / (MAX_FREQUENCY_FACTOR * range_std)


def crlb(msbw: float, snr_db: float, processing_gain_db: float, *, c: float = SPEED_OF_LIGHT) -> CrlbReport:
    """Delay and range bounds after matched filtering.

    ``range_std`` follows the two-way convention ``(c/2) * sigma_tau``, i.e.
    the standard deviation of the one-way baseline recovered from a
    round-trip delay.
    """
    if not msbw > 0:
        raise ValueError("msbw must be positive")
    post = snr_db + processing_gain_db
    variance = 1.0 / (msbw * 10 ** (post / 10))
    range_std = c / 2 * math.sqrt(variance)
    return CrlbReport(
        delay_variance=variance,
        range_std=range_std,
        post_snr_db=post,
        processing_gain_db=processing_gain_db,
        max_frequency=max_frequency(range_std, c),
        msbw=msbw,
        snr_db=snr_db,
        speed_of_light=c,
    )


# --------------------------------------------------------------------------
# Monte-Carlo coherent gain


@dataclass(frozen=True, eq=False)
class GainCurve:
    sigma_d_axis: np.ndarray
    probability: np.ndarray
    n_nodes: int
    threshold: float
    trials: int
    seed: int
    wavelength: float

    def __eq__(self, other):
        if not isinstance(other, GainCurve):
            return NotImplemented
        return (
            (self.n_nodes, self.threshold, self.trials, self.seed, self.wavelength)
            == (other.n_nodes, other.threshold, other.trials, other.seed, other.wavelength)
            and np.array_equal(self.sigma_d_axis, other.sigma_d_axis)
            and np.array_equal(self.probability, other.probability)
        )


def default_sigma_grid(wavelength: float, points: int = 50) -> np.ndarray:
    """Log-spaced range-error std from lambda/200 to lambda/2."""
    return np.logspace(np.log10(wavelength / 200), np.log10(wavelength / 2), points)


def _block_counts(args):
    seed, n_nodes, block, size, grid, threshold, wavelength = args
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n_nodes, block)))
    z = rng.standard_normal((size, n_nodes))
    counts = np.empty(grid.size, dtype=np.int64)
    for i, sigma in enumerate(grid):
        counts[i] = np.count_nonzero(endfire_gain(sigma * z, wavelength) >= threshold)
    return counts


def gain_probability_sweep(
    n_nodes: int,
    sigma_d_grid=None,
    threshold: float = 0.9,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    *,
    wavelength: float = SPEED_OF_LIGHT / BEAMFORMING_CARRIER,
    workers: int = 1,
) -> GainCurve:
    """Fraction of trials whose end-fire coherent gain reaches ``threshold``.

    Each trial draws an independent zero-mean Gaussian range error per node
    (the primary included).  Trials are generated in fixed blocks, each with
    its own stream derived from ``(seed, n_nodes, block)``, and the same
    normalised draws are reused across the sigma grid, so the curve depends
    only on the seed and not on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    grid = default_sigma_grid(wavelength) if sigma_d_grid is None else np.asarray(sigma_d_grid, dtype=float)
    jobs = []
    for block, start in enumerate(range(0, trials, _BLOCK)):
        size = min(_BLOCK, trials - start)
        jobs.append((seed, n_nodes, block, size, grid, threshold, wavelength))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_counts, jobs))
    else:
        parts = [_block_counts(j) for j in jobs]
    counts = np.sum(parts, axis=0)
    return GainCurve(
        sigma_d_axis=grid,
        probability=counts / trials,
        n_nodes=n_nodes,
        threshold=threshold,
        trials=trials,
        seed=seed,
        wavelength=wavelength,
    )


def write_curve_csv(path, curve: GainCurve):
    """CSV with columns ``sigma_d_over_lambda,probability``."""
    rows = zip(curve.sigma_d_axis / curve.wavelength, curve.probability)
    return _io.write_csv(path, ("sigma_d_over_lambda", "probability"), rows)


def write_crlb_report(path, report: CrlbReport, extra: dict | None = None):
    payload = report.to_dict()
    if extra:
        payload.update(extra)
    return _io.write_json(path, payload)
