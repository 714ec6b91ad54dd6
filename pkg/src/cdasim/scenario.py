"""End-to-end moving-array experiments.

A run walks the moving node(s) through a list of positions.  At each
position every secondary ranges to the primary through the repeater (all
secondaries at once, separated by pulse signature), refines the delay with
its Kalman tracker and turns the tracked range into a carrier phase
correction.  The receiver then captures the summed beamforming carrier the
way an oscilloscope would: snapshots of a few carrier cycles whose per-cycle
peaks are averaged.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import _io
from .beamform import NodeEmission, phase_correction, received_sum
from .channel import ArrayGeometry, LinkParams, relay
from .constants import BEAMFORMING_CARRIER, REFERENCE_DISTANCE, SPEED_OF_LIGHT
from .ranging import RangeEstimate, ambiguity_gate, estimate_range, write_range_log
from .tracking import (
    DEFAULT_INNOVATION_THRESHOLD,
    PAPER_MEASUREMENT_VARIANCE,
    PAPER_PROCESS_VARIANCE,
    KalmanState,
    kalman_init,
    kalman_update,
    write_kalman_log,
)
from .waveform import (
    WaveformSpec,
    assign_signatures,
    separation_template,
    synthesize,
    validate_spec,
)

CONFIG_DIR = Path(__file__).with_name("configs")
CALIBRATION_STEPS = 360
CALIBRATION_PASSES = 5


class ConfigError(ValueError):
    """Raised for an unusable scenario configuration."""


@dataclass(frozen=True)
class Motion:
    node: str
    step_size: float
    n_steps: int
    direction: int = -1

    def __post_init__(self):
        if self.n_steps < 1:
            raise ConfigError("motion needs at least one step")
        if self.direction not in (-1, 1):
            raise ConfigError("direction must be +1 or -1")
        if not self.step_size > 0:
            raise ConfigError("step_size must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    geometry: ArrayGeometry
    waveform: WaveformSpec
    ranging_link: LinkParams
    motion: tuple[Motion, ...]
    primary: str = "primary"
    name: str = "scenario"
    beamforming_frequency: float = BEAMFORMING_CARRIER
    snapshots_per_position: int = 100
    cycles_per_snapshot: int = 15
    samples_per_cycle: int = 16
    ranging_rounds: int = 8
    correction_enabled: bool = True
    receiver_snr_db: float = 40.0
    tracking_mode: str = "delay"
    measurement_variance: float = PAPER_MEASUREMENT_VARIANCE
    process_variance: float = PAPER_PROCESS_VARIANCE
    innovation_threshold: float = DEFAULT_INNOVATION_THRESHOLD
    separation_taper: float = 0.05
    hardware_offsets: Mapping[str, float] | None = None
    tx_amplitudes: Mapping[str, float] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.primary not in self.geometry.positions:
            raise ConfigError(f"primary {self.primary!r} missing from geometry")
        if not self.secondaries:
            raise ConfigError("at least one secondary node is required")
        for m in self.motion:
            if m.node not in self.geometry.positions:
                raise ConfigError(f"motion refers to unknown node {m.node!r}")
        if min(self.snapshots_per_position, self.cycles_per_snapshot, self.ranging_rounds) < 1:
            raise ConfigError("snapshot, cycle and ranging-round counts must be >= 1")
        if self.samples_per_cycle < 4:
            raise ConfigError("samples_per_cycle must be >= 4")
        if self.tracking_mode not in ("delay", "magnitude"):
            raise ConfigError("tracking_mode must be 'delay' or 'magnitude'")
        for name in ("hardware_offsets", "tx_amplitudes"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, MappingProxyType({str(k): float(v) for k, v in value.items()}))
        for geom in self.positions():
            coords = list(geom.positions.values())
            if len(set(coords)) != len(coords) or geom.receiver_position in coords:
                raise ConfigError("nodes (and the receiver) must not coincide")

    @property
    def secondaries(self) -> tuple[str, ...]:
        return tuple(n for n in self.geometry.positions if n != self.primary)

    @property
    def nodes(self) -> tuple[str, ...]:
        return (self.primary, *self.secondaries)

    @property
    def wavelength(self) -> float:
        return self.ranging_link.speed_of_light / self.beamforming_frequency

    @property
    def n_positions(self) -> int:
        return 1 + max((m.n_steps for m in self.motion), default=0)

    def positions(self) -> list[ArrayGeometry]:
        out = [self.geometry]
        for step in range(1, self.n_positions):
            geom = out[-1]
            for m in self.motion:
                if step <= m.n_steps:
                    geom = geom.moved(m.node, m.direction * m.step_size)
            out.append(geom)
        return out


@dataclass(frozen=True)
class PositionRecord:
    index: int
    position: float
    solo_amplitudes: Mapping[str, float]
    combined_amplitude: float
    range_estimates: Mapping[str, tuple[RangeEstimate, ...]]
    tracked_range: Mapping[str, float]
    applied_correction: Mapping[str, float]

    @property
    def ideal_amplitude(self) -> float:
        return float(sum(self.solo_amplitudes.values()))

    @property
    def relative_amplitude(self) -> float:
        return self.combined_amplitude / self.ideal_amplitude

    @property
    def relative_power(self) -> float:
        return self.relative_amplitude**2


@dataclass(frozen=True)
class ScenarioResult:
    config: ScenarioConfig
    records: tuple[PositionRecord, ...]
    calibration: Mapping[str, float]
    hardware_offsets: Mapping[str, float]
    range_log: tuple[tuple[int, str, RangeEstimate], ...] = ()
    kalman_log: Mapping[str, tuple[tuple[float, KalmanState], ...]] = field(default_factory=dict)

    @property
    def corrected(self) -> bool:
        return self.config.correction_enabled

    def relative_amplitudes(self) -> np.ndarray:
        return np.array([r.relative_amplitude for r in self.records])

    def relative_powers(self) -> np.ndarray:
        return self.relative_amplitudes() ** 2

    def summary(self) -> dict:
        amp = self.relative_amplitudes()
        return {
            "min_relative_amplitude": float(amp.min()),
            "mean_relative_amplitude": float(amp.mean()),
            "min_relative_power": float(amp.min() ** 2),
            "argmin_position": int(amp.argmin()),
            "diverged_updates": int(
                sum(s.diverged for log in self.kalman_log.values() for _, s in log)
            ),
        }


# --------------------------------------------------------------------------
# helpers


def _streams(seed: int):
    hw, ranging, capture = np.random.SeedSequence(seed).spawn(3)
    return hw, ranging, capture


def resolve_hardware_offsets(config: ScenarioConfig) -> dict[str, float]:
    """Static per-node carrier offsets; seeded random unless given explicitly."""
    if config.hardware_offsets is not None:
        return {n: float(config.hardware_offsets.get(n, 0.0)) for n in config.nodes}
    rng = np.random.default_rng(_streams(config.seed)[0])
    return {n: float(v) for n, v in zip(config.nodes, rng.uniform(0, 2 * math.pi, len(config.nodes)))}


def resolve_amplitudes(config: ScenarioConfig) -> dict[str, float]:
    """Transmit amplitudes; by default equal received amplitude at the start."""
    if config.tx_amplitudes is not None:
        return {n: float(config.tx_amplitudes.get(n, 1.0)) for n in config.nodes}
    g = config.geometry
    return {n: g.range_to_receiver(n) / REFERENCE_DISTANCE for n in config.nodes}


def steering_angle(geometry: ArrayGeometry, primary: str, secondary: str) -> float:
    """0 when the secondary sits between receiver and primary (end-fire), else pi."""
    return 0.0 if geometry.range_to_receiver(primary) > geometry.range_to_receiver(secondary) else math.pi


def _emissions(config, geometry, amplitudes, phases):
    return [
        NodeEmission(amplitude=amplitudes[n], phase_offset=phases[n], position=geometry.positions[n])
        for n in config.nodes
    ]


def _phasor(config, geometry, amplitudes, phases, nodes=None) -> complex:
    emissions = _emissions(config, geometry, amplitudes, phases)
    if nodes is not None:
        emissions = [e for e, n in zip(emissions, config.nodes) if n in nodes]
    return received_sum(
        emissions,
        config.beamforming_frequency,
        receiver_position=geometry.receiver_position,
        c=config.ranging_link.speed_of_light,
    )


def true_corrections(config: ScenarioConfig, geometry: ArrayGeometry | None = None) -> dict[str, float]:
    """Corrections computed from exact baselines (no ranging error)."""
    geometry = geometry or config.geometry
    return {
        s: phase_correction(
            geometry.distance(config.primary, s), config.wavelength, steering_angle(geometry, config.primary, s)
        )
        for s in config.secondaries
    }


def calibrate(
    config: ScenarioConfig,
    corrections: Mapping[str, float] | None = None,
    hardware_offsets: Mapping[str, float] | None = None,
) -> dict[str, float]:
    """Static phase offsets that maximise the combined amplitude at the start.

    The primary is the reference (offset 0).  Secondaries are brought in one
    at a time, each swept over a 1 degree grid against the primary plus the
    nodes already calibrated.  Refinement sweeps with every node on follow
    until an offset stops moving.  Offsets are returned wrapped to
    ``(-pi, pi]``.  ``corrections`` defaults to the exact-baseline corrections.
    """
    corrections = true_corrections(config) if corrections is None else dict(corrections)
    hw = resolve_hardware_offsets(config) if hardware_offsets is None else dict(hardware_offsets)
    amplitudes = resolve_amplitudes(config)
    grid = np.arange(CALIBRATION_STEPS) * (2 * math.pi / CALIBRATION_STEPS)
    cal = {n: 0.0 for n in config.nodes}

    def sweep(node, active):
        base = {n: hw[n] + cal[n] - corrections.get(n, 0.0) for n in config.nodes}
        amps = []
        for value in grid:
            base[node] = hw[node] + value - corrections.get(node, 0.0)
            amps.append(abs(_phasor(config, config.geometry, amplitudes, base, active)))
        return float(grid[int(np.argmax(amps))])

    active = {config.primary}
    for node in config.secondaries:
        active.add(node)
        cal[node] = sweep(node, set(active))
    for _ in range(CALIBRATION_PASSES):
        moved = False
        for node in config.secondaries:
            best = sweep(node, None)
            moved |= best != cal[node]
            cal[node] = best
        if not moved:
            break
    return {n: float(math.remainder(v, 2 * math.pi)) for n, v in cal.items()}


def capture_amplitude(phasor: complex, config: ScenarioConfig, noise_std: float, rng) -> float:
    """Average per-cycle peak of the real carrier over all snapshots.

    Each snapshot starts at a random sampling phase and holds
    ``cycles_per_snapshot`` cycles sampled ``samples_per_cycle`` times each.
    """
    spc, cycles, snaps = config.samples_per_cycle, config.cycles_per_snapshot, config.snapshots_per_position
    start = rng.uniform(0, 2 * math.pi, size=(snaps, 1))
    theta = start + 2 * math.pi * np.arange(cycles * spc) / spc
    y = np.abs(phasor) * np.cos(theta + np.angle(phasor))
    if noise_std > 0:
        y = y + noise_std * rng.standard_normal(y.shape)
    peaks = y.reshape(snaps, cycles, spc).max(axis=2)
    return float(peaks.mean())


def _templates(config: ScenarioConfig, signatures):
    spec = config.waveform
    tx, tpl = {}, {}
    for node, sig in zip(config.secondaries, signatures):
        tx[node] = synthesize(spec, sig)
        others = [s for s in signatures if s is not sig]
        tpl[node] = separation_template(spec, sig, others, taper=config.separation_taper) if others else tx[node]
    return tx, tpl


# --------------------------------------------------------------------------
# main loop


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    spec = config.waveform
    c = config.ranging_link.speed_of_light
    fs = spec.sample_rate
    secondaries = config.secondaries
    validate_spec(spec, len(secondaries))
    signatures = assign_signatures(spec.n_pulses, len(secondaries))
    tx, templates = _templates(config, signatures)
    gate = ambiguity_gate(spec)

    hw = resolve_hardware_offsets(config)
    amplitudes = resolve_amplitudes(config)
    _, ranging_seq, capture_seq = _streams(config.seed)
    capture_rng = np.random.default_rng(capture_seq)

    trackers: dict[str, KalmanState | None] = {s: None for s in secondaries}
    kalman_log: dict[str, list] = {s: [] for s in secondaries}
    range_log: list = []
    records = []
    calibration = None
    initial_correction = None
    noise_std = None
    moving = config.motion[0].node if config.motion else config.primary
    step = 0

    for p, geom in enumerate(config.positions()):
        sec_pos = {s: geom.positions[s] for s in secondaries}
        primary_pos = geom.positions[config.primary]
        estimates = {s: [] for s in secondaries}
        for r in range(config.ranging_rounds):
            seq = np.random.SeedSequence(ranging_seq.entropy, spawn_key=(*ranging_seq.spawn_key, p, r))
            received = relay(tx, sec_pos, primary_pos, config.ranging_link, seed=seq)
            for s in secondaries:
                est = estimate_range(received[s], templates[s], max_delay=gate, c=c, timestamp=step)
                estimates[s].append(est)
                range_log.append((step, s, est))
                z = est.delay * fs if config.tracking_mode == "delay" else est.peak_value
                state = trackers[s]
                if state is None:
                    state = kalman_init(
                        z,
                        None,
                        config.measurement_variance,
                        config.process_variance,
                        innovation_threshold=config.innovation_threshold,
                    )
                else:
                    state = kalman_update(state, z)
                trackers[s] = state
                kalman_log[s].append((z, state))
            step += 1

        tracked = {}
        for s in secondaries:
            if config.tracking_mode == "delay":
                delay = trackers[s].estimate / fs
            else:
                delay = estimates[s][-1].delay
            tracked[s] = c * delay / 2
        correction = {
            s: phase_correction(tracked[s], config.wavelength, steering_angle(geom, config.primary, s))
            for s in secondaries
        }
        if calibration is None:
            initial_correction = correction
            calibration = calibrate(config, correction, hw)
        applied = correction if config.correction_enabled else initial_correction

        phases = {n: hw[n] + calibration[n] - applied.get(n, 0.0) for n in config.nodes}
        if noise_std is None:
            solo0 = sum(abs(_phasor(config, geom, amplitudes, phases, {n})) for n in config.nodes)
            noise_std = solo0 / math.sqrt(2 * 10 ** (config.receiver_snr_db / 10))
        solo = {
            n: capture_amplitude(_phasor(config, geom, amplitudes, phases, {n}), config, noise_std, capture_rng)
            for n in config.nodes
        }
        combined = capture_amplitude(_phasor(config, geom, amplitudes, phases), config, noise_std, capture_rng)
        records.append(
            PositionRecord(
                index=p,
                position=geom.positions[moving],
                solo_amplitudes=MappingProxyType(solo),
                combined_amplitude=combined,
                range_estimates=MappingProxyType({s: tuple(v) for s, v in estimates.items()}),
                tracked_range=MappingProxyType(tracked),
                applied_correction=MappingProxyType(dict(applied)),
            )
        )

    return ScenarioResult(
        config=config,
        records=tuple(records),
        calibration=MappingProxyType(calibration),
        hardware_offsets=MappingProxyType(hw),
        range_log=tuple(range_log),
        kalman_log=MappingProxyType({s: tuple(v) for s, v in kalman_log.items()}),
    )


# --------------------------------------------------------------------------
# output


def result_rows(result: ScenarioResult):
    nodes = result.config.nodes
    header = ("position_m", *(f"solo_amp_{n}" for n in nodes), "combined_amp", "corrected_flag")
    rows = [
        (r.position, *(r.solo_amplitudes[n] for n in nodes), r.combined_amplitude, result.corrected)
        for r in result.records
    ]
    return header, rows


def write_result(result: ScenarioResult, output_dir, stem: str | None = None) -> list[Path]:
    """Write the per-position CSV plus ranging and per-node Kalman logs."""
    output_dir = Path(output_dir)
    stem = stem or f"{result.config.name}_{'corrected' if result.corrected else 'uncorrected'}"
    header, rows = result_rows(result)
    paths = [_io.write_csv(output_dir / f"{stem}.csv", header, rows)]
    paths.append(write_range_log(output_dir / f"{stem}_ranging.csv", result.range_log))
    for node, log in result.kalman_log.items():
        paths.append(write_kalman_log(output_dir / f"{stem}_kalman_{node}.csv", log))
    paths.append(_io.write_json(output_dir / f"{stem}_summary.json", result.summary()))
    return paths


# --------------------------------------------------------------------------
# configuration files


def two_node_config(**overrides) -> ScenarioConfig:
    cfg = ScenarioConfig(
        name="two_node",
        geometry=ArrayGeometry({"primary": 3.0, "secondary1": 1.5}, receiver_position=0.0),
        waveform=WaveformSpec(n_pulses=1, f1=0.5e6, delta_f_step=11e6, duty_cycle=0.5, pulse_period=1e-3),
        ranging_link=LinkParams(snr_db=30.0),
        motion=(Motion("primary", 0.02, 10, -1),),
    )
    return replace(cfg, **overrides) if overrides else cfg


def three_node_config(**overrides) -> ScenarioConfig:
    # primary 1 m beyond secondary2; secondaries 0.6 m apart, secondary1 1 m from the receiver
    cfg = ScenarioConfig(
        name="three_node",
        geometry=ArrayGeometry({"primary": 2.6, "secondary1": 1.0, "secondary2": 1.6}, receiver_position=0.0),
        waveform=WaveformSpec(n_pulses=5, f1=0.5e6, delta_f_step=1e6, duty_cycle=0.5, pulse_period=200e-6),
        ranging_link=LinkParams(snr_db=30.0),
        motion=(Motion("primary", 0.02, 10, -1),),
    )
    return replace(cfg, **overrides) if overrides else cfg


_SCENARIO_KEYS = {
    "name": str,
    "primary": str,
    "seed": int,
    "beamforming_frequency": float,
    "snapshots_per_position": int,
    "cycles_per_snapshot": int,
    "samples_per_cycle": int,
    "ranging_rounds": int,
    "correction_enabled": "bool",
    "receiver_snr_db": float,
    "separation_taper": float,
}
_WAVEFORM_KEYS = ("n_pulses", "f1", "delta_f_step", "duty_cycle", "pulse_period", "sample_rate")


def _float(section, key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {text!r}") from None


def load_config(path) -> ScenarioConfig:
    """Read an INI-style scenario file (see ``configs/two_node.cfg``)."""
    path = resolve_config_path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    for required in ("geometry", "waveform", "motion"):
        if not parser.has_section(required):
            raise ConfigError(f"{path}: missing [{required}] section")
    try:
        kwargs = {}
        if parser.has_section("scenario"):
            sec = parser["scenario"]
            for key, value in sec.items():
                if key not in _SCENARIO_KEYS:
                    raise ConfigError(f"[scenario] unknown key {key!r}")
                kind = _SCENARIO_KEYS[key]
                kwargs[key] = sec.getboolean(key) if kind == "bool" else kind(value)

        geo = dict(parser["geometry"])
        receiver = _float("geometry", "receiver", geo.pop("receiver", "0"))
        geometry = ArrayGeometry({k: _float("geometry", k, v) for k, v in geo.items()}, receiver)

        wf = parser["waveform"]
        unknown = set(wf) - set(_WAVEFORM_KEYS)
        if unknown:
            raise ConfigError(f"[waveform] unknown keys {sorted(unknown)}")
        wkw = {k: (int(wf[k]) if k == "n_pulses" else _float("waveform", k, wf[k])) for k in wf}
        waveform = WaveformSpec(**wkw)

        link_kw = {}
        if parser.has_section("ranging"):
            rg = parser["ranging"]
            names = {
                "uplink_frequency": "carrier_frequency",
                "downlink_frequency": "downlink_frequency",
                "snr_db": "snr_db",
                "repeater_gain_db": "repeater_gain",
                "speed_of_light": "speed_of_light",
            }
            for key, value in rg.items():
                if key not in names:
                    raise ConfigError(f"[ranging] unknown key {key!r}")
                link_kw[names[key]] = _float("ranging", key, value)
        link = LinkParams(seed=kwargs.get("seed", 0), **link_kw)

        if parser.has_section("tracking"):
            tr = parser["tracking"]
            for key, value in tr.items():
                if key == "mode":
                    kwargs["tracking_mode"] = value.strip()
                elif key in ("measurement_variance", "process_variance", "innovation_threshold"):
                    kwargs[key] = _float("tracking", key, value)
                else:
                    raise ConfigError(f"[tracking] unknown key {key!r}")

        motion = []
        for node, value in parser["motion"].items():
            parts = [p.strip() for p in value.split(",")]
            if len(parts) != 3:
                raise ConfigError(f"[motion] {node}: expected 'step_size, n_steps, direction'")
            motion.append(Motion(node, _float("motion", node, parts[0]), int(parts[1]), int(parts[2])))

        for section, key in (("hardware_offsets", "hardware_offsets"), ("amplitudes", "tx_amplitudes")):
            if parser.has_section(section):
                kwargs[key] = {k: _float(section, k, v) for k, v in parser[section].items()}

        return ScenarioConfig(geometry=geometry, waveform=waveform, ranging_link=link, motion=tuple(motion), **kwargs)
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def resolve_config_path(path) -> Path:
    """Accept a file path or the bare name of a bundled config."""
    p = Path(path)
    if p.exists():
        return p
    bundled = CONFIG_DIR / p.name
    if bundled.exists():
        return bundled
    raise ConfigError(f"config file not found: {path}")


def with_seed(config: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(config, seed=seed, ranging_link=replace(config.ranging_link, seed=seed))
