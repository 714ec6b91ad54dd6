"""Open-loop coherent distributed array simulation.

Ranging with two-tone stepped-frequency waveforms through a repeater,
Kalman refinement of the measured delay, range-driven carrier phase
correction, and the analysis tools (ranging bounds, coherent-gain Monte
Carlo) used to size such arrays.
"""

from .analysis import (
    CrlbReport,
    GainCurve,
    crlb,
    default_sigma_grid,
    gain_probability_sweep,
    max_frequency,
    processing_gain,
)
from .beamform import (
    GainResult,
    NodeEmission,
    coherent_gain,
    endfire_gain,
    phase_correction,
    received_sum,
)
from .channel import (
    ArrayGeometry,
    LinkParams,
    add_awgn,
    fractional_delay,
    propagate,
    relay,
    round_trip,
)
from .constants import PAPER_SPEED_OF_LIGHT, SPEED_OF_LIGHT
from .presets import PRESETS, THREE_NODE, TWO_NODE, Preset, get_preset
from .ranging import (
    CorrelationBuffer,
    RangeEstimate,
    estimate_range,
    interpolate_peak,
    matched_filter,
)
from .scenario import (
    ConfigError,
    Motion,
    ScenarioConfig,
    ScenarioResult,
    calibrate,
    load_config,
    run_scenario,
    three_node_config,
    two_node_config,
)
from .tracking import KalmanState, kalman_init, kalman_update
from .waveform import (
    PulseSignature,
    SignalBuffer,
    WaveformSpec,
    assign_signatures,
    derive_step,
    msbw_analytic,
    msbw_numeric,
    separation_template,
    synthesize,
    validate_spec,
)

__version__ = "0.1.0"
