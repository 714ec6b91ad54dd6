"""Fast reproduction checks of the published headline numbers.

Each check returns ``(name, passed, detail)``.  The set is small enough to
run in well under a minute and is what ``cdasim selftest`` executes.
"""

from __future__ import annotations

from .analysis import gain_probability_sweep
from .constants import PAPER_SPEED_OF_LIGHT
from .presets import THREE_NODE, TWO_NODE
from .scenario import run_scenario, three_node_config, two_node_config
from .tracking import PAPER_MEASUREMENT_VARIANCE, kalman_init, kalman_update


def _within(value, target, rel):
    return abs(value - target) <= rel * abs(target)


def check_crlb():
    two = TWO_NODE.crlb(PAPER_SPEED_OF_LIGHT)
    three = THREE_NODE.crlb(PAPER_SPEED_OF_LIGHT)
    ok = (
        _within(two.delay_variance, 2.65e-22, 0.02)
        and _within(two.range_std, 2.44e-3, 0.02)
        and _within(two.max_frequency, 6.14e9, 0.02)
        and _within(three.range_std, 2.42e-3, 0.02)
        and _within(three.max_frequency, 6.18e9, 0.02)
    )
    detail = (
        f"two-node var={two.delay_variance:.3e} s^2 sigma_x={two.range_std * 1e3:.3f} mm "
        f"f_max={two.max_frequency / 1e9:.3f} GHz; three-node sigma_x={three.range_std * 1e3:.3f} mm "
        f"f_max={three.max_frequency / 1e9:.3f} GHz"
    )
    return "crlb", ok, detail


def check_processing_gain():
    g2, g3 = TWO_NODE.processing_gain_db, THREE_NODE.processing_gain_db
    ok = abs(g2 - 35) <= 0.1 and abs(g3 - 38) <= 0.1
    return "processing_gain", ok, f"two-node {g2:.2f} dB, three-node {g3:.2f} dB"


def check_kalman():
    state = kalman_init(0.0)
    for _ in range(200):
        state = kalman_update(state, 0.0)
    # gain the next update would apply from the converged variance
    gain = state.variance / (state.variance + PAPER_MEASUREMENT_VARIANCE)
    ok = abs(state.variance - 1.5e-5) < 1e-9 and abs(gain - 1 / 3) < 1e-9
    return "kalman_steady_state", ok, f"variance={state.variance:.6e} gain={gain:.9f}"


def check_montecarlo(trials=2000):
    lam = PAPER_SPEED_OF_LIGHT / 1.5e9
    ok, parts = True, []
    for n in (2, 3, 10):
        curve = gain_probability_sweep(n, [0.0, lam / 100, lam / 4], trials=trials, seed=0, wavelength=lam)
        p0, p_lo, p_hi = curve.probability
        ok &= p0 == 1.0 and p_lo >= 0.999 and p_hi <= 0.5
        parts.append(f"n={n}: {p_lo:.4f}@l/100 {p_hi:.4f}@l/4")
    return "gain_brackets", bool(ok), "; ".join(parts)


def check_two_node_scenario():
    on = run_scenario(two_node_config(correction_enabled=True)).relative_amplitudes()
    off = run_scenario(two_node_config(correction_enabled=False)).relative_amplitudes()
    ok = on.min() >= 0.9 and off.min() < 0.2 and off[-1] > 0.9
    return "two_node_scenario", bool(ok), f"corrected min {on.min():.3f}, uncorrected min {off.min():.3f} end {off[-1]:.3f}"


def check_three_node_scenario():
    on = run_scenario(three_node_config(correction_enabled=True)).relative_powers()
    off = run_scenario(three_node_config(correction_enabled=False)).relative_powers()
    ok = on.min() >= 0.9 and abs(off.min() - 0.07) <= 0.05
    return "three_node_scenario", bool(ok), f"corrected min power {on.min():.3f}, uncorrected min power {off.min():.3f}"


CHECKS = (
    check_crlb,
    check_processing_gain,
    check_kalman,
    check_montecarlo,
    check_two_node_scenario,
    check_three_node_scenario,
)


def run_selftest(checks=CHECKS):
    results = []
    for check in checks:
        try:
            results.append(check())
        except Exception as exc:  # a crashing check is a failed check
            results.append((check.__name__.removeprefix("check_"), False, f"error: {exc}"))
    return results


def all_passed(results) -> bool:
    return all(ok for _, ok, _ in results)
