import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdasim.tracking import (
    PAPER_MEASUREMENT_VARIANCE,
    PAPER_PROCESS_VARIANCE,
    kalman_init,
    kalman_update,
    run_filter,
    steady_state_gain,
    steady_state_variance,
    write_kalman_log,
)


def test_paper_defaults():
    s = kalman_init(1.0)
    assert s.measurement_variance == 3e-5
    assert s.process_variance == 5e-6
    assert s.variance == s.measurement_variance


def test_first_gain_is_half_with_equal_variances():
    s = kalman_update(kalman_init(0.0, PAPER_MEASUREMENT_VARIANCE), 1.0)
    assert s.gain == pytest.approx(0.5)
    assert s.estimate == pytest.approx(0.5)


def test_init_without_updates_keeps_estimate():
    s = kalman_init(2.5, 1e-3)
    assert s.estimate == 2.5 and s.variance == 1e-3 and s.step == 0


@pytest.mark.parametrize("args", [(0.0, 0.0, 1e-5, 1e-6), (0.0, 1e-5, 0.0, 1e-6), (0.0, 1e-5, 1e-5, -1e-6)])
def test_init_rejects_bad_variances(args):
    with pytest.raises(ValueError):
        kalman_init(*args)


def test_constant_measurements_converge_monotonically():
    s = kalman_init(0.0)
    errs = []
    for _ in range(50):
        s = kalman_update(s, 1.0)
        errs.append(abs(s.estimate - 1.0))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-8


def test_steady_state_closed_form():
    s_star = steady_state_variance(PAPER_MEASUREMENT_VARIANCE, PAPER_PROCESS_VARIANCE)
    assert s_star == pytest.approx(1.5e-5, abs=1e-15)
    assert steady_state_gain(PAPER_MEASUREMENT_VARIANCE, PAPER_PROCESS_VARIANCE) == pytest.approx(1 / 3)
    s = kalman_init(0.0)
    for _ in range(100):
        s = kalman_update(s, 0.0)
    assert abs(s.variance - 1.5e-5) < 1e-9
    s = kalman_update(s, 0.0)
    assert abs(s.gain - 1 / 3) < 1e-9


def test_update_order_gain_estimate_variance():
    s0 = kalman_init(1.0, 2e-5, 3e-5, 5e-6)
    s1 = kalman_update(s0, 2.0)
    k = 2e-5 / (2e-5 + 3e-5)
    assert s1.gain == pytest.approx(k)
    assert s1.estimate == pytest.approx(1.0 + k * 1.0)
    assert s1.variance == pytest.approx((1 - k) * 2e-5 + 5e-6)
    assert s1.step == 1


def test_zero_process_noise_gain_vanishes():
    states = run_filter(np.zeros(5000), sigma_m_sq=3e-5, sigma_c_sq=0.0)
    assert states[-1].variance < 1e-8
    assert states[-1].gain < 1e-3
    assert all(b.gain < a.gain for a, b in zip(states[1:], states[2:]))


@settings(max_examples=60, deadline=None)
@given(v0=st.floats(1e-12, 1e3))
def test_variance_recursion_converges(v0):
    s = kalman_init(0.0, v0)
    for _ in range(200):
        s = kalman_update(s, 0.0)
    assert abs(s.variance - 1.5e-5) < 1e-12


@settings(max_examples=60, deadline=None)
@given(
    v0=st.floats(1e-9, 1e2),
    zs=st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30),
)
def test_gain_bounds_and_convex_combination(v0, zs):
    s = kalman_init(0.0, v0)
    for z in zs:
        prev = s.estimate
        s = kalman_update(s, z)
        assert 0 < s.gain < 1
        assert s.variance > 0
        lo, hi = min(prev, z), max(prev, z)
        assert lo - 1e-9 * (1 + abs(lo)) <= s.estimate <= hi + 1e-9 * (1 + abs(hi))


def test_divergence_flag():
    s = kalman_init(100.0, innovation_threshold=3.0)
    s = kalman_update(s, 102.0)
    assert not s.diverged
    s = kalman_update(s, 110.0)
    assert s.diverged
    s = kalman_update(s, s.estimate)
    assert not s.diverged


def test_kalman_log(tmp_path):
    zs = [1.0, 1.1, 0.9]
    states = run_filter(zs)
    path = write_kalman_log(tmp_path / "k.csv", list(zip(zs[1:], states[1:])))
    lines = path.read_text().splitlines()
    assert lines[0] == "step,z,estimate,variance,gain,diverged_flag"
    assert len(lines) == 3
    assert lines[1].split(",")[0] == "1"
    assert math.isclose(float(lines[1].split(",")[2]), states[1].estimate)
