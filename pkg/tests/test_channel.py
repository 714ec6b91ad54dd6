import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdasim.channel import (
    ArrayGeometry,
    LinkParams,
    active_power,
    add_awgn,
    fractional_delay,
    propagate,
    relay,
    round_trip,
)
from cdasim.constants import PAPER_SPEED_OF_LIGHT, SPEED_OF_LIGHT
from cdasim.ranging import ambiguity_gate, estimate_range, interpolation_tolerance
from cdasim.waveform import SignalBuffer, synthesize

FS = 25e6


def _gauss_tone(f, delay=0.0, n=4096, width=300):
    """Gaussian-windowed tone centred in the buffer, delayed analytically."""
    t = np.arange(n) / FS
    t0 = n / 2 / FS + delay
    w = width / FS
    return SignalBuffer(np.exp(-(((t - t0) / w) ** 2)) * np.exp(2j * np.pi * f * (t - delay)), FS)


# -- geometry and link


def test_geometry_invariants():
    g = ArrayGeometry({"a": 1.0, "b": 2.5}, 0.0)
    assert g.distance("a", "b") == 1.5
    assert g.range_to_receiver("b") == 2.5
    assert g.moved("b", -0.5).positions["b"] == 2.0
    with pytest.raises(ValueError):
        ArrayGeometry({"a": math.inf})
    with pytest.raises(TypeError):
        g.positions["a"] = 3.0


def test_link_requires_positive_carrier():
    with pytest.raises(ValueError):
        LinkParams(carrier_frequency=0.0)


# -- fractional_delay


def test_integer_delay_is_exact_shift(two_node_spec):
    x = synthesize(two_node_spec)
    y = fractional_delay(x, 7 / FS)
    np.testing.assert_array_equal(y.samples[7:], x.samples[:-7])
    np.testing.assert_array_equal(y.samples[:7], 0)


def test_zero_delay_identity():
    x = _gauss_tone(3e6)
    assert fractional_delay(x, 0.0) == x


def test_half_sample_twice_equals_one_sample():
    x = _gauss_tone(4e6)
    twice = fractional_delay(fractional_delay(x, 0.5 / FS), 0.5 / FS)
    once = fractional_delay(x, 1 / FS)
    err = np.abs(twice.samples - once.samples).max() / np.abs(x.samples).max()
    assert err < 1e-6


@pytest.mark.parametrize("f", np.linspace(0, 0.4 * FS, 9))
@pytest.mark.parametrize("frac", [0.1, 0.37, 0.5, 12.8])
def test_fractional_delay_accuracy_in_band(f, frac):
    x = _gauss_tone(f)
    y = fractional_delay(x, frac / FS)
    ref = _gauss_tone(f, frac / FS)
    err_db = 10 * np.log10(np.sum(np.abs(y.samples - ref.samples) ** 2) / np.sum(np.abs(ref.samples) ** 2))
    assert err_db < -60


def test_delay_beyond_buffer_rejected():
    x = _gauss_tone(1e6, n=64)
    with pytest.raises(ValueError):
        fractional_delay(x, 64 / FS)


@settings(max_examples=25, deadline=None)
@given(d=st.floats(-40.0, 40.0))
def test_delay_preserves_energy_of_centred_pulse(d):
    x = _gauss_tone(2e6)
    assert fractional_delay(x, d / FS).energy() == pytest.approx(x.energy(), rel=1e-6)


# -- propagate


def test_full_wavelength_has_no_phase_rotation():
    fc = 4.25e9
    d = SPEED_OF_LIGHT / fc
    x = _gauss_tone(1e6)
    y = propagate(x, d, LinkParams(carrier_frequency=fc))
    expected = fractional_delay(x, d / SPEED_OF_LIGHT).samples / d
    np.testing.assert_allclose(y.samples, expected, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(d=st.floats(0.1, 50.0))
def test_phase_matches_distance(d):
    fc = 4.25e9
    x = _gauss_tone(2e6)
    y = propagate(x, d, LinkParams(carrier_frequency=fc))
    ref = fractional_delay(x, d / SPEED_OF_LIGHT)
    k = np.argmax(np.abs(ref.samples))
    measured = np.angle(y.samples[k] / ref.samples[k])
    expected = -2 * np.pi * fc * d / SPEED_OF_LIGHT
    assert abs(math.remainder(measured - expected, 2 * math.pi)) < 1e-6


def test_doubling_distance_halves_amplitude():
    x = _gauss_tone(1e6)
    link = LinkParams()
    a1 = np.abs(propagate(x, 2.0, link).samples).max()
    a2 = np.abs(propagate(x, 4.0, link).samples).max()
    assert a2 / a1 == pytest.approx(0.5, rel=1e-6)
    assert 20 * np.log10(a2 / a1) == pytest.approx(-6.02, abs=0.01)


def test_noiseless_propagation_is_deterministic():
    x = _gauss_tone(1e6)
    link = LinkParams(snr_db=math.inf)
    assert propagate(x, 3.0, link) == propagate(x, 3.0, link)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_non_positive_distance_rejected(d):
    with pytest.raises(ValueError):
        propagate(_gauss_tone(1e6), d, LinkParams())


def test_cascade_consistency():
    x = _gauss_tone(3e6)
    link = LinkParams()
    d1, d2 = 1.3, 2.9
    cascade = propagate(propagate(x, d1, link), d2, link)
    direct = propagate(x, d1 + d2, link)
    # 1/R per hop with a 1 m reference: the cascade carries 1/(d1*d2)
    np.testing.assert_allclose(cascade.samples * d1 * d2, direct.samples * (d1 + d2), atol=1e-9)


def test_propagate_noise_is_seeded(two_node_spec):
    x = synthesize(two_node_spec)
    link = LinkParams(snr_db=20.0, seed=5)
    assert propagate(x, 2.0, link) == propagate(x, 2.0, link)
    assert propagate(x, 2.0, link) != propagate(x, 2.0, link, seed=6)


# -- round trip and relay


def test_round_trip_delay_at_one_and_a_half_meters(two_node_spec):
    link = LinkParams(speed_of_light=PAPER_SPEED_OF_LIGHT)
    x = synthesize(two_node_spec)
    y = round_trip(x, 1.5, 3.0, link)
    est = estimate_range(y, x, max_delay=ambiguity_gate(two_node_spec), c=PAPER_SPEED_OF_LIGHT)
    assert abs(est.delay - 10e-9) < interpolation_tolerance(FS)


def test_repeater_gain_gives_inverse_square_power():
    x = _gauss_tone(1e6)
    amps = {}
    for d in (1.0, 2.0, 4.0):
        link = LinkParams(repeater_gain=20 * math.log10(d))
        amps[d] = np.abs(round_trip(x, 0.0, d, link).samples).max()
    # power ~ 1/R^2 means amplitude ~ 1/R
    assert amps[2.0] / amps[1.0] == pytest.approx(0.5, rel=1e-6)
    assert amps[4.0] / amps[1.0] == pytest.approx(0.25, rel=1e-6)
    # without the gain the round trip falls as 1/R^4 in power
    bare = np.abs(round_trip(x, 0.0, 2.0, LinkParams()).samples).max()
    assert bare / amps[1.0] == pytest.approx(0.25, rel=1e-6)


def test_round_trip_coincident_positions_rejected():
    with pytest.raises(ValueError):
        round_trip(_gauss_tone(1e6), 1.0, 1.0, LinkParams())


def test_round_trip_noise_on_both_legs(two_node_spec):
    x = synthesize(two_node_spec)
    clean = round_trip(x, 1.5, 3.0, LinkParams())
    noisy = round_trip(x, 1.5, 3.0, LinkParams(snr_db=30.0, seed=1))
    resid = noisy.samples - clean.samples
    p_sig = active_power(clean.samples)
    # two legs at 30 dB each: combined noise about 3 dB above one leg
    snr = 10 * np.log10(p_sig / np.mean(np.abs(resid) ** 2))
    assert snr == pytest.approx(30 - 10 * np.log10(2), abs=0.3)


def test_relay_gives_every_secondary_its_own_noise(three_node_spec):
    x = synthesize(three_node_spec)
    out = relay({"a": x, "b": x}, {"a": 1.0, "b": 1.0 + 1e-9}, 2.6, LinkParams(snr_db=20.0, seed=3))
    assert out["a"] != out["b"]
    again = relay({"a": x, "b": x}, {"a": 1.0, "b": 1.0 + 1e-9}, 2.6, LinkParams(snr_db=20.0, seed=3))
    assert out["a"] == again["a"] and out["b"] == again["b"]


def test_relay_accepts_seed_sequence(two_node_spec):
    x = synthesize(two_node_spec)
    link = LinkParams(snr_db=20.0)
    ss = np.random.SeedSequence(9, spawn_key=(1, 2))
    a = relay({"s": x}, {"s": 1.0}, 2.0, link, seed=ss)["s"]
    b = relay({"s": x}, {"s": 1.0}, 2.0, link, seed=np.random.SeedSequence(9, spawn_key=(1, 2)))["s"]
    assert a == b


# -- add_awgn


def _const(n=1_000_000):
    return SignalBuffer(np.exp(2j * np.pi * 0.01 * np.arange(n)), 1.0)


def test_awgn_measured_snr():
    x = _const()
    y = add_awgn(x, 30.0, seed=0)
    noise = y.samples - x.samples
    snr = 10 * np.log10(1.0 / np.mean(np.abs(noise) ** 2))
    assert snr == pytest.approx(30.0, abs=0.2)


def test_awgn_references_active_power(two_node_spec):
    x = synthesize(two_node_spec)
    y = add_awgn(x, 10.0, seed=0)
    noise = y.samples - x.samples
    assert 10 * np.log10(active_power(x.samples) / np.mean(np.abs(noise) ** 2)) == pytest.approx(10.0, abs=0.2)


def test_awgn_same_seed_same_noise():
    x = _const(1000)
    assert add_awgn(x, 10.0, seed=4) == add_awgn(x, 10.0, seed=4)
    assert add_awgn(x, 10.0, seed=4) != add_awgn(x, 10.0, seed=5)


def test_awgn_infinite_snr_is_identity():
    x = _const(100)
    assert add_awgn(x, math.inf, seed=1) is x


def test_awgn_zero_signal_rejected():
    with pytest.raises(ValueError):
        add_awgn(SignalBuffer(np.zeros(10), 1.0), 10.0, seed=0)


def test_noise_power_scales_with_snr():
    x = _const()
    p30 = np.mean(np.abs(add_awgn(x, 30.0, seed=0).samples - x.samples) ** 2)
    p27 = np.mean(np.abs(add_awgn(x, 27.0, seed=1).samples - x.samples) ** 2)
    assert p27 / p30 == pytest.approx(10**0.3, rel=0.05)
    assert p27 / p30 == pytest.approx(2.0, rel=0.05)
