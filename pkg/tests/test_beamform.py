import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdasim.beamform import (
    NodeEmission,
    coherent_gain,
    endfire_gain,
    endfire_phases,
    phase_correction,
    received_sum,
)

LAM = 0.2


def test_phase_correction_examples():
    assert phase_correction(LAM, LAM) == 0.0
    assert phase_correction(LAM / 4, LAM) == pytest.approx(math.pi / 2)
    assert phase_correction(0.37, LAM, math.pi / 2) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(d=st.floats(-100, 100), theta=st.floats(0, 2 * math.pi))
def test_phase_correction_range(d, theta):
    phi = phase_correction(d, LAM, theta)
    assert 0 <= phi < 2 * math.pi
    expected = 2 * math.pi * d / LAM * math.cos(theta)
    assert abs(math.remainder(phi - expected, 2 * math.pi)) < 1e-9 * (1 + abs(expected))


def test_phase_correction_rejects_bad_wavelength():
    with pytest.raises(ValueError):
        phase_correction(1.0, 0.0)


def test_received_sum_in_phase_and_antiphase():
    a = 0.7
    same = [NodeEmission(a), NodeEmission(a)]
    anti = [NodeEmission(a), NodeEmission(a, phase_offset=math.pi)]
    assert abs(received_sum(same, 1e9)) == pytest.approx(2 * a)
    assert abs(received_sum(anti, 1e9)) == pytest.approx(0.0, abs=1e-12)


def test_received_sum_time_dependence():
    nodes = [NodeEmission(1.0)]
    f = 1.5e9
    assert received_sum(nodes, f, t=0.25 / f) == pytest.approx(1j)


def test_incoherent_average_power(rng):
    phases = rng.uniform(0, 2 * math.pi, size=(100_000, 3))
    power = np.abs(np.exp(1j * phases).sum(axis=1)) ** 2
    assert power.mean() == pytest.approx(3.0, rel=0.02)
    # same thing through received_sum for a subset
    sub = [abs(received_sum([NodeEmission(1.0, phase_offset=p) for p in row], 1.0)) ** 2 for row in phases[:2000]]
    assert np.mean(sub) == pytest.approx(3.0, rel=0.1)


def test_received_sum_geometry():
    # exact path: 1/R amplitude and -2*pi*R/lambda phase
    c = 3e8
    f = c / LAM
    node = NodeEmission(1.0, position=2.05)
    s = received_sum([node], f, receiver_position=0.0, c=c)
    assert abs(s) == pytest.approx(1 / 2.05)
    assert math.remainder(np.angle(s) + 2 * math.pi * 2.05 / LAM, 2 * math.pi) == pytest.approx(0.0, abs=1e-9)


def test_emission_requires_non_negative_amplitude():
    with pytest.raises(ValueError):
        NodeEmission(-1.0)


def test_coherent_gain_examples():
    ideal = [NodeEmission(1.0), NodeEmission(1.0)]
    assert coherent_gain(ideal, ideal).coherent_gain == pytest.approx(1.0)
    common = [NodeEmission(1.0, phase_offset=0.9), NodeEmission(1.0, phase_offset=0.9)]
    assert coherent_gain(common, ideal).coherent_gain == pytest.approx(1.0)
    with pytest.raises(ValueError):
        coherent_gain(ideal, ideal[:1])
    with pytest.raises(ValueError):
        coherent_gain([NodeEmission(0.0)], [NodeEmission(0.0)])


def test_two_node_closed_form(rng):
    ideal = [NodeEmission(1.0), NodeEmission(1.0)]
    for dphi in rng.uniform(-10, 10, 1000):
        g = coherent_gain([NodeEmission(1.0), NodeEmission(1.0, phase_offset=dphi)], ideal)
        assert abs(g.coherent_gain - math.cos(dphi / 2) ** 2) < 1e-12


@settings(max_examples=100, deadline=None)
@given(phases=st.lists(st.floats(-10, 10), min_size=1, max_size=12), data=st.data())
def test_gain_bounded(phases, data):
    amps = data.draw(st.lists(st.floats(0.1, 5), min_size=len(phases), max_size=len(phases)))
    err = [NodeEmission(a, phase_offset=p) for a, p in zip(amps, phases)]
    ideal = [NodeEmission(a) for a in amps]
    res = coherent_gain(err, ideal)
    assert -1e-12 <= res.coherent_gain <= 1 + 1e-12
    assert res.coherent_gain == pytest.approx((res.actual_amplitude / res.ideal_amplitude) ** 2)


def test_endfire_phase_model():
    d = np.array([0.0, 1.5, 3.0])
    dd = np.array([0.001, -0.002, 0.0])
    np.testing.assert_allclose(endfire_phases(d, dd, LAM), 2 * np.pi / LAM * (d + dd))


@settings(max_examples=60, deadline=None)
@given(errs=st.lists(st.floats(-0.5, 0.5), min_size=2, max_size=8), common=st.floats(-1, 1))
def test_endfire_gain_matches_coherent_gain(errs, common):
    errs = np.array(errs)
    d = np.linspace(0, 2, errs.size)
    path = np.exp(-2j * np.pi * d / LAM)
    with_err = [NodeEmission(1.0, h, p) for h, p in zip(path, endfire_phases(d, errs, LAM))]
    ideal = [NodeEmission(1.0, h, p) for h, p in zip(path, endfire_phases(d, 0 * errs, LAM))]
    assert endfire_gain(errs, LAM) == pytest.approx(coherent_gain(with_err, ideal).coherent_gain, abs=1e-9)
    # common-mode error and whole-wavelength offsets leave the gain unchanged
    assert endfire_gain(errs + common, LAM) == pytest.approx(endfire_gain(errs, LAM), abs=1e-9)
    shifted = errs.copy()
    shifted[0] += LAM
    assert endfire_gain(shifted, LAM) == pytest.approx(endfire_gain(errs, LAM), abs=1e-9)


def test_endfire_gain_vectorised(rng):
    errs = rng.normal(0, LAM / 20, size=(50, 4))
    batch = endfire_gain(errs, LAM)
    assert batch.shape == (50,)
    np.testing.assert_allclose(batch, [endfire_gain(e, LAM) for e in errs])
