import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlaqkd.channel import ChannelParams, channel_from_distance, channel_from_transmissivity, gg02_cm
from nlaqkd.gaussian import symplectic_spectrum


def test_fifty_km():
    ch = channel_from_distance(0.2, 50.0, 0.03)
    assert ch.T == pytest.approx(0.1, rel=1e-12)
    assert ch.chi == pytest.approx(9.03, rel=1e-12)
    assert ch.T == pytest.approx(float(mp.power(10, mp.mpf(-1))), rel=1e-12)


def test_hundred_km():
    assert channel_from_distance(0.2, 100.0, 0.03).T == pytest.approx(0.01, rel=1e-12)


def test_zero_length():
    ch = channel_from_distance(0.2, 0.0, 0.0)
    assert ch.T == 1.0
    assert ch.chi == 0.0
    assert ch.n_eps == 0.0


def test_zero_length_with_noise_has_no_bath():
    ch = channel_from_distance(0.2, 0.0, 0.01)
    assert ch.chi == pytest.approx(0.01)
    with pytest.raises(ValueError):
        ch.n_eps


def test_thermal_photons():
    ch = channel_from_distance(0.2, 50.0, 0.03)
    assert ch.n_eps == pytest.approx(0.1 * 0.03 / (2 * 0.9), rel=1e-12)


@pytest.mark.parametrize("args", [(0.0, 10.0, 0.0), (-0.2, 10.0, 0.0), (0.2, -1.0, 0.0), (0.2, 10.0, -0.01)])
def test_invalid_inputs(args):
    with pytest.raises(ValueError):
        channel_from_distance(*args)


def test_from_transmissivity_roundtrip():
    ch = channel_from_transmissivity(0.01, 0.02)
    assert ch.distance == pytest.approx(100.0)
    assert channel_from_distance(ch.kappa, ch.distance, 0.02).T == pytest.approx(0.01, rel=1e-12)
    with pytest.raises(ValueError):
        channel_from_transmissivity(0.0, 0.0)


@given(st.floats(0.0, 500.0), st.floats(0.0, 500.0))
@settings(max_examples=200, deadline=None)
def test_composition_law(d1, d2):
    t12 = channel_from_distance(0.2, d1 + d2, 0.0).T
    t1 = channel_from_distance(0.2, d1, 0.0).T
    t2 = channel_from_distance(0.2, d2, 0.0).T
    assert t12 == pytest.approx(t1 * t2, rel=1e-12)


def test_monotone_in_distance():
    Ts = [channel_from_distance(0.2, d, 0.03).T for d in range(0, 300, 5)]
    chis = [channel_from_distance(0.2, d, 0.03).chi for d in range(0, 300, 5)]
    assert all(b < a for a, b in zip(Ts, Ts[1:]))
    assert all(b > a for a, b in zip(chis, chis[1:]))


class TestGG02CM:
    def test_identity_channel(self):
        cm = gg02_cm(2.0, channel_from_distance(0.2, 0.0, 0.0))
        assert (cm.a, cm.b, cm.c) == pytest.approx((2.0, 2.0, math.sqrt(3.0)))

    def test_vacuum_input(self):
        ch = channel_from_distance(0.2, 30.0, 0.05)
        cm = gg02_cm(1.0, ch)
        assert (cm.a, cm.b, cm.c) == pytest.approx((1.0, ch.T * (1.0 + ch.chi), 0.0))

    def test_fifty_km_example(self):
        cm = gg02_cm(4.0, ChannelParams(0.2, 50.0, 0.1, 0.03))
        assert cm.a == 4.0
        assert cm.b == pytest.approx(1.303, rel=1e-12)
        assert cm.c == pytest.approx(math.sqrt(1.5), rel=1e-12)

    def test_rejects_sub_vacuum(self):
        with pytest.raises(ValueError):
            gg02_cm(0.9, channel_from_distance(0.2, 1.0, 0.0))

    @given(st.floats(1.0, 100.0), st.floats(1e-6, 1.0), st.floats(0.0, 0.5))
    @settings(max_examples=300, deadline=None)
    def test_always_physical(self, V, T, eps):
        cm = gg02_cm(V, ChannelParams(math.nan, math.nan, T, eps))
        assert symplectic_spectrum(cm).d2 >= 1.0 - 1e-9
