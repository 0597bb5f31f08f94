import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlaqkd.channel import channel_from_transmissivity, gg02_cm
from nlaqkd.fock import (
    CutoffError,
    DensityOperator,
    apply_beamsplitter,
    covariance_matrix,
    fock_state,
    onoff_povm_element,
    simulate_qs,
    simulate_spc,
    thermal_loss,
    thermal_state,
    tmsv_state,
)
from nlaqkd.protocols import qs_cm_and_prob, spc_cm_and_prob, tau_spc

STANDARD = dict(V=1.5, T=0.5, eps=0.02, eta=0.8, g=1.5)
SIMULATE = {"qs": simulate_qs, "spc": simulate_spc}
CLOSED = {"qs": qs_cm_and_prob, "spc": spc_cm_and_prob}


def total_photons(state: DensityOperator) -> float:
    return sum(state.photon_number(k) for k in range(state.n_modes))


@pytest.fixture(scope="module")
def standard_runs():
    ch = channel_from_transmissivity(STANDARD["T"], STANDARD["eps"])
    return {
        kind: sim(STANDARD["V"], ch, STANDARD["g"], STANDARD["eta"], 20)
        for kind, sim in SIMULATE.items()
    }


class TestStates:
    def test_vacuum_tmsv(self):
        state = tmsv_state(1.0, 4)
        assert state.fock_population((0, 0)) == pytest.approx(1.0, abs=1e-15)
        assert state.trace == pytest.approx(1.0)

    def test_tmsv_number_correlation(self):
        # sum n^2 l^(2n) / sum l^(2n) over the retained support, l^2 = 1/3
        dim = 20
        lam2 = mp.mpf(1) / 3
        ref = mp.fsum(n * n * lam2**n for n in range(dim)) / mp.fsum(lam2**n for n in range(dim))
        state = tmsv_state(2.0, dim)
        n = np.arange(dim)
        got = sum(float((np.abs(np.diagonal(m)) ** 2 * n * n).sum()) for m in state.members)
        assert got == pytest.approx(float(ref), rel=1e-12)
        assert got == pytest.approx(1.0, rel=1e-6)

    @pytest.mark.parametrize("V", [1.0, 1.5, 2.0])
    def test_tmsv_cm(self, V):
        cm = covariance_matrix(tmsv_state(V, 24))
        assert (cm.a, cm.b, cm.c) == pytest.approx((V, V, math.sqrt(V * V - 1)), abs=1e-7)
        assert cm.off_pattern() < 1e-10

    def test_tmsv_cutoff_error(self):
        with pytest.raises(CutoffError):
            tmsv_state(10.0, 5)

    def test_thermal_cutoff_error(self):
        with pytest.raises(CutoffError):
            thermal_state(1.0, 3)

    def test_thermal_populations(self):
        state = thermal_state(0.25)
        assert state.trace == pytest.approx(1.0, abs=1e-14)
        assert state.photon_number(0) == pytest.approx(0.25, rel=1e-6)

    def test_ensemble_matrix_is_hermitian(self):
        state = tmsv_state(1.5, 10)
        state = thermal_loss(state, 1, 0.7, 0.1)
        rho = state.matrix
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-15)
        assert state.eigenvalues().min() >= -1e-12

    def test_from_matrix_roundtrip(self):
        state = thermal_loss(tmsv_state(1.5, 10), 1, 0.5, 0.05)
        again = DensityOperator.from_matrix(state.matrix, state.dims)
        np.testing.assert_allclose(again.matrix, state.matrix, atol=1e-13)


class TestBeamsplitter:
    def test_unit_transmissivity_is_identity(self):
        psi = np.random.default_rng(3).normal(size=(3, 4)) + 0j
        out = apply_beamsplitter(DensityOperator.pure(psi), (0, 1), 1.0)
        np.testing.assert_allclose(out.members[0][:3, :4], psi, atol=1e-15)

    @pytest.mark.parametrize("tau", [0.0, 0.2, 0.5, 0.9])
    def test_single_photon_splitting(self, tau):
        out = apply_beamsplitter(fock_state(1).tensor(fock_state(0)), (0, 1), tau)
        assert out.fock_population((1, 0)) == pytest.approx(tau, abs=1e-15)
        assert out.fock_population((0, 1)) == pytest.approx(1 - tau, abs=1e-15)

    def test_hong_ou_mandel_null(self):
        out = apply_beamsplitter(fock_state(1).tensor(fock_state(1)), (0, 1), 0.5)
        assert out.fock_population((1, 1)) < 1e-10
        assert out.fock_population((2, 0)) == pytest.approx(0.5, abs=1e-14)

    def test_rejects_bad_transmissivity(self):
        with pytest.raises(ValueError):
            apply_beamsplitter(fock_state(1).tensor(fock_state(0)), (0, 1), 1.5)

    @given(
        st.lists(st.complex_numbers(max_magnitude=1.0, allow_nan=False), min_size=9, max_size=9),
        st.floats(0.0, 1.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_photon_number_conserved(self, amps, tau):
        psi = np.array(amps).reshape(3, 3)
        if np.vdot(psi, psi).real < 1e-6:
            return
        state = DensityOperator.pure(psi / np.linalg.norm(psi))
        out = apply_beamsplitter(state, (0, 1), tau)
        assert total_photons(out) == pytest.approx(total_photons(state), abs=1e-9)
        assert out.trace == pytest.approx(1.0, abs=1e-12)


class TestThermalLoss:
    def test_unit_transmissivity(self):
        state = tmsv_state(1.5, 10)
        assert thermal_loss(state, 1, 1.0, 0.3) is state

    @pytest.mark.parametrize("T", [0.1, 0.5, 0.9])
    def test_vacuum_stays_vacuum(self, T):
        out = thermal_loss(fock_state(0, 3).tensor(fock_state(0, 3)), 1, T, 0.0)
        assert out.fock_population((0, 0)) == pytest.approx(1.0, abs=1e-15)

    def test_matches_channel_cm(self):
        ch = channel_from_transmissivity(0.5, 0.02)
        out = thermal_loss(tmsv_state(1.5, 20), 1, ch.T, ch.n_eps)
        cm = covariance_matrix(out)
        ref = gg02_cm(1.5, ch)
        assert (cm.a, cm.b, cm.c) == pytest.approx((ref.a, ref.b, ref.c), abs=1e-7)
        assert ref.b == pytest.approx(0.5 * (1.5 + 1.02))
        assert cm.off_pattern() < 1e-8

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            thermal_loss(tmsv_state(1.5, 10), 1, 0.0, 0.0)
        with pytest.raises(ValueError):
            thermal_loss(tmsv_state(1.5, 10), 1, 0.5, -1.0)


class TestPOVM:
    def test_ideal_off_is_vacuum_projector(self):
        np.testing.assert_array_equal(onoff_povm_element("off", 1.0, 4), [1, 0, 0, 0])

    def test_ideal_on_is_complement(self):
        np.testing.assert_array_equal(onoff_povm_element("on", 1.0, 4), [0, 1, 1, 1])

    def test_inefficient_entry(self):
        assert onoff_povm_element("off", 0.8, 3)[2] == pytest.approx(0.04, abs=1e-15)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            onoff_povm_element("maybe", 0.5, 3)
        with pytest.raises(ValueError):
            onoff_povm_element("on", 0.0, 3)


class TestCircuits:
    @pytest.mark.parametrize("kind", ["qs", "spc"])
    def test_closed_form_agreement(self, standard_runs, kind):
        res = standard_runs[kind]
        cm, p = CLOSED[kind](STANDARD["V"], channel_from_transmissivity(0.5, 0.02), STANDARD["g"], STANDARD["eta"])
        assert res.cm.a == pytest.approx(cm.a, rel=1e-3)
        assert res.cm.b == pytest.approx(cm.b, rel=1e-3)
        assert abs(res.cm.c) == pytest.approx(abs(cm.c), rel=1e-3)
        assert res.p_success == pytest.approx(p, rel=1e-3)

    @pytest.mark.parametrize("kind", ["qs", "spc"])
    def test_block_form_zero_mean_and_positive(self, standard_runs, kind):
        res = standard_runs[kind]
        assert res.cm.off_pattern() < 1e-6
        assert np.max(np.abs(res.cm.means)) < 1e-8
        assert res.min_eigenvalue >= -1e-8

    @pytest.mark.parametrize("kind", ["qs", "spc"])
    def test_cutoff_doubling(self, standard_runs, kind):
        ch = channel_from_transmissivity(0.5, 0.02)
        small = SIMULATE[kind](STANDARD["V"], ch, STANDARD["g"], STANDARD["eta"], 10)
        big = standard_runs[kind]
        for x, y in [(small.cm.a, big.cm.a), (small.cm.b, big.cm.b), (small.cm.c, big.cm.c), (small.p_success, big.p_success)]:
            assert abs(x - y) <= 1e-4 * abs(y)

    def test_qs_lossless_detector_probability(self):
        ch = channel_from_transmissivity(0.5, 0.0)
        res = simulate_qs(1.5, ch, 1.5, 1.0, 20)
        assert res.p_success == pytest.approx(qs_cm_and_prob(1.5, ch, 1.5, 1.0)[1], rel=1e-6)

    def test_qs_mirrored_branch(self, standard_runs):
        # the mirrored click pattern flips the sign of the correlation only
        ch = channel_from_transmissivity(0.5, 0.02)
        other = simulate_qs(1.5, ch, 1.5, 0.8, 20, branch="off-on")
        ref = standard_runs["qs"]
        assert (other.cm.a, other.cm.b, other.p_success) == pytest.approx((ref.cm.a, ref.cm.b, ref.p_success), rel=1e-10)
        assert other.cm.c == pytest.approx(-ref.cm.c, rel=1e-10)

    @pytest.mark.parametrize("eta", [1.0, 0.6])
    def test_spc_vacuum_signal(self, eta):
        # a lone photon stays in the detected mode with probability tau
        ch = channel_from_transmissivity(0.3, 0.0)
        res = simulate_spc(1.0, ch, 2.0, eta, 4)
        tau = tau_spc(2.0)
        assert res.p_success == pytest.approx(eta * tau, rel=1e-12)
        assert res.p_success == pytest.approx(spc_cm_and_prob(1.0, ch, 2.0, eta)[1], rel=1e-12)

    def test_spc_unit_transmissivity_is_identity(self):
        ch = channel_from_transmissivity(0.5, 0.02)
        res = simulate_spc(1.5, ch, None, 0.8, 20, tau=1.0)
        ref = gg02_cm(1.5, ch)
        assert (res.cm.a, res.cm.b, res.cm.c) == pytest.approx((ref.a, ref.b, ref.c), abs=1e-7)
        assert res.p_success == pytest.approx(0.8, rel=1e-9)
