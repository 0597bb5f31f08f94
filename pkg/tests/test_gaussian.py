import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlaqkd.gaussian import (
    PhysicalityError,
    SymmetricBlockCM,
    conditional_cm_homodyne,
    g_entropy,
    holevo_information,
    mutual_information_homodyne,
    symplectic_spectrum,
    von_neumann_entropy,
)
from oracles import (
    block_matrix,
    finite_z_conditional_cm,
    finite_z_mutual_information,
    mp_g,
    symplectic_eigenvalues_4x4,
)


@st.composite
def physical_cms(draw):
    """Random block-form CMs with both symplectic eigenvalues >= 1.

    Built as a TMSV sent through a thermal-loss channel, which covers every
    form the protocols emit.
    """
    V = draw(st.floats(1.0, 50.0))
    T = draw(st.floats(1e-3, 1.0))
    eps = draw(st.floats(0.0, 0.5))
    return SymmetricBlockCM(V, 1.0 + T * (V - 1.0 + eps), math.sqrt(T * (V * V - 1.0)))


class TestGEntropy:
    def test_zero_is_exact(self):
        assert g_entropy(0.0) == 0.0

    def test_one(self):
        assert g_entropy(1.0) == 2.0

    def test_half_matches_arbitrary_precision(self):
        # 1.5 log2 1.5 + 0.5, frozen from mpmath
        assert g_entropy(0.5) == pytest.approx(1.37744375108173427, rel=1e-14)
        assert g_entropy(0.5) == pytest.approx(float(mp_g("0.5")), rel=1e-14)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            g_entropy(-0.1)

    def test_strictly_increasing(self):
        xs = np.linspace(1e-6, 50.0, 2000)
        values = [g_entropy(float(x)) for x in xs]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestSymplecticSpectrum:
    @pytest.mark.parametrize("V", [1.0, 2.0, 3.0, 5.0, 20.0])
    def test_tmsv_is_pure(self, V):
        spec = symplectic_spectrum(SymmetricBlockCM(V, V, math.sqrt(V * V - 1.0)))
        assert spec.d1 == pytest.approx(1.0, abs=1e-9)
        assert spec.d2 == pytest.approx(1.0, abs=1e-9)

    def test_vacuum(self):
        spec = symplectic_spectrum(SymmetricBlockCM(1.0, 1.0, 0.0))
        assert (spec.d1, spec.d2) == (1.0, 1.0)

    def test_mixed_example_against_generic_eigensolver(self):
        cm = SymmetricBlockCM(2.0, 1.5, math.sqrt(1.5))
        spec = symplectic_spectrum(cm)
        d1, d2 = symplectic_eigenvalues_4x4(cm.to_matrix())
        assert (d1, d2) == pytest.approx((1.5, 1.0), abs=1e-12)
        assert spec.d1 == pytest.approx(d1, rel=1e-12)
        assert spec.d2 == pytest.approx(d2, abs=1e-12)

    def test_delta_from_invariants(self):
        spec = symplectic_spectrum(SymmetricBlockCM(2.0, 1.5, 0.5))
        assert spec.delta == pytest.approx(4.0 + 2.25 - 0.5)

    def test_unphysical_raises(self):
        with pytest.raises(PhysicalityError):
            symplectic_spectrum(SymmetricBlockCM(1.0, 1.0, 0.9))

    @given(physical_cms())
    @settings(max_examples=300, deadline=None)
    def test_matches_generic_eigensolver(self, cm):
        spec = symplectic_spectrum(cm)
        d1, d2 = symplectic_eigenvalues_4x4(block_matrix(cm.a, cm.b, cm.c))
        assert spec.d1 == pytest.approx(d1, rel=1e-8)
        assert spec.d2 == pytest.approx(max(d2, 1.0), rel=1e-8, abs=1e-8)

    @given(physical_cms())
    @settings(max_examples=300, deadline=None)
    def test_product_is_sqrt_i4(self, cm):
        spec = symplectic_spectrum(cm)
        i4 = cm.invariants[3]
        assert spec.d1 >= spec.d2 >= 1.0 - 1e-9
        assert spec.d1 * spec.d2 == pytest.approx(math.sqrt(i4), rel=1e-9)


class TestConditionalAndMutual:
    def test_conditional_example_against_finite_z(self):
        cm = SymmetricBlockCM(2.0, 2.0, math.sqrt(3.0))
        got = conditional_cm_homodyne(cm)
        np.testing.assert_allclose(got, np.diag([0.5, 2.0]), atol=1e-12)
        np.testing.assert_allclose(got, finite_z_conditional_cm(2.0, 2.0, math.sqrt(3.0)), atol=1e-7)

    def test_conditional_uncorrelated_is_inert(self):
        np.testing.assert_array_equal(conditional_cm_homodyne(SymmetricBlockCM(3.0, 3.0, 0.0)), np.diag([3.0, 3.0]))

    def test_conditional_rejects_nonpositive_b(self):
        with pytest.raises(ValueError):
            conditional_cm_homodyne(SymmetricBlockCM(1.0, 0.0, 0.0))

    def test_mutual_information_example(self):
        cm = SymmetricBlockCM(2.0, 2.0, math.sqrt(3.0))
        assert mutual_information_homodyne(cm) == pytest.approx(0.5, rel=1e-12)
        assert finite_z_mutual_information(2.0, 2.0, math.sqrt(3.0)) == pytest.approx(0.5, abs=1e-7)

    @pytest.mark.parametrize("cm", [SymmetricBlockCM(4.0, 2.0, 0.0), SymmetricBlockCM(1.0, 1.0, 0.0)])
    def test_mutual_information_vanishes_without_correlation(self, cm):
        assert mutual_information_homodyne(cm) == 0.0

    @given(physical_cms())
    @settings(max_examples=1000, deadline=None)
    def test_homodyne_limit_consistency(self, cm):
        assert mutual_information_homodyne(cm) == pytest.approx(
            finite_z_mutual_information(cm.a, cm.b, cm.c), abs=1e-5
        )


class TestHolevo:
    def test_pure_state(self):
        assert holevo_information(SymmetricBlockCM(2.0, 2.0, math.sqrt(3.0))) == pytest.approx(0.0, abs=1e-12)

    def test_vacuum(self):
        assert holevo_information(SymmetricBlockCM(1.0, 1.0, 0.0)) == 0.0

    def test_mixed_example(self):
        # G(1/4) + G(0) - G((sqrt2 - 1)/2), frozen from mpmath
        got = holevo_information(SymmetricBlockCM(2.0, 1.5, math.sqrt(1.5)))
        assert got == pytest.approx(0.104162191994915137, rel=1e-12)
        ref = mp_g("0.25") - mp_g((math.sqrt(2.0) - 1.0) / 2.0)
        assert got == pytest.approx(float(ref), rel=1e-12)

    @given(physical_cms())
    @settings(max_examples=300, deadline=None)
    def test_non_negative(self, cm):
        assert holevo_information(cm) >= -1e-9

    @pytest.mark.parametrize("V", [1.0, 2.0, 5.0, 20.0, 100.0])
    def test_tmsv_entropy_zero(self, V):
        assert abs(von_neumann_entropy(SymmetricBlockCM(V, V, math.sqrt(V * V - 1.0)))) < 1e-9


class TestBlockCM:
    def test_invariants(self):
        cm = SymmetricBlockCM(2.0, 3.0, 0.5)
        assert cm.invariants == (4.0, 9.0, -0.25, (6.0 - 0.25) ** 2)

    def test_matrix_layout(self):
        m = SymmetricBlockCM(2.0, 3.0, 0.5).to_matrix()
        assert np.linalg.det(m[:2, :2]) == pytest.approx(4.0)
        assert np.linalg.det(m[:2, 2:]) == pytest.approx(-0.25)
        assert np.linalg.det(m) == pytest.approx((6.0 - 0.25) ** 2)

    def test_is_physical(self):
        assert SymmetricBlockCM(2.0, 2.0, math.sqrt(3.0)).is_physical()
        assert not SymmetricBlockCM(2.0, 2.0, 1.8).is_physical()
        assert not SymmetricBlockCM(0.5, 1.0, 0.0).is_physical()
