import math

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from noonscope.errors import UnsupportedSizeError
from noonscope.fock import (
    PolarizationBasis,
    TwoModeFockState,
    apply_mode_phase,
    basis_state,
    make_noon,
    odd_count_probability,
    oracle_fringe,
    rotate_to_diagonal,
)

SQ2 = 1 / math.sqrt(2)


def symbolic_rotation(n1, n2):
    """Expand (p + m)^n1 (p - m)^n2 / sqrt(2^N n1! n2!) with sympy; returns {(a, b): amplitude}."""
    p, m = sympy.symbols("p m")
    poly = sympy.Poly(sympy.expand((p + m) ** n1 * (p - m) ** n2), p, m)
    norm = sympy.sqrt(sympy.Integer(2) ** (n1 + n2) * sympy.factorial(n1) * sympy.factorial(n2))
    return {
        (a, b): float(c * sympy.sqrt(sympy.factorial(a) * sympy.factorial(b)) / norm)
        for (a, b), c in zip(poly.monoms(), poly.coeffs())
    }


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    return TwoModeFockState(n, v / np.linalg.norm(v))


class TestConstruction:
    def test_noon_two_photons(self):
        s = make_noon(2, 0.0)
        np.testing.assert_allclose(s.amplitudes, [SQ2, 0, SQ2], atol=1e-15)

    def test_noon_single_photon_pi(self):
        s = make_noon(1, math.pi)
        np.testing.assert_allclose(s.amplitudes, [-SQ2, SQ2], atol=1e-15)

    def test_noon_four_photons_quarter_pi(self):
        # |0;4> sits at index 0 and picks up exp(i 4 pi/4) = -1
        s = make_noon(4, math.pi / 4)
        assert s.amplitudes[0] == pytest.approx(-SQ2, abs=1e-15)
        assert s.amplitudes[4] == pytest.approx(SQ2)

    @pytest.mark.parametrize("n", [0, -1])
    def test_noon_rejects_nonpositive(self, n):
        with pytest.raises(ValueError):
            make_noon(n)

    def test_state_validates_length_and_norm(self):
        with pytest.raises(ValueError):
            TwoModeFockState(2, [1, 0])
        with pytest.raises(ValueError):
            TwoModeFockState(1, [1, 1])

    def test_amplitudes_are_read_only(self):
        s = make_noon(2)
        with pytest.raises(ValueError):
            s.amplitudes[0] = 0


class TestPhase:
    def test_half_pi_on_mode_two(self):
        s = apply_mode_phase(make_noon(2, 0.0), math.pi / 2, 2)
        np.testing.assert_allclose(s.amplitudes, [-SQ2, 0, SQ2], atol=1e-15)

    def test_zero_phase_is_identity(self):
        s = random_state(5, 1)
        np.testing.assert_array_equal(apply_mode_phase(s, 0.0, 1).amplitudes, s.amplitudes)

    def test_full_turn_for_three_photons(self):
        s = apply_mode_phase(make_noon(3, 0.0), 2 * math.pi / 3, 2)
        assert s.equals_up_to_phase(make_noon(3, 0.0), tol=1e-12)

    @given(st.integers(1, 10), st.floats(-10, 10), st.sampled_from([1, 2]), st.integers(0, 2**32 - 1))
    def test_moduli_unchanged(self, n, phi, mode, seed):
        s = random_state(n, seed)
        out = apply_mode_phase(s, phi, mode)
        np.testing.assert_allclose(np.abs(out.amplitudes), np.abs(s.amplitudes), atol=1e-15)
        assert abs(out.norm - 1) < 1e-12


class TestRotation:
    def test_single_photon(self):
        out = rotate_to_diagonal(basis_state(1, 0))
        np.testing.assert_allclose(out.amplitudes, [SQ2, SQ2], atol=1e-15)
        assert out.basis is PolarizationBasis.PM

    def test_two_photons_in_h(self):
        out = rotate_to_diagonal(basis_state(2, 0))
        # (|2;0> + sqrt2 |1;1> + |0;2>)/2 ; index = photons in P
        np.testing.assert_allclose(out.amplitudes, [0.5, SQ2, 0.5], atol=1e-15)

    @pytest.mark.parametrize("n_total", range(1, 8))
    def test_matches_symbolic_expansion(self, n_total):
        for n1 in range(n_total + 1):
            out = rotate_to_diagonal(basis_state(n1, n_total - n1)).amplitudes
            expected = np.zeros(n_total + 1)
            for (a, b), amp in symbolic_rotation(n1, n_total - n1).items():
                expected[a] = amp
            np.testing.assert_allclose(out.real, expected, atol=1e-13)
            assert np.all(out.imag == 0)

    def test_noon_quarter_pi_gives_half_on_one_one(self):
        phi = math.pi / 4
        s = rotate_to_diagonal(apply_mode_phase(make_noon(2, 0.0), 2 * phi / 2, 2))
        # relative phase 2 * pi/4 on |0;2>: P(|1;1>) = (1 - cos(pi/2)) / 2
        assert s.probabilities()[1] == pytest.approx(0.5, abs=1e-12)

    @given(st.integers(1, 10), st.integers(0, 2**32 - 1))
    def test_unitary(self, n, seed):
        s = random_state(n, seed)
        assert abs(rotate_to_diagonal(s).norm - 1.0) < 1e-12

    @given(st.integers(1, 10), st.integers(0, 2**32 - 1))
    def test_involution(self, n, seed):
        s = random_state(n, seed)
        assert rotate_to_diagonal(rotate_to_diagonal(s)).equals_up_to_phase(s, tol=1e-12)


class TestParity:
    def test_one_one_odd_in_minus(self):
        assert odd_count_probability(basis_state(1, 1, PolarizationBasis.PM), 2) == 1.0

    def test_two_zero_even_in_minus(self):
        assert odd_count_probability(basis_state(2, 0, PolarizationBasis.PM), 2) == 0.0

    def test_noon_two_parity_fringe(self):
        for phi in np.linspace(0, 2 * np.pi, 100):
            s = rotate_to_diagonal(apply_mode_phase(make_noon(2, 0.0), phi, 2))
            assert odd_count_probability(s, 2) == pytest.approx(0.5 * (1 - np.cos(2 * phi)), abs=1e-12)


class TestOracle:
    def test_single_photon_at_pi(self):
        assert oracle_fringe(1, 0.0, [math.pi])[0] == pytest.approx(1.0, abs=1e-12)

    def test_two_photons_at_half_pi(self):
        assert oracle_fringe(2, 0.0, [math.pi / 2])[0] == pytest.approx(1.0, abs=1e-12)

    def test_two_photons_at_published_bias(self):
        # 1/2 (1 - cos 0.82)
        assert oracle_fringe(2, 0.41, [0.0])[0] == pytest.approx(0.1588894, abs=1e-6)

    @pytest.mark.parametrize("n", [0, 11])
    def test_unsupported_sizes(self, n):
        with pytest.raises(UnsupportedSizeError):
            oracle_fringe(n, 0.0, [0.0])

    @pytest.mark.parametrize("n", range(1, 7))
    @pytest.mark.parametrize("bias", [0.0, 0.3, 0.41, 0.66])
    def test_matches_cosine_fringe(self, n, bias):
        grid = np.linspace(0, 2 * np.pi, 50, endpoint=False)
        got = oracle_fringe(n, bias, grid)
        np.testing.assert_allclose(got, 0.5 * (1 - np.cos(n * grid + n * bias)), atol=1e-10, rtol=0)

    def test_period_halving(self):
        grid = np.linspace(0, 2 * np.pi, 80)
        np.testing.assert_allclose(oracle_fringe(2, 0.3, grid), oracle_fringe(2, 0.3, grid + np.pi), atol=1e-12)

    def test_ten_photons_supported(self):
        grid = np.linspace(0, 1, 7)
        np.testing.assert_allclose(oracle_fringe(10, 0.1, grid), 0.5 * (1 - np.cos(10 * grid + 1.0)), atol=1e-10)
