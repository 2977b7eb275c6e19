import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fddtraining.channel import exponential_correlation
from fddtraining.errors import DimensionError, DomainError, SingularMatrixError
from fddtraining.numerics import bessel_j0, hermitian_eig, psd_sqrt, solve_hpd

from conftest import random_hpd, random_psd


def rel_fro(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def j0_series(x, terms=80):
    """Power series of J0 in extended precision; independent of scipy."""
    with mpmath.workdps(50):
        x = mpmath.mpf(x)
        return float(mpmath.nsum(lambda k: (-1) ** k * (x / 2) ** (2 * k) / mpmath.factorial(k) ** 2,
                                 [0, terms]))


class TestHermitianEig:
    def test_two_by_two_exponential(self):
        eig = hermitian_eig([[1, 0.5], [0.5, 1]])
        np.testing.assert_allclose(eig.values, [1.5, 0.5], atol=1e-14)

    def test_identity(self):
        eig = hermitian_eig(np.eye(4))
        np.testing.assert_allclose(eig.values, np.ones(4))
        np.testing.assert_allclose(eig.reconstruct(), np.eye(4), atol=1e-12)
        # ties: canonical order puts the pivot rows in increasing order
        np.testing.assert_allclose(np.abs(eig.vectors), np.eye(4), atol=1e-12)

    def test_exponential_top_eigenvalue_bound(self):
        lam = hermitian_eig(exponential_correlation(8, 0.9)).values
        assert lam[0] <= (1 + 0.9) / (1 - 0.9)

    def test_non_square_raises(self):
        with pytest.raises(DimensionError):
            hermitian_eig(np.ones((2, 3)))

    def test_canonical_phase_and_determinism(self, rng):
        m = random_hpd(rng, 6)
        a, b = hermitian_eig(m), hermitian_eig(m.copy())
        np.testing.assert_array_equal(a.vectors, b.vectors)
        for col in a.vectors.T:
            pivot = col[np.argmax(np.abs(col))]
            assert abs(pivot.imag) < 1e-12 and pivot.real > 0

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(1, 24), seed=st.integers(0, 2 ** 32 - 1))
    def test_properties(self, n, seed):
        m = random_hpd(np.random.default_rng(seed), n)
        eig = hermitian_eig(m)
        assert np.all(np.diff(eig.values) <= 0)
        assert rel_fro(eig.reconstruct(), m) < 1e-10
        np.testing.assert_allclose(eig.vectors.conj().T @ eig.vectors, np.eye(n), atol=1e-10)
        assert abs(eig.values.sum() - np.trace(m).real) <= 1e-9 * abs(np.trace(m).real)
        # decompose-reconstruct is idempotent
        again = hermitian_eig(eig.reconstruct())
        assert rel_fro(again.reconstruct(), m) < 1e-10


class TestPsdSqrt:
    def test_identity(self):
        np.testing.assert_allclose(psd_sqrt(np.eye(3)), np.eye(3), atol=1e-14)

    def test_diagonal(self):
        np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 1.0])), np.diag([2.0, 1.0]), atol=1e-14)

    def test_exponential_multiply_back(self):
        r = exponential_correlation(4, 0.6)
        s = psd_sqrt(r)
        np.testing.assert_allclose(s, s.conj().T, atol=1e-14)
        assert rel_fro(s @ s, r) < 1e-9

    def test_indefinite_raises(self):
        with pytest.raises(DomainError):
            psd_sqrt(np.diag([1.0, -0.1]))

    def test_tiny_negative_clamped(self):
        s = psd_sqrt(np.diag([1.0, -1e-13]))
        np.testing.assert_allclose(s, np.diag([1.0, 0.0]), atol=1e-12)

    def test_thousand_random_matrices(self, rng):
        for k in range(1000):
            n = int(rng.integers(1, 65)) if k % 50 == 0 else int(rng.integers(1, 17))
            rank = int(rng.integers(1, n + 1))
            m = random_psd(rng, n, rank)
            s = psd_sqrt(m)
            assert rel_fro(s @ s, m) < 1e-9


class TestSolveHpd:
    def test_identity(self, rng):
        b = rng.standard_normal((3, 2)) + 0j
        np.testing.assert_allclose(solve_hpd(np.eye(3), b), b)

    def test_diagonal(self):
        np.testing.assert_allclose(solve_hpd(np.diag([2.0, 4.0]), [2.0, 4.0]), [1.0, 1.0])

    def test_random_residual(self, rng):
        a = random_hpd(rng, 6)
        b = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        x = solve_hpd(a, b)
        assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) <= 1e-9

    def test_singular_raises(self):
        with pytest.raises(SingularMatrixError):
            solve_hpd(np.diag([1.0, 1e-14]), [1.0, 1.0])
        with pytest.raises(SingularMatrixError):
            solve_hpd(np.diag([1.0, -1.0]), [1.0, 1.0])


class TestBesselJ0:
    def test_zero(self):
        assert bessel_j0(0.0) == 1.0

    def test_jakes_argument(self):
        x = 2 * math.pi * (3 / 3.6) * (2.5e9 / 3e8) * 0.005
        assert round(bessel_j0(x), 4) == 0.9881

    def test_first_root(self):
        # root location from the extended-precision oracle
        with mpmath.workdps(30):
            root = float(mpmath.besseljzero(0, 1))
        assert abs(root - 2.404825557695773) < 1e-12
        assert abs(bessel_j0(2.404825557695773)) < 1e-8
        assert abs(j0_series(2.404825557695773)) < 1e-8

    @pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 3.7, 10.0, 25.5, 60.0, 99.9, -7.3])
    def test_against_series(self, x):
        assert abs(bessel_j0(x) - j0_series(x, terms=400)) <= 1e-8
