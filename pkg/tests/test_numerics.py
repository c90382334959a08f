import numpy as np
import pytest
import scipy.integrate
import scipy.linalg

from pilotspoof.numerics import (
    central_chi2_cdf,
    erf,
    erfinv,
    herm_eig,
    inv_reg_upper_gamma,
    noncentral_chi2_sf,
    reg_upper_gamma,
    solve_hpd,
)


def random_hermitian(rng, n):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (m + m.conj().T)


class TestHermEig:
    def test_identity(self):
        dec = herm_eig(np.eye(3))
        assert np.allclose(dec.eigenvalues, [1.0, 1.0, 1.0], atol=1e-14)

    def test_diagonal(self):
        dec = herm_eig(np.diag([5.0, 2.0]))
        assert np.allclose(dec.eigenvalues, [2.0, 5.0], atol=1e-14)
        assert np.allclose(np.abs(dec.eigenvectors), [[0, 1], [1, 0]], atol=1e-14)

    def test_reconstruction(self):
        rng = np.random.default_rng(0)
        m = random_hermitian(rng, 6)
        dec = herm_eig(m)
        rebuilt = dec.eigenvectors @ np.diag(dec.eigenvalues) @ dec.eigenvectors.conj().T
        assert np.linalg.norm(rebuilt - m) <= 1e-10 * np.linalg.norm(m)

    def test_unitary_and_ascending(self):
        rng = np.random.default_rng(1)
        m = random_hermitian(rng, 8)
        dec = herm_eig(m)
        q = dec.eigenvectors
        assert np.max(np.abs(q.conj().T @ q - np.eye(8))) <= 1e-10
        assert np.all(np.diff(dec.eigenvalues) >= -1e-14)

    def test_trace_and_shift(self):
        rng = np.random.default_rng(2)
        m = random_hermitian(rng, 7)
        vals = herm_eig(m).eigenvalues
        assert abs(vals.sum() - np.trace(m).real) <= 1e-10 * max(1, abs(np.trace(m).real))
        shifted = herm_eig(m + 3.5 * np.eye(7)).eigenvalues
        assert np.max(np.abs(shifted - vals - 3.5)) <= 1e-10

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            herm_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))
        with pytest.raises(ValueError):
            herm_eig(np.zeros((2, 3)))


class TestSolveHpd:
    def test_identity_and_scaling(self):
        rng = np.random.default_rng(3)
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        assert np.allclose(solve_hpd(np.eye(4), v), v)
        assert np.allclose(solve_hpd(2.0 * np.eye(4), v), v / 2.0)

    def test_residual(self):
        rng = np.random.default_rng(4)
        g = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        m = g.conj().T @ g + np.eye(5)
        rhs = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        x = solve_hpd(m, rhs)
        assert np.linalg.norm(m @ x - rhs) <= 1e-10 * np.linalg.norm(rhs)

    def test_indefinite_raises(self):
        with pytest.raises(scipy.linalg.LinAlgError):
            solve_hpd(np.diag([1.0, -1.0]), np.ones(2))


class TestGamma:
    def test_exponential_special_case(self):
        assert reg_upper_gamma(1.0, -np.log(0.05)) == pytest.approx(0.05, abs=1e-12)
        x = np.linspace(0.1, 5, 50)
        assert np.allclose(reg_upper_gamma(1.0, x), np.exp(-x), atol=1e-12)

    def test_at_zero(self):
        assert reg_upper_gamma(4.0, 0.0) == 1.0

    def test_quadrature_oracle(self):
        # independent oracle: adaptive integration of t^3 e^-t / Gamma(4)
        val, _ = scipy.integrate.quad(lambda t: t**3 * np.exp(-t), 4.0, np.inf)
        assert val / 6.0 == pytest.approx(0.433470120366709, abs=1e-10)
        assert reg_upper_gamma(4.0, 4.0) == pytest.approx(val / 6.0, abs=1e-10)

    def test_monotone(self):
        x = np.linspace(0.0, 30.0, 1001)
        vals = reg_upper_gamma(6.0, x)
        assert np.all(np.diff(vals) <= 0)

    def test_inverse_analytic(self):
        assert inv_reg_upper_gamma(1.0, 0.05) == pytest.approx(2.995732273553991, abs=1e-10)

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(5)
        s = rng.uniform(0.5, 20, 1000)
        p = rng.uniform(1e-6, 1 - 1e-6, 1000)
        assert np.max(np.abs(reg_upper_gamma(s, inv_reg_upper_gamma(s, p)) - p)) <= 1e-10
        x = inv_reg_upper_gamma(8.0, 0.05)
        assert reg_upper_gamma(8.0, x) == pytest.approx(0.05, abs=1e-10)

    def test_domains(self):
        with pytest.raises(ValueError):
            reg_upper_gamma(-1.0, 1.0)
        with pytest.raises(ValueError):
            reg_upper_gamma(1.0, -0.5)
        for p in (0.0, 1.0, -0.3, 1.5):
            with pytest.raises(ValueError):
                inv_reg_upper_gamma(3.0, p)


class TestErf:
    def test_zero_and_oddness(self):
        assert erf(0.0) == 0.0
        assert erfinv(0.0) == 0.0
        x = np.linspace(0.01, 3, 200)
        assert np.allclose(erf(-x), -erf(x), atol=1e-15)

    def test_erfinv_value(self):
        # Newton on the forward series converges to this root
        assert erfinv(0.5) == pytest.approx(0.4769362762044699, abs=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(6)
        p = rng.uniform(-0.999, 0.999, 1000)
        assert np.max(np.abs(erf(erfinv(p)) - p)) <= 1e-12

    def test_domain(self):
        for p in (-1.0, 1.0, 2.0):
            with pytest.raises(ValueError):
                erfinv(p)


class TestChi2:
    def test_two_dof_analytic(self):
        x = np.linspace(0, 20, 1001)
        assert np.allclose(central_chi2_cdf(2, x), 1.0 - np.exp(-x / 2.0), atol=1e-12)

    def test_at_zero_and_monotone(self):
        assert central_chi2_cdf(8, 0.0) == 0.0
        x = np.linspace(0, 40, 1001)
        assert np.all(np.diff(central_chi2_cdf(5, x)) >= 0)

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(12345)
        draws = rng.standard_normal((10**6, 8))
        emp = np.mean(np.sum(draws**2, axis=1) <= 10.0)
        exact = central_chi2_cdf(8, 10.0)
        se = np.sqrt(exact * (1.0 - exact) / 10**6)
        assert abs(emp - exact) <= 3 * se

    def test_domain(self):
        with pytest.raises(ValueError):
            central_chi2_cdf(0, 1.0)
        with pytest.raises(ValueError):
            central_chi2_cdf(3, -1.0)


class TestNoncentralChi2:
    def test_reduces_to_central(self):
        x = np.linspace(0, 30, 101)
        assert np.allclose(
            noncentral_chi2_sf(6, 0.0, x), 1.0 - central_chi2_cdf(6, x), atol=1e-12
        )

    def test_at_zero(self):
        assert noncentral_chi2_sf(4, 3.0, 0.0) == pytest.approx(1.0, abs=1e-14)

    def test_monte_carlo_oracle(self):
        # shifted-normal sum of squares with noncentrality 8
        rng = np.random.default_rng(54321)
        mean = np.zeros(16)
        mean[0] = np.sqrt(8.0)
        draws = rng.standard_normal((10**6, 16)) + mean
        emp = np.mean(np.sum(draws**2, axis=1) > 20.0)
        exact = noncentral_chi2_sf(16, 8.0, 20.0)
        se = np.sqrt(exact * (1.0 - exact) / 10**6)
        assert abs(emp - exact) <= 3 * se

    def test_nondecreasing_in_noncentrality(self):
        lams = np.linspace(0, 50, 1001)
        vals = np.array([noncentral_chi2_sf(10, lam, 15.0) for lam in lams])
        assert np.all(np.diff(vals) >= -1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            noncentral_chi2_sf(3, -1.0, 1.0)
        with pytest.raises(ValueError):
            noncentral_chi2_sf(3, 1.0, -1.0)
