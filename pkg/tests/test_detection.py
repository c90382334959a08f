import numpy as np
import pytest

from pilotspoof.detection import (
    DetectionModel,
    DetectorCase,
    detect_prob,
    energy_detect_prob,
    energy_threshold,
    evasion_power_cap,
    llr_detect_prob,
    llr_threshold,
    simulate_detector,
)
from pilotspoof.numerics import erfinv, reg_upper_gamma

TRIALS = 10**5


def energy_model(eta=0.05, n=10, var=1.1):
    return DetectionModel(case=DetectorCase.ENERGY, eta=eta, n_antennas=n, combined_var=var)


def llr_model(eta=0.05, n=10, var=1.1):
    return DetectionModel(case=DetectorCase.LLR, eta=eta, n_antennas=n, combined_var=var)


def channel_of_norm(norm, n, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v) * norm


def binomial_se(p, trials=TRIALS):
    return max(np.sqrt(p * (1.0 - p) / trials), 1e-12)


class TestEnergyThreshold:
    def test_single_antenna_analytic(self):
        assert energy_threshold(0.05, 1, 1.0) == pytest.approx(2.995732273553991, abs=1e-10)

    def test_linear_in_variance(self):
        base = energy_threshold(0.05, 6, 1.0)
        for var in (0.5, 2.0, 7.5):
            assert energy_threshold(0.05, 6, var) == pytest.approx(var * base, rel=1e-12)

    def test_calibration_invariant(self):
        model = energy_model(eta=0.13, n=7, var=1.4)
        assert reg_upper_gamma(7, model.threshold / 1.4) == pytest.approx(0.13, abs=1e-10)

    def test_false_alarm_monte_carlo(self):
        model = energy_model(eta=0.05, n=10, var=1.0)
        rate = simulate_detector(model, np.zeros(10), TRIALS, seed=100)
        assert abs(rate - 0.05) <= 3 * binomial_se(0.05)


class TestEnergyDetectProb:
    def test_at_zero_norm(self):
        model = energy_model(eta=0.07)
        assert energy_detect_prob(0.0, model) == pytest.approx(0.07, abs=1e-10)

    def test_limit(self):
        model = energy_model()
        assert energy_detect_prob(1e3 * model.combined_std, model) == pytest.approx(1.0, abs=1e-12)

    def test_against_detector_simulation(self):
        model = energy_model(eta=0.05, n=10, var=1.1)
        h = channel_of_norm(3.0, 10, seed=1)
        rate = simulate_detector(model, h, TRIALS, seed=101)
        closed = energy_detect_prob(3.0, model)
        assert abs(rate - closed) <= 3 * binomial_se(closed)

    def test_monotone(self):
        # strictly increasing below double-precision saturation
        model = energy_model()
        norms = np.linspace(0, 4, 200)
        vals = np.array([energy_detect_prob(x, model) for x in norms])
        assert vals[-1] < 1.0
        assert np.all(np.diff(vals) > 0)

    def test_domain(self):
        with pytest.raises(ValueError):
            energy_detect_prob(-1.0, energy_model())
        with pytest.raises(ValueError):
            energy_detect_prob(1.0, llr_model())


class TestLlrThreshold:
    def test_erfinv_enters(self):
        # eta = 1/4 puts erfinv(1/2) in the linear term
        sigma = 1.2
        norm = 0.8
        expected = norm / sigma * (2 * 0.4769362762044699 - norm / sigma)
        assert llr_threshold(0.25, norm, sigma) == pytest.approx(expected, rel=1e-9)

    def test_algebraic_zero(self):
        sigma = 1.0
        norm = 2.0 * float(erfinv(1.0 - 2 * 0.1))
        assert llr_threshold(0.1, norm, sigma) == pytest.approx(0.0, abs=1e-12)

    def test_false_alarm_monte_carlo(self):
        # no-attack observations scored against the nonzero-channel statistic
        n, eta, var = 6, 0.08, 1.3
        h = channel_of_norm(1.7, n, seed=2)
        gate = llr_threshold(eta, 1.7, np.sqrt(var))
        rng = np.random.default_rng(102)
        noise = np.sqrt(var / 2) * (
            rng.standard_normal((TRIALS, n)) + 1j * rng.standard_normal((TRIALS, n))
        )
        stats = (2.0 * np.real(noise @ h.conj()) - 1.7**2) / var
        rate = np.mean(stats > gate)
        assert abs(rate - eta) <= 3 * binomial_se(eta)

    def test_domain(self):
        with pytest.raises(ValueError):
            llr_threshold(0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            llr_threshold(0.1, 0.0, 1.0)


class TestLlrDetectProb:
    def test_at_zero_norm(self):
        model = llr_model(eta=0.11)
        assert llr_detect_prob(0.0, model) == pytest.approx(0.11, abs=1e-12)

    def test_symmetric_point(self):
        # at norm/std = 2 erfinv(1 - 2 eta) the probability is 1 - eta
        eta = 0.07
        model = llr_model(eta=eta, var=1.0)
        norm = 2.0 * float(erfinv(1.0 - 2 * eta))
        assert llr_detect_prob(norm, model) == pytest.approx(1.0 - eta, abs=1e-12)

    def test_against_detector_simulation(self):
        model = llr_model(eta=0.05, n=8, var=1.0)
        norm = 1.5 * model.combined_std
        h = channel_of_norm(norm, 8, seed=3)
        rate = simulate_detector(model, h, TRIALS, seed=103)
        closed = llr_detect_prob(norm, model)
        assert abs(rate - closed) <= 3 * binomial_se(closed)

    def test_near_zero_continuity(self):
        model = llr_model(eta=0.05, n=5, var=1.0)
        rate = simulate_detector(model, channel_of_norm(1e-6, 5, seed=4), TRIALS, seed=104)
        assert abs(rate - 0.05) <= 3 * binomial_se(0.05)

    def test_monotone(self):
        model = llr_model()
        norms = np.linspace(0, 4, 200)
        vals = np.array([llr_detect_prob(x, model) for x in norms])
        assert vals[-1] < 1.0
        assert np.all(np.diff(vals) > 0)

    def test_requires_half_open_interval(self):
        with pytest.raises(ValueError):
            llr_model(eta=0.5)


class TestPowerCap:
    def test_budget_near_false_alarm(self):
        model = energy_model(eta=0.05)
        assert evasion_power_cap(model, 0.0500001) < 0.05

    def test_round_trip_random(self):
        rng = np.random.default_rng(5)
        for i in range(100):
            case = DetectorCase.ENERGY if i % 2 == 0 else DetectorCase.LLR
            eta = float(rng.uniform(0.01, 0.25))
            model = DetectionModel(
                case=case, eta=eta, n_antennas=int(rng.integers(1, 24)),
                combined_var=float(rng.uniform(0.5, 3.0)),
            )
            eps = float(rng.uniform(eta + 0.02, 0.98))
            cap = evasion_power_cap(model, eps)
            assert detect_prob(model, cap) == pytest.approx(eps, abs=1e-8)

    def test_cap_validated_by_simulation(self):
        model = energy_model(eta=0.05, n=8, var=1.0)
        cap = evasion_power_cap(model, 0.2)
        rate = simulate_detector(model, channel_of_norm(cap, 8, seed=6), TRIALS, seed=106)
        assert abs(rate - 0.2) <= 3 * binomial_se(0.2)

    def test_domains(self):
        model = energy_model(eta=0.05)
        with pytest.raises(ValueError):
            evasion_power_cap(model, 0.05)
        with pytest.raises(ValueError):
            evasion_power_cap(model, 0.01)
        with pytest.raises(ValueError):
            evasion_power_cap(model, 1.0)

    def test_cap_implies_budget(self):
        model = energy_model(eta=0.05)
        cap = evasion_power_cap(model, 0.3)
        for norm in np.linspace(0, cap, 50):
            assert detect_prob(model, norm) <= 0.3 + 1e-8


class TestSimulate:
    def test_rejects_bad_shapes(self):
        model = energy_model(n=4)
        with pytest.raises(ValueError):
            simulate_detector(model, np.zeros(3), 10, seed=0)
        with pytest.raises(ValueError):
            simulate_detector(model, np.zeros(4), 0, seed=0)

    def test_deterministic(self):
        model = energy_model(n=4)
        h = channel_of_norm(1.0, 4, seed=7)
        assert simulate_detector(model, h, 1000, seed=8) == simulate_detector(
            model, h, 1000, seed=8
        )
