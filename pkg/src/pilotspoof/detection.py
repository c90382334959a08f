"""Attack detectors at the base station and the attackers' evasion analysis.

Two binary-hypothesis detectors are modeled, distinguished by what the
base station knows about the aggregate spoofing channel: an energy
detector when the channel is unknown, and a log-likelihood-ratio
detector when it is known (the worst case for the attackers). Both
thresholds are calibrated to an exact false-alarm level, the successful
detection probabilities are available in closed form, and a bisection
converts a detection-probability budget into the largest admissible
aggregate-channel norm.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .numerics import erf, erfinv, inv_reg_upper_gamma, noncentral_chi2_sf

__all__ = [
    "DetectorCase",
    "DetectionModel",
    "energy_threshold",
    "energy_detect_prob",
    "llr_threshold",
    "llr_detect_prob",
    "detect_prob",
    "evasion_power_cap",
    "simulate_detector",
]

#: Absolute accuracy of the detection probability at the bisected power cap.
CAP_TOL = 1e-8


class DetectorCase(enum.Enum):
    """What the base station knows about the aggregate spoofing channel."""

    ENERGY = "energy"  # channel unknown: GLRT reduces to an energy detector
    LLR = "llr"  # channel known: likelihood-ratio detector (worst case)


@dataclass(frozen=True)
class DetectionModel:
    """Detector case, false-alarm level, and observation statistics.

    ``combined_var`` is the variance of each pilot-observation entry
    absent an attack (user channel plus training noise). The energy
    detector's threshold is fixed at construction; the LLR threshold
    depends on the aggregate-channel norm and is computed per query.
    """

    case: DetectorCase
    eta: float
    n_antennas: int
    combined_var: float
    threshold: float = float("nan")

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise ValueError("false-alarm level must lie strictly inside (0, 1)")
        if self.case is DetectorCase.LLR and self.eta >= 0.5:
            raise ValueError("LLR detector requires a false-alarm level below 1/2")
        if self.n_antennas < 1:
            raise ValueError("antenna count must be >= 1")
        if self.combined_var <= 0:
            raise ValueError("combined observation variance must be positive")
        if self.case is DetectorCase.ENERGY:
            object.__setattr__(
                self,
                "threshold",
                energy_threshold(self.eta, self.n_antennas, self.combined_var),
            )

    @property
    def combined_std(self) -> float:
        return math.sqrt(self.combined_var)


def energy_threshold(eta: float, n_antennas: int, combined_var: float) -> float:
    """Energy-detector threshold with false-alarm probability exactly ``eta``."""
    if not 0 < eta < 1:
        raise ValueError("false-alarm level must lie strictly inside (0, 1)")
    return combined_var * float(inv_reg_upper_gamma(n_antennas, eta))


def energy_detect_prob(aggregate_norm: float, model: DetectionModel) -> float:
    """Detection probability of the energy detector at a given channel norm."""
    if model.case is not DetectorCase.ENERGY:
        raise ValueError("model is not configured for the energy detector")
    if aggregate_norm < 0:
        raise ValueError("channel norm must be nonnegative")
    lam = 2.0 * aggregate_norm**2 / model.combined_var
    gate = 2.0 * float(inv_reg_upper_gamma(model.n_antennas, model.eta))
    return float(noncentral_chi2_sf(2 * model.n_antennas, lam, gate))


def llr_threshold(eta: float, aggregate_norm: float, combined_std: float) -> float:
    """LLR-detector threshold with false-alarm probability exactly ``eta``."""
    if not 0 < eta < 0.5:
        raise ValueError("LLR false-alarm level must lie strictly inside (0, 1/2)")
    if aggregate_norm <= 0:
        raise ValueError("LLR detector is degenerate at zero channel norm")
    ratio = aggregate_norm / combined_std
    return ratio * (2.0 * float(erfinv(1.0 - 2.0 * eta)) - ratio)


def llr_detect_prob(aggregate_norm: float, model: DetectionModel) -> float:
    """Detection probability of the LLR detector at a given channel norm."""
    if model.case is not DetectorCase.LLR:
        raise ValueError("model is not configured for the LLR detector")
    if aggregate_norm < 0:
        raise ValueError("channel norm must be nonnegative")
    arg = -aggregate_norm / model.combined_std + float(erfinv(1.0 - 2.0 * model.eta))
    return 0.5 * (1.0 - float(erf(arg)))


def detect_prob(model: DetectionModel, aggregate_norm: float) -> float:
    """Closed-form successful-detection probability for the model's case."""
    if model.case is DetectorCase.ENERGY:
        return energy_detect_prob(aggregate_norm, model)
    return llr_detect_prob(aggregate_norm, model)


def evasion_power_cap(model: DetectionModel, epsilon: float) -> float:
    """Largest aggregate-channel norm keeping detection probability at ``epsilon``.

    Bisection on the monotone detection probability; the returned cap
    satisfies ``detect_prob(model, cap) = epsilon`` to ``CAP_TOL``.
    """
    if epsilon >= 1:
        raise ValueError("detection budget must be below 1")
    if epsilon <= model.eta:
        raise ValueError(
            "detection budget must exceed the false-alarm level "
            f"({epsilon} <= {model.eta}): only the zero attack evades"
        )
    lo, hi = 0.0, model.combined_std
    for _ in range(200):
        if detect_prob(model, hi) >= epsilon:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise RuntimeError("failed to bracket the power cap")
    cap = hi
    for _ in range(500):
        cap = 0.5 * (lo + hi)
        residual = detect_prob(model, cap) - epsilon
        if abs(residual) <= CAP_TOL:
            return cap
        if residual > 0:
            hi = cap
        else:
            lo = cap
    raise RuntimeError("power-cap bisection did not reach the requested accuracy")


def simulate_detector(model: DetectionModel, aggregate_channel, trials: int, seed) -> float:
    """Empirical alarm rate over Monte Carlo pilot observations.

    Each trial observes the aggregate spoofing channel plus the combined
    user-channel/noise term and applies the model's detector. Passing a
    (near-)zero channel estimates the false-alarm rate.
    """
    if trials < 1:
        raise ValueError("trial count must be >= 1")
    h = np.asarray(aggregate_channel, dtype=complex)
    if h.shape != (model.n_antennas,):
        raise ValueError(f"channel shape {h.shape} does not match {model.n_antennas} antennas")
    rng = np.random.default_rng(seed)
    scale = math.sqrt(model.combined_var / 2.0)
    noise = scale * (
        rng.standard_normal((trials, model.n_antennas))
        + 1j * rng.standard_normal((trials, model.n_antennas))
    )
    obs = h[np.newaxis, :] + noise
    if model.case is DetectorCase.ENERGY:
        stats = np.sum(np.abs(obs) ** 2, axis=1)
        gate = model.threshold
    else:
        norm = float(np.linalg.norm(h))
        stats = (2.0 * np.real(obs @ h.conj()) - norm**2) / model.combined_var
        gate = llr_threshold(model.eta, norm, model.combined_std)
    return float(np.mean(stats > gate))
