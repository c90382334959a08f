"""Minorization-maximization solver for the fractional attack objective.

The non-concave ratio ``|target_corr^H w + offset|^2 / (||map @ w||^2 + ...)``
is maximized by iterating a touching concave lower bound (outer loop) and
solving each bound subproblem with a three-step ADMM (inner loop): a
weights step with at most one quadratic constraint, a per-coordinate disc
projection for the split variable, and a dual update. The weights step is
closed form when the aggregate cap is slack and a one-dimensional
safeguarded Newton search on the cap's dual variable otherwise.

Every outer iterate is clipped into the feasible set and accepted only if
it does not decrease the objective, so the returned trace is nondecreasing
and the final point feasible regardless of how tightly the inner loop
converged.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .channel import AttackInstance, objective
from .numerics import herm_eig

__all__ = [
    "SolverConfig",
    "SurrogateCoeffs",
    "SolveStatus",
    "SolveResult",
    "WeightsStep",
    "surrogate_coeffs",
    "surrogate_value",
    "admm_weights_step",
    "admm_split_step",
    "admm_dual_step",
    "solve",
]


@dataclass(frozen=True)
class SolverConfig:
    """Penalty, tolerances, iteration caps, and the initialization seed."""

    rho: float = 0.01
    mm_tol: float = 1e-3
    admm_tol: float = 1e-4
    mm_max_iter: int = 500
    admm_max_iter: int = 5
    newton_tol: float = 1e-10
    init_seed: int = 0

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("ADMM penalty must be strictly positive")
        if self.mm_tol <= 0 or self.admm_tol <= 0 or self.newton_tol <= 0:
            raise ValueError("tolerances must be strictly positive")
        if self.mm_max_iter < 1 or self.admm_max_iter < 1:
            raise ValueError("iteration caps must be >= 1")


@dataclass(frozen=True)
class SurrogateCoeffs:
    """Touching concave lower bound on the objective around an expansion point.

    The bound is ``-quad_weight * ||map @ w + user_offset||^2
    + 2 * denom_inv * Re{linear_dir^H w} - const_term``.
    """

    quad_weight: float
    denom_inv: float
    const_term: float
    linear_dir: np.ndarray
    coupling_diag: np.ndarray = field(init=False)
    offset_term: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coupling_diag", np.abs(self.linear_dir) ** 2)


class SolveStatus(enum.Enum):
    CONVERGED = "converged"
    ITERATION_CAP = "iteration_cap"


@dataclass(frozen=True)
class SolveResult:
    """Final weights with objective/SNR values and iteration diagnostics."""

    weights: np.ndarray
    objective_value: float
    snr: float
    mm_iterations: int
    admm_iterations: int
    trace: np.ndarray
    status: SolveStatus


class WeightsStep(NamedTuple):
    weights: np.ndarray
    cap_dual: float


def surrogate_coeffs(data: AttackInstance, expansion: np.ndarray) -> SurrogateCoeffs:
    """Coefficients of the concave bound touching the objective at ``expansion``."""
    w = np.asarray(expansion, dtype=complex)
    leak = data.channel_map @ w + data.user_offset
    denom = float(np.vdot(leak, leak).real) + data.noise_floor
    gain = np.vdot(data.target_corr, w) + data.target_user_corr
    quad_weight = abs(gain) ** 2 / denom**2
    denom_inv = 1.0 / denom
    # sign of the cross term chosen so the bound touches: value and gradient
    # match the objective at the expansion point
    const_term = quad_weight * data.noise_floor - 2.0 * denom_inv * float(
        (np.conj(gain) * data.target_user_corr).real
    )
    return SurrogateCoeffs(
        quad_weight=quad_weight,
        denom_inv=denom_inv,
        const_term=const_term,
        linear_dir=data.target_corr * gain,
        offset_term=quad_weight * (data.channel_map.conj().T @ data.user_offset),
    )


def surrogate_value(coeffs: SurrogateCoeffs, data: AttackInstance, weights: np.ndarray) -> float:
    """Evaluate the concave bound at ``weights``."""
    w = np.asarray(weights, dtype=complex)
    leak = data.channel_map @ w + data.user_offset
    return (
        -coeffs.quad_weight * float(np.vdot(leak, leak).real)
        + 2.0 * coeffs.denom_inv * float(np.vdot(coeffs.linear_dir, w).real)
        - coeffs.const_term
    )


def _eigsystem(coeffs: SurrogateCoeffs, gram: np.ndarray):
    """Eigenbasis of the whitened gram matrix used by the capped weights step."""
    y = coeffs.coupling_diag
    top = float(np.max(y))
    floor = top * 1e-14 if top > 0 else 1.0
    inv_sqrt = 1.0 / np.sqrt(np.maximum(y, floor))
    whitened = inv_sqrt[:, None] * gram * inv_sqrt[None, :]
    dec = herm_eig(whitened)
    return dec.eigenvalues, dec.eigenvectors, inv_sqrt


def _cap_root(quad_weight, rho, eigvals, weights_sq, cap_sq, tol):
    """Safeguarded Newton for the cap dual: aggregate power equals the cap."""

    def aggregate(z):
        d = 0.5 * rho + (quad_weight + z) * eigvals
        return float(np.sum(weights_sq * eigvals / d**2))

    def slope(z):
        d = 0.5 * rho + (quad_weight + z) * eigvals
        return -2.0 * float(np.sum(weights_sq * eigvals**2 / d**3))

    lo, hi = 0.0, 1.0
    for _ in range(400):
        if aggregate(hi) < cap_sq:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise RuntimeError("failed to bracket the cap dual")
    z = lo
    for _ in range(200):
        f = aggregate(z) - cap_sq
        if abs(f) <= tol * cap_sq:
            return z
        if f > 0:
            lo = z
        else:
            hi = z
        df = slope(z)
        step = z - f / df if df != 0 else hi
        z = step if lo < step < hi else 0.5 * (lo + hi)
    return z


def admm_weights_step(
    coeffs: SurrogateCoeffs,
    data: AttackInstance,
    split: np.ndarray,
    dual: np.ndarray,
    config: SolverConfig,
    gram: np.ndarray | None = None,
    eig_cache: dict | None = None,
) -> WeightsStep:
    """Minimize the augmented Lagrangian over the weights.

    Closed form when the aggregate cap is infinite or slack; otherwise the
    cap's dual variable is found by safeguarded Newton in the eigenbasis of
    the whitened gram matrix (reusable across inner iterations via
    ``eig_cache``).
    """
    if gram is None:
        gram = data.gram
    rho = config.rho
    pull = coeffs.linear_dir * (0.5 * rho * split - 0.5 * dual) - coeffs.offset_term
    # the slack-cap system is constant across inner iterations; keep its factor
    if eig_cache is not None and "chol" in eig_cache:
        weights = scipy.linalg.cho_solve(eig_cache["chol"], pull)
    else:
        system = coeffs.quad_weight * gram + 0.5 * rho * np.diag(coeffs.coupling_diag)
        try:
            factor = scipy.linalg.cho_factor(system, lower=True)
        except scipy.linalg.LinAlgError:
            warnings.warn("singular weights-step system; regularizing", RuntimeWarning)
            factor = scipy.linalg.cho_factor(
                system + 1e-12 * np.eye(system.shape[0]), lower=True
            )
        if eig_cache is not None:
            eig_cache["chol"] = factor
        weights = scipy.linalg.cho_solve(factor, pull)
    if not np.isfinite(data.aggregate_cap_sq):
        return WeightsStep(weights, 0.0)
    if float(np.vdot(weights, gram @ weights).real) <= data.aggregate_cap_sq:
        return WeightsStep(weights, 0.0)
    if eig_cache is None:
        eig_cache = {}
    if "eig" not in eig_cache:
        eig_cache["eig"] = _eigsystem(coeffs, gram)
    eigvals, basis, inv_sqrt = eig_cache["eig"]
    rotated = basis.conj().T @ (inv_sqrt * pull)
    zeta = _cap_root(
        coeffs.quad_weight,
        rho,
        eigvals,
        np.abs(rotated) ** 2,
        data.aggregate_cap_sq,
        config.newton_tol,
    )
    scaled = rotated / (0.5 * rho + (coeffs.quad_weight + zeta) * eigvals)
    return WeightsStep(inv_sqrt * (basis @ scaled), zeta)


def admm_split_step(
    coeffs: SurrogateCoeffs,
    weights: np.ndarray,
    dual: np.ndarray,
    power_caps: np.ndarray,
    rho: float,
) -> np.ndarray:
    """Per-coordinate disc projection of the unconstrained split minimizer."""
    v = coeffs.denom_inv + 0.5 * dual + 0.5 * rho * np.conj(coeffs.linear_dir) * weights
    radius = np.abs(coeffs.linear_dir) * np.sqrt(power_caps)
    split = v / (0.5 * rho)
    mag = np.abs(split)
    over = mag > radius
    if np.any(over):
        safe = np.where(mag > 0, mag, 1.0)
        split = np.where(over, split / safe * radius, split)
    return split


def admm_dual_step(
    dual: np.ndarray,
    linear_dir: np.ndarray,
    weights: np.ndarray,
    split: np.ndarray,
    rho: float,
) -> np.ndarray:
    """Gradient-ascent update of the consensus multiplier."""
    return dual + rho * (np.conj(linear_dir) * weights - split)


def _clip_feasible(data: AttackInstance, weights: np.ndarray) -> np.ndarray:
    """Project numerically overshooting weights back into the feasible set."""
    w = np.asarray(weights, dtype=complex).copy()
    caps = np.sqrt(data.power_caps)
    mag = np.abs(w)
    over = mag > caps
    if np.any(over):
        w = np.where(over, w / np.where(mag > 0, mag, 1.0) * caps, w)
    if np.isfinite(data.aggregate_cap_sq):
        agg_sq = float(np.vdot(w, data.gram @ w).real)
        if agg_sq > data.aggregate_cap_sq:
            w = w * math.sqrt(data.aggregate_cap_sq / agg_sq) * (1.0 - 1e-12)
    return w


def _random_feasible(data: AttackInstance, rng: np.random.Generator) -> np.ndarray:
    """Random draw scaled onto the feasible set."""
    k = data.n_eves
    draw = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / math.sqrt(2.0)
    mag = np.abs(draw)
    with np.errstate(divide="ignore"):
        ratios = np.where(mag > 0, np.sqrt(data.power_caps) / np.where(mag > 0, mag, 1.0), np.inf)
    chi = float(np.min(ratios))
    if not np.isfinite(chi):
        return np.zeros(k, dtype=complex)
    w = chi * draw
    if np.isfinite(data.aggregate_cap_sq):
        agg_sq = float(np.vdot(w, data.gram @ w).real)
        if agg_sq > data.aggregate_cap_sq:
            w = w * math.sqrt(data.aggregate_cap_sq / agg_sq) * (1.0 - 1e-12)
    return w


def solve(
    data: AttackInstance,
    config: SolverConfig = SolverConfig(),
    weights0: np.ndarray | None = None,
) -> SolveResult:
    """Run the full outer/inner iteration from a feasible starting point.

    ``weights0`` overrides the random initialization (it is clipped into
    the feasible set first). The result is always feasible and its trace
    of objective values nondecreasing; status reports whether the relative
    objective change fell below ``mm_tol`` before the iteration cap.
    """
    rng = np.random.default_rng(config.init_seed)
    gram = data.gram
    if weights0 is not None:
        current = _clip_feasible(data, np.asarray(weights0, dtype=complex))
    else:
        current = _random_feasible(data, rng)
    trace = [objective(data, current)]
    total_inner = 0
    mm_iters = 0
    status = SolveStatus.ITERATION_CAP
    rerandomized = False
    for _ in range(config.mm_max_iter):
        mm_iters += 1
        gain = np.vdot(data.target_corr, current) + data.target_user_corr
        if abs(gain) == 0.0:
            # constant surrogate: objective is exactly zero here, so any
            # feasible draw is at least as good
            if rerandomized:
                status = SolveStatus.CONVERGED
                break
            rerandomized = True
            candidate = _random_feasible(data, rng)
            if objective(data, candidate) >= trace[-1]:
                current = candidate
                trace.append(objective(data, current))
                continue
            status = SolveStatus.CONVERGED
            break
        coeffs = surrogate_coeffs(data, current)
        split = np.conj(coeffs.linear_dir) * current
        dual = np.zeros(data.n_eves, dtype=complex)
        eig_cache: dict = {}
        # the first inner iterate barely moves (the linear reward reaches the
        # weights only through the split/dual updates), so the change-based
        # stop compares real successive iterates from the second one on
        bound_prev = None
        weights = current
        for _ in range(config.admm_max_iter):
            total_inner += 1
            weights = admm_weights_step(
                coeffs, data, split, dual, config, gram=gram, eig_cache=eig_cache
            ).weights
            split = admm_split_step(coeffs, weights, dual, data.power_caps, config.rho)
            dual = admm_dual_step(dual, coeffs.linear_dir, weights, split, config.rho)
            bound = surrogate_value(coeffs, data, weights)
            if bound_prev is not None and abs(bound - bound_prev) < config.admm_tol * max(
                abs(bound), 1e-300
            ):
                break
            bound_prev = bound
        candidate = _clip_feasible(data, weights)
        value = objective(data, candidate)
        previous = trace[-1]
        if value < previous:
            # inner loop under-converged; keep the better iterate and stop
            trace.append(previous)
            status = SolveStatus.CONVERGED
            break
        current = candidate
        trace.append(value)
        if abs(value - previous) < config.mm_tol * max(abs(value), 1e-300):
            status = SolveStatus.CONVERGED
            break
    final = objective(data, current)
    return SolveResult(
        weights=current,
        objective_value=final,
        snr=data.snr_scale * final,
        mm_iterations=mm_iters,
        admm_iterations=total_inner,
        trace=np.asarray(trace),
        status=status,
    )
