"""Semidefinite-relaxation benchmark for the zero-offset attack instances.

Lifting the weight vector to a rank-one matrix turns the fractional
objective into a ratio of traces; a Charnes-Cooper substitution then
yields a linear SDP objective with one normalization equality. The
normalization is eliminated in closed form, leaving a small dense SDP
with ``K + 2`` linear inequality constraints that a purpose-built
log-barrier Newton method solves to high accuracy. When the lifted
solution is (numerically) rank one, the extracted weight vector is a
global maximizer of the original problem; the second-to-first eigenvalue
ratio quantifies how close to rank one the solution is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .channel import AttackInstance

__all__ = [
    "SdpInstance",
    "SdpSolution",
    "SdrError",
    "build_sdp",
    "solve_sdp",
    "extract_rank_one",
    "rank_ratio",
]


class SdrError(RuntimeError):
    """Raised when the barrier iteration fails or a solution degenerates."""


@dataclass(frozen=True)
class SdpInstance:
    """Lifted problem data: rank-one reward matrix, gram matrix, and caps."""

    target_outer: np.ndarray
    gram: np.ndarray
    power_caps: np.ndarray
    aggregate_cap_sq: float
    noise_floor: float

    @property
    def n_eves(self) -> int:
        return self.gram.shape[0]


@dataclass(frozen=True)
class SdpSolution:
    """Barrier solution with extraction diagnostics.

    ``objective`` is the SDP optimum, an upper bound on the fractional
    objective; ``weights`` is the rank-one extraction, globally optimal
    whenever ``eig_ratio`` is negligible. ``dual_matrix`` is the slack
    dual used for stationarity diagnostics.
    """

    X: np.ndarray
    kappa: float
    objective: float
    duality_gap: float
    eig_ratio: float
    weights: np.ndarray
    dual_matrix: np.ndarray


def build_sdp(data: AttackInstance) -> SdpInstance:
    """Lift a zero-offset attack instance; other instances are unsupported."""
    if data.target_user_corr != 0 or np.any(data.user_offset != 0):
        raise ValueError("the relaxation applies only to zero-offset instances")
    alpha = data.target_corr
    return SdpInstance(
        target_outer=np.outer(alpha, alpha.conj()),
        gram=data.gram,
        power_caps=data.power_caps,
        aggregate_cap_sq=data.aggregate_cap_sq,
        noise_floor=data.noise_floor,
    )


def _constraints(inst: SdpInstance) -> tuple[list[np.ndarray], np.ndarray]:
    """Linear inequalities left after eliminating the normalization scalar."""
    k = inst.n_eves
    varrho = inst.noise_floor
    mats = []
    bounds = []
    for i in range(k):
        selector = np.zeros((k, k), dtype=complex)
        selector[i, i] = 1.0
        mats.append(selector + (inst.power_caps[i] / varrho) * inst.gram)
        bounds.append(inst.power_caps[i] / varrho)
    if np.isfinite(inst.aggregate_cap_sq):
        mats.append((1.0 + inst.aggregate_cap_sq / varrho) * inst.gram)
        bounds.append(inst.aggregate_cap_sq / varrho)
    mats.append(inst.gram.astype(complex))
    bounds.append(1.0)
    return mats, np.asarray(bounds, dtype=float)


def _barrier_terms(x, reward, mats, bounds, mu):
    """(value, slacks, cholesky) of the barrier objective, or None if infeasible."""
    try:
        chol = scipy.linalg.cholesky(x, lower=True)
    except scipy.linalg.LinAlgError:
        return None
    slacks = bounds - np.array([float(np.sum(c * x.T).real) for c in mats])
    if np.any(slacks <= 0):
        return None
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol).real)))
    value = float(np.sum(reward * x.T).real) + mu * logdet + mu * float(np.sum(np.log(slacks)))
    return value, slacks, chol


def _center(x, reward, mats, bounds, mu, max_steps=60):
    """Newton centering for one barrier parameter, warm-started at ``x``.

    Returns ``(x, converged)``; ``converged`` reports whether the Newton
    decrement fell below the centering threshold before the step budget.
    """
    terms = _barrier_terms(x, reward, mats, bounds, mu)
    if terms is None:
        raise SdrError("barrier centering started at an infeasible point")
    converged = False
    for _ in range(max_steps):
        value, slacks, chol = terms
        inv = scipy.linalg.cho_solve((chol, True), np.eye(x.shape[0], dtype=complex))
        inv = 0.5 * (inv + inv.conj().T)
        grad = reward + mu * inv
        for c, s in zip(mats, slacks):
            grad = grad - (mu / s) * c
        grad = 0.5 * (grad + grad.conj().T)
        # Newton direction D solves mu X^-1 D X^-1 + sum_i (mu/s_i^2) Tr(C_i D) C_i = grad.
        # With multipliers v_i = mu Tr(C_i D)/s_i^2 it is D = X (grad - sum v_i C_i) X / mu,
        # and the v_i solve the mu-free (hence well-conditioned) capacitance system below.
        lifted = [x @ c @ x for c in mats]
        m = len(mats)
        cap = np.empty((m, m))
        rhs = np.empty(m)
        base = x @ grad @ x
        for i in range(m):
            rhs[i] = float(np.sum(mats[i] * base.T).real)
            for j in range(i, m):
                cap[i, j] = cap[j, i] = float(np.sum(mats[i] * lifted[j].T).real)
        cap[np.diag_indices(m)] += slacks**2
        multipliers = np.linalg.solve(cap, rhs)
        direction = base - sum(v * l for v, l in zip(multipliers, lifted))
        direction = 0.5 / mu * (direction + direction.conj().T)
        decrement = float(np.sum(grad * direction.T).real)
        if decrement <= 1e-13 * max(1.0, abs(value)):
            converged = True
            break
        step = 1.0
        accepted = None
        for _ in range(60):
            trial = _barrier_terms(x + step * direction, reward, mats, bounds, mu)
            if trial is not None and trial[0] >= value + 0.25 * step * decrement:
                accepted = trial
                break
            step *= 0.5
        if accepted is None:
            break
        x = x + step * direction
        x = 0.5 * (x + x.conj().T)
        terms = accepted
    return x, converged


def _polished_dual(x, reward, mats, barrier_multipliers):
    """Slack dual certificate refined on the solution's numerical range.

    The barrier multipliers drift in the stiff directions as the barrier
    parameter shrinks; the complementarity condition (the dual must
    annihilate the primal's range) re-determines them by nonnegative
    least squares, which is well conditioned near a rank-one solution.
    """
    vals, vecs = np.linalg.eigh(x)
    support = vecs[:, vals > 1e-7 * vals[-1]]
    columns = [(c @ support).ravel() for c in mats]
    target = (reward @ support).ravel()
    system = np.stack(
        [np.concatenate([col.real, col.imag]) for col in columns], axis=1
    )
    rhs = np.concatenate([target.real, target.imag])
    try:
        multipliers, _ = scipy.optimize.nnls(system, rhs)
    except RuntimeError:
        multipliers = barrier_multipliers
    dual = -reward.astype(complex)
    for c, lam in zip(mats, multipliers):
        dual = dual + lam * c
    return 0.5 * (dual + dual.conj().T)


def solve_sdp(inst: SdpInstance, tol: float = 1e-8) -> SdpSolution:
    """Maximize the lifted objective to (absolute-or-relative) gap ``tol``.

    The barrier parameter is reduced geometrically; after the gap target
    is met, reduction continues while the solution has not resolved to
    numerical rank one, so eigenvalue-ratio diagnostics are meaningful
    even near the rank boundary.
    """
    k = inst.n_eves
    mats, bounds = _constraints(inst)
    m = len(mats)
    reward = inst.target_outer
    traces = np.array([float(np.trace(c).real) for c in mats])
    start = 0.5 * float(np.min(bounds / traces))
    x = start * np.eye(k, dtype=complex)
    mu = 1.0
    centered = None
    gap_met = False
    for _ in range(200):
        x, converged = _center(x, reward, mats, bounds, mu)
        value = float(np.sum(reward * x.T).real)
        scale = max(1.0, abs(value))
        gap_met = gap_met or ((k + m) * mu <= tol * scale and converged)
        if not converged and centered is not None:
            # double precision exhausted; report the last centered point
            x, mu = centered
            break
        if converged:
            centered = (x, mu)
        if (
            (k + m) * mu <= tol * scale
            and converged
            and (k == 1 or rank_ratio(x) <= 1e-7 or mu <= 1e-12 * scale)
        ):
            break
        mu *= 0.2
    if not gap_met:
        raise SdrError("barrier did not reach the requested duality gap")
    slacks = bounds - np.array([float(np.sum(c * x.T).real) for c in mats])
    if np.any(slacks <= 0):
        raise SdrError("barrier terminated at an infeasible point")
    dual = _polished_dual(x, reward, mats, mu / slacks)
    kappa = (1.0 - float(np.sum(inst.gram * x.T).real)) / inst.noise_floor
    if kappa <= 0:
        raise SdrError("normalization scalar collapsed to zero")
    solution = SdpSolution(
        X=x,
        kappa=kappa,
        objective=float(np.sum(reward * x.T).real),
        duality_gap=(k + m) * mu,
        eig_ratio=rank_ratio(x),
        weights=np.zeros(k, dtype=complex),
        dual_matrix=dual,
    )
    return SdpSolution(
        X=solution.X,
        kappa=solution.kappa,
        objective=solution.objective,
        duality_gap=solution.duality_gap,
        eig_ratio=solution.eig_ratio,
        weights=extract_rank_one(solution, inst),
        dual_matrix=dual,
    )


def extract_rank_one(sol: SdpSolution, inst: SdpInstance) -> np.ndarray:
    """Leading-eigenpair extraction of the de-normalized lifted solution.

    The result is scaled down by the smallest factor restoring any
    marginally violated cap, so it is always feasible.
    """
    lifted = sol.X / sol.kappa
    vals, vecs = np.linalg.eigh(0.5 * (lifted + lifted.conj().T))
    leading = float(vals[-1])
    if leading <= 0:
        raise SdrError("lifted solution has no positive leading eigenvalue")
    weights = math.sqrt(leading) * vecs[:, -1]
    factor = 1.0
    mags = np.abs(weights)
    caps = np.sqrt(inst.power_caps)
    positive = mags > 0
    if np.any(positive):
        factor = min(factor, float(np.min(caps[positive] / mags[positive])))
    if np.isfinite(inst.aggregate_cap_sq):
        agg_sq = float(np.vdot(weights, inst.gram @ weights).real)
        if agg_sq > 0:
            factor = min(factor, math.sqrt(inst.aggregate_cap_sq / agg_sq))
    return weights * min(1.0, factor)


def rank_ratio(x: np.ndarray) -> float:
    """Second-to-first eigenvalue ratio of a Hermitian PSD matrix; 0 for 1x1."""
    x = np.asarray(x)
    if x.shape == (1, 1):
        return 0.0
    vals = np.linalg.eigvalsh(0.5 * (x + x.conj().T))
    top = float(vals[-1])
    if top <= 0:
        raise ValueError("matrix must have a positive leading eigenvalue")
    return max(float(vals[-2]), 0.0) / top
