"""Monte Carlo experiment harness, brute-force grid oracle, and solver timing.

Each experiment sweeps one named parameter, draws independent channel
realizations per sweep point from replayable per-trial seeds, runs the
requested solvers on identical instances, and reduces per-trial records
into mean/standard-error rows suitable for CSV emission. SNR statistics
are averaged in the linear domain and reported in both linear and dB.
"""

from __future__ import annotations

import enum
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import mm_admm, sdr
from .channel import (
    AttackInstance,
    SystemParams,
    build_detection_aware,
    build_unaware_known_user,
    build_unaware_unknown_user,
    dbm_to_linear,
    evaluate_snr,
    generate_channels,
    noncooperative_snr,
)
from .detection import DetectionModel, DetectorCase, detect_prob

__all__ = [
    "Scenario",
    "ExperimentSpec",
    "ExperimentResult",
    "CSV_COLUMNS",
    "run_experiment",
    "grid_search",
    "timing_run",
]

SOLVERS = ("mm_admm", "sdr", "full_power", "grid")

SWEEPS = ("n_eves", "attack_power_dbm", "train_power_dbm", "epsilon")

CSV_COLUMNS = (
    "solver",
    "trials",
    "mean_snr_linear",
    "mean_snr_db",
    "stderr_db",
    "mean_time_ms",
    "mean_mm_iters",
    "mean_eig_ratio",
    "constraint_residual",
)


class Scenario(enum.Enum):
    """Which base-station behavior and attacker knowledge an experiment models."""

    BLIND = "blind"  # BS unaware, user channel unknown to the attackers
    INFORMED = "informed"  # BS unaware, user channel known to the attackers
    EVADE_ENERGY = "evade_energy"  # BS runs the energy detector
    EVADE_LLR = "evade_llr"  # BS runs the LLR detector


_DETECTOR_OF = {
    Scenario.EVADE_ENERGY: DetectorCase.ENERGY,
    Scenario.EVADE_LLR: DetectorCase.LLR,
}


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: scenario, swept parameter, solvers, and base configuration."""

    scenario: Scenario
    sweep_name: str
    sweep_values: tuple
    trials: int
    solvers: tuple
    params: SystemParams
    eta: float = 0.05
    epsilon: float = 0.2
    seed: int = 0
    solver_config: mm_admm.SolverConfig = field(default_factory=mm_admm.SolverConfig)

    def __post_init__(self):
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        object.__setattr__(self, "solvers", tuple(self.solvers))
        if self.sweep_name not in SWEEPS:
            raise ValueError(f"unknown sweep {self.sweep_name!r}; expected one of {SWEEPS}")
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")
        unknown = set(self.solvers) - set(SOLVERS)
        if unknown:
            raise ValueError(f"unknown solvers {sorted(unknown)}; expected subset of {SOLVERS}")
        if "grid" in self.solvers:
            swept_k = self.sweep_values if self.sweep_name == "n_eves" else (self.params.n_eves,)
            if max(swept_k) > 2:
                raise ValueError("the grid oracle supports at most 2 eavesdroppers")
        if "sdr" in self.solvers and self.scenario is Scenario.INFORMED:
            raise ValueError("the SDR benchmark applies only to zero-offset scenarios")
        if "full_power" in self.solvers and self.scenario is not Scenario.BLIND:
            raise ValueError("the full-power baseline ignores detection caps; use scenario=BLIND")


@dataclass(frozen=True)
class ExperimentResult:
    """Reduced rows (one per sweep value and solver) plus a replay manifest."""

    sweep_name: str
    rows: tuple
    manifest: dict

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(render_csv(self.sweep_name, self.rows))

    def write_manifest(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _nanmean(values) -> float:
    arr = np.asarray(values, dtype=float)
    finite = arr[~np.isnan(arr)]
    return float(np.mean(finite)) if finite.size else float("nan")


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def render_csv(sweep_name: str, rows) -> str:
    header = ",".join((sweep_name,) + CSV_COLUMNS)
    lines = [header]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in (sweep_name,) + CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def _sweep_point(spec: ExperimentSpec, value):
    """(params, epsilon) at one sweep value."""
    params, epsilon = spec.params, spec.epsilon
    if spec.sweep_name == "n_eves":
        k = int(value)
        params = SystemParams(
            n_antennas=params.n_antennas,
            n_eves=k,
            pilot_len=params.pilot_len,
            train_power=params.train_power,
            signal_power=params.signal_power,
            train_noise_var=params.train_noise_var,
            eve_noise_var=np.full(k, params.eve_noise_var[0]),
            attack_power_caps=np.full(k, params.attack_power_caps[0]),
        )
    elif spec.sweep_name == "attack_power_dbm":
        params = replace(
            params, attack_power_caps=np.full(params.n_eves, dbm_to_linear(value))
        )
    elif spec.sweep_name == "train_power_dbm":
        params = replace(params, train_power=dbm_to_linear(value))
    else:
        epsilon = float(value)
    return params, epsilon


def _build_instance(spec: ExperimentSpec, params: SystemParams, epsilon, channels):
    if spec.scenario is Scenario.BLIND:
        return build_unaware_unknown_user(params, channels)
    if spec.scenario is Scenario.INFORMED:
        return build_unaware_known_user(params, channels)
    model = DetectionModel(
        case=_DETECTOR_OF[spec.scenario],
        eta=spec.eta,
        n_antennas=params.n_antennas,
        combined_var=params.combined_train_var,
    )
    return build_detection_aware(params, channels, model, epsilon)


def _detection_residual(spec: ExperimentSpec, params, epsilon, data, weights) -> float:
    if spec.scenario not in _DETECTOR_OF:
        return float("nan")
    model = DetectionModel(
        case=_DETECTOR_OF[spec.scenario],
        eta=spec.eta,
        n_antennas=params.n_antennas,
        combined_var=params.combined_train_var,
    )
    norm = float(np.linalg.norm(data.channel_map @ weights))
    return detect_prob(model, norm) - epsilon


def _run_trial(spec: ExperimentSpec, sweep_index: int, trial: int) -> dict:
    """All requested solvers on one seeded realization; returns per-solver records."""
    value = spec.sweep_values[sweep_index]
    params, epsilon = _sweep_point(spec, value)
    seed = (spec.seed, sweep_index, trial)
    channels = generate_channels(seed, params.n_antennas, params.n_eves)
    data = _build_instance(spec, params, epsilon, channels)
    records = {}
    for solver in spec.solvers:
        tic = time.perf_counter()
        eig_ratio = float("nan")
        mm_iters = float("nan")
        if solver == "mm_admm":
            result = mm_admm.solve(data, spec.solver_config)
            weights, snr = result.weights, result.snr
            mm_iters = result.mm_iterations
        elif solver == "sdr":
            solution = sdr.solve_sdp(sdr.build_sdp(data))
            weights, snr = solution.weights, evaluate_snr(data, solution.weights)
            eig_ratio = solution.eig_ratio
        elif solver == "full_power":
            weights = np.sqrt(params.attack_power_caps)
            snr = noncooperative_snr(params, channels)
        else:
            weights, objective = grid_search(data)
            snr = data.snr_scale * objective
        elapsed_ms = (time.perf_counter() - tic) * 1e3
        records[solver] = {
            "snr": snr,
            "time_ms": elapsed_ms,
            "mm_iters": mm_iters,
            "eig_ratio": eig_ratio,
            "residual": _detection_residual(spec, params, epsilon, data, weights),
        }
    return records


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Execute the sweep and reduce per-trial records by trial index."""
    rows = []
    trial_seeds = {}
    for sweep_index, value in enumerate(spec.sweep_values):
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                per_trial = list(
                    pool.map(
                        _run_trial,
                        [spec] * spec.trials,
                        [sweep_index] * spec.trials,
                        range(spec.trials),
                    )
                )
        else:
            per_trial = [_run_trial(spec, sweep_index, t) for t in range(spec.trials)]
        trial_seeds[str(value)] = [[spec.seed, sweep_index, t] for t in range(spec.trials)]
        for solver in spec.solvers:
            snrs = np.array([rec[solver]["snr"] for rec in per_trial])
            times = np.array([rec[solver]["time_ms"] for rec in per_trial])
            mean = float(np.mean(snrs))
            stderr = float(np.std(snrs, ddof=1) / np.sqrt(len(snrs))) if len(snrs) > 1 else 0.0
            residuals = np.array([rec[solver]["residual"] for rec in per_trial])
            rows.append(
                {
                    spec.sweep_name: value,
                    "solver": solver,
                    "trials": spec.trials,
                    "mean_snr_linear": mean,
                    "mean_snr_db": 10.0 * np.log10(mean) if mean > 0 else float("-inf"),
                    "stderr_db": (10.0 / np.log(10.0)) * stderr / mean if mean > 0 else 0.0,
                    "mean_time_ms": float(np.mean(times)),
                    "mean_mm_iters": _nanmean([rec[solver]["mm_iters"] for rec in per_trial]),
                    "mean_eig_ratio": _nanmean([rec[solver]["eig_ratio"] for rec in per_trial]),
                    "constraint_residual": (
                        float(np.max(residuals)) if not np.all(np.isnan(residuals)) else float("nan")
                    ),
                }
            )
    manifest = {
        "scenario": spec.scenario.value,
        "sweep_name": spec.sweep_name,
        "sweep_values": list(spec.sweep_values),
        "trials": spec.trials,
        "solvers": list(spec.solvers),
        "eta": spec.eta,
        "epsilon": spec.epsilon,
        "seed": spec.seed,
        "params": {
            "n_antennas": spec.params.n_antennas,
            "n_eves": spec.params.n_eves,
            "pilot_len": spec.params.pilot_len,
            "train_power": spec.params.train_power,
            "signal_power": spec.params.signal_power,
            "train_noise_var": spec.params.train_noise_var,
            "eve_noise_var": spec.params.eve_noise_var.tolist(),
            "attack_power_caps": spec.params.attack_power_caps.tolist(),
        },
        "solver_config": {
            "rho": spec.solver_config.rho,
            "mm_tol": spec.solver_config.mm_tol,
            "admm_tol": spec.solver_config.admm_tol,
            "mm_max_iter": spec.solver_config.mm_max_iter,
            "admm_max_iter": spec.solver_config.admm_max_iter,
            "newton_tol": spec.solver_config.newton_tol,
            "init_seed": spec.solver_config.init_seed,
        },
        "trial_seeds": trial_seeds,
    }
    return ExperimentResult(sweep_name=spec.sweep_name, rows=tuple(rows), manifest=manifest)


def grid_search(data: AttackInstance, mag_steps: int = 64, phase_steps: int = 64):
    """Exhaustive feasible-grid maximization; the independent oracle.

    Supports one or two eavesdroppers. For zero-offset instances the last
    coordinate's phase is pinned to zero (global-phase invariance).
    Returns ``(weights, objective)`` of the best feasible grid point.
    """
    k = data.n_eves
    if k > 2:
        raise ValueError("grid search supports at most 2 eavesdroppers")
    zero_offset = data.target_user_corr == 0 and not np.any(data.user_offset)
    gram = data.gram
    alpha = data.target_corr
    cross = data.channel_map.conj().T @ data.user_offset
    denom_const = float(np.vdot(data.user_offset, data.user_offset).real) + data.noise_floor
    cap_sq = data.aggregate_cap_sq * (1.0 + 1e-12) if np.isfinite(data.aggregate_cap_sq) else np.inf
    phases = np.exp(2j * np.pi * np.arange(phase_steps) / phase_steps)
    mags = [np.linspace(0.0, np.sqrt(p), mag_steps) for p in data.power_caps]

    def evaluate(w_list):
        gain = data.target_user_corr
        agg = 0.0
        pull = 0.0
        for i, w in enumerate(w_list):
            gain = gain + np.conj(alpha[i]) * w
            agg = agg + gram[i, i].real * np.abs(w) ** 2
            pull = pull + 2.0 * (np.conj(cross[i]) * w).real
        if k == 2:
            agg = agg + 2.0 * (np.conj(w_list[0]) * gram[0, 1] * w_list[1]).real
        objective = np.abs(gain) ** 2 / (agg + pull + denom_const)
        return np.where(agg <= cap_sq, objective, -np.inf)

    if k == 1:
        last_phases = np.array([1.0 + 0j]) if zero_offset else phases
        w0 = mags[0][:, None] * last_phases[None, :]
        values = evaluate([w0])
        flat = int(np.argmax(values))
        best = np.array([w0.reshape(-1)[flat]])
        return best, float(values.reshape(-1)[flat])

    best_value = -np.inf
    best_weights = None
    last_phases = np.array([1.0 + 0j]) if zero_offset else phases
    w0 = mags[0][:, None, None] * phases[None, None, :]
    for last in last_phases:
        w1 = mags[1][None, :, None] * last
        values = evaluate([w0, w1])
        flat = int(np.argmax(values))
        if values.reshape(-1)[flat] > best_value:
            best_value = float(values.reshape(-1)[flat])
            idx = np.unravel_index(flat, values.shape)
            best_weights = np.array([w0[idx[0], 0, idx[2]], mags[1][idx[1]] * last])
    return best_weights, best_value


def timing_run(
    k_list,
    trials: int,
    solvers=("mm_admm", "sdr"),
    n_antennas: int = 10,
    seed: int = 0,
    eta: float = 0.05,
    epsilon: float = 0.2,
    solver_config: mm_admm.SolverConfig | None = None,
):
    """Mean wall-clock solve times per (eavesdropper count, solver).

    All solvers see identical instance sets (same per-trial seeds); the
    scenario is the energy-detector evasion configuration.
    """
    config = solver_config if solver_config is not None else mm_admm.SolverConfig()
    rows = []
    for k in k_list:
        params = SystemParams.from_dbm(
            n_antennas=n_antennas,
            n_eves=int(k),
            train_power_dbm=10.0,
            signal_power_dbm=20.0,
            attack_power_dbm=8.0,
        )
        model = DetectionModel(
            case=DetectorCase.ENERGY,
            eta=eta,
            n_antennas=n_antennas,
            combined_var=params.combined_train_var,
        )
        instances = [
            build_detection_aware(
                params, generate_channels((seed, int(k), t), n_antennas, int(k)), model, epsilon
            )
            for t in range(trials)
        ]
        for solver in solvers:
            tic = time.perf_counter()
            for data in instances:
                if solver == "mm_admm":
                    mm_admm.solve(data, config)
                elif solver == "sdr":
                    sdr.solve_sdp(sdr.build_sdp(data))
                else:
                    raise ValueError(f"timing supports mm_admm and sdr, not {solver!r}")
            rows.append(
                {
                    "n_eves": int(k),
                    "solver": solver,
                    "mean_time_ms": (time.perf_counter() - tic) * 1e3 / trials,
                }
            )
    return rows
