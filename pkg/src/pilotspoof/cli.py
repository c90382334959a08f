"""Command-line front end.

Subcommands map to the experiment families ("convergence", "compare",
"unaware", "detect") plus a self-check suite ("validate"). Power flags
take dBm values; everything else is linear. Outputs are deterministic
CSV files given identical arguments and seed.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import experiments, mm_admm, sdr
from .channel import (
    SystemParams,
    build_detection_aware,
    build_unaware_known_user,
    build_unaware_unknown_user,
    evaluate_snr,
    generate_channels,
    noncooperative_snr,
    read_channels,
)
from .detection import DetectionModel, DetectorCase, detect_prob, evasion_power_cap, simulate_detector
from .experiments import ExperimentSpec, Scenario, grid_search, run_experiment

__all__ = ["main"]


def _float_list(text: str):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _int_list(text: str):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _add_system_flags(parser, n=10, k=3, p=10.0, pt=10.0, ps=20.0):
    parser.add_argument("--n", type=int, default=n, help="base-station antennas")
    parser.add_argument("--k", type=int, default=k, help="number of eavesdroppers")
    parser.add_argument("--tau", type=int, default=16, help="pilot sequence length")
    parser.add_argument("--p-dbm", type=float, default=p, help="per-eavesdropper attack power cap (dBm)")
    parser.add_argument("--pt-dbm", type=float, default=pt, help="user training power (dBm)")
    parser.add_argument("--ps-dbm", type=float, default=ps, help="base-station signal power (dBm)")
    parser.add_argument("--train-noise-dbm", type=float, default=0.0, help="training noise variance (dBm)")
    parser.add_argument("--eve-noise-dbm", type=float, default=0.0, help="eavesdropper noise variance (dBm)")


def _add_solver_flags(parser):
    parser.add_argument("--rho", type=float, default=0.01, help="ADMM penalty")
    parser.add_argument("--mm-tol", type=float, default=1e-3, help="outer relative-change tolerance")
    parser.add_argument("--admm-tol", type=float, default=1e-4, help="inner relative-change tolerance")
    parser.add_argument("--mm-max-iter", type=int, default=500, help="outer iteration cap")
    parser.add_argument("--admm-max-iter", type=int, default=5, help="inner iteration cap")


def _add_run_flags(parser, trials=100):
    parser.add_argument("--trials", type=int, default=trials, help="Monte Carlo trials per sweep point")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--out", default="-", help="CSV output path ('-' for stdout)")
    parser.add_argument("--manifest", default=None, help="optional JSON replay-manifest path")
    parser.add_argument("--workers", type=int, default=1, help="parallel trial workers")


def _params(args, k=None) -> SystemParams:
    return SystemParams.from_dbm(
        n_antennas=args.n,
        n_eves=k if k is not None else args.k,
        train_power_dbm=args.pt_dbm,
        signal_power_dbm=args.ps_dbm,
        attack_power_dbm=args.p_dbm,
        pilot_len=args.tau,
        train_noise_dbm=args.train_noise_dbm,
        eve_noise_dbm=args.eve_noise_dbm,
    )


def _solver_config(args) -> mm_admm.SolverConfig:
    return mm_admm.SolverConfig(
        rho=args.rho,
        mm_tol=args.mm_tol,
        admm_tol=args.admm_tol,
        mm_max_iter=args.mm_max_iter,
        admm_max_iter=args.admm_max_iter,
    )


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)


def _emit_experiment(args, spec: ExperimentSpec) -> None:
    result = run_experiment(spec, workers=args.workers)
    _write_text(args.out, experiments.render_csv(result.sweep_name, result.rows))
    if args.manifest:
        result.write_manifest(args.manifest)


def _cmd_convergence(args) -> int:
    config = _solver_config(args)
    params = _params(args)
    if args.channels_file:
        realizations = [read_channels(args.channels_file)]
    else:
        realizations = [
            generate_channels((args.seed, r), params.n_antennas, params.n_eves)
            for r in range(args.realizations)
        ]
    scenario = Scenario(args.scenario)
    lines = ["realization,iteration,objective,snr"]
    for r, channels in enumerate(realizations):
        if scenario is Scenario.BLIND:
            data = build_unaware_unknown_user(params, channels)
        elif scenario is Scenario.INFORMED:
            data = build_unaware_known_user(params, channels)
        else:
            case = DetectorCase.ENERGY if scenario is Scenario.EVADE_ENERGY else DetectorCase.LLR
            model = DetectionModel(
                case=case, eta=args.eta, n_antennas=params.n_antennas,
                combined_var=params.combined_train_var,
            )
            data = build_detection_aware(params, channels, model, args.epsilon)
        result = mm_admm.solve(data, config)
        for i, value in enumerate(result.trace):
            lines.append(f"{r},{i},{value:.12g},{data.snr_scale * value:.12g}")
    _write_text(args.out, "\n".join(lines) + "\n")
    if args.manifest:
        _write_text(
            args.manifest,
            json.dumps(
                {"command": "convergence", "seed": args.seed, "scenario": args.scenario,
                 "realizations": len(realizations)},
                indent=2, sort_keys=True,
            ) + "\n",
        )
    return 0


def _cmd_compare(args) -> int:
    spec = ExperimentSpec(
        scenario=Scenario.EVADE_ENERGY,
        sweep_name="n_eves",
        sweep_values=args.k_list,
        trials=args.trials,
        solvers=("mm_admm", "sdr"),
        params=_params(args, k=max(args.k_list)),
        eta=args.eta,
        epsilon=args.epsilon,
        seed=args.seed,
        solver_config=_solver_config(args),
    )
    _emit_experiment(args, spec)
    return 0


def _cmd_unaware(args) -> int:
    config = _solver_config(args)
    if args.sweep == "k":
        spec = ExperimentSpec(
            scenario=Scenario.BLIND,
            sweep_name="n_eves",
            sweep_values=args.k_list,
            trials=args.trials,
            solvers=("mm_admm", "full_power"),
            params=_params(args, k=max(args.k_list)),
            seed=args.seed,
            solver_config=config,
        )
        _emit_experiment(args, spec)
        return 0
    # training-power sweep: same instances solved with and without user CSI
    rows = []
    for scenario, label in ((Scenario.BLIND, "mm_admm_blind"), (Scenario.INFORMED, "mm_admm_informed")):
        spec = ExperimentSpec(
            scenario=scenario,
            sweep_name="train_power_dbm",
            sweep_values=args.pt_list,
            trials=args.trials,
            solvers=("mm_admm",),
            params=_params(args),
            seed=args.seed,
            solver_config=config,
        )
        result = run_experiment(spec, workers=args.workers)
        for row in result.rows:
            row = dict(row)
            row["solver"] = label
            rows.append(row)
    rows.sort(key=lambda r: (r["train_power_dbm"], r["solver"]))
    _write_text(args.out, experiments.render_csv("train_power_dbm", rows))
    if args.manifest:
        _write_text(
            args.manifest,
            json.dumps({"command": "unaware", "sweep": "pt", "seed": args.seed}, indent=2, sort_keys=True) + "\n",
        )
    return 0


def _cmd_detect(args) -> int:
    scenario = Scenario.EVADE_ENERGY if args.case == "energy" else Scenario.EVADE_LLR
    if args.sweep == "p":
        sweep_name, values = "attack_power_dbm", args.p_list
    else:
        sweep_name, values = "epsilon", args.epsilon_list
    spec = ExperimentSpec(
        scenario=scenario,
        sweep_name=sweep_name,
        sweep_values=values,
        trials=args.trials,
        solvers=tuple(args.solvers.split(",")),
        params=_params(args),
        eta=args.eta,
        epsilon=args.epsilon,
        seed=args.seed,
        solver_config=_solver_config(args),
    )
    _emit_experiment(args, spec)
    return 0


def _check(name: str, ok: bool, detail: str, failures: list) -> None:
    print(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
    if not ok:
        failures.append(name)


def _cmd_validate(args) -> int:
    quick = args.quick
    failures: list = []
    rng = np.random.default_rng(args.seed)

    # grid-oracle equivalence on small two-eavesdropper instances
    instances = 6 if quick else 20
    hits = 0
    for i in range(instances):
        params = SystemParams.from_dbm(4, 2, 10.0, 20.0, 10.0)
        channels = generate_channels((args.seed, 7, i), 4, 2)
        if i % 2 == 0:
            data = build_unaware_unknown_user(params, channels)
        else:
            model = DetectionModel(
                case=DetectorCase.ENERGY, eta=0.05, n_antennas=4,
                combined_var=params.combined_train_var,
            )
            data = build_detection_aware(params, channels, model, 0.2)
        result = mm_admm.solve(data, mm_admm.SolverConfig())
        _, oracle = grid_search(data)
        if result.objective_value >= 0.99 * oracle:
            hits += 1
    _check("oracle-equivalence", hits >= instances - 1, f"{hits}/{instances} within 1%", failures)

    # closed-form detection probabilities against detector simulation
    trials = 20_000 if quick else 100_000
    for case, eta in ((DetectorCase.ENERGY, 0.05), (DetectorCase.LLR, 0.05)):
        worst = 0.0
        for i in range(2 if quick else 5):
            n = int(rng.integers(2, 16))
            model = DetectionModel(case=case, eta=eta, n_antennas=n, combined_var=1.1)
            norm = float(rng.uniform(0.3, 3.0)) * model.combined_std
            direction = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            channel = direction / np.linalg.norm(direction) * norm
            rate = simulate_detector(model, channel, trials, (args.seed, 11, i))
            closed = detect_prob(model, norm)
            se = max(np.sqrt(closed * (1 - closed) / trials), 1e-9)
            worst = max(worst, abs(rate - closed) / se)
        _check(
            f"detection-{case.value}", worst <= 4.0,
            f"max deviation {worst:.2f} binomial standard errors", failures,
        )

    # power-cap round trip
    worst = 0.0
    for i in range(20):
        case = DetectorCase.ENERGY if i % 2 == 0 else DetectorCase.LLR
        eta = float(rng.uniform(0.01, 0.2 if case is DetectorCase.ENERGY else 0.2))
        eps = float(rng.uniform(eta + 0.05, 0.9))
        model = DetectionModel(
            case=case, eta=eta, n_antennas=int(rng.integers(2, 20)),
            combined_var=float(rng.uniform(1.0, 2.0)),
        )
        cap = evasion_power_cap(model, eps)
        worst = max(worst, abs(detect_prob(model, cap) - eps))
    _check("power-cap-round-trip", worst <= 1e-8, f"max residual {worst:.2e}", failures)

    # solver invariants: nondecreasing trace, feasibility, SDR dominance
    ok_trace, ok_feasible, ok_bound = True, True, True
    for i in range(3 if quick else 10):
        params = SystemParams.from_dbm(8, 3, 10.0, 20.0, 10.0)
        channels = generate_channels((args.seed, 13, i), 8, 3)
        model = DetectionModel(
            case=DetectorCase.ENERGY, eta=0.05, n_antennas=8,
            combined_var=params.combined_train_var,
        )
        data = build_detection_aware(params, channels, model, 0.2)
        result = mm_admm.solve(data)
        ok_trace &= bool(np.all(np.diff(result.trace) >= -1e-9))
        ok_feasible &= bool(
            np.all(np.abs(result.weights) ** 2 <= data.power_caps * (1 + 1e-9))
            and float(np.vdot(result.weights, data.gram @ result.weights).real)
            <= data.aggregate_cap_sq * (1 + 1e-9)
        )
        solution = sdr.solve_sdp(sdr.build_sdp(data))
        ok_bound &= result.objective_value <= solution.objective + 1e-6
    _check("mm-trace-nondecreasing", ok_trace, "monotone ascent", failures)
    _check("mm-feasibility", ok_feasible, "caps within 1e-9 relative slack", failures)
    _check("sdr-upper-bound", ok_bound, "relaxation dominates", failures)

    if failures:
        print(f"{len(failures)} check(s) failed: {', '.join(failures)}")
        return 1
    print("all checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pilotspoof",
        description="Cooperative pilot-spoofing attack design and evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convergence", help="per-iteration objective traces")
    _add_system_flags(p, n=8, k=3, p=10.0)
    _add_solver_flags(p)
    p.add_argument("--scenario", choices=[s.value for s in Scenario], default="blind")
    p.add_argument("--eta", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--realizations", type=int, default=4)
    p.add_argument("--channels-file", default=None, help="replay one serialized realization")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.add_argument("--manifest", default=None)
    p.set_defaults(func=_cmd_convergence)

    p = sub.add_parser("compare", help="solver timing, eigenvalue ratios, SNR vs eavesdropper count")
    _add_system_flags(p, n=10, k=3, p=8.0)
    _add_solver_flags(p)
    p.add_argument("--eta", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--k-list", type=_int_list, default=(2, 4, 6, 8, 10, 12))
    _add_run_flags(p, trials=50)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("unaware", help="SNR without detection: vs K (baseline) or vs training power")
    _add_system_flags(p, n=10, k=4, p=5.0)
    _add_solver_flags(p)
    p.add_argument("--sweep", choices=["k", "pt"], default="k")
    p.add_argument("--k-list", type=_int_list, default=(1, 2, 3, 4, 5, 6, 7, 8))
    p.add_argument("--pt-list", type=_float_list, default=(0.0, 5.0, 10.0, 15.0, 20.0))
    _add_run_flags(p, trials=100)
    p.set_defaults(func=_cmd_unaware)

    p = sub.add_parser("detect", help="SNR under detection: vs attack power or vs detection budget")
    _add_system_flags(p, n=8, k=3, p=10.0)
    _add_solver_flags(p)
    p.add_argument("--case", choices=["energy", "llr"], default="energy")
    p.add_argument("--sweep", choices=["p", "epsilon"], default="p")
    p.add_argument("--eta", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--p-list", type=_float_list, default=(0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0))
    p.add_argument("--epsilon-list", type=_float_list, default=(0.1, 0.2, 0.3, 0.4, 0.5))
    p.add_argument("--solvers", default="mm_admm")
    _add_run_flags(p, trials=100)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("validate", help="oracle equivalence, detection Monte Carlo, invariants")
    p.add_argument("--quick", action="store_true", help="reduced sizes")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
