#!/usr/bin/env python3
"""
Command-line front end: matching checks, iISS analysis, simulation and the report.

Exit codes: 0 expectations met, 1 expectations violated, 2 usage or configuration error.
"""

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import ValidationError

from projects.ida_verify.config.settings import Settings, get_settings
from projects.ida_verify.src.analysis.diffops import FiniteDifferenceScheme
from projects.ida_verify.src.analysis.rebuttal import (
    extended_kernel_witness,
    find_bound_counterexample,
    integral_matching_conditions,
    witness_report,
)
from projects.ida_verify.src.core.errors import (
    ConfigError,
    DivergenceError,
    IdaVerifyError,
    InfeasibleMatchingError,
    NoKernelError,
)
from projects.ida_verify.src.core.types import ExtendedState, sample_extended_state
from projects.ida_verify.src.core.validation import (
    validate_gains,
    validate_model,
    validate_target,
)
from projects.ida_verify.src.models.iwp import direct_terms, iwp_matching_verdict, iwp_terms
from projects.ida_verify.src.models.registry import LoadedModel, load_model
from projects.ida_verify.src.processing.sweeps import (
    chain_sweep,
    coupling_scaling,
    matched_bound_sweep,
    residual_sweep,
    rip_star_sweep,
)
from projects.ida_verify.src.schemas.config import RunConfig
from projects.ida_verify.src.schemas.reports import ChecklistRow, IssReport
from projects.ida_verify.src.simulation.disturbances import build_disturbance, matched_sinusoid
from projects.ida_verify.src.simulation.integrate import Trajectory
from projects.ida_verify.src.simulation.simulate import (
    convergence_evidence,
    simulate_disturbed,
    simulate_target,
)
from projects.ida_verify.src.storage.results import ResultStore

OUT_ENV = "IDA_VERIFY_OUT"
MARGIN_TOL = 1e-5
IDENTITY_TOL = 1e-9


def _common_arguments() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", type=Path, help="JSON run configuration file")
    parent.add_argument("--model", type=str, help="Preset name (iwp, rip) or model JSON file")
    parent.add_argument("--seed", type=int, help="Seed for every random draw")
    parent.add_argument("--out", type=Path, help=f"Output directory ({OUT_ENV} overrides)")
    parent.add_argument("--expect", choices=["pass", "fail"], help="Expected verdict")
    parent.add_argument("--samples", type=int, help="Number of sampled states")
    parent.add_argument(
        "--fully-actuated", action="store_true", help="Replace G by the identity (m = n)"
    )
    parent.add_argument("--fd-step", type=float, help="Finite-difference step")
    parent.add_argument("--fd-order", type=int, choices=[2, 4], help="Finite-difference order")
    return parent


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="ida-verify", description="Verify IDA-PBC matching conditions and bounds"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_arguments()

    matching = subparsers.add_parser(
        "check-matching", parents=[common], help="Residual sweeps of the matching operators"
    )
    matching.add_argument(
        "--operator",
        action="append",
        choices=["basic", "p41", "p51"],
        help="Operator to sweep (repeatable, default: all)",
    )
    matching.add_argument("--restrict", type=str, help="Restrict sampling, e.g. x_v=0")
    matching.add_argument("--tolerance", type=float, help="Residual tolerance")

    iss = subparsers.add_parser(
        "analyze-iss", parents=[common], help="Kernel witness, counterexample and matched bound"
    )
    iss.add_argument("--no-simulate", action="store_true", help="Skip the disturbed simulation")

    simulate = subparsers.add_parser("simulate", parents=[common], help="Closed-loop simulation")
    simulate.add_argument("--mode", choices=["target", "disturbed"])
    simulate.add_argument("--controller", choices=["ida_pbc", "ryalat_p41"])
    simulate.add_argument(
        "--disturbance", choices=["none", "matched_sinusoid", "unmatched_witness"]
    )
    simulate.add_argument("--amplitude", type=float)
    simulate.add_argument("--horizon", type=float)
    simulate.add_argument("--dt", type=float)
    simulate.add_argument("--method", choices=["rk4", "euler"])
    simulate.add_argument("--q0", type=float, nargs="+")
    simulate.add_argument("--p0", type=float, nargs="+")

    subparsers.add_parser("report", parents=[common], help="Markdown summary of prior runs")
    return parser.parse_args(argv)


def configure_logging(level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format="{time:HH:mm:ss} | {level: <8} | {message}")


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _settings_defaults(settings: Settings) -> Dict[str, Any]:
    return {
        "seed": settings.SEED,
        "matching": {"samples": settings.SWEEP_SAMPLES, "tolerance": settings.RESIDUAL_TOL},
        "iss": {"samples": settings.BOUND_SAMPLES, "horizon": settings.HORIZON, "dt": settings.DT},
        "simulation": {"horizon": settings.HORIZON, "dt": settings.DT},
        "differences": {
            "step": settings.FD_STEP,
            "order": settings.FD_ORDER,
            "hessian_step": settings.HESSIAN_STEP,
        },
    }


def _cli_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    for name in ("model", "seed", "out", "expect"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = str(value) if isinstance(value, Path) else value
    if args.fully_actuated:
        overrides["overrides"] = {"fully_actuated": True}
    if args.samples is not None:
        overrides["matching"] = {"samples": args.samples}
        overrides["iss"] = {"samples": args.samples}
    differences = {}
    if args.fd_step is not None:
        differences["step"] = args.fd_step
    if args.fd_order is not None:
        differences["order"] = args.fd_order
    if differences:
        overrides["differences"] = differences

    if args.command == "check-matching":
        matching = overrides.setdefault("matching", {})
        if args.operator:
            matching["operators"] = args.operator
        if args.tolerance is not None:
            matching["tolerance"] = args.tolerance
        if args.restrict is not None:
            if args.restrict.replace(" ", "") != "x_v=0":
                raise ConfigError(f"Unsupported restriction '{args.restrict}' (use x_v=0)")
            matching["restrict_x_v_zero"] = True
    elif args.command == "analyze-iss" and args.no_simulate:
        overrides.setdefault("iss", {})["simulate"] = False
    elif args.command == "simulate":
        simulation: Dict[str, Any] = {}
        for name in ("mode", "controller", "horizon", "dt", "method", "q0", "p0"):
            if getattr(args, name) is not None:
                simulation[name] = getattr(args, name)
        disturbance = {}
        if args.disturbance is not None:
            disturbance["kind"] = args.disturbance
        if args.amplitude is not None:
            disturbance["amplitude"] = args.amplitude
        if disturbance:
            simulation["disturbance"] = disturbance
        overrides["simulation"] = simulation
    return overrides


def build_config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    """Settings defaults, then the JSON config file, then command-line flags."""
    data = _settings_defaults(settings)
    if args.config is not None:
        try:
            with open(args.config) as f:
                loaded = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config {args.config}: {e}")
        if not isinstance(loaded, dict):
            raise ConfigError(f"Config {args.config} must hold a JSON object")
        data = _merge(data, loaded)
    data = _merge(data, _cli_overrides(args))
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid run configuration: {e}")
    if OUT_ENV in os.environ or config.out is None:
        config = config.model_copy(update={"out": settings.OUT})
    return config


def expectation_met(expect: Optional[str], verdicts: List[str]) -> bool:
    """'fail' is met when any verdict fails, 'pass' when all pass."""
    if expect is None:
        return True
    if expect == "fail":
        return "fail" in verdicts
    return all(verdict == "pass" for verdict in verdicts)


def _exit_code(config: RunConfig, verdicts: List[str]) -> int:
    met = expectation_met(config.expect, verdicts)
    if config.expect is not None:
        logger.info(f"Expectation '{config.expect}' {'met' if met else 'violated'}: {verdicts}")
    return 0 if met else 1


def scheme_for(config: RunConfig) -> FiniteDifferenceScheme:
    return FiniteDifferenceScheme.from_config(config.differences)


def validate_loaded(loaded: LoadedModel, config: RunConfig, samples: int) -> Dict[str, Any]:
    """Structural checks of plant, design and gains; failures are logged and recorded."""
    scheme = scheme_for(config)
    return {
        "model": validate_model(loaded.model, samples, config.seed),
        "target": validate_target(
            loaded.target,
            samples,
            config.seed,
            domain_box=loaded.model.domain_box,
            scheme=scheme,
            hessian_step=config.differences.hessian_step,
        ),
        "gains": validate_gains(loaded.gains),
    }


def _iwp_term_gaps(loaded: LoadedModel, samples: int, seed: int) -> Dict[str, float]:
    """Worst printed-versus-direct gap of each IWP term over sampled states."""
    rng = np.random.default_rng(seed)
    worst: Dict[str, float] = {}
    direct = direct_terms(loaded.iwp)  # type: ignore[arg-type]
    for _ in range(samples):
        s = sample_extended_state(loaded.model.domain_box, rng, (0.1, 1.0))
        terms = iwp_terms(loaded.iwp, s, direct)  # type: ignore[arg-type]
        for name, gap in terms.disagreements().items():
            worst[name] = max(worst.get(name, 0.0), gap)
    if worst:
        logger.warning(f"Printed IWP terms disagree with the direct assembly: {worst}")
    return worst


def cmd_check_matching(config: RunConfig, store: ResultStore, settings: Settings) -> int:
    loaded = load_model(config.model, config.overrides)
    matching = config.matching
    scheme = scheme_for(config)
    validation = validate_loaded(loaded, config, settings.VALIDATION_SAMPLES)
    summaries = {}
    for operator in matching.operators:
        result = residual_sweep(
            loaded,
            operator,
            matching,
            seed=config.seed,
            feasibility_tol=settings.FEASIBILITY_TOL,
            warning_tol=settings.WARNING_TOL,
            show_progress=settings.SHOW_PROGRESS,
            scheme=scheme,
        )
        store.write_rows(f"matching_{loaded.kind}_{operator}.csv", result.rows)
        summaries[operator] = result.summary

    payload: Dict[str, Any] = {
        "model": loaded.label,
        "kind": loaded.kind,
        "seed": config.seed,
        "operators": summaries,
        "restricted_x_v_zero": matching.restrict_x_v_zero,
        "differences": config.differences,
        "validation": validation,
    }
    if not matching.restrict_x_v_zero:
        chain = chain_sweep(
            loaded,
            matching.samples,
            config.seed,
            matching.x_v_range,
            settings.SHOW_PROGRESS,
            scheme=scheme,
        )
        store.write_rows(f"chain_{loaded.kind}.csv", chain.rows)
        payload["chain"] = chain.summary
        conditions = integral_matching_conditions(
            loaded.model, loaded.target, settings.VALIDATION_SAMPLES, config.seed, scheme
        )
        payload["integral_conditions"] = {
            "max_md_gradient": conditions.max_md_gradient,
            "max_annihilated_coupling": conditions.max_annihilated_coupling,
            "holds": conditions.holds,
        }
        if loaded.model.underactuated:
            scaling = coupling_scaling(
                loaded, samples=min(matching.samples, 200), seed=config.seed, scheme=scheme
            )
            payload["coupling_scaling"] = {
                "epsilons": list(scaling.epsilons),
                "max_residuals": list(scaling.max_residuals),
                "baseline": scaling.baseline,
                "linear": scaling.linear(),
                "tolerance": matching.tolerance,
            }
        if loaded.kind == "iwp":
            payload["iwp"] = iwp_matching_verdict(
                loaded.iwp,
                matching.samples,
                config.seed,
                threshold=matching.tolerance,
                x_v_range=matching.x_v_range,
                fully_actuated=config.overrides.fully_actuated,
                show_progress=settings.SHOW_PROGRESS,
                scheme=scheme,
            )
            payload["iwp_term_disagreements"] = _iwp_term_gaps(
                loaded, min(matching.samples, 100), config.seed
            )
        else:
            star = rip_star_sweep(
                loaded,
                matching.samples,
                config.seed,
                show_progress=settings.SHOW_PROGRESS,
                scheme=scheme,
            )
            store.write_rows("rip_star.csv", star.rows)
            payload["rip_star"] = star.summary

    verdicts = [summary.verdict for summary in summaries.values()]
    payload["expect"] = config.expect
    payload["expectation_met"] = expectation_met(config.expect, verdicts)
    payload["digests"] = store.digests()
    store.write_json(f"check_matching_{loaded.kind}.json", payload)
    return _exit_code(config, verdicts)


def _trajectory_margin_stats(trajectory: Trajectory) -> Dict[str, Any]:
    stats: Dict[str, Any] = {"diverged": trajectory.diverged, "steps": len(trajectory)}
    if trajectory.margins is not None:
        stats["min_margin"] = float(np.min(trajectory.margins))
        stats["margin_violations"] = int(np.sum(trajectory.margins < -MARGIN_TOL))
    if "claimed_violated" in trajectory.channels:
        claimed = trajectory.channels["claimed_violated"] > 0
        exact = trajectory.channels["exact_respected"] > 0
        stats["claimed_violations"] = int(np.sum(claimed))
        stats["claimed_violated_exact_respected"] = int(np.sum(claimed & exact))
    return stats


def _run_simulation(run: Callable[[], Trajectory]) -> Trajectory:
    try:
        return run()
    except DivergenceError as e:
        logger.warning(f"Divergence at t={e.last_time:.6g}; writing the partial trajectory")
        return e.trajectory


def cmd_analyze_iss(config: RunConfig, store: ResultStore, settings: Settings) -> int:
    loaded = load_model(config.model, config.overrides)
    model, target, gains = loaded.model, loaded.target, loaded.gains
    validation = validate_loaded(loaded, config, settings.VALIDATION_SAMPLES)
    witness = witness_report(model, target)
    extended = None
    try:
        extended = extended_kernel_witness(model, target, gains).as_array().tolist()
    except NoKernelError:
        pass
    counterexample = find_bound_counterexample(model, target, gains)
    matched = matched_bound_sweep(
        loaded, config.iss.samples, config.seed, show_progress=settings.SHOW_PROGRESS
    )
    store.write_rows(f"matched_bound_{loaded.kind}.csv", matched.rows)
    bound = matched.summary

    if config.iss.simulate:
        dist = matched_sinusoid(model.m, model.n, config.iss.amplitude)
        x0 = ExtendedState(target.q_star, np.zeros(model.n))
        try:
            trajectory = _run_simulation(
                lambda: simulate_disturbed(
                    model,
                    target,
                    gains,
                    "ida_pbc",
                    dist,
                    x0,
                    config.iss.horizon,
                    config.iss.dt,
                    energy=loaded.energy,
                    divergence_limit=settings.DIVERGENCE_LIMIT,
                    scheme=scheme_for(config),
                    show_progress=settings.SHOW_PROGRESS,
                )
            )
        except InfeasibleMatchingError as e:
            logger.warning(f"Matched-disturbance simulation skipped: {e}")
        else:
            store.write_trajectory(f"iss_trajectory_{loaded.kind}", trajectory, model.n)
            stats = _trajectory_margin_stats(trajectory)
            bound = bound.model_copy(
                update={
                    "simulated": True,
                    "simulation_min_margin": stats.get("min_margin"),
                    "simulation_violations": stats.get("margin_violations"),
                }
            )

    holds = bound.hard_violations == 0 and not bound.simulation_violations
    report = IssReport(
        witness=witness,
        extended_witness=extended,
        counterexample=counterexample,
        matched_bound=bound,
        verdict="pass" if holds else "fail",
    )
    store.write_json(
        f"iss_{loaded.kind}.json",
        {
            "model": loaded.label,
            "seed": config.seed,
            "report": report,
            "validation": validation,
            "digests": store.digests(),
        },
    )
    return _exit_code(config, [report.verdict])


def cmd_simulate(config: RunConfig, store: ResultStore, settings: Settings) -> int:
    loaded = load_model(config.model, config.overrides)
    model, target, gains = loaded.model, loaded.target, loaded.gains
    sim = config.simulation
    q0 = np.asarray(sim.q0, dtype=float) if sim.q0 is not None else target.q_star
    p0 = np.asarray(sim.p0, dtype=float) if sim.p0 is not None else np.zeros(model.n)
    x_v0 = np.asarray(sim.x_v0, dtype=float) if sim.x_v0 is not None else np.zeros(model.n)

    if sim.mode == "target":
        trajectory = _run_simulation(
            lambda: simulate_target(
                model,
                target,
                gains,
                q0,
                p0,
                sim.horizon,
                sim.dt,
                method=sim.method,
                divergence_limit=settings.DIVERGENCE_LIMIT,
                scheme=scheme_for(config),
                show_progress=settings.SHOW_PROGRESS,
            )
        )
    else:
        dist = build_disturbance(sim.disturbance, model, target)
        trajectory = _run_simulation(
            lambda: simulate_disturbed(
                model,
                target,
                gains,
                sim.controller,
                dist,
                ExtendedState(q0, p0, x_v0),
                sim.horizon,
                sim.dt,
                energy=loaded.energy,
                method=sim.method,
                divergence_limit=settings.DIVERGENCE_LIMIT,
                scheme=scheme_for(config),
                show_progress=settings.SHOW_PROGRESS,
            )
        )
    store.write_trajectory(f"trajectory_{loaded.kind}", trajectory, model.n)
    evidence = convergence_evidence(trajectory, target.q_star)
    stats = _trajectory_margin_stats(trajectory)
    summary = {
        "model": loaded.label,
        "mode": sim.mode,
        "controller": sim.controller if sim.mode == "disturbed" else None,
        "disturbance": sim.disturbance.kind if sim.mode == "disturbed" else "none",
        "metadata": trajectory.metadata,
        "convergence": {
            "final_position_error": evidence.final_position_error,
            "final_momentum_norm": evidence.final_momentum_norm,
            "tail_mean_output": evidence.tail_mean_output,
            "converged": evidence.converged,
            "label": evidence.label,
        },
        **stats,
        "digests": store.digests(),
    }
    store.write_json(f"simulate_{loaded.kind}.json", summary)
    healthy = not trajectory.diverged and not stats.get("margin_violations")
    return _exit_code(config, ["pass" if healthy else "fail"])


def _row_r1(matching: Optional[Dict]) -> ChecklistRow:
    """p41 residual: zero under the sufficient conditions, growing with a violating J2."""
    if matching is None or matching.get("restricted_x_v_zero"):
        return ChecklistRow(check="R1", status="not run")
    scaling = matching.get("coupling_scaling")
    if scaling is None:
        return ChecklistRow(check="R1", status="fail", detail="no annihilator (m = n)")
    tolerance = scaling.get("tolerance", IDENTITY_TOL)
    worst = max(scaling["max_residuals"])
    reproduced = scaling["baseline"] < tolerance and worst > tolerance and scaling["linear"]
    detail = (
        f"p41 baseline {scaling['baseline']:.3e}; "
        f"max {worst:.3e} at eps = {max(scaling['epsilons']):g} "
        f"({'linear' if scaling['linear'] else 'not linear'} in eps)"
    )
    p41 = matching["operators"].get("p41")
    if p41 is not None:
        detail += f"; design p41 max {p41['max_norm']:.3e}"
    return ChecklistRow(check="R1", status="pass" if reproduced else "fail", detail=detail)


def _row_r3(iss: Optional[Dict]) -> ChecklistRow:
    if iss is None:
        return ChecklistRow(check="R3", status="not run")
    report = iss["report"]
    witness = report["witness"]
    if not witness["available"]:
        return ChecklistRow(check="R3", status="fail", detail=witness.get("reason") or "")
    found = report["counterexample"]["found"]
    reproduced = found and witness["output_norm"] < 1e-10
    detail = (
        f"|G^T Md^-1 w| = {witness['output_norm']:.2e}; "
        f"counterexample {'found' if found else 'not found'}; "
        f"matched bound min margin {report['matched_bound']['min_margin']:.3e}"
    )
    return ChecklistRow(check="R3", status="pass" if reproduced else "fail", detail=detail)


def _row_r45(matching: Optional[Dict], iss: Optional[Dict]) -> ChecklistRow:
    chain = (matching or {}).get("chain")
    if chain is None:
        return ChecklistRow(check="R4/R5", status="not run")
    gaps = chain["max_step_gaps"]
    identities = all(gaps[step] < IDENTITY_TOL for step in ("1-2", "3-4", "4-5"))
    exact = (
        chain["max_half_momentum_gap_error"] < IDENTITY_TOL
        and chain["max_deviation_error"] < IDENTITY_TOL
    )
    has_witness = iss is not None and iss["report"].get("extended_witness") is not None
    detail = (
        f"line 2->3 gap {gaps['2-3']:.3e} (= |M^-1 p|/2), "
        f"deviation error {chain['max_deviation_error']:.2e}"
        + ("; extended witness recorded" if has_witness else "")
    )
    status = "pass" if identities and exact else "fail"
    return ChecklistRow(check="R4/R5", status=status, detail=detail)


def _row_iwp(matching: Optional[Dict]) -> ChecklistRow:
    verdict = (matching or {}).get("iwp")
    if verdict is None:
        return ChecklistRow(check="IWP", status="not run")
    reproduced = verdict["verdict"] == "FAIL-TO-MATCH"
    detail = f"{verdict['verdict']}: max |G_perp rhs| = {verdict['max_annihilated']:.3e}"
    disagreements = matching.get("iwp_term_disagreements") or {}  # type: ignore[union-attr]
    if disagreements:
        detail += f"; printed terms differ in {', '.join(sorted(disagreements))}"
    return ChecklistRow(check="IWP", status="pass" if reproduced else "fail", detail=detail)


def _row_rip(matching: Optional[Dict]) -> ChecklistRow:
    star = (matching or {}).get("rip_star")
    if star is None:
        return ChecklistRow(check="RIP", status="not run")
    reproduced = (
        star["max_term_sum_gap"] < IDENTITY_TOL
        and star["zero_slice_max"] < 1e-15
        and star["nonzero_fraction"] >= 0.99
    )
    detail = (
        f"(*) nonzero on {star['nonzero_fraction']:.1%} of states; "
        f"term-sum gap {star['max_term_sum_gap']:.2e}; {star['provenance']}"
    )
    return ChecklistRow(check="RIP", status="pass" if reproduced else "fail", detail=detail)


def checklist_rows(store: ResultStore) -> List[ChecklistRow]:
    iwp_matching = store.read_json("check_matching_iwp.json")
    rip_matching = store.read_json("check_matching_rip.json")
    iss = store.read_json("iss_iwp.json") or store.read_json("iss_rip.json")
    matching = iwp_matching or rip_matching
    return [
        _row_r1(matching),
        _row_r3(iss),
        _row_r45(matching, iss),
        _row_iwp(iwp_matching),
        _row_rip(rip_matching),
    ]


def render_report(rows: List[ChecklistRow], simulations: Dict[str, Dict]) -> str:
    lines = ["# ida-verify report", "", "| Check | Status | Detail |", "|---|---|---|"]
    lines += [f"| {row.check} | {row.status} | {row.detail} |" for row in rows]
    if simulations:
        lines += ["", "## Simulations", ""]
        for kind, summary in sorted(simulations.items()):
            lines.append(
                f"- {kind}: mode {summary['mode']}, diverged {summary['diverged']}, "
                f"converged {summary['convergence']['converged']} "
                f"({summary['convergence']['label']})"
            )
    return "\n".join(lines) + "\n"


def cmd_report(config: RunConfig, store: ResultStore, settings: Settings) -> int:
    if not store.out_dir.is_dir():
        raise ConfigError(f"Output directory {store.out_dir} does not exist")
    rows = checklist_rows(store)
    simulations = {
        kind: summary
        for kind in ("iwp", "rip")
        if (summary := store.read_json(f"simulate_{kind}.json")) is not None
    }
    if all(row.status == "not run" for row in rows) and not simulations:
        raise ConfigError(f"No run outputs found in {store.out_dir}")
    store.write_markdown("report.md", render_report(rows, simulations))
    store.write_json("report.json", {"checklist": rows})
    logger.info("Checklist: " + ", ".join(f"{row.check}={row.status}" for row in rows))
    verdicts = [row.status for row in rows if row.status != "not run"]
    return _exit_code(config, verdicts)


HANDLERS = {
    "check-matching": cmd_check_matching,
    "analyze-iss": cmd_analyze_iss,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else 2

    settings = get_settings()
    configure_logging(settings.LOG_LEVEL)
    try:
        config = build_config(args, settings)
        store = ResultStore(config.out)  # type: ignore[arg-type]
        logger.info(f"Running {args.command} on '{config.model}' (seed {config.seed})")
        return HANDLERS[args.command](config, store, settings)
    except IdaVerifyError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 2
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
