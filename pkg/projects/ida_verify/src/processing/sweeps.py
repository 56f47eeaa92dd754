"""Sampled sweeps over random states, each returning a summary and per-sample rows."""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from loguru import logger
from tqdm import tqdm

from projects.ida_verify.src.analysis.diffops import (
    DEFAULT_SCHEME,
    FiniteDifferenceScheme,
    solve_linear,
)
from projects.ida_verify.src.analysis.idapbc import classify_residual, matching_residual_basic
from projects.ida_verify.src.analysis.rebuttal import (
    claimed_first_row,
    dissipation_bound_terms,
    integral_matching_conditions,
    lambda_min,
    predicted_chain_deviation,
    residual_p41,
    residual_p51,
    xq_dot_chain,
)
from projects.ida_verify.src.core.errors import ContractError
from projects.ida_verify.src.core.types import ExtendedState, sample_extended_state
from projects.ida_verify.src.models.registry import LoadedModel
from projects.ida_verify.src.models.rip import PROVENANCE, rip_star, rip_terms
from projects.ida_verify.src.schemas.config import MatchingConfig
from projects.ida_verify.src.schemas.reports import (
    ChainSummary,
    MatchedBoundReport,
    RipStarSummary,
    SweepSummary,
)

Rows = List[Dict[str, Any]]
CHAIN_STEPS = ("1-2", "2-3", "3-4", "4-5")
HARD_VIOLATION_TOL = 1e-12


@dataclass
class SweepResult:
    summary: Any
    rows: Rows = field(default_factory=list)


def _state_columns(s: ExtendedState) -> Dict[str, float]:
    columns = {}
    for prefix, values in (("q", s.q), ("p", s.p), ("x_v", s.x_v)):
        for i, value in enumerate(values, start=1):
            columns[f"{prefix}{i}"] = float(value)
    return columns


def _operator_norm(
    loaded: LoadedModel, operator: str, s: ExtendedState, scheme: FiniteDifferenceScheme
) -> Tuple[float, Dict]:
    model, target, gains = loaded.model, loaded.target, loaded.gains
    if operator == "basic":
        residual = matching_residual_basic(model, target, s.q, s.p, scheme)
        return float(np.linalg.norm(residual)), {}
    if operator == "p41":
        report = residual_p41(model, target, gains, s, scheme)
    elif operator == "p51":
        report = residual_p51(model, target, gains, loaded.energy, s, scheme)
    else:
        raise ContractError(f"Unknown residual operator '{operator}'")
    return report.norm, report.term_norms()


def residual_sweep(
    loaded: LoadedModel,
    operator: str,
    config: MatchingConfig,
    seed: int = 0,
    feasibility_tol: float = 1e-6,
    warning_tol: float = 1e-3,
    show_progress: bool = False,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> SweepResult:
    """Annihilated residual norms of one operator on random extended states.

    Every operator draws from a generator seeded identically, so the operators
    are compared on the same states.
    """
    rng = np.random.default_rng(seed)
    x_v_range = None if config.restrict_x_v_zero else config.x_v_range
    box = loaded.model.domain_box
    logger.info(
        f"Running {operator} residual sweep over {config.samples} samples"
        + (" on the x_v = 0 slice" if config.restrict_x_v_zero else f", |x_v| in {x_v_range}")
    )
    rows: Rows = []
    norms = []
    for index in tqdm(range(config.samples), desc=f"{operator} sweep", disable=not show_progress):
        s = sample_extended_state(box, rng, x_v_range)
        norm, term_norms = _operator_norm(loaded, operator, s, scheme)
        norms.append(norm)
        row = {"sample": index, **_state_columns(s), "norm": norm}
        row.update({f"term_{name}": value for name, value in term_norms.items()})
        rows.append(row)

    worst = max(norms)
    band = classify_residual(worst, feasibility_tol, warning_tol)
    if band == "warning":
        logger.warning(f"{operator} residual {worst:.3e} lies in the warning band")
    notes = []
    if not loaded.model.underactuated:
        notes.append("fully actuated: the left annihilator is empty and the residual is zero")
    summary = SweepSummary(
        operator=operator,
        samples=config.samples,
        max_norm=worst,
        mean_norm=float(np.mean(norms)),
        tolerance=config.tolerance,
        verdict="pass" if worst < config.tolerance else "fail",
        band=band,
        restricted_x_v_zero=config.restrict_x_v_zero,
        notes=notes,
    )
    logger.info(f"{operator}: max |residual| = {worst:.3e} -> {summary.verdict}")
    return SweepResult(summary=summary, rows=rows)


def chain_sweep(
    loaded: LoadedModel,
    samples: int = 1000,
    seed: int = 0,
    x_v_range: Tuple[float, float] = (0.1, 1.0),
    show_progress: bool = False,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> SweepResult:
    """Gaps between consecutive lines of the x_q' chain and the deviation from the claimed row."""
    rng = np.random.default_rng(seed)
    model, target, gains, energy = loaded.model, loaded.target, loaded.gains, loaded.energy
    worst_gaps = {step: 0.0 for step in CHAIN_STEPS}
    worst_half = 0.0
    worst_deviation = 0.0
    rows: Rows = []
    for index in tqdm(range(samples), desc="x_q chain", disable=not show_progress):
        s = sample_extended_state(model.domain_box, rng, x_v_range)
        lines = xq_dot_chain(model, target, gains, energy, s, scheme=scheme)
        gaps = {
            step: float(np.linalg.norm(lines[i + 1] - lines[i]))
            for i, step in enumerate(CHAIN_STEPS)
        }
        half_momentum = 0.5 * solve_linear(model.M(s.q), s.p, "mass matrix")
        half_error = float(np.linalg.norm(lines[2] - lines[1] - half_momentum))
        deviation = lines[4] - claimed_first_row(model, target, gains, energy, s, scheme)
        predicted = predicted_chain_deviation(model, target, gains, energy, s, scheme=scheme)
        deviation_error = float(np.linalg.norm(deviation - predicted))
        for step, gap in gaps.items():
            worst_gaps[step] = max(worst_gaps[step], gap)
        worst_half = max(worst_half, half_error)
        worst_deviation = max(worst_deviation, deviation_error)
        rows.append(
            {
                "sample": index,
                **_state_columns(s),
                **{f"gap_{step}": gap for step, gap in gaps.items()},
                "half_momentum_error": half_error,
                "deviation_error": deviation_error,
            }
        )
    summary = ChainSummary(
        samples=samples,
        max_step_gaps=worst_gaps,
        max_half_momentum_gap_error=worst_half,
        max_deviation_error=worst_deviation,
    )
    logger.info(f"x_q chain: step gaps {worst_gaps}, deviation error {worst_deviation:.3e}")
    return SweepResult(summary=summary, rows=rows)


def rip_star_sweep(
    loaded: LoadedModel,
    samples: int = 1000,
    seed: int = 0,
    x_v_range: Tuple[float, float] = (0.1, 1.0),
    nonzero_tol: float = 1e-8,
    show_progress: bool = False,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> SweepResult:
    """Compare the closed form of (*) with its printed terms, on and off the x_v2 = 0 slice."""
    if loaded.rip is None:
        raise ContractError(f"Model '{loaded.label}' carries no rotary pendulum fields")
    fields = loaded.rip
    rng = np.random.default_rng(seed)
    box = fields.domain_box
    worst_gap = 0.0
    zero_slice = 0.0
    nonzero = 0
    min_abs = np.inf
    rows: Rows = []
    for index in tqdm(range(samples), desc="RIP (*)", disable=not show_progress):
        q, p = box.sample_q(rng), box.sample_p(rng)
        x_v2 = rng.choice([-1.0, 1.0]) * rng.uniform(*x_v_range)
        s = ExtendedState(q, p, np.array([rng.uniform(-1.0, 1.0), x_v2]))
        star = rip_star(fields, s, scheme=scheme)
        from_terms = rip_terms(fields, s, scheme=scheme).star_from_terms()
        slice_state = ExtendedState(q, p, np.array([s.x_v[0], 0.0]))
        on_slice = rip_star(fields, slice_state, scheme=scheme)
        worst_gap = max(worst_gap, abs(star - from_terms))
        zero_slice = max(zero_slice, abs(on_slice))
        nonzero += abs(star) > nonzero_tol
        min_abs = min(min_abs, abs(star))
        rows.append(
            {
                "sample": index,
                **_state_columns(s),
                "star": star,
                "star_from_terms": from_terms,
                "star_b3": rip_star(fields, s, variant="b3", scheme=scheme),
                "star_zero_slice": on_slice,
            }
        )
    summary = RipStarSummary(
        samples=samples,
        max_term_sum_gap=worst_gap,
        zero_slice_max=zero_slice,
        nonzero_fraction=nonzero / samples,
        min_abs_star=float(min_abs),
        provenance=PROVENANCE,
    )
    logger.info(
        f"RIP (*): nonzero on {summary.nonzero_fraction:.1%} of states, "
        f"term-sum gap {worst_gap:.3e}"
    )
    return SweepResult(summary=summary, rows=rows)


def matched_bound_sweep(
    loaded: LoadedModel,
    samples: int = 10_000,
    seed: int = 0,
    amplitude: float = 1.0,
    show_progress: bool = False,
) -> SweepResult:
    """Pointwise check of the corrected iISS bound for matched disturbances d2 = G d2hat."""
    model, target, gains = loaded.model, loaded.target, loaded.gains
    lam = lambda_min(gains.Kv)
    rng = np.random.default_rng(seed)
    min_margin = np.inf
    violations = 0
    rows: Rows = []
    for index in tqdm(range(samples), desc="Matched bound", disable=not show_progress):
        q = model.domain_box.sample_q(rng)
        x_p = model.domain_box.sample_p(rng)
        d2hat = amplitude * rng.uniform(-1.0, 1.0, model.m)
        G = model.G(q)
        bound = dissipation_bound_terms(model, target, gains, x_p, G @ d2hat, q)
        y = G.T @ solve_linear(target.Md(q), x_p, "desired mass")
        margin = float(-0.5 * lam * (y @ y) + (d2hat @ d2hat) / (2.0 * lam) - bound.lhs_upper)
        min_margin = min(min_margin, margin)
        violations += margin < -HARD_VIOLATION_TOL
        rows.append({"sample": index, "lhs_upper": bound.lhs_upper, "margin": margin})
    report = MatchedBoundReport(
        samples=samples, min_margin=float(min_margin), hard_violations=violations
    )
    logger.info(f"Matched bound: min margin {min_margin:.3e}, {violations} hard violations")
    return SweepResult(summary=report, rows=rows)


@dataclass(frozen=True)
class CouplingScaling:
    epsilons: Sequence[float]
    max_residuals: Sequence[float]
    baseline: float

    @property
    def slopes(self) -> List[float]:
        return [r / e for r, e in zip(self.max_residuals, self.epsilons)]

    def linear(self, rel_tol: float = 0.2) -> bool:
        slopes = self.slopes
        reference = slopes[-1]
        return reference > 0 and all(abs(s - reference) <= rel_tol * reference for s in slopes)


def skew_perturbation(n: int) -> np.ndarray:
    """Unit skew-symmetric matrix coupling the first and the last coordinate."""
    S = np.zeros((n, n))
    S[0, -1], S[-1, 0] = 1.0, -1.0
    return S


def coupling_scaling(
    loaded: LoadedModel,
    epsilons: Sequence[float] = (1e-3, 1e-2, 1e-1),
    samples: int = 1000,
    seed: int = 0,
    x_v_range: Tuple[float, float] = (0.1, 1.0),
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> CouplingScaling:
    """Max p41 residual when J2 = eps S violates the annihilated-coupling condition."""
    model, gains = loaded.model, loaded.gains
    conditions = integral_matching_conditions(
        model, loaded.target, samples=min(samples, 200), seed=seed, scheme=scheme
    )
    if not conditions.md_constant:
        logger.warning("Md is not constant; residual scaling mixes in the Md-gradient terms")

    def worst_residual(target) -> float:
        rng = np.random.default_rng(seed)
        states = [sample_extended_state(model.domain_box, rng, x_v_range) for _ in range(samples)]
        return max(residual_p41(model, target, gains, s, scheme).norm for s in states)

    S = skew_perturbation(model.n)
    maxima = []
    for eps in epsilons:
        perturbed = replace(loaded.target, j2=lambda q, p, eps=eps: eps * S)
        maxima.append(worst_residual(perturbed))
    baseline = worst_residual(replace(loaded.target, j2=lambda q, p: np.zeros((model.n, model.n))))
    logger.info(f"Skew coupling scaling: baseline {baseline:.3e}, maxima {maxima}")
    return CouplingScaling(epsilons=tuple(epsilons), max_residuals=maxima, baseline=baseline)
