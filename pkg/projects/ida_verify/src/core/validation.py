"""Sample-based structural validation of plants, target designs and gains."""

from typing import Callable, List, Optional

import numpy as np
from loguru import logger

from projects.ida_verify.src.analysis.diffops import (
    DEFAULT_SCHEME,
    FiniteDifferenceScheme,
    grad,
    hessian,
)
from projects.ida_verify.src.core.errors import ContractError
from projects.ida_verify.src.core.types import (
    SYMMETRY_TOL,
    ControllerGains,
    DomainBox,
    MechanicalModel,
    TargetDesign,
)
from projects.ida_verify.src.schemas.reports import InvariantCheck, ValidationReport

RANK_TOL = 1e-10
EQUILIBRIUM_GRADIENT_TOL = 1e-8
HESSIAN_EIGEN_TOL = -1e-8


class _Tracker:
    """Keeps the worst value of one invariant over the samples."""

    def __init__(self, name: str, threshold: float, larger_is_worse: bool):
        self.name = name
        self.threshold = threshold
        self.larger_is_worse = larger_is_worse
        self.worst_value: Optional[float] = None
        self.worst_point: Optional[np.ndarray] = None

    def update(self, value: float, point: np.ndarray) -> None:
        if (
            self.worst_value is None
            or (self.larger_is_worse and value > self.worst_value)
            or (not self.larger_is_worse and value < self.worst_value)
        ):
            self.worst_value = float(value)
            self.worst_point = np.array(point, dtype=float)

    def result(self) -> InvariantCheck:
        value = float(self.worst_value)
        passed = value < self.threshold if self.larger_is_worse else value > self.threshold
        return InvariantCheck(
            name=self.name,
            passed=passed,
            worst_value=value,
            threshold=self.threshold,
            worst_point=None if self.worst_point is None else self.worst_point.tolist(),
        )


def _check_samples(samples: int) -> None:
    if samples < 1:
        raise ContractError(f"samples must be >= 1, got {samples}")


def validate_model(
    model: MechanicalModel, samples: int = 200, seed: int = 0
) -> ValidationReport:
    """Check symmetry and positivity of M(q) and full column rank of G(q) on the domain box."""
    _check_samples(samples)
    rng = np.random.default_rng(seed)
    symmetric = _Tracker("mass_symmetric", SYMMETRY_TOL, larger_is_worse=True)
    positive = _Tracker("mass_positive_definite", 0.0, larger_is_worse=False)
    rank = _Tracker("input_map_full_rank", RANK_TOL, larger_is_worse=False)

    for _ in range(samples):
        q = model.domain_box.sample_q(rng)
        M = model.M(q)
        symmetric.update(np.max(np.abs(M - M.T)), q)
        positive.update(np.linalg.eigvalsh(0.5 * (M + M.T))[0], q)
        rank.update(np.linalg.svd(model.G(q), compute_uv=False)[-1], q)

    report = ValidationReport(
        subject=model.name,
        seed=seed,
        samples=samples,
        checks=[symmetric.result(), positive.result(), rank.result()],
    )
    if not report.passed:
        logger.warning(f"Model '{model.name}' failed: {', '.join(report.failed_checks())}")
    return report


def validate_target(
    target: TargetDesign,
    samples: int = 200,
    seed: int = 0,
    domain_box: Optional[DomainBox] = None,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
    hessian_step: float = 1e-4,
) -> ValidationReport:
    """Check Md SPD, J2 skew and that q* is a minimum of Vd."""
    _check_samples(samples)
    box = domain_box or DomainBox.around(target.q_star)
    rng = np.random.default_rng(seed)
    symmetric = _Tracker("desired_mass_symmetric", SYMMETRY_TOL, larger_is_worse=True)
    positive = _Tracker("desired_mass_positive_definite", 0.0, larger_is_worse=False)
    skew = _Tracker("j2_skew", SYMMETRY_TOL, larger_is_worse=True)

    for _ in range(samples):
        q = box.sample_q(rng)
        p = box.sample_p(rng)
        Md = target.Md(q)
        symmetric.update(np.max(np.abs(Md - Md.T)), q)
        positive.update(np.linalg.eigvalsh(0.5 * (Md + Md.T))[0], q)
        J2 = target.J2(q, p)
        skew.update(np.max(np.abs(J2 + J2.T)), np.concatenate([q, p]))

    q_star = target.q_star
    gradient = desired_potential_gradient(target, scheme)(q_star)
    stationary = _Tracker(
        "equilibrium_gradient", EQUILIBRIUM_GRADIENT_TOL, larger_is_worse=True
    )
    stationary.update(np.linalg.norm(gradient), q_star)
    curvature = _Tracker("equilibrium_hessian_psd", HESSIAN_EIGEN_TOL, larger_is_worse=False)
    curvature.update(np.linalg.eigvalsh(hessian(target.Vd, q_star, hessian_step))[0], q_star)

    report = ValidationReport(
        subject=target.name,
        seed=seed,
        samples=samples,
        checks=[
            symmetric.result(),
            positive.result(),
            skew.result(),
            stationary.result(),
            curvature.result(),
        ],
    )
    if not report.passed:
        logger.warning(f"Target '{target.name}' failed: {', '.join(report.failed_checks())}")
    return report


def validate_gains(gains: ControllerGains) -> ValidationReport:
    checks: List[InvariantCheck] = []
    floor = 0.0
    for label in ("Kp", "Kv", "Ki"):
        mat = getattr(gains, label)
        smallest = float(np.linalg.eigvalsh(mat)[0])
        passed = smallest >= floor if gains.allow_semidefinite else smallest > floor
        checks.append(
            InvariantCheck(
                name=f"{label}_positive_definite",
                passed=passed,
                worst_value=smallest,
                threshold=floor,
            )
        )
    return ValidationReport(subject="gains", seed=0, samples=1, checks=checks)


def desired_potential_gradient(
    target: TargetDesign, scheme: FiniteDifferenceScheme = DEFAULT_SCHEME
) -> Callable[[np.ndarray], np.ndarray]:
    """Analytic gradient of Vd when supplied, finite differences otherwise."""
    if target.desired_potential_gradient is not None:
        return lambda q: np.asarray(target.desired_potential_gradient(q), dtype=float)
    return lambda q: grad(target.Vd, q, scheme)


def potential_gradient(
    model: MechanicalModel, scheme: FiniteDifferenceScheme = DEFAULT_SCHEME
) -> Callable[[np.ndarray], np.ndarray]:
    if model.potential_gradient is not None:
        return lambda q: np.asarray(model.potential_gradient(q), dtype=float)
    return lambda q: grad(model.V, q, scheme)
