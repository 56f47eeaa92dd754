"""Inertia wheel pendulum: plant, integral design, printed matching terms and the direct oracle."""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger
from tqdm import tqdm

from projects.ida_verify.src.analysis.diffops import (
    DEFAULT_SCHEME,
    FiniteDifferenceScheme,
    left_annihilator,
    solve_linear,
)
from projects.ida_verify.src.analysis.rebuttal import (
    AugmentedEnergy,
    kappa,
    rd,
    residual_p41,
)
from projects.ida_verify.src.core.errors import ContractError
from projects.ida_verify.src.core.types import (
    ControllerGains,
    ExtendedState,
    MechanicalModel,
    TargetDesign,
    sample_extended_state,
)
from projects.ida_verify.src.schemas.config import IwpParams
from projects.ida_verify.src.schemas.reports import IwpVerdict

SKEW = np.array([[0.0, 1.0], [-1.0, 0.0]])
UPRIGHT = (0.0, 0.0)
TERM_NAMES = ("term1", "term2", "term3", "term4", "term5")


def interpretation_notes(term1_mapping: str, term5_denominator: str) -> List[str]:
    return [
        f"scalar sin-summand of term1/term3 added to: {term1_mapping}",
        f"term5 denominator: {term5_denominator}",
    ]


def _design_slope(params: IwpParams, x: np.ndarray) -> float:
    """eps k1 gamma1 x1 + x2."""
    return params.epsilon * params.k1 * params.gamma1 * x[0] + x[1]


def _vd(params: IwpParams, x: np.ndarray) -> float:
    return float(
        -params.k3 * params.gamma1 * np.cos(x[0])
        + 0.5 * params.Kp_scalar * _design_slope(params, x) ** 2
    )


def _vd_gradient(params: IwpParams, x: np.ndarray) -> np.ndarray:
    s = params.Kp_scalar * _design_slope(params, x)
    return np.array(
        [
            params.k3 * params.gamma1 * np.sin(x[0])
            + params.epsilon * params.k1 * params.gamma1 * s,
            s,
        ]
    )


def iwp_model(
    params: IwpParams, fully_actuated: bool = False, q_star=UPRIGHT
) -> MechanicalModel:
    mass = np.array([[params.k1, params.k2], [params.k2, params.k2]])
    input_map = np.eye(2) if fully_actuated else np.array([[0.0], [1.0]])
    return MechanicalModel(
        n=2,
        m=input_map.shape[1],
        mass=lambda q: mass,
        potential=lambda q: params.k3 * (1.0 + np.cos(q[0])),
        input_map=lambda q: input_map,
        potential_gradient=lambda q: np.array([-params.k3 * np.sin(q[0]), 0.0]),
        mass_gradient=lambda q: [np.zeros((2, 2)), np.zeros((2, 2))],
        constant_mass=True,
        constant_input_map=True,
        name="iwp-fully-actuated" if fully_actuated else "iwp",
        q_star=q_star,
    )


def build_iwp(
    params: Optional[IwpParams] = None, fully_actuated: bool = False
) -> Tuple[MechanicalModel, TargetDesign, ControllerGains]:
    """Plant, target and gains of the inertia wheel pendulum design."""
    params = params or IwpParams()
    model = iwp_model(params, fully_actuated, UPRIGHT)
    desired_mass = params.delta * np.array([[params.m1, params.m2], [params.m2, params.m3]])
    j2 = params.j2 * SKEW
    target = TargetDesign(
        desired_mass=lambda q: desired_mass,
        desired_potential=lambda q: _vd(params, q),
        j2=lambda q, p: j2,
        q_star=UPRIGHT,
        desired_potential_gradient=lambda q: _vd_gradient(params, q),
        constant_mass=True,
        name="iwp-target",
    )
    semidefinite = params.Ki_scalar == 0 or params.Kv_scalar == 0
    gains = ControllerGains.from_scalars(
        model.m,
        params.Kp_scalar,
        params.Kv_scalar,
        params.Ki_scalar,
        allow_semidefinite=semidefinite,
    )
    return model, target, gains


def iwp_energy(params: IwpParams, target: TargetDesign) -> AugmentedEnergy:
    """H~ with V~ equal to Vd in the shifted coordinate x_q."""
    return AugmentedEnergy(
        target=target,
        shifted_potential=lambda x: _vd(params, x),
        shifted_potential_gradient=lambda x: _vd_gradient(params, x),
    )


@dataclass(frozen=True)
class IwpTerms:
    """Printed right-hand-side terms next to their directly assembled counterparts."""

    printed: Dict[str, np.ndarray]
    direct: Dict[str, np.ndarray]
    S: float
    L: np.ndarray
    term1_mapping: str
    term5_denominator: str

    @property
    def printed_sum(self) -> np.ndarray:
        return sum(self.printed.values())

    @property
    def direct_sum(self) -> np.ndarray:
        return sum(self.direct.values())

    def disagreements(self, tolerance: float = 1e-6) -> Dict[str, float]:
        """Max abs difference per term, listing only terms that disagree beyond tolerance."""
        gaps = {
            name: float(np.max(np.abs(self.printed[name] - self.direct[name])))
            for name in TERM_NAMES
        }
        return {name: gap for name, gap in gaps.items() if gap > tolerance}

    def interpretation_notes(self) -> List[str]:
        return interpretation_notes(self.term1_mapping, self.term5_denominator)


def _direct_terms(
    params: IwpParams,
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    s: ExtendedState,
) -> Dict[str, np.ndarray]:
    q, p, x_v = s.q, s.p, s.x_v
    M = model.M(q)
    Md = target.Md(q)
    K = kappa(model, gains, q)
    grad_shifted = _vd_gradient(params, s.x_q)

    def m_inv(v: np.ndarray) -> np.ndarray:
        return solve_linear(M, v, "mass matrix")

    return {
        "term1": Md @ m_inv(_vd_gradient(params, q)),
        "term2": -2.0 * m_inv(K @ grad_shifted),
        "term3": -2.0 * Md @ m_inv(grad_shifted),
        "term4": -m_inv(p),
        "term5": -2.0 * rd(model, gains, q) @ solve_linear(Md, K @ x_v) - 2.0 * Md @ m_inv(x_v),
    }


def direct_terms(
    params: IwpParams, fully_actuated: bool = False
) -> Callable[[ExtendedState], Dict[str, np.ndarray]]:
    """Five-term assembly from the model objects; the design is built once per call."""
    model, target, gains = build_iwp(params, fully_actuated)
    return lambda s: _direct_terms(params, model, target, gains, s)


def iwp_rhs_direct(
    params: IwpParams, fully_actuated: bool = False
) -> Callable[[ExtendedState], np.ndarray]:
    """Right-hand side the input must reproduce, as a function of the extended state."""
    terms = direct_terms(params, fully_actuated)
    return lambda s: sum(terms(s).values())


def iwp_terms(
    params: IwpParams,
    s: ExtendedState,
    direct: Optional[Callable[[ExtendedState], Dict[str, np.ndarray]]] = None,
) -> IwpTerms:
    """Evaluate the five printed terms literally, with the direct assembly alongside.

    Pass ``direct`` from :func:`direct_terms` when evaluating many states.
    """
    k1, k2, k3 = params.k1, params.k2, params.k3
    m1, m2, m3 = params.m1, params.m2, params.m3
    gamma1, eps = params.gamma1, params.epsilon
    Kp, Ki, Kv = params.Kp_scalar, params.Ki_scalar, params.Kv_scalar
    q, p, x_v = s.q, s.p, s.x_v
    x_q = s.x_q

    S = 1.0 + gamma1 * k1 * k2 * (m1 - m2)
    L = np.array(
        [
            k2 * (m1 - m2) * x_v[0] + k1 * (m2 - m1) * x_v[1],
            k2 * (m1 - m3) * x_v[0] + k1 * (m3 - m1) * x_v[1],
        ]
    )
    sin_weight = gamma1 * k2 * k3 * (m1 - m2)
    sin_direction = (
        np.array([1.0, 0.0]) if params.term1_mapping == "first_component" else np.ones(2)
    )
    if params.term5_denominator == "printed":
        denominator = (m1 * m3 - m2) ** 2
    else:
        denominator = m1 * m3 - m2**2
    if denominator == 0:
        raise ContractError("term5 denominator vanishes for these parameters")

    printed = {
        "term1": np.ones(2) * Kp * eps * S * (eps * gamma1 * k1 * q[0] + q[1])
        + sin_weight * np.sin(q[0]) * sin_direction,
        "term2": np.array([2.0 * k2, -2.0 * k1])
        * Ki
        * Kp
        / ((k1 - k2) * k2)
        * (eps * gamma1 * k1 * x_q[0] + x_q[1]),
        "term3": -np.array([2.0, 2.0]) * Kp * eps * S * (eps * gamma1 * k1 * x_q[0] + x_q[1])
        + sin_weight * np.sin(x_q[0]) * sin_direction,
        "term4": np.array([-k2 * (p[0] - p[1]), k2 * p[0] + k1 * p[1]]) / (k2 * (k1 - k2)),
        "term5": -2.0 * L
        - np.array([0.0, 1.0]) * 2.0 * Ki * m1 * Kv * x_v[1] / (k1 * (k1 - k2) * denominator),
    }
    direct = direct or direct_terms(params)
    return IwpTerms(
        printed=printed,
        direct=direct(s),
        S=S,
        L=L,
        term1_mapping=params.term1_mapping,
        term5_denominator=params.term5_denominator,
    )


def iwp_matching_verdict(
    params: Optional[IwpParams] = None,
    sample_count: int = 1000,
    seed: int = 0,
    threshold: float = 1e-4,
    x_v_range: Tuple[float, float] = (0.1, 1.0),
    fully_actuated: bool = False,
    show_progress: bool = False,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> IwpVerdict:
    """Sweep the annihilated direct right-hand side with x_v != 0, plus an x_v = 0 control group."""
    params = params or IwpParams()
    model, target, gains = build_iwp(params, fully_actuated)
    annihilator = left_annihilator(model.G(np.zeros(2)))
    rng = np.random.default_rng(seed)

    def annihilated_norm(s: ExtendedState) -> float:
        if annihilator.shape[0] == 0:
            return 0.0
        rhs = sum(_direct_terms(params, model, target, gains, s).values())
        return float(np.linalg.norm(annihilator @ rhs))

    logger.info(f"IWP matching sweep over {sample_count} states, |x_v| in {x_v_range}")
    norms = [
        annihilated_norm(sample_extended_state(model.domain_box, rng, x_v_range))
        for _ in tqdm(range(sample_count), desc="IWP sweep", disable=not show_progress)
    ]
    control_rhs = []
    control_p41 = []
    for _ in range(sample_count):
        s = sample_extended_state(model.domain_box, rng)
        control_rhs.append(annihilated_norm(s))
        control_p41.append(residual_p41(model, target, gains, s, scheme).norm)

    worst = max(norms)
    verdict = "FAIL-TO-MATCH" if worst > threshold else "MATCHABLE"
    logger.info(f"IWP verdict {verdict}: max |G_perp rhs| = {worst:.3e}")
    return IwpVerdict(
        verdict=verdict,
        samples=sample_count,
        max_annihilated=worst,
        mean_annihilated=float(np.mean(norms)),
        threshold=threshold,
        control_rhs_max=max(control_rhs),
        control_p41_max=max(control_p41),
        published_values=params.published_values,
        notes=["parameters are not published values"]
        + interpretation_notes(params.term1_mapping, params.term5_denominator),
    )


def matched_iwp_params(
    k1: float,
    k2: float,
    k3: float,
    m1: float,
    m2: float,
    m3: float,
    delta: float = 1.0,
    Kp_scalar: float = 1.0,
    Ki_scalar: float = 1.0,
    Kv_scalar: float = 1.0,
) -> IwpParams:
    """Solve for gamma1 and epsilon so that the basic matching equation holds identically.

    The sin(q1) and the linear parts of the annihilated residual vanish when
    delta*gamma1*(m1 - m2) = -(k1 - k2) and eps*k1*k2*gamma1*(m1 - m2) + m2*k1 - m1*k2 = 0.
    """
    if m1 == m2:
        raise ContractError("m1 == m2 leaves gamma1 undetermined")
    gamma1 = -(k1 - k2) / (delta * (m1 - m2))
    epsilon = -(m2 * k1 - m1 * k2) / (k1 * k2 * gamma1 * (m1 - m2))
    return IwpParams(
        k1=k1,
        k2=k2,
        k3=k3,
        m1=m1,
        m2=m2,
        m3=m3,
        delta=delta,
        gamma1=gamma1,
        epsilon=epsilon,
        Kp_scalar=Kp_scalar,
        Ki_scalar=Ki_scalar,
        Kv_scalar=Kv_scalar,
    )
