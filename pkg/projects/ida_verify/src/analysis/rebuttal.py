"""Residual operators and bound monitors for IDA-PBC designs with integral action.

The operators evaluate the disputed matching conditions for integral IDA-PBC
controllers term by term, so a report shows which contributions survive the
left annihilator. The bound monitors compare the exact dissipation inequality
with the Young's-inequality bound claimed for unmatched disturbances and with
the corrected bound that holds for matched ones.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Literal, Optional, Tuple

import numpy as np
from loguru import logger

from projects.ida_verify.src.analysis.diffops import (
    DEFAULT_SCHEME,
    FiniteDifferenceScheme,
    grad,
    jacobian_of_matrix_field,
    left_annihilator,
    pseudo_inverse_tall,
    quadratic_form_gradient,
    solve_linear,
)
from projects.ida_verify.src.analysis.idapbc import desired_energy_gradient_q
from projects.ida_verify.src.core.errors import ContractError, NoKernelError
from projects.ida_verify.src.core.types import (
    ControllerGains,
    ExtendedState,
    MechanicalModel,
    ScalarField,
    TargetDesign,
    VectorField,
    as_vector,
)
from projects.ida_verify.src.core.validation import desired_potential_gradient
from projects.ida_verify.src.schemas.reports import CounterexampleReport, WitnessReport

MdArgument = Literal["at_q", "at_x_q"]

EIGEN_TOL = 1e-12
IMAGE_TOL = 1e-10
CONDITION_TOL = 1e-8


def kappa(model: MechanicalModel, gains: ControllerGains, q) -> np.ndarray:
    """Integral coupling G Ki G^T."""
    G = model.G(as_vector(q, model.n, "q"))
    return G @ gains.Ki @ G.T


def rd(model: MechanicalModel, gains: ControllerGains, q) -> np.ndarray:
    """Damping G Kv G^T."""
    G = model.G(as_vector(q, model.n, "q"))
    return G @ gains.Kv @ G.T


def lambda_min(matrix: np.ndarray) -> float:
    smallest = float(np.linalg.eigvalsh(matrix)[0])
    if smallest <= EIGEN_TOL:
        raise ContractError(
            f"Bound requires a positive definite gain, smallest eigenvalue {smallest:.3e}"
        )
    return smallest


@dataclass(frozen=True, eq=False)
class AugmentedEnergy:
    """H~(x_q, x_p, x_v) = 1/2 x_p^T Md^{-1}(.) x_p + V~(x_q) + 1/2 x_v^T W x_v.

    ``md_argument`` selects whether Md^{-1} is evaluated at q = x_q + x_v or at x_q.
    """

    target: TargetDesign
    shifted_potential: ScalarField
    shifted_potential_gradient: Optional[VectorField] = None
    weight: Optional[np.ndarray] = None
    md_argument: MdArgument = "at_q"

    def __post_init__(self):
        n = self.target.n
        W = np.eye(n) if self.weight is None else np.asarray(self.weight, dtype=float)
        if W.shape != (n, n):
            raise ContractError(f"Weight must have shape {(n, n)}, got {W.shape}")
        if np.max(np.abs(W - W.T)) >= 1e-12 or np.linalg.eigvalsh(W)[0] <= 0:
            raise ContractError("Weight W must be symmetric positive definite")
        if self.md_argument not in ("at_q", "at_x_q"):
            raise ContractError(f"Unknown md_argument '{self.md_argument}'")
        object.__setattr__(self, "weight", W)

    @classmethod
    def from_target(
        cls,
        target: TargetDesign,
        weight: Optional[np.ndarray] = None,
        md_argument: MdArgument = "at_q",
    ) -> "AugmentedEnergy":
        """Use Vd itself, in the shifted coordinate x_q, as V~."""
        return cls(
            target=target,
            shifted_potential=target.Vd,
            shifted_potential_gradient=target.desired_potential_gradient,
            weight=weight,
            md_argument=md_argument,
        )

    def md_point(self, x_q: np.ndarray, x_v: np.ndarray) -> np.ndarray:
        return x_q + x_v if self.md_argument == "at_q" else x_q

    def value(self, x_q, x_p, x_v) -> float:
        x_q, x_p, x_v = (np.asarray(v, dtype=float) for v in (x_q, x_p, x_v))
        Md = self.target.Md(self.md_point(x_q, x_v))
        return float(
            0.5 * x_p @ solve_linear(Md, x_p, "desired mass")
            + self.shifted_potential(x_q)
            + 0.5 * x_v @ self.weight @ x_v
        )

    def potential_gradient(
        self, x_q: np.ndarray, scheme: FiniteDifferenceScheme = DEFAULT_SCHEME
    ) -> np.ndarray:
        if self.shifted_potential_gradient is not None:
            return np.asarray(self.shifted_potential_gradient(x_q), dtype=float)
        return grad(self.shifted_potential, x_q, scheme)

    def gradients(
        self, x_q, x_p, x_v, scheme: FiniteDifferenceScheme = DEFAULT_SCHEME
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (grad_{x_q} H~, grad_{x_p} H~, grad_{x_v} H~)."""
        x_q, x_p, x_v = (np.asarray(v, dtype=float) for v in (x_q, x_p, x_v))
        point = self.md_point(x_q, x_v)
        kinetic = quadratic_form_gradient(
            self.target.Md, point, x_p, scheme, constant=self.target.constant_mass
        )
        g_q = self.potential_gradient(x_q, scheme) + kinetic
        g_p = solve_linear(self.target.Md(point), x_p, "desired mass")
        g_v = self.weight @ x_v
        if self.md_argument == "at_q":
            g_v = g_v + kinetic
        return g_q, g_p, g_v


@dataclass(frozen=True, eq=False)
class ResidualReport:
    """Annihilated bracket with the contribution of each printed term."""

    residual: np.ndarray
    components_by_term: Dict[str, np.ndarray]
    state: ExtendedState
    bracket: np.ndarray
    norm: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "norm", float(np.linalg.norm(self.residual)))

    def term_norms(self) -> Dict[str, float]:
        return {
            name: float(np.linalg.norm(value)) for name, value in self.components_by_term.items()
        }


def _annihilate(
    G: np.ndarray, terms: Dict[str, np.ndarray], state: ExtendedState
) -> ResidualReport:
    annihilator = left_annihilator(G)
    bracket = sum(terms.values())
    return ResidualReport(
        residual=annihilator @ bracket,
        components_by_term={name: annihilator @ value for name, value in terms.items()},
        state=state,
        bracket=bracket,
    )


def _momentum_kinetic_gradient(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    s: ExtendedState,
    scheme: FiniteDifferenceScheme,
) -> np.ndarray:
    """grad_q of 1/2 (p + K(q) x_v)^T Md^{-1}(q) (p + K(q) x_v) with p and x_v held fixed."""
    if target.constant_mass and model.constant_input_map:
        return np.zeros(model.n)

    def kinetic(q: np.ndarray) -> float:
        x_p = s.p + kappa(model, gains, q) @ s.x_v
        return 0.5 * x_p @ solve_linear(target.Md(q), x_p, "desired mass")

    return grad(kinetic, s.q, scheme)


def _p41_terms(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    s: ExtendedState,
    scheme: FiniteDifferenceScheme,
) -> Dict[str, np.ndarray]:
    q, p, x_v = s.q, s.p, s.x_v
    M = model.M(q)
    Md = target.Md(q)
    K = kappa(model, gains, q)
    Rd = rd(model, gains, q)
    grad_vd = desired_potential_gradient(target, scheme)(q)
    kinetic_p = quadratic_form_gradient(target.Md, q, p, scheme, constant=target.constant_mass)
    kinetic_xp = _momentum_kinetic_gradient(model, target, gains, s, scheme)
    return {
        "interconnection": (target.J2(q, p) - Rd) @ solve_linear(Md, K @ x_v, "desired mass"),
        "integral_coupling": -K @ K.T @ solve_linear(M, grad_vd, "mass matrix"),
        "kinetic_p": Md @ solve_linear(M, kinetic_p, "mass matrix"),
        "kinetic_x_p": -Md @ solve_linear(M, kinetic_xp, "mass matrix"),
    }


def bracket_p41(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    s: ExtendedState,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> np.ndarray:
    return sum(_p41_terms(model, target, gains, s, scheme).values())


def residual_p41(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    s: ExtendedState,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> ResidualReport:
    """G_perp applied to the integral controller's matching bracket (Md^{-1} evaluated at q)."""
    return _annihilate(model.G(s.q), _p41_terms(model, target, gains, s, scheme), s)


def ryalat_control_p41(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    s: ExtendedState,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> np.ndarray:
    """v = (G^T G)^{-1} G^T {bracket}: the part of the bracket the input can reproduce."""
    return pseudo_inverse_tall(model.G(s.q)) @ bracket_p41(model, target, gains, s, scheme)


def _p51_terms(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    energy: AugmentedEnergy,
    s: ExtendedState,
    scheme: FiniteDifferenceScheme,
) -> Dict[str, np.ndarray]:
    q, p, x_v = s.q, s.p, s.x_v
    x_q = s.x_q
    K = kappa(model, gains, q)
    M = model.M(q)
    Md = target.Md(q)
    coupling = target.J2(q, p) - rd(model, gains, q)
    x_p = p + K @ x_v
    g_q, _, _ = energy.gradients(x_q, x_p, x_v, scheme)

    def m_inv(v: np.ndarray) -> np.ndarray:
        return solve_linear(M, v, "mass matrix")

    return {
        "desired_gradient": Md @ m_inv(desired_energy_gradient_q(target, q, p, scheme)),
        "shifted_gradient": -2.0 * (m_inv(K @ g_q) + Md @ m_inv(g_q)),
        "interconnection_at_q": -coupling @ solve_linear(Md, p, "desired mass"),
        "interconnection_at_x_q": coupling @ solve_linear(target.Md(x_q), p, "desired mass"),
        "momentum": -m_inv(p),
        "integral_coupling": 2.0 * coupling @ solve_linear(Md, K @ x_v, "desired mass"),
        "integral_state": -2.0 * Md @ m_inv(x_v),
    }


def residual_p51(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    energy: AugmentedEnergy,
    s: ExtendedState,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> ResidualReport:
    """G_perp applied to the second integral bracket, Md^{-1} at q and at x_q as printed."""
    return _annihilate(model.G(s.q), _p51_terms(model, target, gains, energy, s, scheme), s)


@dataclass(frozen=True)
class ChainTerms:
    M_inv_p: np.ndarray
    mass: np.ndarray
    g_q: np.ndarray
    g_p: np.ndarray
    g_v: np.ndarray
    x_p: np.ndarray


def _chain_terms(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    energy: AugmentedEnergy,
    s: ExtendedState,
    scheme: FiniteDifferenceScheme,
) -> ChainTerms:
    K = kappa(model, gains, s.q)
    x_p = s.x_p(K)
    g_q, g_p, g_v = energy.gradients(s.x_q, x_p, s.x_v, scheme)
    M = model.M(s.q)
    return ChainTerms(
        M_inv_p=solve_linear(M, s.p, "mass matrix"),
        mass=M,
        g_q=g_q,
        g_p=g_p,
        g_v=g_v,
        x_p=x_p,
    )


def xq_dot_chain(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    energy: AugmentedEnergy,
    s: ExtendedState,
    d1=None,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> List[np.ndarray]:
    """Evaluate the five successive right-hand sides of the x_q derivation."""
    d1 = np.zeros(model.n) if d1 is None else as_vector(d1, model.n, "d1")
    terms = _chain_terms(model, target, gains, energy, s, scheme)
    M = terms.mass
    K = kappa(model, gains, s.q)
    Md = target.Md(energy.md_point(s.x_q, s.x_v))

    def m_inv(v: np.ndarray) -> np.ndarray:
        return solve_linear(M, v, "mass matrix")

    shifted = -m_inv(K @ terms.g_q)
    return [
        terms.M_inv_p + d1 + shifted - 0.5 * terms.M_inv_p,
        shifted + 0.5 * terms.M_inv_p + d1,
        shifted + m_inv(terms.x_p) - m_inv(K @ s.x_v) + d1,
        shifted + m_inv(Md @ solve_linear(Md, terms.x_p)) - m_inv(K @ s.x_v) + d1,
        shifted + m_inv(Md @ terms.g_p) - m_inv(K @ terms.g_v) + d1,
    ]


def claimed_first_row(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    energy: AugmentedEnergy,
    s: ExtendedState,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> np.ndarray:
    """M^{-1} Md grad_{x_p} H~, the first row the closed loop is claimed to have."""
    terms = _chain_terms(model, target, gains, energy, s, scheme)
    Md = target.Md(energy.md_point(s.x_q, s.x_v))
    return solve_linear(terms.mass, Md @ terms.g_p, "mass matrix")


def predicted_chain_deviation(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    energy: AugmentedEnergy,
    s: ExtendedState,
    d1=None,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> np.ndarray:
    """-M^{-1} K (grad_{x_q} H~ + grad_{x_v} H~) + d1."""
    d1 = np.zeros(model.n) if d1 is None else as_vector(d1, model.n, "d1")
    terms = _chain_terms(model, target, gains, energy, s, scheme)
    K = kappa(model, gains, s.q)
    return -solve_linear(terms.mass, K @ (terms.g_q + terms.g_v), "mass matrix") + d1


def kernel_witness(model: MechanicalModel, target: TargetDesign, q=None) -> np.ndarray:
    """Unit w with G^T Md^{-1} w = 0, built as Md times the first annihilator row."""
    q = target.q_star if q is None else as_vector(q, model.n, "q")
    if not model.underactuated:
        raise NoKernelError(f"G^T Md^{{-1}} has a trivial kernel for m = n = {model.n}")
    annihilator = left_annihilator(model.G(q))
    w = target.Md(q) @ annihilator[0]
    return w / np.linalg.norm(w)


def witness_report(model: MechanicalModel, target: TargetDesign, q=None) -> WitnessReport:
    q = target.q_star if q is None else as_vector(q, model.n, "q")
    try:
        w = kernel_witness(model, target, q)
    except NoKernelError as e:
        logger.info(f"Kernel witness unavailable: {e}")
        return WitnessReport(available=False, reason=str(e))
    output = model.G(q).T @ solve_linear(target.Md(q), w, "desired mass")
    return WitnessReport(available=True, w=w.tolist(), output_norm=float(np.linalg.norm(output)))


def extended_kernel_witness(
    model: MechanicalModel, target: TargetDesign, gains: ControllerGains
) -> ExtendedState:
    """Extended state (x_q = q*, x_p = w, x_v = 0) of unit norm with zero dissipation output."""
    w = kernel_witness(model, target, target.q_star)
    return ExtendedState.from_extended(
        target.q_star, w, np.zeros(model.n), kappa(model, gains, target.q_star)
    )


def young_bound(a, b, kappa_weight: float) -> Tuple[float, float]:
    """Return (a.b, |a|^2/(2 kappa) + kappa |b|^2 / 2)."""
    if not kappa_weight > 0:
        raise ContractError(f"Young weight must be positive, got {kappa_weight}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(a @ b), float(a @ a / (2.0 * kappa_weight) + kappa_weight * (b @ b) / 2.0)


@dataclass(frozen=True)
class DisturbanceSplit:
    d_hat: np.ndarray
    matched: np.ndarray
    unmatched: np.ndarray

    @property
    def is_matched(self) -> bool:
        return float(np.linalg.norm(self.unmatched)) < IMAGE_TOL


def disturbance_alignment(model: MechanicalModel, q, d) -> DisturbanceSplit:
    """Split d into G d_hat (image of G) and its annihilated part G_perp d."""
    q = as_vector(q, model.n, "q")
    d = as_vector(d, model.n, "d")
    G = model.G(q)
    d_hat = pseudo_inverse_tall(G) @ d
    annihilator = left_annihilator(G)
    unmatched = annihilator @ d if annihilator.shape[0] else np.zeros(0)
    return DisturbanceSplit(d_hat=d_hat, matched=G @ d_hat, unmatched=unmatched)


@dataclass(frozen=True)
class DissipationBound:
    lhs_upper: float
    claimed_rhs: float
    corrected_applicable: bool
    corrected_rhs: Optional[float] = None

    @property
    def claimed_violated(self) -> bool:
        return self.lhs_upper > self.claimed_rhs


def dissipation_bound_terms(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    x_p,
    d2,
    q=None,
) -> DissipationBound:
    """Exact upper bound on dH~/dt against the claimed and the corrected Young bounds."""
    q = target.q_star if q is None else as_vector(q, model.n, "q")
    x_p = as_vector(x_p, model.n, "x_p")
    d2 = as_vector(d2, model.n, "d2")
    lam = lambda_min(gains.Kv)
    md_inv_xp = solve_linear(target.Md(q), x_p, "desired mass")
    y = model.G(q).T @ md_inv_xp
    lhs_upper = float(-y @ gains.Kv @ y + md_inv_xp @ d2)
    claimed_rhs = float(-0.5 * lam * (y @ y) + (d2 @ d2) / (2.0 * lam))

    split = disturbance_alignment(model, q, d2)
    corrected_rhs = None
    if split.is_matched:
        _, young = young_bound(y, split.d_hat, lam)
        corrected_rhs = float(-lam * (y @ y) + young)
    return DissipationBound(
        lhs_upper=lhs_upper,
        claimed_rhs=claimed_rhs,
        corrected_applicable=split.is_matched,
        corrected_rhs=corrected_rhs,
    )


def find_bound_counterexample(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    q=None,
    max_halvings: int = 60,
) -> CounterexampleReport:
    """Scan d2 = 2^-k Md w along the kernel witness until the claimed bound fails."""
    q = target.q_star if q is None else as_vector(q, model.n, "q")
    try:
        w = kernel_witness(model, target, q)
    except NoKernelError:
        return CounterexampleReport(found=False)
    direction = target.Md(q) @ w
    for k in range(max_halvings + 1):
        scale = 2.0**-k
        d2 = scale * direction
        bound = dissipation_bound_terms(model, target, gains, w, d2, q)
        if bound.claimed_violated:
            logger.info(
                f"Claimed bound violated at scale 2^-{k}: "
                f"lhs_upper={bound.lhs_upper:.6g} > claimed_rhs={bound.claimed_rhs:.6g}"
            )
            return CounterexampleReport(
                found=True,
                x_p=w.tolist(),
                d2=d2.tolist(),
                scale=scale,
                lhs_upper=bound.lhs_upper,
                claimed_rhs=bound.claimed_rhs,
            )
    return CounterexampleReport(found=False)


def iiss_margin(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    state: ExtendedState,
    d2hat,
    htilde_dot: float,
    damping: Optional[np.ndarray] = None,
) -> float:
    """[-1/2 lmin(K)|y_p|^2 + |d2hat|^2/(2 lmin(K))] - dH~/dt at one trajectory point.

    K is Kv unless ``damping`` names the gain the closed loop actually injects.
    """
    d2hat = as_vector(d2hat, model.m, "d2hat")
    lam = lambda_min(gains.Kv if damping is None else damping)
    x_p = state.x_p(kappa(model, gains, state.q))
    y_p = model.G(state.q).T @ solve_linear(target.Md(state.q), x_p, "desired mass")
    return float(-0.5 * lam * (y_p @ y_p) + (d2hat @ d2hat) / (2.0 * lam) - htilde_dot)


@dataclass(frozen=True)
class IntegralMatchingConditions:
    """Sufficient conditions for the integral matching residual to vanish."""

    max_md_gradient: float
    max_annihilated_coupling: float
    samples: int

    @property
    def md_constant(self) -> bool:
        return self.max_md_gradient < CONDITION_TOL

    @property
    def coupling_annihilated(self) -> bool:
        return self.max_annihilated_coupling < CONDITION_TOL

    @property
    def holds(self) -> bool:
        return self.md_constant and self.coupling_annihilated


def integral_matching_conditions(
    model: MechanicalModel,
    target: TargetDesign,
    samples: int = 200,
    seed: int = 0,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> IntegralMatchingConditions:
    """Max |d Md / dq| and max |G_perp J2 Md^{-1} G| over the model's domain box."""
    rng = np.random.default_rng(seed)
    worst_gradient = 0.0
    worst_coupling = 0.0
    for _ in range(samples):
        q = model.domain_box.sample_q(rng)
        p = model.domain_box.sample_p(rng)
        if not target.constant_mass:
            partials = jacobian_of_matrix_field(target.Md, q, scheme)
            worst_gradient = max(worst_gradient, max(float(np.max(np.abs(d))) for d in partials))
        G = model.G(q)
        annihilator = left_annihilator(G)
        if annihilator.shape[0]:
            coupling = annihilator @ target.J2(q, p) @ solve_linear(target.Md(q), G)
            worst_coupling = max(worst_coupling, float(np.linalg.norm(coupling, 2)))
    return IntegralMatchingConditions(
        max_md_gradient=worst_gradient,
        max_annihilated_coupling=worst_coupling,
        samples=samples,
    )


def augmented_energy_rate(
    energy: AugmentedEnergy,
    kappa_field: Callable[[np.ndarray], np.ndarray],
    s: ExtendedState,
    q_dot: np.ndarray,
    p_dot: np.ndarray,
    x_v_dot: np.ndarray,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> float:
    """Chain-rule dH~/dt from the plant and controller-state derivatives."""
    K = kappa_field(s.q)
    x_p = s.p + K @ s.x_v
    g_q, g_p, g_v = energy.gradients(s.x_q, x_p, s.x_v, scheme)
    K_dot = sum(
        dq * part for dq, part in zip(q_dot, jacobian_of_matrix_field(kappa_field, s.q, scheme))
    )
    x_q_dot = q_dot - x_v_dot
    x_p_dot = p_dot + K_dot @ s.x_v + K @ x_v_dot
    return float(g_q @ x_q_dot + g_p @ x_p_dot + g_v @ x_v_dot)
