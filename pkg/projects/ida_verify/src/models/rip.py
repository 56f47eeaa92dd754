"""Rotary inverted pendulum: injected design fields, printed matching terms and the (*) expansion.

Only the desired inverse inertia is given in closed form; its scalar fields are
injected by the user. The mechanical plant (M, V, G) is a generic two-link template
and carries no claim of matching any published rotary pendulum.
"""

from dataclasses import dataclass, field
from typing import Dict, Literal, Optional, Tuple

import numpy as np
from loguru import logger

from projects.ida_verify.src.analysis.diffops import (
    DEFAULT_SCHEME,
    FiniteDifferenceScheme,
    jacobian_of_matrix_field,
)
from projects.ida_verify.src.core.errors import ContractError, DomainError
from projects.ida_verify.src.core.types import (
    ControllerGains,
    DomainBox,
    ExtendedState,
    MechanicalModel,
    ScalarField,
    TargetDesign,
)
from projects.ida_verify.src.models.expressions import compile_scalar_field
from projects.ida_verify.src.schemas.config import RipFieldsConfig

PROVENANCE = "NON-PAPER mechanical template; fields user-supplied"
B_FIELD_TOL = 1e-4
SKEW = np.array([[0.0, 1.0], [-1.0, 0.0]])

Variant = Literal["printed", "b3"]


@dataclass(frozen=True, eq=False)
class RipFields:
    """Scalar fields of the desired inverse inertia plus the design constants j2, k_v, k_i."""

    delta: ScalarField
    delta_d: ScalarField
    sigma: ScalarField
    gamma: ScalarField
    epsilon: ScalarField
    m3: ScalarField
    b1: Optional[ScalarField] = None
    b2: Optional[ScalarField] = None
    b3: Optional[ScalarField] = None
    j2: float = 0.5
    k_v: float = 1.0
    k_i: float = 1.0
    k_p: float = 1.0
    domain_box: DomainBox = field(default_factory=lambda: DomainBox.around(np.zeros(2)))
    expressions: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_config(cls, config: RipFieldsConfig) -> "RipFields":
        names = ("delta", "delta_d", "sigma", "gamma", "epsilon", "m3", "b1", "b2", "b3")
        expressions = {name: getattr(config, name) for name in names if getattr(config, name)}
        compiled = {name: compile_scalar_field(text) for name, text in expressions.items()}
        return cls(
            **compiled,
            j2=config.j2,
            k_v=config.k_v,
            k_i=config.k_i,
            k_p=config.k_p,
            domain_box=DomainBox.around(np.zeros(2), half_width=config.half_width),
            expressions=expressions,
        )

    def diagonal_factor(self, q: np.ndarray) -> float:
        """Delta (cos q1 + eps) / Delta_d, the (2,2) entry of Md^{-1}."""
        return self.delta(q) * (np.cos(q[0]) + self.epsilon(q)) / self.delta_d(q)

    def md_inverse(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        delta, delta_d = self.delta(q), self.delta_d(q)
        off = (
            delta
            * self.sigma(q)
            * np.cos(q[0])
            * (np.cos(q[0]) + self.epsilon(q))
            / (delta_d * self.gamma(q))
        )
        return np.array(
            [[delta * self.m3(q) / delta_d, off], [off, self.diagonal_factor(q)]]
        )

    def b_fields(
        self, q: np.ndarray, scheme: FiniteDifferenceScheme = DEFAULT_SCHEME
    ) -> Tuple[float, float, float]:
        """Entries (B1, B2, B3) of d Md^{-1} / d q1; finite differences fill missing fields."""
        supplied = (self.b1, self.b2, self.b3)
        if all(b is not None for b in supplied):
            return tuple(float(b(q)) for b in supplied)  # type: ignore[misc]
        derivative = jacobian_of_matrix_field(self.md_inverse, q, scheme)[0]
        estimated = (derivative[0, 0], derivative[0, 1], derivative[1, 1])
        return tuple(
            float(b(q)) if b is not None else float(e) for b, e in zip(supplied, estimated)
        )  # type: ignore[return-value]


def _check_delta_d(fields: RipFields, samples: int, rng: np.random.Generator) -> None:
    values = []
    for _ in range(samples):
        q = fields.domain_box.sample_q(rng)
        value = fields.delta_d(q)
        if abs(value) < 1e-12:
            raise DomainError(f"Delta_d vanishes at q={q.tolist()}")
        values.append(value)
    if min(values) < 0 < max(values):
        raise DomainError(
            f"Delta_d changes sign on the domain (range [{min(values):.3g}, {max(values):.3g}])"
        )


def _check_b_fields(
    fields: RipFields, samples: int, rng: np.random.Generator, scheme: FiniteDifferenceScheme
) -> None:
    supplied = {"b1": fields.b1, "b2": fields.b2, "b3": fields.b3}
    if not any(supplied.values()):
        return
    entries = {"b1": (0, 0), "b2": (0, 1), "b3": (1, 1)}
    for _ in range(samples):
        q = fields.domain_box.sample_q(rng)
        derivative = jacobian_of_matrix_field(fields.md_inverse, q, scheme)[0]
        for name, b in supplied.items():
            if b is None:
                continue
            gap = abs(b(q) - derivative[entries[name]])
            if gap > B_FIELD_TOL:
                raise ContractError(
                    f"{name.upper()} disagrees with the finite-difference derivative of "
                    f"Md^{{-1}} by {gap:.3e} at q={q.tolist()}"
                )


def rip_template_model(fully_actuated: bool = False, q_star=(0.0, 0.0)) -> MechanicalModel:
    """Generic two-link template; NOT the published rotary pendulum."""
    input_map = np.eye(2) if fully_actuated else np.array([[0.0], [1.0]])
    return MechanicalModel(
        n=2,
        m=input_map.shape[1],
        mass=lambda q: np.array([[1.0, 0.5 * np.cos(q[0])], [0.5 * np.cos(q[0]), 2.0]]),
        potential=lambda q: float(np.cos(q[0])),
        input_map=lambda q: input_map,
        potential_gradient=lambda q: np.array([-np.sin(q[0]), 0.0]),
        constant_input_map=True,
        name="rip-template",
        q_star=q_star,
    )


@dataclass(frozen=True, eq=False)
class RipDesign:
    model: MechanicalModel
    target: TargetDesign
    gains: ControllerGains
    fields: RipFields
    provenance: str = PROVENANCE


def build_rip(
    fields: RipFields,
    samples: int = 1000,
    seed: int = 0,
    model: Optional[MechanicalModel] = None,
    fully_actuated: bool = False,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> RipDesign:
    """Assemble Md from the injected fields after checking Delta_d and any supplied B-fields."""
    rng = np.random.default_rng(seed)
    _check_delta_d(fields, samples, rng)
    worst_asymmetry = max(
        float(np.max(np.abs(M - M.T)))
        for M in (fields.md_inverse(fields.domain_box.sample_q(rng)) for _ in range(samples))
    )
    if worst_asymmetry >= 1e-12:
        raise ContractError(f"Assembled Md^{{-1}} is not symmetric ({worst_asymmetry:.3e})")
    _check_b_fields(fields, min(samples, 50), rng, scheme)

    if model is None:
        model = rip_template_model(fully_actuated)
        logger.warning(f"RIP plant uses the generic template: {PROVENANCE}")
    j2 = fields.j2 * SKEW
    target = TargetDesign(
        desired_mass=lambda q: np.linalg.inv(fields.md_inverse(q)),
        desired_potential=lambda q: float(0.5 * np.asarray(q) @ np.asarray(q)),
        j2=lambda q, p: j2,
        q_star=np.zeros(2),
        desired_potential_gradient=lambda q: np.asarray(q, dtype=float),
        name="rip-target",
    )
    semidefinite = fields.k_i == 0 or fields.k_v == 0
    gains = ControllerGains.from_scalars(
        model.m, fields.k_p, fields.k_v, fields.k_i, allow_semidefinite=semidefinite
    )
    return RipDesign(model=model, target=target, gains=gains, fields=fields)


@dataclass(frozen=True)
class RipTerms:
    """Printed terms of the rotary pendulum matching equation with their B3 variants."""

    printed: Dict[str, np.ndarray]
    b3_variant: Dict[str, np.ndarray]
    Q: float
    P: np.ndarray

    def star_from_terms(self, variant: Variant = "printed") -> float:
        """First component of term12 + term22 - term32."""
        terms = self.printed if variant == "printed" else self.b3_variant
        return float(terms["term12"][0] + terms["term22"][0] - terms["term32"][0])


def rip_terms(
    fields: RipFields,
    s: ExtendedState,
    x_v2_dot: float = 0.0,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> RipTerms:
    """Evaluate the printed terms literally; the printed layout assumes k_i = 1.

    term22 is evaluated as P x_v2 and term32 as [Q, 0], the dimensionally
    consistent reading of the printed labels. The "b3" variant replaces the
    printed 1/2 B2 p2^2 by 1/2 B3 p2^2. The gains k_i and k_v are read from ``fields``,
    the same source :func:`rip_star` and :func:`build_rip` use.
    """
    k_i, k_v = fields.k_i, fields.k_v
    q, p, x_v = s.q, s.p, s.x_v
    x_p = np.array([p[0], p[1] + k_i * x_v[1]])
    B1, B2, B3 = fields.b_fields(q, scheme)
    c22 = fields.diagonal_factor(q)
    c12 = fields.md_inverse(q)[0, 1]

    def quadratic(v: np.ndarray, last: float) -> float:
        return 0.5 * B1 * v[0] ** 2 + B2 * v[0] * v[1] + 0.5 * last * v[1] ** 2

    P = k_i * np.array([fields.j2 * c22, -fields.j2 * c12 - k_v * c22])
    term22 = P * x_v[1]
    term42 = np.array([0.0, x_v2_dot])
    Q = quadratic(x_p, B2)
    printed = {
        "term12": np.array([quadratic(p, B2), 0.0]),
        "term22": term22,
        "term32": np.array([Q, 0.0]),
        "term42": term42,
    }
    b3_variant = {
        "term12": np.array([quadratic(p, B3), 0.0]),
        "term22": term22,
        "term32": np.array([quadratic(x_p, B3), 0.0]),
        "term42": term42,
    }
    return RipTerms(printed=printed, b3_variant=b3_variant, Q=Q, P=P)


def rip_star(
    fields: RipFields,
    s: ExtendedState,
    variant: Variant = "printed",
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> float:
    """Closed form of the unactuated component (*) of the matching equation."""
    q, p, x_v = s.q, s.p, s.x_v
    _, B2, B3 = fields.b_fields(q, scheme)
    last = B2 if variant == "printed" else B3
    k_i = fields.k_i
    x_v2 = x_v[1]
    coupling = fields.j2 * fields.diagonal_factor(q)
    return float(
        k_i * (coupling * x_v2 - B2 * p[0] * x_v2 - last * p[1] * x_v2)
        - 0.5 * last * k_i**2 * x_v2**2
    )

