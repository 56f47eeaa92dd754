"""Classical IDA-PBC: energies, target dynamics, the synthesized control and matching checks."""

from dataclasses import dataclass
from typing import Literal, Tuple

import numpy as np
from loguru import logger

from projects.ida_verify.src.analysis.diffops import (
    DEFAULT_SCHEME,
    FiniteDifferenceScheme,
    grad,
    left_annihilator,
    pseudo_inverse_tall,
    quadratic_form_gradient,
    solve_linear,
)
from projects.ida_verify.src.core.errors import InfeasibleMatchingError
from projects.ida_verify.src.core.types import (
    ControllerGains,
    MechanicalModel,
    TargetDesign,
    as_vector,
)
from projects.ida_verify.src.core.validation import (
    desired_potential_gradient,
    potential_gradient,
)

FEASIBILITY_TOL = 1e-6
WARNING_TOL = 1e-3

Band = Literal["match", "warning", "fail"]


@dataclass(frozen=True)
class EnergyReport:
    """Open-loop energy H, shaped energy Hd, dissipation output y_d and analytic dHd/dt."""

    H: float
    Hd: float
    y_d: np.ndarray
    Hd_dot_analytic: float


def classify_residual(
    norm: float, feasibility_tol: float = FEASIBILITY_TOL, warning_tol: float = WARNING_TOL
) -> Band:
    if norm < feasibility_tol:
        return "match"
    if norm < warning_tol:
        return "warning"
    return "fail"


def _qp(model: MechanicalModel, q, p) -> Tuple[np.ndarray, np.ndarray]:
    return as_vector(q, model.n, "q"), as_vector(p, model.n, "p")


def total_energy(model: MechanicalModel, q, p) -> float:
    q, p = _qp(model, q, p)
    return float(0.5 * p @ solve_linear(model.M(q), p, "mass matrix") + model.V(q))


def desired_energy(target: TargetDesign, q, p) -> float:
    q = as_vector(q, target.n, "q")
    p = as_vector(p, target.n, "p")
    return float(0.5 * p @ solve_linear(target.Md(q), p, "desired mass") + target.Vd(q))


def energy_gradient_q(
    model: MechanicalModel, q, p, scheme: FiniteDifferenceScheme = DEFAULT_SCHEME
) -> np.ndarray:
    """Gradient of H in q at fixed p."""
    q, p = _qp(model, q, p)
    kinetic = quadratic_form_gradient(
        model.M, q, p, scheme, constant=model.constant_mass, matrix_gradient=model.mass_gradient
    )
    return potential_gradient(model, scheme)(q) + kinetic


def desired_energy_gradient_q(
    target: TargetDesign, q, p, scheme: FiniteDifferenceScheme = DEFAULT_SCHEME
) -> np.ndarray:
    """Gradient of Hd in q at fixed p; the kinetic part vanishes when Md is declared constant."""
    q = as_vector(q, target.n, "q")
    p = as_vector(p, target.n, "p")
    kinetic = quadratic_form_gradient(target.Md, q, p, scheme, constant=target.constant_mass)
    return desired_potential_gradient(target, scheme)(q) + kinetic


def dissipation_output(model: MechanicalModel, target: TargetDesign, q, p) -> np.ndarray:
    """y_d = G^T Md^{-1} p."""
    q, p = _qp(model, q, p)
    return model.G(q).T @ solve_linear(target.Md(q), p, "desired mass")


def plant_vector_field(
    model: MechanicalModel, q, p, u, scheme: FiniteDifferenceScheme = DEFAULT_SCHEME
) -> Tuple[np.ndarray, np.ndarray]:
    """Open-loop port-Hamiltonian field with input u."""
    q, p = _qp(model, q, p)
    u = as_vector(u, model.m, "u")
    q_dot = solve_linear(model.M(q), p, "mass matrix")
    p_dot = -energy_gradient_q(model, q, p, scheme) + model.G(q) @ u
    return q_dot, p_dot


def target_vector_field(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    q,
    p,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> Tuple[np.ndarray, np.ndarray]:
    """Target dynamics q' = M^{-1} p, p' = -Md M^{-1} grad_q Hd + (J2 - G Kp G^T) Md^{-1} p."""
    q, p = _qp(model, q, p)
    M = model.M(q)
    Md = target.Md(q)
    G = model.G(q)
    q_dot = solve_linear(M, p, "mass matrix")
    p_dot = -Md @ solve_linear(M, desired_energy_gradient_q(target, q, p, scheme)) + (
        target.J2(q, p) - G @ gains.Kp @ G.T
    ) @ solve_linear(Md, p, "desired mass")
    return q_dot, p_dot


def power_balance(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    q,
    p,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> Tuple[float, float]:
    """Return (dHd/dt along the target field by finite differences, -|G^T Md^{-1} p|^2_Kp)."""
    q, p = _qp(model, q, p)
    n = model.n
    q_dot, p_dot = target_vector_field(model, target, gains, q, p, scheme)
    full_gradient = grad(
        lambda x: desired_energy(target, x[:n], x[n:]), np.concatenate([q, p]), scheme
    )
    hd_dot = float(full_gradient @ np.concatenate([q_dot, p_dot]))
    y_d = dissipation_output(model, target, q, p)
    return hd_dot, float(-y_d @ gains.Kp @ y_d)


def energy_report(
    model: MechanicalModel, target: TargetDesign, gains: ControllerGains, q, p
) -> EnergyReport:
    y_d = dissipation_output(model, target, q, p)
    return EnergyReport(
        H=total_energy(model, q, p),
        Hd=desired_energy(target, q, p),
        y_d=y_d,
        Hd_dot_analytic=float(-y_d @ gains.Kp @ y_d),
    )


def matching_bracket_basic(
    model: MechanicalModel,
    target: TargetDesign,
    q,
    p,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> np.ndarray:
    """grad_q H - Md M^{-1} grad_q Hd + J2 Md^{-1} p, the vector G u must reproduce."""
    q, p = _qp(model, q, p)
    Md = target.Md(q)
    return (
        energy_gradient_q(model, q, p, scheme)
        - Md @ solve_linear(model.M(q), desired_energy_gradient_q(target, q, p, scheme))
        + target.J2(q, p) @ solve_linear(Md, p, "desired mass")
    )


def matching_residual_basic(
    model: MechanicalModel,
    target: TargetDesign,
    q,
    p,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> np.ndarray:
    """Annihilated basic matching bracket; empty for fully actuated plants."""
    q, p = _qp(model, q, p)
    annihilator = left_annihilator(model.G(q))
    if annihilator.shape[0] == 0:
        return np.zeros(0)
    return annihilator @ matching_bracket_basic(model, target, q, p, scheme)


def ida_pbc_control(
    model: MechanicalModel,
    target: TargetDesign,
    gains: ControllerGains,
    q,
    p,
    tolerance: float = FEASIBILITY_TOL,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> np.ndarray:
    """u = (G^T G)^{-1} G^T {bracket} - Kp G^T Md^{-1} p, defined only where matching holds."""
    q, p = _qp(model, q, p)
    G = model.G(q)
    bracket = matching_bracket_basic(model, target, q, p, scheme)
    annihilator = left_annihilator(G)
    if annihilator.shape[0]:
        residual = annihilator @ bracket
        norm = float(np.linalg.norm(residual))
        if norm >= tolerance:
            raise InfeasibleMatchingError(residual, tolerance)
        if norm >= 0.1 * tolerance:
            logger.debug(f"Matching residual {norm:.3e} close to tolerance {tolerance:.1e}")
    return pseudo_inverse_tall(G) @ bracket - gains.Kp @ dissipation_output(model, target, q, p)
