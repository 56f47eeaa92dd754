import numpy as np

from projects.ida_verify.src.analysis.rebuttal import kernel_witness
from projects.ida_verify.src.core.errors import ContractError
from projects.ida_verify.src.core.types import DisturbanceProfile, MechanicalModel, TargetDesign
from projects.ida_verify.src.schemas.config import DisturbanceConfig


def matched_sinusoid(
    m: int, n: int, amplitude: float, frequency: float = 1.0
) -> DisturbanceProfile:
    """d2 = G d2hat with d2hat = amplitude sin(frequency t) in every input channel."""
    return DisturbanceProfile(
        d1=lambda t: np.zeros(n),
        d2=lambda t: np.zeros(n),
        matched_d2hat=lambda t: amplitude * np.sin(frequency * t) * np.ones(m),
    )


def unmatched_witness(
    model: MechanicalModel, target: TargetDesign, amplitude: float, frequency: float = 1.0
) -> DisturbanceProfile:
    """Momentum disturbance along Md w, outside the image of G."""
    direction = target.Md(target.q_star) @ kernel_witness(model, target, target.q_star)
    return DisturbanceProfile(
        d1=lambda t: np.zeros(model.n),
        d2=lambda t: amplitude * np.sin(frequency * t) * direction,
    )


def build_disturbance(
    config: DisturbanceConfig, model: MechanicalModel, target: TargetDesign
) -> DisturbanceProfile:
    if config.kind == "none":
        return DisturbanceProfile.zero(model.n)
    if config.kind == "matched_sinusoid":
        return matched_sinusoid(model.m, model.n, config.amplitude, config.frequency)
    if config.kind == "unmatched_witness":
        return unmatched_witness(model, target, config.amplitude, config.frequency)
    raise ContractError(f"Unknown disturbance kind '{config.kind}'")
