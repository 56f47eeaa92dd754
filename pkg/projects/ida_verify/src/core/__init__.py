from projects.ida_verify.src.core.errors import (  # type: ignore
    IdaVerifyError,
    ContractError,
    EvaluationError,
    RankError,
    InfeasibleMatchingError,
    NoKernelError,
    DomainError,
    DivergenceError,
    ConfigError,
)
from projects.ida_verify.src.core.types import (  # type: ignore
    DomainBox,
    MechanicalModel,
    TargetDesign,
    ControllerGains,
    ExtendedState,
    DisturbanceProfile,
    extended_coords,
)

__all__ = [
    # Errors
    "IdaVerifyError",
    "ContractError",
    "EvaluationError",
    "RankError",
    "InfeasibleMatchingError",
    "NoKernelError",
    "DomainError",
    "DivergenceError",
    "ConfigError",
    # Domain types
    "DomainBox",
    "MechanicalModel",
    "TargetDesign",
    "ControllerGains",
    "ExtendedState",
    "DisturbanceProfile",
    "extended_coords",
]
