from projects.ida_verify.src.schemas.config import (  # type: ignore
    # Parameter models
    IwpParams,
    RipFieldsConfig,
    ModelFile,
    # Run configuration
    ModelOverrides,
    DisturbanceConfig,
    MatchingConfig,
    IssConfig,
    SimulationConfig,
    DifferencesConfig,
    RunConfig,
)
from projects.ida_verify.src.schemas.reports import (  # type: ignore
    InvariantCheck,
    ValidationReport,
    SweepSummary,
    IwpVerdict,
    RipStarSummary,
    ChainSummary,
    WitnessReport,
    CounterexampleReport,
    MatchedBoundReport,
    IssReport,
    ChecklistRow,
)

__all__ = [
    # Parameter models
    "IwpParams",
    "RipFieldsConfig",
    "ModelFile",
    # Run configuration
    "ModelOverrides",
    "DisturbanceConfig",
    "MatchingConfig",
    "IssConfig",
    "SimulationConfig",
    "DifferencesConfig",
    "RunConfig",
    # Reports
    "InvariantCheck",
    "ValidationReport",
    "SweepSummary",
    "IwpVerdict",
    "RipStarSummary",
    "ChainSummary",
    "WitnessReport",
    "CounterexampleReport",
    "MatchedBoundReport",
    "IssReport",
    "ChecklistRow",
]
