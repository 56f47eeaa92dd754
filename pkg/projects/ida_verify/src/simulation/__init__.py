from projects.ida_verify.src.simulation.integrate import Trajectory, integrate  # type: ignore
from projects.ida_verify.src.simulation.disturbances import (  # type: ignore
    build_disturbance,
    matched_sinusoid,
    unmatched_witness,
)
from projects.ida_verify.src.simulation.simulate import (  # type: ignore
    ConvergenceEvidence,
    convergence_evidence,
    simulate_disturbed,
    simulate_target,
)

__all__ = [
    # Integration
    "Trajectory",
    "integrate",
    # Disturbances
    "build_disturbance",
    "matched_sinusoid",
    "unmatched_witness",
    # Simulations
    "ConvergenceEvidence",
    "convergence_evidence",
    "simulate_disturbed",
    "simulate_target",
]
