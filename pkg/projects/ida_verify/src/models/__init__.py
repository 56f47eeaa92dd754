from projects.ida_verify.src.models.iwp import (  # type: ignore
    build_iwp,
    direct_terms,
    iwp_terms,
    iwp_rhs_direct,
    iwp_matching_verdict,
    matched_iwp_params,
)
from projects.ida_verify.src.models.rip import (  # type: ignore
    RipFields,
    build_rip,
    rip_terms,
    rip_star,
)
from projects.ida_verify.src.models.registry import LoadedModel, load_model  # type: ignore

__all__ = [
    # Inertia wheel pendulum
    "build_iwp",
    "direct_terms",
    "iwp_terms",
    "iwp_rhs_direct",
    "iwp_matching_verdict",
    "matched_iwp_params",
    # Rotary inverted pendulum
    "RipFields",
    "build_rip",
    "rip_terms",
    "rip_star",
    # Registry
    "LoadedModel",
    "load_model",
]
