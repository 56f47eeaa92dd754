from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class IwpParams(BaseModel):
    """Inertia wheel pendulum constants and design parameters.

    Defaults are NOT published values: they are chosen so that M and Md are
    positive definite, q* = 0 is a strict minimum of Vd and the basic matching
    equation holds.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    k1: float = Field(default=2.0, gt=0)
    k2: float = Field(default=1.0, gt=0)
    k3: float = Field(default=1.0, gt=0)
    m1: float = 1.0
    m2: float = 2.0
    m3: float = 5.0
    delta: float = Field(default=1.0, gt=0)
    gamma1: float = 1.0
    epsilon: float = 1.5
    Kp_scalar: float = Field(default=1.0, gt=0)
    Ki_scalar: float = Field(default=1.0, ge=0)
    Kv_scalar: float = Field(default=1.0, ge=0)
    j2: float = 0.0

    # printed-formula interpretation switches
    term1_mapping: Literal["first_component", "both_components"] = "first_component"
    term5_denominator: Literal["printed", "corrected"] = "printed"

    @model_validator(mode="after")
    def check_inequalities(self) -> "IwpParams":
        if not self.k1 > self.k2:
            raise ValueError(
                f"k1 > k2 violated (k1={self.k1}, k2={self.k2}): det M = k2(k1-k2) must be > 0"
            )
        if not self.m1 > 0:
            raise ValueError(f"m1 > 0 violated (m1={self.m1}): Md not positive definite")
        if not self.m1 * self.m3 - self.m2**2 > 0:
            raise ValueError(
                f"m1*m3 - m2^2 > 0 violated ({self.m1 * self.m3 - self.m2**2:.6g}): "
                "Md not positive definite"
            )
        return self

    @property
    def published_values(self) -> bool:
        return False


class RipFieldsConfig(BaseModel):
    """Rotary inverted pendulum fields given as expressions in q1, q2."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    delta: str = "1.0"
    delta_d: str = "2.0 + 0.5*cos(q1)"
    sigma: str = "0.3"
    gamma: str = "1.5"
    epsilon: str = "1.2"
    m3: str = "2.0"
    b1: Optional[str] = None
    b2: Optional[str] = None
    b3: Optional[str] = None
    j2: float = 0.5
    k_v: float = Field(default=1.0, ge=0)
    k_i: float = Field(default=1.0, ge=0)
    k_p: float = Field(default=1.0, gt=0)
    half_width: float = Field(default=3.141592653589793, gt=0)


class ModelFile(BaseModel):
    """On-disk model parameter file (presets use the same format)."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["iwp", "rip"]
    iwp: Optional[IwpParams] = None
    rip: Optional[RipFieldsConfig] = None


class ModelOverrides(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fully_actuated: bool = False
    Kp_scalar: Optional[float] = Field(default=None, gt=0)
    Ki_scalar: Optional[float] = Field(default=None, ge=0)
    Kv_scalar: Optional[float] = Field(default=None, ge=0)
    j2: Optional[float] = None


class DisturbanceConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["none", "matched_sinusoid", "unmatched_witness"] = "none"
    amplitude: float = Field(default=0.1, ge=0)
    frequency: float = Field(default=1.0, gt=0)


class MatchingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    operators: List[Literal["basic", "p41", "p51"]] = ["basic", "p41", "p51"]
    samples: int = Field(default=1000, ge=1)
    tolerance: float = Field(default=1e-4, gt=0)
    restrict_x_v_zero: bool = False
    x_v_range: Tuple[float, float] = (0.1, 1.0)

    @field_validator("x_v_range")
    @classmethod
    def check_range(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not 0 <= value[0] <= value[1]:
            raise ValueError(f"x_v_range must satisfy 0 <= low <= high, got {value}")
        return value


class IssConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples: int = Field(default=10_000, ge=1)
    simulate: bool = True
    horizon: float = Field(default=10.0, gt=0)
    dt: float = Field(default=1e-3, gt=0)
    amplitude: float = Field(default=0.1, ge=0)


class DifferencesConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    step: float = Field(default=1e-6, gt=0)
    order: Literal[2, 4] = 2
    hessian_step: float = Field(default=1e-4, gt=0)


class SimulationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["target", "disturbed"] = "target"
    controller: Literal["ida_pbc", "ryalat_p41"] = "ida_pbc"
    q0: Optional[List[float]] = None
    p0: Optional[List[float]] = None
    x_v0: Optional[List[float]] = None
    horizon: float = Field(default=10.0, gt=0)
    dt: float = Field(default=1e-3, gt=0)
    method: Literal["rk4", "euler"] = "rk4"
    disturbance: DisturbanceConfig = DisturbanceConfig()


class RunConfig(BaseModel):
    """Complete configuration of one CLI run."""

    model_config = ConfigDict(extra="forbid")

    model: str = "iwp"
    overrides: ModelOverrides = ModelOverrides()
    matching: MatchingConfig = MatchingConfig()
    iss: IssConfig = IssConfig()
    simulation: SimulationConfig = SimulationConfig()
    differences: DifferencesConfig = DifferencesConfig()
    seed: int = Field(default=0, ge=0)
    out: Optional[Path] = None
    expect: Optional[Literal["pass", "fail"]] = None


