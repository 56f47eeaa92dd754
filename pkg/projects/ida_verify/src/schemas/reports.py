from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field


# Validation
class InvariantCheck(BaseModel):
    name: str
    passed: bool
    worst_value: float
    threshold: float
    worst_point: Optional[List[float]] = None


class ValidationReport(BaseModel):
    subject: str
    seed: int
    samples: int
    checks: List[InvariantCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failed_checks(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def check(self, name: str) -> InvariantCheck:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)


# Sweeps
class SweepSummary(BaseModel):
    operator: str
    samples: int
    max_norm: float
    mean_norm: float
    tolerance: float
    verdict: Literal["pass", "fail"]
    band: Literal["match", "warning", "fail"]
    restricted_x_v_zero: bool = False
    notes: List[str] = Field(default_factory=list)


class IwpVerdict(BaseModel):
    verdict: Literal["FAIL-TO-MATCH", "MATCHABLE"]
    samples: int
    max_annihilated: float
    mean_annihilated: float
    threshold: float
    control_rhs_max: float
    control_p41_max: float
    published_values: bool = False
    notes: List[str] = Field(default_factory=list)


class RipStarSummary(BaseModel):
    samples: int
    max_term_sum_gap: float
    zero_slice_max: float
    nonzero_fraction: float
    min_abs_star: float
    provenance: str = "NON-PAPER mechanical template; fields user-supplied"


class ChainSummary(BaseModel):
    samples: int
    max_step_gaps: Dict[str, float]
    max_half_momentum_gap_error: float
    max_deviation_error: float


# iISS / K-infinity analysis
class WitnessReport(BaseModel):
    available: bool
    w: Optional[List[float]] = None
    output_norm: Optional[float] = None
    reason: Optional[str] = None


class CounterexampleReport(BaseModel):
    found: bool
    x_p: Optional[List[float]] = None
    d2: Optional[List[float]] = None
    scale: Optional[float] = None
    lhs_upper: Optional[float] = None
    claimed_rhs: Optional[float] = None


class MatchedBoundReport(BaseModel):
    samples: int
    min_margin: float
    hard_violations: int
    simulated: bool = False
    simulation_min_margin: Optional[float] = None
    simulation_violations: Optional[int] = None


class IssReport(BaseModel):
    witness: WitnessReport
    extended_witness: Optional[List[float]] = None
    counterexample: CounterexampleReport
    matched_bound: MatchedBoundReport
    verdict: Literal["pass", "fail"]


# Rebuttal checklist
class ChecklistRow(BaseModel):
    check: str
    status: Literal["pass", "fail", "not run"]
    detail: str = ""
