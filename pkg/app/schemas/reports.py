from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

Verdict = Literal["pass", "fail", "bounded", "unbounded", "info"]

# Equation label each anchor is tested against, emitted as "paper_ref"
EQUATION_LABELS: Dict[str, str] = {
    "M1": "ineq:mu",
    "P0": "P0",
    "P1-P3": "P1-P3",
    "P2": "P2",
    "P4": "P4",
    "Q1": "Q1",
    "Q2": "Q2",
    "potential-growth": "const:C_phi",
    "spectral-gap": "cond:alpha_n.hat>a_phi",
    "transport-domain": "form:Tcal",
    "transport-cfl": "form:Tcal",
    "blow-up": "eqn:react-diff:mu",
    "psi0-decay": "ineq:Psi_0^n",
    "psi0-energy-inequality": "ineq:d.Psi_0",
    "psi0-moments": "ineq:Psi_0^n",
    "psi1-moment": "ineq:Psi_1^n",
    "psi2-moment": "ineq:moment-bound:H^2:d=3",
    "generator": "form:L^epsilon",
    "exponential-moment": "ineq:exponential-bound:nu(H^m)",
    "nudging-contraction": "ineq:moment-bound:|u-uhat|_H<e^-ct",
    "invariant-measure": "form:nu.time-average",
    "tightness": "ineq:int_0^t|A^(1/2)u^epsilon|ds<t",
    "support-regularity": "ineq:moment-bound:nu(H^m)",
    "prony-reduction": "eqn:eta:Cauchy-problem",
}


def equation_label(anchor: str) -> str:
    return EQUATION_LABELS.get(anchor, anchor)


# Validator Report
class CheckReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    anchor: str
    passed: bool
    worst_margin: Optional[float] = None
    offending: Optional[Dict[str, Any]] = None
    details: Dict[str, Any] = Field(default_factory=dict)
    paper_ref: str = ""

    @model_validator(mode="after")
    def _label_anchor(self) -> "CheckReport":
        if not self.paper_ref:
            self.paper_ref = equation_label(self.anchor)
        return self

    @property
    def verdict(self) -> Verdict:
        return "pass" if self.passed else "fail"


# Monitor Report (emitted as JSON)
class MonitorReport(BaseModel):
    name: str
    anchor: str
    constants: Dict[str, float] = Field(default_factory=dict)
    worst_margin: Optional[float] = None
    ci: Optional[Tuple[float, float]] = None
    verdict: Verdict
    details: Dict[str, Any] = Field(default_factory=dict)
    paper_ref: str = ""

    @model_validator(mode="after")
    def _label_anchor(self) -> "MonitorReport":
        if not self.paper_ref:
            self.paper_ref = equation_label(self.anchor)
        return self

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "bounded", "info")


# Functional Report
class FunctionalReport(BaseModel):
    t: float
    psi: List[float] = Field(..., description="psi_0 .. psi_m")
    exp_moment: Optional[float] = None
    generator_value: float

    @property
    def psi0(self) -> float:
        return self.psi[0]


# Moment estimate with batch-means standard error
class MomentEstimate(BaseModel):
    estimate: float
    stderr: float


class MeasureEstimate(BaseModel):
    T: float
    burn_in: float
    dt: float
    n_batches: int
    moments: Dict[str, MomentEstimate]
    tail_sup_avg: float
    spectral_profile: List[float]
    alpha: List[float]

    def moment(self, name: str) -> MomentEstimate:
        return self.moments[name]


class StationarityVerdict(BaseModel):
    z_scores: Dict[str, float]
    threshold: float
    verdict: Verdict
    paper_ref: str = EQUATION_LABELS["invariant-measure"]


class ValidationSummary(BaseModel):
    passed: bool
    checks: List[CheckReport]
    constants: Dict[str, Any] = Field(default_factory=dict)
