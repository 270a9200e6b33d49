"""Pydantic wire models for the HTTP service.

These mirror the JSON interchange formats (instance schema
``cascadia-instance/1``, catalog schema, suite configs) and stay at the
boundary: handlers convert to the core dataclasses immediately.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..model import INSTANCE_SCHEMA_VERSION


class QuestionModel(BaseModel):
    id: int
    p_answer: float
    p_pna: float = 0.0
    c_answer: float = 1.0
    c_pna: float = 1.0
    attributes: list[int] = Field(default_factory=list)
    weight: float = 1.0
    revenue: float = 1.0


class AttributeModel(BaseModel):
    id: int
    distribution: list[float]


class InstanceModel(BaseModel):
    version: str = INSTANCE_SCHEMA_VERSION
    budget: int
    utility: Literal["entropy", "modular", "mnl"] = "entropy"
    questions: list[QuestionModel]
    attributes: list[AttributeModel] = Field(default_factory=list)
    slot_decay: Optional[list[float]] = None
    position_rates: Optional[list[list[float]]] = None


class ValidateResponse(BaseModel):
    ok: bool
    violations: list[str]


class GenerateRequest(BaseModel):
    n_questions: int = 12
    n_choices: int = 5
    budget: int = 6
    p_plus: float = 0.5
    c_plus: float = 0.5
    p_minus: float = 0.0
    c_minus: float = 0.0
    utility: Literal["entropy", "modular", "mnl"] = "entropy"
    seed: int = 0


class PolicyModel(BaseModel):
    kind: str = "alg2_general"
    rho: float = 0.5
    rho_sweep: Optional[list[float]] = None
    depth: int = 1
    local_search: bool = True
    v_mode: Literal["exact", "sampled"] = "exact"
    v_samples: int = 5000
    seed: int = 0
    kappa: Optional[float] = None
    zero_pna: bool = False
    compute_cap: float = 1e9


class SolveRequest(BaseModel):
    instance: InstanceModel
    policy: PolicyModel = PolicyModel()


class SolveResponse(BaseModel):
    policy: str
    sequence: list[int]
    surrogate_value: float
    f_value: float
    method: str
    per_question_pna: Optional[dict[int, bool]] = None
    diagnostics: dict = Field(default_factory=dict)


class EvaluateRequest(BaseModel):
    instance: InstanceModel
    sequence: list[int]
    variant: Literal["basic", "no_pna", "slot_decay", "scrolling", "auto"] = "auto"
    mc_samples: Optional[int] = None
    seed: int = 0


class EvaluateResponse(BaseModel):
    value: float
    method: str
    reachability: list[float]
    stderr: Optional[float] = None
    samples: Optional[int] = None


class CheckResponse(BaseModel):
    ok: bool
    violations: list[str]
    utility_kind: str
    monotone: Optional[bool] = None
    submodular: Optional[bool] = None
    exhaustive: Optional[bool] = None


class SuiteRequest(BaseModel):
    config: dict


class SuiteResponse(BaseModel):
    suite: str
    n_rows: int
    aggregates: dict
    csv: str
    json_doc: str


class ProductModel(BaseModel):
    id: int
    consider_rate: float
    c_consider: float = 1.0
    c_skip: float = 1.0
    weight: float = 1.0
    revenue: float = 1.0


class CatalogModel(BaseModel):
    display_slots: int
    products: list[ProductModel]


class AssortmentRequest(BaseModel):
    catalog: CatalogModel
    policy: PolicyModel = PolicyModel()


class AssortmentResponse(BaseModel):
    policy: str
    ranking: list[int]
    expected_revenue: float
    surrogate_value: float


class HealthResponse(BaseModel):
    status: str
    version: str
