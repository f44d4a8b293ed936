"""Pydantic request/response models for the HTTP service.

Matrices travel as the package's JSON container ``{"rows", "cols", "data"}``
with row-major flat data; helper methods convert to and from numpy arrays.
"""

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..core import matrix_from_json_obj, matrix_to_json_obj


class MatrixPayload(BaseModel):
    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    data: list[float]

    @model_validator(mode="after")
    def _check_size(self):
        if len(self.data) != self.rows * self.cols:
            raise ValueError(f"data has {len(self.data)} entries, expected {self.rows * self.cols}")
        return self

    def to_array(self):
        return matrix_from_json_obj(self.model_dump())

    @classmethod
    def from_array(cls, arr):
        arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
        return cls(**matrix_to_json_obj(arr))


class SolverOptionsModel(BaseModel):
    max_iters: int = 10_000
    tol: float = 1e-9
    kkt_tol: float = 1e-6
    support_tol: float = 1e-10


class FitRequest(BaseModel):
    x: MatrixPayload
    y: MatrixPayload
    lam: float | None = None  # None means auto
    sparsity_guess_s: int = 1
    eta1: float = 0.0
    eta2: float = 0.0
    options: SolverOptionsModel = SolverOptionsModel()


class FitResponse(BaseModel):
    b_hat: MatrixPayload
    support: list[int]
    support_size: int
    iterations_used: int
    kkt_residual: float
    objective: float
    lambda_used: float
    lambda_mode: str  # "explicit" or "auto"
    sigma_pilot: float | None = None
    n: int
    p: int
    t: int


class InteractionRequest(BaseModel):
    x: MatrixPayload
    b_hat: MatrixPayload
    lam: float
    method: str = "woodbury"  # "woodbury" or "naive"
    support_tol: float = 1e-10
    check_against_naive: bool = False


class InteractionReport(BaseModel):
    symmetric: bool
    max_asymmetry: float
    min_eig: float
    op_norm: float
    support_size: int
    method: str
    rank_ok: bool
    max_abs_diff_vs_naive: float | None = None


class InteractionResponse(BaseModel):
    a_hat: MatrixPayload
    report: InteractionReport


class CiRequest(BaseModel):
    x: MatrixPayload
    y: MatrixPayload
    lam: float | None = None
    alpha: float = 0.05
    task: int = 0
    variant: str = "known"  # "known" or "unknown"
    j: int | None = None
    direction: list[float] | None = None
    sigma_mat: MatrixPayload | None = None
    tau_choice: str = "inner"
    sparsity_guess_s: int = 1


class CiResponse(BaseModel):
    center: float
    half_length: float
    lower: float
    upper: float
    alpha: float
    variant: str
    lambda_used: float


class EllipsoidRequest(BaseModel):
    x: MatrixPayload
    y: MatrixPayload
    lam: float | None = None
    alpha: float = 0.05
    variant: str = "check_E_sigma_hat"
    j: int | None = None
    direction: list[float] | None = None
    sigma_mat: MatrixPayload | None = None
    sparsity_guess_s: int = 1


class EllipsoidResponse(BaseModel):
    u: list[float]
    C: MatrixPayload
    q: float
    alpha: float
    variant: str
    lambda_used: float


class TestRowRequest(EllipsoidRequest):
    pass


class TestRowResponse(EllipsoidResponse):
    reject: bool
    pivot_at_zero: float


class SimConfigModel(BaseModel):
    schema_version: int = 1
    n: int = 400
    p: int = 800
    t: int = 5
    s: int = 5
    s_omega: int = 5
    sigma: float = 1.0
    alpha: float = 0.05
    n_sim: int = 300
    overlap_mode: str = "no_overlap"
    seed: int = 0
    variants: list[str] = ["normal_known", "chi_known", "chi_sigma_hat"]
    with_width: bool = False
    eta1: float = 0.0
    eta2: float = 0.0


class SimulateRequest(BaseModel):
    config: SimConfigModel
    threads: int = 1


class ReplicateModel(BaseModel):
    replicate: int
    seed_key: list[int]
    pivot_values: dict[str, float]
    covered: dict[str, bool]
    widths: dict[str, float]
    sigma_hat: float
    support_size: int
    failed: bool = False
    failure_reason: str = ""


class SimulateResponse(BaseModel):
    replicates: list[ReplicateModel]
    summary: dict


class ErrorBody(BaseModel):
    kind: str  # "usage", "numeric", "convergence", "campaign"
    message: str


class HealthResponse(BaseModel):
    status: str
    version: str
