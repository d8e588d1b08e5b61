"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class SamplingOverrides(BaseModel):
    n_directions: Optional[int] = None
    n_radii: Optional[int] = None
    r_min: Optional[float] = None
    r_max: Optional[float] = None
    seed: Optional[int] = None


class GFunctionQuery(BaseModel):
    name: str
    params: list[float] = Field(default_factory=list)


class IndicesRequest(BaseModel):
    g: GFunctionQuery
    sampling: Optional[SamplingOverrides] = None


class ShellRow(BaseModel):
    radius: float
    inf_ratio: float
    sup_ratio: float


class IndicesResponse(BaseModel):
    p_g: float
    q_g: float
    q_g_inf: float
    stabilization_warning: bool
    shells: list[ShellRow]


class ConjugateRequest(BaseModel):
    g: GFunctionQuery
    y: list[float]
    tol: float = 1e-6


class ConjugateResponse(BaseModel):
    value: float


class NormRequest(BaseModel):
    g: GFunctionQuery
    T: float = 1.0
    m: int = 256
    const: Optional[float] = None
    values: Optional[list[list[float]]] = None
    which: str = "luxemburg"


class NormResponse(BaseModel):
    value: float


class ProblemQuery(BaseModel):
    name: str
    params: dict[str, float | int | str] = Field(default_factory=dict)
    m: int = 256


class VerdictModel(BaseModel):
    name: str
    status: str
    margin: float
    note: str = ""


class CheckResponse(BaseModel):
    verdicts: list[VerdictModel]
    r_gstar_f: float
    integral_a: float
    rho: float
    rhs_theorem1: float
    rhs_theorem2: float
    theorem1_applicable: bool
    theorem2_applicable: bool
    theorem_passes: bool


class SolverOverrides(BaseModel):
    path_points: Optional[int] = None
    max_outer_iters: Optional[int] = None
    rim_samples: Optional[int] = None
    seed: Optional[int] = None
    grad_tol: Optional[float] = None


class RimRequest(BaseModel):
    problem: ProblemQuery
    solver: Optional[SolverOverrides] = None


class RimResponse(BaseModel):
    alpha: float
    sampled_min: float
    rho: float
    exponent: Optional[float]
    n_samples: int
    n_skipped: int


class SolveRequest(BaseModel):
    problem: ProblemQuery
    solver: Optional[SolverOverrides] = None


class SolveResponse(BaseModel):
    j_value: float
    grad_norm: float
    el_residual: float
    alpha_rim: float
    mp_level_c: float
    endpoint_xi: float
    iterations: int
    converged: bool
    linf_bound_du: float
    t: list[float]
    u: list[list[float]]
    du: list[list[float]]


class RegistryResponse(BaseModel):
    gfunctions: list[str]
    problems: list[str]
