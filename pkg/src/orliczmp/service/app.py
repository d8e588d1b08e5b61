"""FastAPI service wrapping the core package.

Every endpoint is a pure function of its request body; state never persists
between calls, so the service can be scaled or restarted freely.  Run with:

    uvicorn orliczmp.service.app:app
"""

from __future__ import annotations

import dataclasses

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import gfunction as gf
from .. import orlicz_space as osp
from ..functional import ProblemError, builtin_problem, registered_problems
from ..hypotheses import check_all
from ..mountain_pass import MountainPassConfig, SolverError, solve, verify_rim
from ..orlicz_space import PeriodicGridFunction
from . import schemas as sc


def _gfunction(q: sc.GFunctionQuery) -> gf.GFunctionSpec:
    try:
        return gf.make_gfunction(q.name, *q.params)
    except gf.GFunctionError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _plan(name: str, overrides: sc.SamplingOverrides | None) -> gf.SamplingPlan:
    plan = gf.recommended_plan(name)
    if overrides:
        fields = {k: v for k, v in overrides.model_dump().items() if v is not None}
        plan = dataclasses.replace(plan, **fields)
    return plan


def _problem(q: sc.ProblemQuery):
    try:
        return builtin_problem(q.name, **q.params)
    except (ProblemError, TypeError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _solver_cfg(overrides: sc.SolverOverrides | None) -> MountainPassConfig:
    if overrides is None:
        return MountainPassConfig()
    fields = {k: v for k, v in overrides.model_dump().items() if v is not None}
    return MountainPassConfig(**fields)


def create_app() -> FastAPI:
    app = FastAPI(title="orliczmp", version="0.1.0")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/registry", response_model=sc.RegistryResponse)
    def registry():
        return sc.RegistryResponse(gfunctions=gf.registered_gfunctions(),
                                   problems=registered_problems())

    @app.post("/api/indices", response_model=sc.IndicesResponse)
    def indices(req: sc.IndicesRequest):
        g = _gfunction(req.g)
        try:
            idx = gf.simonenko_indices(g, _plan(req.g.name, req.sampling))
        except gf.GFunctionError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return sc.IndicesResponse(
            p_g=idx.p_g, q_g=idx.q_g, q_g_inf=idx.q_g_inf,
            stabilization_warning=idx.stabilization_warning,
            shells=[sc.ShellRow(radius=r, inf_ratio=lo, sup_ratio=hi)
                    for r, lo, hi in idx.shells],
        )

    @app.post("/api/conjugate", response_model=sc.ConjugateResponse)
    def conjugate(req: sc.ConjugateRequest):
        g = _gfunction(req.g)
        if len(req.y) != g.dim:
            raise HTTPException(status_code=422,
                                detail=f"y needs {g.dim} components")
        try:
            val = gf.fenchel_conjugate(g, np.array(req.y),
                                       gf.ConjugateOpts(tol=req.tol))
        except gf.ConjugateError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return sc.ConjugateResponse(value=val)

    @app.post("/api/norm", response_model=sc.NormResponse)
    def norm(req: sc.NormRequest):
        g = _gfunction(req.g)
        if (req.const is None) == (req.values is None):
            raise HTTPException(status_code=422,
                                detail="provide exactly one of const or values")
        if req.values is not None:
            vals = np.asarray(req.values, dtype=float)
        else:
            vals = np.full((req.m, g.dim), req.const)
        try:
            u = PeriodicGridFunction(req.T, vals)
            fn = {"luxemburg": osp.luxemburg_norm, "sobolev": osp.sobolev_norm,
                  "joint": osp.joint_norm}.get(req.which)
            if fn is None:
                raise HTTPException(status_code=422, detail="which must be "
                                    "luxemburg | sobolev | joint")
            return sc.NormResponse(value=fn(g, u))
        except osp.SpaceError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/api/check", response_model=sc.CheckResponse)
    def check(req: sc.ProblemQuery):
        prob = _problem(req)
        report = check_all(prob, m=req.m)
        return sc.CheckResponse(
            verdicts=[sc.VerdictModel(name=v.name, status=v.status,
                                      margin=v.margin, note=v.note)
                      for v in report.verdicts.values()],
            r_gstar_f=report.r_gstar_f, integral_a=report.integral_a,
            rho=report.rho, rhs_theorem1=report.rhs_theorem1,
            rhs_theorem2=report.rhs_theorem2,
            theorem1_applicable=report.theorem1_applicable,
            theorem2_applicable=report.theorem2_applicable,
            theorem_passes=report.theorem_passes,
        )

    @app.post("/api/rim", response_model=sc.RimResponse)
    def rim(req: sc.RimRequest):
        prob = _problem(req.problem)
        cfg = _solver_cfg(req.solver)
        rho = prob.rho0 / osp.embedding_constant(prob.G, prob.T)
        try:
            r = verify_rim(prob, rho, cfg, req.problem.m)
        except SolverError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return sc.RimResponse(alpha=r.alpha, sampled_min=r.sampled_min, rho=r.rho,
                              exponent=r.exponent, n_samples=r.n_samples,
                              n_skipped=r.n_skipped)

    @app.post("/api/solve", response_model=sc.SolveResponse)
    def solve_endpoint(req: sc.SolveRequest):
        prob = _problem(req.problem)
        cfg = _solver_cfg(req.solver)
        try:
            rep = solve(prob, cfg, m=req.problem.m)
        except SolverError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        du = osp.derivative(rep.u_star)
        return sc.SolveResponse(
            j_value=rep.j_value, grad_norm=rep.grad_norm,
            el_residual=rep.el_residual, alpha_rim=rep.alpha_rim,
            mp_level_c=rep.mp_level_c, endpoint_xi=rep.endpoint_xi,
            iterations=rep.iterations, converged=rep.converged,
            linf_bound_du=rep.linf_bound_du,
            t=rep.u_star.nodes.tolist(), u=rep.u_star.values.tolist(),
            du=du.values.tolist(),
        )

    return app


app = create_app()
