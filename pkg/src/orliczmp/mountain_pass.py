"""Numerical minimax: endpoint search, rim verification, path descent, Newton polish.

The algorithm realizes the classical minimax level

    c = inf over paths 0 -> e of max along the path

by steepest descent on the current path maximizer (Armijo backtracking),
periodic re-equidistribution of the path in the Sobolev norm, and a damped
Newton polish of the final maximizer.  Descent directions are Euclidean on
nodal values; the Orlicz norms enter only through rim placement and path
re-equidistribution.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np

from .functional import ProblemSpec, action, action_gradient, el_residual, tent_function
from .hypotheses import TheoremInputs, theorem_inputs
from .orlicz_space import (PeriodicGridFunction, derivative,
                           embedding_constant, sobolev_norm)
from .reports import render_report

Array = np.ndarray


class SolverError(RuntimeError):
    pass


@dataclasses.dataclass(frozen=True)
class MountainPassConfig:
    path_points: int = 17
    max_outer_iters: int = 400
    descent_step0: float = 1.0
    armijo_c: float = 1e-4
    grad_tol: float = 1e-3          # pre-polish target for the path maximizer
    rim_samples: int = 64
    xi_growth: float = 2.0
    seed: int = 0
    newton_tol: float = 1e-11
    newton_max_iters: int = 60

    def __post_init__(self):
        if self.path_points < 8:
            raise SolverError("need at least 8 path points")
        if not (0.0 < self.armijo_c < 1.0):
            raise SolverError("armijo_c must lie in (0, 1)")
        if self.grad_tol <= 0 or self.grad_tol >= 1:
            raise SolverError("grad_tol must lie in (0, 1)")
        if self.descent_step0 <= 0 or self.xi_growth <= 1:
            raise SolverError("descent_step0 > 0 and xi_growth > 1 required")


@dataclasses.dataclass(frozen=True)
class RimReport:
    alpha: float                 # analytic lower bound for J on the rim
    sampled_min: float           # min of J over sampled rim functions
    rho: float
    exponent: Optional[float]    # None when the linear (rho/2) route is used
    n_samples: int
    n_skipped: int = 0

    def to_text(self) -> str:
        return render_report("rim_report", dataclasses.asdict(self))


@dataclasses.dataclass(frozen=True)
class SolveReport:
    u_star: PeriodicGridFunction
    j_value: float
    grad_norm: float
    el_residual: float
    alpha_rim: float
    mp_level_c: float
    endpoint_xi: float
    iterations: int
    converged: bool
    linf_bound_du: float

    def to_text(self) -> str:
        rows = dataclasses.asdict(self)
        rows.pop("u_star")
        return render_report("solve_report", rows)


@dataclasses.dataclass(frozen=True)
class CertReport:
    el_residual: float
    max_grad_g_du: float          # sup_t |grad G(u'(t))|, the regularity bound
    max_du: float                 # sup_t |u'(t)|
    refined_max_grad_g_du: float
    refined_max_du: float
    stable: bool

    def to_text(self) -> str:
        return render_report("cert_report", dataclasses.asdict(self))


# ---------------------------------------------------------------------------
# endpoint search
# ---------------------------------------------------------------------------

_XI_CAP = 2.0 ** 30


def find_endpoint(prob: ProblemSpec, rho: float, cfg: MountainPassConfig,
                  m: int = 256) -> tuple[PeriodicGridFunction, float]:
    """Grow tents until one leaves the rho-ball with negative action."""
    if prob.N == 1:
        dirs = [np.array([1.0]), np.array([-1.0])]
    else:
        rng = np.random.default_rng(cfg.seed)
        base = np.eye(prob.N)
        extra = rng.standard_normal((6, prob.N))
        extra /= np.linalg.norm(extra, axis=1, keepdims=True)
        dirs = [row for row in np.vstack([base, -base, extra])]
    xi0 = max(prob.T + 2.0, 2.0)
    xi = xi0
    while xi <= _XI_CAP:
        for v in dirs:
            e = tent_function(xi, v, prob.T, m)
            try:
                j = action(prob, e)
            except Exception:
                continue
            if j < 0.0 and sobolev_norm(prob.G, e) > rho:
                return e, xi
        xi *= cfg.xi_growth
    raise SolverError(
        "no negative endpoint found below the tent-height cap; the potential "
        "probably lacks superquadratic negativity at infinity")


# ---------------------------------------------------------------------------
# rim verification
# ---------------------------------------------------------------------------

def random_rim_function(rng: np.random.Generator, T: float, m: int, dim: int,
                        n_modes: int = 8, decay: float = 2.0) -> PeriodicGridFunction:
    """Random trigonometric polynomial with 1/k^decay coefficient decay."""
    t = -T + (2.0 * T / m) * np.arange(m)
    vals = np.zeros((m, dim))
    vals += rng.standard_normal(dim)[None, :]
    for k in range(1, n_modes + 1):
        ak = rng.standard_normal(dim) / k ** decay
        bk = rng.standard_normal(dim) / k ** decay
        w = np.pi * k * t / T
        vals += np.cos(w)[:, None] * ak[None, :] + np.sin(w)[:, None] * bk[None, :]
    return PeriodicGridFunction(T, vals)


def verify_rim(prob: ProblemSpec, rho: float, cfg: MountainPassConfig,
               m: int = 256, inputs: Optional[TheoremInputs] = None) -> RimReport:
    """Analytic rim lower bound plus a sampled minimum over the rim.

    Rim samples are rescaled to Sobolev norm exactly rho (the norm is
    positively homogeneous, so rescaling is exact division by the norm).
    """
    if inputs is None:
        inputs = theorem_inputs(prob, m)
    bounds = []
    exponent: Optional[float] = None
    if inputs.delta2_global and inputs.nabla2_global:
        expo = inputs.q_g if rho <= 2.0 else inputs.p_g
        bounds.append(min(1.0, prob.b - 1.0) * (rho / 2.0) ** expo)
        exponent = expo
    if rho > 2.0:
        linear = min(1.0, prob.b - 1.0) * (rho / 2.0)
        if not bounds or linear > max(bounds):
            exponent = None
        bounds.append(linear)
    if not bounds:
        raise SolverError("no rim bound applies: doubling not global and rho <= 2")
    alpha = max(bounds) - inputs.r_gstar_f - inputs.integral_a

    rng = np.random.default_rng(cfg.seed)
    sampled = math.inf
    skipped = 0
    for _ in range(cfg.rim_samples):
        u = random_rim_function(rng, prob.T, m, prob.N)
        nrm = sobolev_norm(prob.G, u)
        if not (math.isfinite(nrm) and nrm > 0):
            skipped += 1
            continue
        u = u.scaled(rho / nrm)
        sampled = min(sampled, action(prob, u))
    return RimReport(alpha=alpha, sampled_min=sampled, rho=rho,
                     exponent=exponent, n_samples=cfg.rim_samples, n_skipped=skipped)


# ---------------------------------------------------------------------------
# path machinery
# ---------------------------------------------------------------------------

def _grad_norm(grad: Array) -> float:
    return float(np.linalg.norm(grad.ravel()))


def _redistribute(prob: ProblemSpec, path: list[PeriodicGridFunction]
                  ) -> list[PeriodicGridFunction]:
    """Resample the polyline so consecutive states are norm-equidistant."""
    seg = []
    for a, b in zip(path[:-1], path[1:]):
        diff = PeriodicGridFunction(a.T, b.values - a.values)
        seg.append(sobolev_norm(prob.G, diff) if diff.values.any() else 0.0)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 0:
        return path
    targets = np.linspace(0.0, total, len(path))
    out = [path[0]]
    for s in targets[1:-1]:
        k = int(np.searchsorted(cum, s, side="right") - 1)
        k = min(k, len(seg) - 1)
        w = (s - cum[k]) / seg[k] if seg[k] > 0 else 0.0
        vals = (1 - w) * path[k].values + w * path[k + 1].values
        out.append(PeriodicGridFunction(path[0].T, vals))
    out.append(path[-1])
    return out


def _safe_action(prob: ProblemSpec, u: PeriodicGridFunction) -> float:
    try:
        return action(prob, u)
    except Exception:
        return math.inf


def _armijo_descent(prob: ProblemSpec, u: PeriodicGridFunction, j0: float,
                    grad: Array, cfg: MountainPassConfig,
                    max_move: float = math.inf
                    ) -> tuple[PeriodicGridFunction, float, float]:
    """One Armijo-backtracking steepest-descent step; returns (u, J, step).

    The move is capped at max_move (half the distance to the neighboring
    path states): uncapped steps can plunge a state across the valley and
    break the path.  Overflowing trial points simply reject the step.
    """
    gnorm2 = float(np.sum(grad * grad))
    gnorm = math.sqrt(gnorm2)
    step = cfg.descent_step0
    if math.isfinite(max_move) and gnorm > 0:
        step = min(step, max_move / gnorm)
    while step >= 1e-14:
        trial = PeriodicGridFunction(u.T, u.values - step * grad)
        jt = _safe_action(prob, trial)
        if math.isfinite(jt) and jt <= j0 - cfg.armijo_c * step * gnorm2:
            return trial, jt, step
        step *= 0.5
    return u, j0, 0.0


def newton_polish(prob: ProblemSpec, u: PeriodicGridFunction,
                  tol: float = 1e-11, max_iters: int = 60
                  ) -> tuple[PeriodicGridFunction, float, bool]:
    """Damped Newton on action_gradient = 0 with a finite-difference Jacobian.

    The Jacobian columns are directional derivatives of the gradient along
    nodal unit vectors; damping halves the step until the residual drops.
    """
    m, n = u.values.shape
    dim = m * n
    x = u.values.copy()

    def gvec(vals: Array) -> Array:
        try:
            out = action_gradient(prob, PeriodicGridFunction(u.T, vals)).ravel()
        except Exception:
            return np.full(dim, np.inf)
        return out

    g = gvec(x)
    if not np.isfinite(g).all():
        return u, math.inf, False
    for it in range(max_iters):
        gn = float(np.linalg.norm(g))
        if gn < tol:
            return PeriodicGridFunction(u.T, x), gn, True
        jac = np.empty((dim, dim))
        h = 1e-7 * max(1.0, float(np.abs(x).max()))
        flat = x.ravel()
        for j in range(dim):
            e = np.zeros(dim)
            e[j] = h
            jac[:, j] = (gvec((flat + e).reshape(m, n)) - gvec((flat - e).reshape(m, n))) / (2 * h)
        try:
            step = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -g, rcond=None)[0]
        damp = 1.0
        improved = False
        for _ in range(40):
            trial = (flat + damp * step).reshape(m, n)
            gt = gvec(trial)
            if np.linalg.norm(gt) < gn:
                x, g = trial, gt
                improved = True
                break
            damp *= 0.5
        if not improved:
            return PeriodicGridFunction(u.T, x), gn, gn < tol
    gn = float(np.linalg.norm(g))
    return PeriodicGridFunction(u.T, x), gn, gn < tol


def solve(prob: ProblemSpec, cfg: MountainPassConfig = MountainPassConfig(),
          m: int = 256, rho: Optional[float] = None,
          rim: Optional[RimReport] = None) -> SolveReport:
    """Full minimax run: rim bound, endpoint, path descent, Newton polish."""
    if rho is None:
        rho = prob.rho0 / embedding_constant(prob.G, prob.T)
    if rim is None:
        rim = verify_rim(prob, rho, cfg, m)
    if not rim.alpha > 0:
        raise SolverError(f"rim bound alpha = {rim.alpha:g} is not positive; "
                          "the minimax geometry is not certified")
    e, xi = find_endpoint(prob, rho, cfg, m)
    assert action(prob, e) < 0 and sobolev_norm(prob.G, e) > rho

    path = [PeriodicGridFunction(prob.T, w * e.values)
            for w in np.linspace(0.0, 1.0, cfg.path_points)]
    jvals = [action(prob, u) for u in path]
    level = max(jvals)
    iterations = 0
    stalled = False
    degenerate = False
    recent: list[float] = []

    for iterations in range(1, cfg.max_outer_iters + 1):
        k = int(np.argmax(jvals))
        if k in (0, len(path) - 1):
            # the interior collapsed below both endpoints: the path broke
            degenerate = True
            break
        grad = action_gradient(prob, path[k])
        gn = _grad_norm(grad)
        if gn < cfg.grad_tol:
            break
        d_prev = float(np.linalg.norm(path[k].values - path[k - 1].values))
        d_next = float(np.linalg.norm(path[k].values - path[k + 1].values))
        max_move = 0.5 * max(min(d_prev, d_next), 1e-3 * max(d_prev, d_next, 1e-30))
        new_u, new_j, step = _armijo_descent(prob, path[k], jvals[k], grad, cfg,
                                             max_move=max_move)
        if step == 0.0:
            stalled = True
            break
        path[k] = new_u
        jvals[k] = new_j
        candidate = _redistribute(prob, path)
        cand_j = [action(prob, u) for u in candidate]
        if max(cand_j) <= max(jvals) + 1e-12 * (1.0 + abs(max(jvals))):
            path, jvals = candidate, cand_j
        level = max(jvals)
        # hand over to the polish once the level stops moving
        recent.append(level)
        if len(recent) > 25:
            recent.pop(0)
            if recent[0] - level <= 1e-9 * (1.0 + abs(level)):
                break

    k = int(np.argmax(jvals))
    u_star, gn, newton_ok = newton_polish(prob, path[k], cfg.newton_tol,
                                          cfg.newton_max_iters)
    j_star = action(prob, u_star)
    # the level estimate belongs to the polyline path, not just its nodes:
    # sample the interiors of the segments as well
    level = max(level, _polyline_max(prob, path, subdivisions=8))
    du = derivative(u_star)
    return SolveReport(
        u_star=u_star,
        j_value=j_star,
        grad_norm=gn,
        el_residual=el_residual(prob, u_star),
        alpha_rim=rim.alpha,
        mp_level_c=level,
        endpoint_xi=xi,
        iterations=iterations,
        converged=bool(newton_ok and not stalled and not degenerate),
        linf_bound_du=float(np.linalg.norm(du.values, axis=-1).max()),
    )


def _polyline_max(prob: ProblemSpec, path: list[PeriodicGridFunction],
                  subdivisions: int) -> float:
    best = -math.inf
    for a, b in zip(path[:-1], path[1:]):
        for w in np.linspace(0.0, 1.0, subdivisions + 1):
            u = PeriodicGridFunction(a.T, (1 - w) * a.values + w * b.values)
            best = max(best, _safe_action(prob, u))
    return best


def _interpolate_double(u: PeriodicGridFunction) -> PeriodicGridFunction:
    """Piecewise-linear resample onto the doubled mesh (midpoint insertion)."""
    mid = 0.5 * (u.values + np.roll(u.values, -1, axis=0))
    vals = np.empty((2 * u.m, u.dim))
    vals[0::2] = u.values
    vals[1::2] = mid
    return PeriodicGridFunction(u.T, vals)


def certify(prob: ProblemSpec, u_star: PeriodicGridFunction,
            refine: bool = True, stability_rtol: float = 0.05) -> CertReport:
    """Regularity certificate: residual plus sup bounds on u' and grad G(u').

    With refine=True the candidate is re-polished on the doubled mesh and the
    sup bounds compared; growth beyond stability_rtol flags the report.
    """
    du = derivative(u_star)
    max_du = float(np.linalg.norm(du.values, axis=-1).max())
    max_gg = float(np.linalg.norm(prob.G.grad(du.values), axis=-1).max())
    resid = el_residual(prob, u_star)
    if not refine:
        return CertReport(resid, max_gg, max_du, max_gg, max_du, True)
    fine, _, _ = newton_polish(prob, _interpolate_double(u_star))
    dfine = derivative(fine)
    r_du = float(np.linalg.norm(dfine.values, axis=-1).max())
    r_gg = float(np.linalg.norm(prob.G.grad(dfine.values), axis=-1).max())
    scale_du = max(max_du, 1e-12)
    scale_gg = max(max_gg, 1e-12)
    stable = (r_du <= scale_du * (1 + stability_rtol) + 1e-12 and
              r_gg <= scale_gg * (1 + stability_rtol) + 1e-12)
    return CertReport(resid, max_gg, max_du, r_gg, r_du, stable)
