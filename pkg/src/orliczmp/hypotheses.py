"""Automated admissibility checks for a ProblemSpec.

Each check produces a Verdict with a status in {pass, fail, inconclusive},
the worst-case margin seen, and a witness sample.  Everything is a sampled
verdict; "liminf"-type conditions additionally require stabilization across
radius shells before they may pass.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np

from .functional import ProblemSpec
from .gfunction import (ConjugateOpts, GFunctionSpec, SamplingPlan, check_delta2,
                        check_nabla2, conjugate_batch, recommended_plan,
                        simonenko_indices)
from .orlicz_space import embedding_constant, rho as rho_of, time_quadrature
from .reports import render_report

Array = np.ndarray

_STRICT = 1e-9          # strict inequalities must clear this relative margin
_TOL = 1e-9


class HypothesisError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class Verdict:
    name: str
    status: str                      # "pass" | "fail" | "inconclusive"
    margin: float                    # signed, >= 0 means satisfied
    witness: Optional[tuple] = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def _ball_samples(prob: ProblemSpec, n_t: int = 129, n_dirs: int = 64,
                  n_radii: int = 48) -> tuple[Array, Array]:
    t = np.linspace(-prob.T, prob.T, n_t)
    plan = SamplingPlan(n_directions=n_dirs, r_min=prob.rho0 * 1e-4,
                        r_max=prob.rho0, n_radii=n_radii)
    pts = plan.grid(prob.N).reshape(-1, prob.N)
    return t, pts


def check_A3(prob: ProblemSpec, n_t: int = 129, n_dirs: int = 64,
             n_radii: int = 48) -> Verdict:
    """Near-zero lower bound V(t,x) >= b G(x) - a(t) on the ball |x| <= rho0."""
    t, pts = _ball_samples(prob, n_t, n_dirs, n_radii)
    gvals = prob.G(pts)
    tt = t[:, None]
    xx = pts[None, :, :]
    vv = prob.V(tt, xx)
    lower = prob.b * gvals[None, :] - prob.a(t)[:, None]
    rel = (vv - lower) / (1.0 + np.abs(vv) + np.abs(lower))
    worst = float(np.nanmin(vv - lower))
    i, j = np.unravel_index(int(np.nanargmin(rel)), rel.shape)
    ok = float(np.nanmin(rel)) >= -_TOL
    return Verdict("A3", "pass" if ok else "fail", worst,
                   witness=(float(t[i]), tuple(float(v) for v in pts[j])))


_A4_SHELLS = (10.0, 100.0, 1000.0)


def check_A4(prob: ProblemSpec, shells: tuple = _A4_SHELLS, n_t: int = 65,
             n_dirs: int = 64) -> Verdict:
    """Growth at infinity: shell infima of K/|x|^p and W/max{K, G}.

    Requires |x|^p to grow no faster than G (verified by compare_growth);
    pass needs the outermost shell to clear b1 and 3 with a non-decreasing
    (stabilizing) trend; a clearing-but-unstable table is inconclusive.
    """
    from .gfunction import compare_growth, make_gfunction

    power = make_gfunction("power", prob.p, prob.N)
    growth = compare_growth(power, prob.G)
    if not growth.dominated:
        return Verdict("A4", "fail", -math.inf,
                       note=f"|x|^{prob.p:g} does not grow below G "
                            f"(worst sampled ratio {growth.worst_ratio:g})")
    t = np.linspace(-prob.T, prob.T, n_t)
    dirs = SamplingPlan(n_directions=n_dirs).directions(prob.N)
    inf_k = []
    inf_w = []
    for r in shells:
        x = r * dirs
        tt = t[:, None]
        xx = x[None, :, :]
        with np.errstate(over="ignore", invalid="ignore"):
            kv = prob.K(tt, xx)
            wv = prob.W(tt, xx)
            gv = prob.G(x)[None, :]
            ratio_k = kv / (r ** prob.p)
            denom = np.maximum(kv, gv)
            ratio_w = np.where(denom > 0, wv / denom, np.inf)
        ratio_w = np.where(np.isnan(ratio_w), -np.inf, ratio_w)
        inf_k.append(float(np.min(ratio_k)))
        inf_w.append(float(np.min(ratio_w)))

    note = "shells K/|x|^p: %s ; W/max(K,G): %s" % (
        ", ".join(f"{v:.6g}" for v in inf_k), ", ".join(f"{v:.6g}" for v in inf_w))
    clear_k = inf_k[-1] >= prob.b1 - _TOL * (1.0 + abs(prob.b1))
    clear_w = inf_w[-1] > 3.0 + _STRICT
    stable_k = all(inf_k[i + 1] >= inf_k[i] - 1e-3 * (1.0 + abs(inf_k[i]))
                   for i in range(len(shells) - 1))
    stable_w = all(inf_w[i + 1] >= inf_w[i] - 1e-3 * (1.0 + abs(inf_w[i]))
                   for i in range(len(shells) - 1))
    margin = min(inf_k[-1] - prob.b1, inf_w[-1] - 3.0)
    if clear_k and clear_w and stable_k and stable_w:
        return Verdict("A4", "pass", margin, note=note)
    if not (clear_k and clear_w):
        return Verdict("A4", "fail", margin, note=note)
    return Verdict("A4", "inconclusive", margin, note=note)


def check_A5(prob: ProblemSpec, q_g_inf: Optional[float] = None, n_t: int = 65,
             n_dirs: int = 64, r_min: float = 1e-3, r_max: float = 1e2,
             n_radii: int = 48) -> Verdict:
    """Growth coupling <V_x(t,x), x> <= (q + nu) K - mu W + kappa(t).

    The sampling radius is capped (default 1e2): exponential potentials
    overflow beyond it and the difference becomes numerically meaningless.
    """
    if q_g_inf is None:
        q_g_inf = simonenko_indices(prob.G, recommended_plan(prob.G.name)).q_g_inf
    if not prob.mu > q_g_inf + prob.nu:
        raise HypothesisError(
            f"precondition mu > q_G_inf + nu violated: {prob.mu} <= {q_g_inf + prob.nu}")
    t = np.linspace(-prob.T, prob.T, n_t)
    plan = SamplingPlan(n_directions=n_dirs, r_min=r_min, r_max=r_max, n_radii=n_radii)
    pts = plan.grid(prob.N).reshape(-1, prob.N)
    tt = t[:, None]
    xx = pts[None, :, :]
    with np.errstate(over="ignore", invalid="ignore"):
        lhs = np.einsum("tij,ij->ti", prob.V_x(tt, xx), pts)
        rhs = ((q_g_inf + prob.nu) * prob.K(tt, xx) - prob.mu * prob.W(tt, xx)
               + prob.kappa(t)[:, None])
        # relative gap: the raw difference carries roundoff of the large terms
        gap = (lhs - rhs) / (1.0 + np.abs(lhs) + np.abs(rhs))
    finite = np.isfinite(gap)
    if not finite.any():
        return Verdict("A5", "inconclusive", math.nan,
                       note="all samples overflowed; shrink the radius cap")
    worst = float(np.max(np.where(finite, gap, -np.inf)))
    i, j = np.unravel_index(int(np.argmax(np.where(finite, gap, -np.inf))), gap.shape)
    ok = worst <= _TOL
    kappa_vals = prob.kappa(t)
    kappa_note = ""
    if (kappa_vals < -_TOL).any():
        kappa_note = "kappa takes negative values (must be >= 0)"
    return Verdict("A5", "pass" if ok else "fail", -worst,
                   witness=(float(t[i]), tuple(float(v) for v in pts[j])), note=kappa_note)


def check_A6(prob: ProblemSpec, m: int = 2048, tol: float = 1e-8) -> Verdict:
    """Zero-mean normalization of the potential at x = 0."""
    t = np.linspace(-prob.T, prob.T, m + 1)
    x0 = np.zeros((m + 1, prob.N))
    integral = time_quadrature(prob.T, m, prob.V(t, x0))
    scale = 1.0 + float(np.abs(prob.V(t, x0)).max())
    ok = abs(integral) <= tol * scale
    return Verdict("A6", "pass" if ok else "fail", -abs(integral))


def check_A7(prob: ProblemSpec, m: int = 256) -> Verdict:
    """Forcing term lies in the conjugate Orlicz space (finite Luxemburg norm)."""
    t = np.linspace(-prob.T, prob.T, m + 1)
    fv = prob.f(t)
    if not np.isfinite(fv).all():
        return Verdict("A7", "fail", -math.inf, note="non-finite forcing sample")
    if not fv.any():
        return Verdict("A7", "pass", math.inf, note="f = 0")
    try:
        norm = _conjugate_norm_of_samples(prob.G, prob.T, m, fv)
    except Exception as exc:  # bisection failure = not in the space numerically
        return Verdict("A7", "fail", -math.inf, note=f"norm bisection failed: {exc}")
    return Verdict("A7", "pass" if math.isfinite(norm) else "fail", norm)


def conjugate_modular_of_f(prob: ProblemSpec, m: int = 256, scale: float = 1.0) -> float:
    """Modular of scale*f under the numerically conjugated integrand."""
    t = np.linspace(-prob.T, prob.T, m + 1)
    fv = scale * prob.f(t)
    if not fv.any():
        return 0.0
    vals, _ = conjugate_batch(prob.G, fv, ConjugateOpts(certify=False))
    return time_quadrature(prob.T, m, vals)


def _conjugate_norm_of_samples(g: GFunctionSpec, T: float, m: int, fv: Array) -> float:
    from .orlicz_space import _bisect_norm

    def mod_at(lam: float) -> float:
        vals, _ = conjugate_batch(g, fv / lam, ConjugateOpts(certify=False))
        return time_quadrature(T, m, vals)

    return _bisect_norm(mod_at, 1e-10)


def integral_of_a(prob: ProblemSpec, m: int = 2048) -> float:
    t = np.linspace(-prob.T, prob.T, m + 1)
    return time_quadrature(prob.T, m, prob.a(t))


@dataclasses.dataclass(frozen=True)
class TheoremInputs:
    r_gstar_f: float
    integral_a: float
    rho: float
    p_g: float
    q_g: float
    q_g_inf: float
    delta2_global: bool
    nabla2_global: bool


def theorem_inputs(prob: ProblemSpec, m: int = 256) -> TheoremInputs:
    plan = recommended_plan(prob.G.name)
    idx = simonenko_indices(prob.G, plan)
    d2 = check_delta2(prob.G, plan)
    n2 = check_nabla2(prob.G, plan)
    c = embedding_constant(prob.G, prob.T)
    return TheoremInputs(
        r_gstar_f=conjugate_modular_of_f(prob, m),
        integral_a=integral_of_a(prob),
        rho=rho_of(prob.rho0, c),
        p_g=idx.p_g, q_g=idx.q_g, q_g_inf=idx.q_g_inf,
        delta2_global=d2.satisfied and d2.holds_globally,
        nabla2_global=n2.satisfied and n2.holds_globally,
    )


def rhs_theorem1(inputs: TheoremInputs, b: float) -> float:
    expo = inputs.q_g if inputs.rho <= 2.0 else inputs.p_g
    return min(1.0, b - 1.0) * (inputs.rho / 2.0) ** expo


def rhs_theorem2(inputs: TheoremInputs, b: float) -> float:
    return min(1.0, b - 1.0) * (inputs.rho / 2.0)


def check_theorem1(prob: ProblemSpec, inputs: Optional[TheoremInputs] = None,
                   m: int = 256) -> Verdict:
    """Strict smallness of the forcing modular for the globally-regular regime."""
    if inputs is None:
        inputs = theorem_inputs(prob, m)
    if not (inputs.delta2_global and inputs.nabla2_global):
        return Verdict("theorem1", "inconclusive", math.nan,
                       note="not applicable: doubling bounds are not global")
    rhs = rhs_theorem1(inputs, prob.b)
    lhs = inputs.r_gstar_f + inputs.integral_a
    margin = rhs - lhs
    ok = margin > _STRICT * max(1.0, abs(rhs))
    return Verdict("theorem1", "pass" if ok else "fail", margin,
                   note=f"lhs={lhs:.6g} rhs={rhs:.6g} rho={inputs.rho:.6g}")


def check_theorem2(prob: ProblemSpec, inputs: Optional[TheoremInputs] = None,
                   m: int = 256) -> Verdict:
    """Linear rim bound, applicable once rho >= 2."""
    if inputs is None:
        inputs = theorem_inputs(prob, m)
    if inputs.rho < 2.0:
        return Verdict("theorem2", "inconclusive", math.nan,
                       note=f"not applicable: rho={inputs.rho:.6g} < 2")
    rhs = rhs_theorem2(inputs, prob.b)
    lhs = inputs.r_gstar_f + inputs.integral_a
    margin = rhs - lhs
    ok = margin > _STRICT * max(1.0, abs(rhs))
    return Verdict("theorem2", "pass" if ok else "fail", margin,
                   note=f"lhs={lhs:.6g} rhs={rhs:.6g} rho={inputs.rho:.6g}")


@dataclasses.dataclass(frozen=True)
class HypothesisReport:
    verdicts: dict[str, Verdict]
    r_gstar_f: float
    integral_a: float
    rho: float
    rhs_theorem1: float
    rhs_theorem2: float
    theorem1_applicable: bool
    theorem2_applicable: bool

    @property
    def theorem_passes(self) -> bool:
        return any(self.verdicts[k].passed for k in ("theorem1", "theorem2")
                   if k in self.verdicts)

    def to_text(self) -> str:
        rows: dict[str, object] = {}
        for name, v in self.verdicts.items():
            rows[f"{name}.status"] = v.status
            rows[f"{name}.margin"] = v.margin
            if v.witness is not None:
                rows[f"{name}.witness"] = v.witness
            if v.note:
                rows[f"{name}.note"] = v.note
        rows.update({
            "R_Gstar_f": self.r_gstar_f, "integral_a": self.integral_a,
            "rho": self.rho, "rhs_theorem1": self.rhs_theorem1,
            "rhs_theorem2": self.rhs_theorem2,
            "theorem1_applicable": self.theorem1_applicable,
            "theorem2_applicable": self.theorem2_applicable,
        })
        return render_report("hypothesis_report", rows)


def check_all(prob: ProblemSpec, m: int = 256) -> HypothesisReport:
    """Run A1-A7 and both theorem inequalities; deterministic merge."""
    from .gfunction import check_axioms

    inputs = theorem_inputs(prob, m)
    axioms = check_axioms(prob.G)
    verdicts: dict[str, Verdict] = {
        "A1": Verdict("A1", "pass" if axioms.all_passed else "fail",
                      0.0 if axioms.all_passed else -1.0,
                      note=", ".join(k for k, c in axioms.checks.items() if not c.passed)),
        "A2": _check_A2(prob),
        "A3": check_A3(prob),
        "A4": check_A4(prob),
        "A5": check_A5(prob, q_g_inf=inputs.q_g_inf),
        "A6": check_A6(prob),
        "A7": check_A7(prob, m),
        "theorem1": check_theorem1(prob, inputs),
        "theorem2": check_theorem2(prob, inputs),
    }
    return HypothesisReport(
        verdicts=verdicts,
        r_gstar_f=inputs.r_gstar_f, integral_a=inputs.integral_a, rho=inputs.rho,
        rhs_theorem1=rhs_theorem1(inputs, prob.b),
        rhs_theorem2=rhs_theorem2(inputs, prob.b),
        theorem1_applicable=inputs.delta2_global and inputs.nabla2_global,
        theorem2_applicable=inputs.rho >= 2.0,
    )


def _check_A2(prob: ProblemSpec, n: int = 400) -> Verdict:
    """C^1 smoke test: analytic/declared x-gradients match central differences."""
    rng = np.random.default_rng(0)
    t = rng.uniform(-prob.T, prob.T, n)
    x = rng.uniform(-2.0, 2.0, (n, prob.N))
    h = 1e-6
    worst = 0.0
    for j in range(prob.N):
        e = np.zeros(prob.N)
        e[j] = 1.0
        for fn, grad in ((prob.K, prob.K_x), (prob.W, prob.W_x)):
            fd = (fn(t, x + h * e) - fn(t, x - h * e)) / (2.0 * h)
            an = grad(t, x)[..., j]
            scale = 1.0 + np.abs(fd) + np.abs(an)
            worst = max(worst, float(np.max(np.abs(fd - an) / scale)))
    ok = worst < 1e-4
    return Verdict("A2", "pass" if ok else "fail", -worst)
