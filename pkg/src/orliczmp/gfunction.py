"""G-function primitives: axioms, doubling bounds, growth indices, conjugation.

A G-function is an even convex function G: R^N -> [0, inf) with G(0) = 0 and
superlinear growth G(x)/|x| -> inf.  All verdicts produced here are sampled
verdicts: they hold on the sampling plan they were computed with, nothing more.

Evaluation convention: ``eval_fn`` maps arrays of shape (..., N) to shape
(...); ``grad_fn`` maps (..., N) to (..., N).  Built-ins are fully vectorized.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

from .reports import render_report

Array = np.ndarray

_FD_STEP = 1e-6  # relative step for central-difference gradients


class GFunctionError(ValueError):
    """Raised for structurally invalid G-function inputs."""


class DegenerateGFunctionError(GFunctionError):
    """G vanishes on a nonzero sample; index ratios are undefined there."""


class ConjugateError(RuntimeError):
    """Conjugate could not be localized or certified to tolerance."""


# ---------------------------------------------------------------------------
# sampling plans
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class SamplingPlan:
    """Directions-times-radii sampling of R^N.

    61 log-spaced radii pin the powers of ten (including r = 1) as exact grid
    points; directions are equispaced on the circle for N = 2 and seeded
    quasi-uniform for N >= 3.
    """

    n_directions: int = 64
    r_min: float = 1e-4
    r_max: float = 1e4
    n_radii: int = 61
    seed: int = 0

    def radii(self) -> Array:
        return np.geomspace(self.r_min, self.r_max, self.n_radii)

    def directions(self, dim: int) -> Array:
        if dim < 1:
            raise GFunctionError("dimension must be >= 1")
        if dim == 1:
            return np.array([[1.0], [-1.0]])[: max(2, min(2, self.n_directions))]
        if dim == 2:
            ang = 2.0 * np.pi * np.arange(self.n_directions) / self.n_directions
            return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        rng = np.random.default_rng(self.seed)
        v = rng.standard_normal((self.n_directions, dim))
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def grid(self, dim: int) -> Array:
        """All sample points, shape (n_radii, n_dirs, dim)."""
        return self.radii()[:, None, None] * self.directions(dim)[None, :, :]


# ---------------------------------------------------------------------------
# the G-function record
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class GFunctionSpec:
    """A candidate G-function with evaluation and gradient callables."""

    dim: int
    eval_fn: Callable[[Array], Array]
    grad_fn: Optional[Callable[[Array], Array]] = None
    name: str = "custom"
    params: tuple = ()

    def __call__(self, x) -> Array:
        x = np.asarray(x, dtype=float)
        return np.asarray(self.eval_fn(x), dtype=float)

    def grad(self, x) -> Array:
        x = np.asarray(x, dtype=float)
        if self.grad_fn is not None:
            return np.asarray(self.grad_fn(x), dtype=float)
        return self.fd_grad(x)

    def fd_grad(self, x) -> Array:
        """Central finite-difference gradient, step 1e-6 * max(1, |x|)."""
        x = np.asarray(x, dtype=float)
        h = _FD_STEP * np.maximum(1.0, np.linalg.norm(x, axis=-1, keepdims=True))
        out = np.empty_like(x)
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = 1.0
            out[..., j] = (self(x + h * e) - self(x - h * e)) / (2.0 * h[..., 0])
        return out

    def label(self) -> str:
        if self.params:
            return f"{self.name}({', '.join(repr(p) for p in self.params)})"
        return self.name


# ---------------------------------------------------------------------------
# built-in registry
# ---------------------------------------------------------------------------

def _power(p: float, dim: int = 1) -> GFunctionSpec:
    if p <= 1:
        raise GFunctionError("power exponent must exceed 1 for superlinearity")

    def val(x):
        r = np.linalg.norm(x, axis=-1)
        return r ** p

    def grd(x):
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = p * r ** (p - 2.0) * x
        return np.where(r > 0, g, 0.0)

    return GFunctionSpec(dim, val, grd, name="power", params=(p, dim))


def _double_power(p1: float, p2: float, dim: int = 1) -> GFunctionSpec:
    if min(p1, p2) <= 1:
        raise GFunctionError("double_power exponents must exceed 1")

    def val(x):
        r = np.linalg.norm(x, axis=-1)
        return r ** p1 + r ** p2

    def grd(x):
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = (p1 * r ** (p1 - 2.0) + p2 * r ** (p2 - 2.0)) * x
        return np.where(r > 0, g, 0.0)

    return GFunctionSpec(dim, val, grd, name="double_power", params=(p1, p2, dim))


def _example1() -> GFunctionSpec:
    def val(x):
        return x[..., 0] ** 2 + (x[..., 0] - x[..., 1]) ** 4

    def grd(x):
        d = x[..., 0] - x[..., 1]
        return np.stack([2.0 * x[..., 0] + 4.0 * d ** 3, -4.0 * d ** 3], axis=-1)

    return GFunctionSpec(2, val, grd, name="example1")


def _exp_degenerate(dim: int = 1) -> GFunctionSpec:
    # r^2 exp(-1/r): flat to all orders at 0, so doubling fails near the origin.
    def val(x):
        r = np.linalg.norm(x, axis=-1)
        with np.errstate(divide="ignore", under="ignore"):
            v = r ** 2 * np.exp(-1.0 / np.where(r > 0, r, 1.0))
        return np.where(r > 0, v, 0.0)

    def grd(x):
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", under="ignore"):
            g = np.exp(-1.0 / np.where(r > 0, r, 1.0)) * (2.0 + 1.0 / np.where(r > 0, r, 1.0)) * x
        return np.where(r > 0, g, 0.0)

    return GFunctionSpec(dim, val, grd, name="exp_degenerate", params=(dim,))


_REGISTRY: dict[str, Callable[..., GFunctionSpec]] = {
    "power": _power,
    "double_power": _double_power,
    "example1": lambda: _example1(),
    "exp_degenerate": _exp_degenerate,
}

# exp_degenerate underflows to exactly 0 below r ~ 1e-3; sampled index ratios
# need a floor above that.
RECOMMENDED_PLANS: dict[str, SamplingPlan] = {
    "exp_degenerate": SamplingPlan(r_min=0.05, r_max=1e4),
}


def registered_gfunctions() -> list[str]:
    return sorted(_REGISTRY)


def make_gfunction(name: str, *params: float) -> GFunctionSpec:
    if name not in _REGISTRY:
        raise GFunctionError(
            f"unknown G-function {name!r}; registered: {', '.join(registered_gfunctions())}"
        )
    return _REGISTRY[name](*params)


def recommended_plan(name: str) -> SamplingPlan:
    return RECOMMENDED_PLANS.get(name, SamplingPlan())


# ---------------------------------------------------------------------------
# axiom checking
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class CheckResult:
    passed: bool
    worst: float
    witness: Optional[tuple] = None


@dataclasses.dataclass(frozen=True)
class AxiomReport:
    checks: dict[str, CheckResult]
    sample_count: int

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def to_text(self) -> str:
        rows = {"all_passed": self.all_passed, "sample_count": self.sample_count}
        for k, c in self.checks.items():
            rows[f"{k}.passed"] = c.passed
            rows[f"{k}.worst"] = c.worst
            if c.witness is not None:
                rows[f"{k}.witness"] = c.witness
        return render_report("axiom_report", rows)


def check_axioms(g: GFunctionSpec, sampling: SamplingPlan = SamplingPlan()) -> AxiomReport:
    """Sampled verification of the G-function axioms.

    Convexity is tested both at midpoints and through the two-sided gradient
    bracket G(x) - G(x-y) <= <grad G(x), y> <= G(x+y) - G(x).
    """
    grid = sampling.grid(g.dim)
    pts = grid.reshape(-1, g.dim)
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        return _check_axioms_inner(g, sampling, grid, pts)


def _check_axioms_inner(g: GFunctionSpec, sampling: SamplingPlan,
                        grid: Array, pts: Array) -> AxiomReport:
    vals = g(pts)
    checks: dict[str, CheckResult] = {}

    finite = np.isfinite(vals)
    if not finite.all():
        j = int(np.argmin(finite))
        checks["finite"] = CheckResult(False, math.inf, tuple(pts[j]))
    else:
        checks["finite"] = CheckResult(True, 0.0)

    v0 = float(g(np.zeros(g.dim)))
    checks["zero_at_origin"] = CheckResult(abs(v0) <= 1e-12, abs(v0), None)

    neg = np.where(finite, vals, 0.0)
    worst_neg = float(np.minimum(neg, 0.0).min())
    jn = int(np.argmin(neg))
    checks["nonnegative"] = CheckResult(
        worst_neg >= -1e-12, -worst_neg, tuple(pts[jn]) if worst_neg < -1e-12 else None
    )

    even_gap = np.abs(vals - g(-pts))
    scale = 1.0 + np.abs(vals)
    rel = np.where(finite, even_gap / scale, 0.0)
    je = int(np.argmax(rel))
    checks["even"] = CheckResult(float(rel.max()) <= 1e-9, float(rel.max()),
                                 tuple(pts[je]) if rel.max() > 1e-9 else None)

    rng = np.random.default_rng(sampling.seed)
    n_pairs = min(4000, len(pts) * 2)
    ia = rng.integers(0, len(pts), n_pairs)
    ib = rng.integers(0, len(pts), n_pairs)
    xa, xb = pts[ia], pts[ib]
    mid_gap = g((xa + xb) / 2.0) - 0.5 * (g(xa) + g(xb))
    mscale = 1.0 + np.abs(g(xa)) + np.abs(g(xb))
    mrel = mid_gap / mscale
    jm = int(np.argmax(mrel))
    checks["midpoint_convexity"] = CheckResult(
        float(np.nanmax(mrel)) <= 1e-9, float(np.nanmax(mrel)),
        (tuple(xa[jm]), tuple(xb[jm])) if np.nanmax(mrel) > 1e-9 else None,
    )

    inner = np.einsum("ij,ij->i", g.grad(xa), xb)
    lo_gap = (g(xa) - g(xa - xb)) - inner          # must be <= 0
    hi_gap = inner - (g(xa + xb) - g(xa))          # must be <= 0
    bscale = 1.0 + np.abs(g(xa)) + np.abs(g(xa + xb)) + np.abs(g(xa - xb))
    brel = np.maximum(lo_gap, hi_gap) / bscale
    jb = int(np.argmax(brel))
    checks["gradient_bracket"] = CheckResult(
        float(np.nanmax(brel)) <= 1e-8, float(np.nanmax(brel)),
        (tuple(xa[jb]), tuple(xb[jb])) if np.nanmax(brel) > 1e-8 else None,
    )

    # superlinearity: G(r w)/r nondecreasing along each ray and growing
    # without bound (proxy: outermost slope >= 10x the mid-radius slope).
    radii = sampling.radii()
    slopes = g(grid) / radii[:, None]
    drops = (slopes[:-1, :] - slopes[1:, :]) / (1.0 + np.abs(slopes[1:, :]))
    worst_drop = float(np.nanmax(drops)) if drops.size else 0.0
    mid = sampling.n_radii // 2
    with np.errstate(divide="ignore", invalid="ignore"):
        growth = slopes[-1, :] / np.where(slopes[mid, :] > 0, slopes[mid, :], np.nan)
    min_growth = float(np.nanmin(growth)) if np.isfinite(growth).any() else 0.0
    ok = worst_drop <= 1e-8 and min_growth >= 10.0 and np.isfinite(growth).all()
    jd = int(np.nanargmin(growth)) if np.isfinite(growth).any() else 0
    checks["superlinear"] = CheckResult(
        ok, worst_drop if worst_drop > 1e-8 else 10.0 - min_growth,
        tuple(sampling.directions(g.dim)[jd]) if not ok else None,
    )

    return AxiomReport(checks=checks, sample_count=len(pts))


# ---------------------------------------------------------------------------
# doubling conditions
# ---------------------------------------------------------------------------

_MARGIN = 1.01          # multiplier on estimated constants, absorbs sampling gaps
_BLOWUP_FACTOR = 2.0    # shell sup above this multiple of the tail sup = blow-up


@dataclasses.dataclass(frozen=True)
class Delta2Report:
    k1: float
    m1: float
    holds_globally: bool
    satisfied: bool
    sample_count: int
    max_radius: float
    shell_sups: tuple = ()

    def to_text(self) -> str:
        return render_report("delta2_report", {
            "satisfied": self.satisfied, "holds_globally": self.holds_globally,
            "K1": self.k1, "M1": self.m1,
            "sample_count": self.sample_count, "max_radius": self.max_radius,
        })


@dataclasses.dataclass(frozen=True)
class Nabla2Report:
    k2: float
    m2: float
    holds_globally: bool
    satisfied: bool
    sample_count: int
    max_radius: float
    k2_max: float = math.nan

    def to_text(self) -> str:
        return render_report("nabla2_report", {
            "satisfied": self.satisfied, "holds_globally": self.holds_globally,
            "K2": self.k2, "M2": self.m2,
            "sample_count": self.sample_count, "max_radius": self.max_radius,
        })


def _shell_ratio_sups(g: GFunctionSpec, sampling: SamplingPlan, factor: float) -> tuple[Array, Array]:
    """Per-radius sups of G(factor*x)/G(x); nan where G vanishes on a shell."""
    grid = sampling.grid(g.dim)
    base = g(grid)
    scaled = g(factor * grid)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = np.where(base > 0, scaled / base, np.nan)
    informative = np.isfinite(ratio).any(axis=1)
    sups = np.full(ratio.shape[0], np.nan)
    if informative.any():
        sups[informative] = np.nanmax(ratio[informative], axis=1)
    # shells where the scaled value blew up while the base stayed positive
    blew = (~np.isfinite(scaled) & (base > 0)).any(axis=1)
    sups[blew] = np.inf
    return sups, sampling.radii()


def check_delta2(g: GFunctionSpec, sampling: SamplingPlan = SamplingPlan()) -> Delta2Report:
    """Sampled doubling constant: G(2x) <= K1 G(x) for |x| >= M1."""
    sups, radii = _shell_ratio_sups(g, sampling, 2.0)
    n = len(radii)
    informative = np.isfinite(sups)
    if not informative.any():
        return Delta2Report(math.inf, math.inf, False, False, sampling.n_directions * n,
                            sampling.r_max, tuple(sups))

    outer = sups[n // 2:]
    outer = outer[np.isfinite(outer)]
    if outer.size == 0 or not np.isfinite(outer).all():
        return Delta2Report(math.inf, math.inf, False, False, sampling.n_directions * n,
                            sampling.r_max, tuple(sups))
    tail_sup = float(outer.max())
    threshold = _BLOWUP_FACTOR * tail_sup

    ok = informative & (sups <= threshold)
    # smallest index from which every shell (to r_max) is finite and tame
    start = n
    for i in range(n - 1, -1, -1):
        if ok[i]:
            start = i
        else:
            break
    if start == n:
        return Delta2Report(math.inf, math.inf, False, False, sampling.n_directions * n,
                            sampling.r_max, tuple(sups))

    # shells below `start` that are pure underflow (nan) carry no evidence;
    # global only if the tame suffix reaches the smallest informative radius
    first_informative = int(np.argmax(informative))
    holds_globally = start <= first_informative
    k1 = _MARGIN * float(np.nanmax(sups[start:]))
    m1 = 0.0 if holds_globally else float(radii[start])
    return Delta2Report(k1, m1, holds_globally, True, sampling.n_directions * n,
                        sampling.r_max, tuple(sups))


def check_nabla2(g: GFunctionSpec, sampling: SamplingPlan = SamplingPlan(),
                 k2_max: float = 64.0) -> Nabla2Report:
    """Smallest sampled K2 > 1 with G(x) <= G(K2 x)/(2 K2) for |x| >= M2."""
    grid = sampling.grid(g.dim)
    base = g(grid)
    radii = sampling.radii()
    n = len(radii)
    candidates = np.unique(np.concatenate([
        np.geomspace(1.02, k2_max, 80), [2.0, 4.0, 8.0, 16.0]]))
    informative = np.isfinite(base) & (base > 0)

    best: Optional[tuple[float, int]] = None
    for k2 in candidates:
        with np.errstate(over="ignore", under="ignore"):
            rhs = g(k2 * grid) / (2.0 * k2)
        ok_pt = rhs * (1.0 + 1e-12) + 1e-300 >= base
        ok_shell = np.all(ok_pt | ~informative, axis=1) & np.any(informative, axis=1)
        start = n
        for i in range(n - 1, -1, -1):
            if ok_shell[i]:
                start = i
            else:
                break
        if start < n:
            best = (float(k2), start)
            break

    count = sampling.n_directions * n
    if best is None:
        return Nabla2Report(math.nan, math.nan, False, False, count,
                            sampling.r_max, k2_max=k2_max)
    k2, start = best
    first_informative = int(np.argmax(np.any(informative, axis=1)))
    holds_globally = start <= first_informative
    m2 = 0.0 if holds_globally else float(radii[start])
    return Nabla2Report(k2, m2, holds_globally, True, count, sampling.r_max, k2_max=k2_max)


# ---------------------------------------------------------------------------
# growth indices
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class SimonenkoIndices:
    p_g: float
    q_g: float
    q_g_inf: float
    shells: tuple            # (radius, inf ratio, sup ratio) triples
    stabilization_warning: bool = False

    def to_text(self) -> str:
        rows = {
            "p_G": self.p_g, "q_G": self.q_g, "q_G_inf": self.q_g_inf,
            "stabilization_warning": self.stabilization_warning,
        }
        for r, lo, hi in self.shells:
            rows[f"shell[{r:g}]"] = (lo, hi)
        return render_report("simonenko_indices", rows)


_Q_INF_SHELLS = 5
_STABILIZATION_RTOL = 1e-3


def simonenko_indices(g: GFunctionSpec, sampling: SamplingPlan = SamplingPlan()) -> SimonenkoIndices:
    """inf / sup / tail-sup of <x, grad G(x)> / G(x) over the sampling grid."""
    grid = sampling.grid(g.dim)
    vals = g(grid)
    if (vals <= 0).any():
        bad = np.argwhere(vals <= 0)
        i, j = bad[0]
        direction = sampling.directions(g.dim)[j]
        raise DegenerateGFunctionError(
            f"G vanishes at radius {sampling.radii()[i]:g} along direction {tuple(direction)}"
        )
    ratio = np.einsum("rdj,rdj->rd", grid, g.grad(grid)) / vals
    if not np.isfinite(ratio).all():
        raise DegenerateGFunctionError("non-finite index ratio encountered")

    radii = sampling.radii()
    shell_lo = ratio.min(axis=1)
    shell_hi = ratio.max(axis=1)
    shells = tuple((float(r), float(lo), float(hi))
                   for r, lo, hi in zip(radii, shell_lo, shell_hi))

    tail = shell_hi[-_Q_INF_SHELLS:]
    q_inf = float(tail.max())
    spread = float((tail.max() - tail.min()) / max(abs(tail.max()), 1e-300))
    return SimonenkoIndices(
        p_g=float(ratio.min()), q_g=float(ratio.max()), q_g_inf=q_inf,
        shells=shells, stabilization_warning=spread > _STABILIZATION_RTOL,
    )


# ---------------------------------------------------------------------------
# Fenchel conjugation
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class ConjugateOpts:
    tol: float = 1e-4                # certificate gap target (abs and relative)
    growth: float = 4.0
    r0: float = 1.0
    r_cap: float = 1e12
    probe_directions: int = 32
    probe_radii: int = 48
    newton_max: int = 60
    certify: Optional[bool] = None   # None = certify for dim <= 2
    cert_grid: int = 160


def _probe_set(g: GFunctionSpec, radius: float, opts: ConjugateOpts) -> Array:
    plan = SamplingPlan(n_directions=opts.probe_directions,
                        r_min=max(radius * 1e-8, 1e-12), r_max=radius,
                        n_radii=opts.probe_radii)
    pts = plan.grid(g.dim).reshape(-1, g.dim)
    return np.vstack([np.zeros((1, g.dim)), pts])


def _fd_hessian(g: GFunctionSpec, x: Array) -> Array:
    """Batched central-difference Hessian (FD of the gradient)."""
    n = x.shape[-1]
    h = 1e-5 * np.maximum(1.0, np.linalg.norm(x, axis=-1, keepdims=True))
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cols.append((g.grad(x + h * e) - g.grad(x - h * e)) / (2.0 * h))
    hess = np.stack(cols, axis=-1)
    return 0.5 * (hess + np.swapaxes(hess, -1, -2))


def conjugate_batch(g: GFunctionSpec, y: Array, opts: ConjugateOpts = ConjugateOpts()
                    ) -> tuple[Array, Array]:
    """Values and maximizers of sup_x <x,y> - G(x) for a batch of y.

    Box expansion localizes each maximizer (the probe argmax must fall
    strictly inside the box), then a damped Newton ascent polishes it.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    m = len(y)
    best_val = np.zeros(m)
    best_x = np.zeros_like(y)
    radius = max(opts.r0, 2.0 * float(np.abs(y).max(initial=0.0)))
    unresolved = np.ones(m, dtype=bool)

    while unresolved.any():
        probes = _probe_set(g, radius, opts)
        pv = g(probes)
        outer = np.linalg.norm(probes, axis=-1) >= radius * 0.999
        idx = np.where(unresolved)[0]
        for lo in range(0, len(idx), 2048):
            sel = idx[lo:lo + 2048]
            scores = probes @ y[sel].T - pv[:, None]
            jbest = np.argmax(scores, axis=0)
            best_val[sel] = scores[jbest, np.arange(len(sel))]
            best_x[sel] = probes[jbest]
            unresolved[sel] = outer[jbest]
        if unresolved.any():
            radius *= opts.growth
            if radius > opts.r_cap:
                raise ConjugateError(
                    "conjugate not localized: search radius exceeded cap "
                    f"{opts.r_cap:g} (is G superlinear?)")

    val, x = _newton_ascend(g, y, best_x, opts)
    # Newton may stall on nearly flat regions; keep the better of probe/polish.
    keep = val < best_val
    val = np.where(keep, best_val, val)
    x = np.where(keep[:, None], best_x, x)
    return val, x


def _newton_ascend(g: GFunctionSpec, y: Array, x0: Array, opts: ConjugateOpts
                   ) -> tuple[Array, Array]:
    """Maximize h(x) = <x,y> - G(x) by damped Newton from x0, batched."""
    x = x0.copy()
    hv = np.einsum("ij,ij->i", x, y) - g(x)
    yscale = 1.0 + np.linalg.norm(y, axis=-1)
    for _ in range(opts.newton_max):
        grad_h = y - g.grad(x)
        gn = np.linalg.norm(grad_h, axis=-1)
        active = np.where(gn > 1e-13 * yscale)[0]
        if active.size == 0:
            break
        xa = x[active]
        ya = y[active]
        ha = hv[active]
        hess = _fd_hessian(g, xa)
        reg = 1e-12 * (1.0 + np.abs(np.trace(hess, axis1=-2, axis2=-1)))[..., None, None]
        hess = hess + reg * np.eye(g.dim)
        try:
            step = np.linalg.solve(hess, grad_h[active][..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = grad_h[active]
        s = np.ones(len(xa))
        accepted = np.zeros(len(xa), dtype=bool)
        xn = xa.copy()
        hn = ha.copy()
        for _ in range(45):
            trial = xa + s[:, None] * step
            ht = np.einsum("ij,ij->i", trial, ya) - g(trial)
            better = ~accepted & np.isfinite(ht) & (ht > hn)
            xn[better] = trial[better]
            hn[better] = ht[better]
            accepted |= better
            if accepted.all() or (s < 1e-14).all():
                break
            s = np.where(accepted, s, s * 0.5)
        x[active] = xn
        prev = hv[active].copy()
        hv[active] = hn
        if np.all(hn - prev <= 1e-13 * (1.0 + np.abs(hn))):
            break
    return hv, x


def _grid_upper_bound(g: GFunctionSpec, y: Array, radius: float, n: int) -> float:
    """Concavity bound max_i [h(x_i) + |grad h(x_i)| * delta] over a box grid.

    Every point of the box lies within delta (half cell diagonal) of a grid
    point, and concave h is below each supporting plane.
    """
    axes = [np.linspace(-radius, radius, n)] * g.dim
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, g.dim)
    hval = mesh @ y - g(mesh)
    ghn = np.linalg.norm(y[None, :] - g.grad(mesh), axis=-1)
    delta = (radius / (n - 1)) * math.sqrt(g.dim)
    return float(np.max(hval + ghn * delta))


def fenchel_conjugate(g: GFunctionSpec, y, opts: ConjugateOpts = ConjugateOpts()) -> float:
    """sup_x { <x,y> - G(x) } with an optional concavity certificate.

    Two upper bounds certify the polished lower bound: the supporting plane
    at the polished maximizer (tight when the ascent converged, since its
    slope is the residual gradient) and a box grid of supporting-plane
    estimates (independent of the ascent).  The smaller of the two must come
    within opts.tol of the lower bound.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != g.dim:
        raise GFunctionError(f"conjugate argument must have dim {g.dim}")
    vals, xs = conjugate_batch(g, y[None, :], opts)
    lb = float(vals[0])
    do_cert = opts.certify if opts.certify is not None else (g.dim <= 2)
    if do_cert:
        radius = max(opts.r0, 2.0 * float(np.linalg.norm(xs[0])), 1.0)
        target = max(opts.tol, opts.tol * abs(lb))
        grad_res = float(np.linalg.norm(y - g.grad(xs[0])))
        ub_plane = lb + grad_res * 2.0 * radius * math.sqrt(g.dim)
        ub = ub_plane
        if ub - lb > target:
            ub = min(ub, _grid_upper_bound(g, y, radius, opts.cert_grid))
        if ub - lb > target:
            raise ConjugateError(
                f"conjugate certificate gap {ub - lb:g} exceeds tol {target:g}")
    return lb


def conjugate_maximizer_batch(g: GFunctionSpec, y: Array,
                              opts: ConjugateOpts = ConjugateOpts()) -> Array:
    """argmax_x <x,y> - G(x); equals the gradient of the conjugate at y."""
    _, xs = conjugate_batch(g, y, opts)
    return xs


class ConjugateTable:
    """Tabulated conjugate on a (direction, log-radius) grid, dims 1-2.

    Values come from the exact batched conjugate; queries interpolate
    log-linearly in radius (exact for power laws) and linearly across
    directions.  The table widens itself on out-of-range queries.
    """

    def __init__(self, g: GFunctionSpec, n_angles: int = 192, n_scales: int = 72):
        if g.dim > 2:
            raise GFunctionError("ConjugateTable supports dim <= 2")
        self.g = g
        self.n_angles = n_angles if g.dim == 2 else 2
        self.n_scales = n_scales
        self._s_lo: Optional[float] = None
        self._s_hi: Optional[float] = None
        self._table: Optional[Array] = None

    def _build(self, s_lo: float, s_hi: float) -> None:
        self._s_lo, self._s_hi = s_lo, s_hi
        scales = np.geomspace(s_lo, s_hi, self.n_scales)
        if self.g.dim == 1:
            dirs = np.array([[1.0], [-1.0]])
        else:
            ang = 2.0 * np.pi * np.arange(self.n_angles) / self.n_angles
            dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        pts = (scales[:, None, None] * dirs[None, :, :]).reshape(-1, self.g.dim)
        vals, _ = conjugate_batch(self.g, pts, ConjugateOpts(certify=False))
        self._table = np.log(np.maximum(vals, 1e-300)).reshape(self.n_scales, len(dirs))
        self._log_s = np.log(scales)

    def evaluate(self, y: Array) -> Array:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        s = np.linalg.norm(y, axis=-1)
        smax = float(s.max(initial=0.0))
        smin = float(np.where(s > 0, s, np.inf).min(initial=np.inf))
        if smax == 0.0:
            return np.zeros(len(y))
        if not math.isfinite(smin):
            smin = smax
        if self._table is None or smin < self._s_lo * 1.0000001 or smax > self._s_hi * 0.9999999:
            lo = min(smin / 1e3, self._s_lo or math.inf)
            hi = max(smax * 1e3, self._s_hi or 0.0)
            self._build(lo, hi)

        out = np.zeros(len(y))
        nz = s > 0
        ls = np.log(s[nz])
        ti = np.clip(np.searchsorted(self._log_s, ls) - 1, 0, self.n_scales - 2)
        w = (ls - self._log_s[ti]) / (self._log_s[ti + 1] - self._log_s[ti])
        if self.g.dim == 1:
            ai = (y[nz, 0] < 0).astype(int)
            f = (1 - w) * self._table[ti, ai] + w * self._table[ti + 1, ai]
        else:
            theta = np.mod(np.arctan2(y[nz, 1], y[nz, 0]), 2.0 * np.pi)
            pos = theta / (2.0 * np.pi) * self.n_angles
            a0 = np.floor(pos).astype(int) % self.n_angles
            a1 = (a0 + 1) % self.n_angles
            wa = pos - np.floor(pos)
            f0 = (1 - w) * self._table[ti, a0] + w * self._table[ti + 1, a0]
            f1 = (1 - w) * self._table[ti, a1] + w * self._table[ti + 1, a1]
            f = (1 - wa) * f0 + wa * f1
        out[nz] = np.exp(f)
        return out


def conjugate_gfunction(g: GFunctionSpec, method: str = "exact") -> GFunctionSpec:
    """The conjugate of g packaged as a G-function.

    method="exact" polishes every evaluation (slow, accurate); "table"
    interpolates a cached grid (fast, ~1e-3 relative; fine for norms).
    """
    if method == "table":
        table = ConjugateTable(g)

        def val(x):
            x = np.asarray(x, dtype=float)
            flat = x.reshape(-1, g.dim)
            return table.evaluate(flat).reshape(x.shape[:-1])
    elif method == "exact":
        def val(x):
            x = np.asarray(x, dtype=float)
            flat = x.reshape(-1, g.dim)
            v, _ = conjugate_batch(g, flat, ConjugateOpts(certify=False))
            return v.reshape(x.shape[:-1])
    else:
        raise GFunctionError("method must be 'exact' or 'table'")

    def grd(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, g.dim)
        xs = conjugate_maximizer_batch(g, flat, ConjugateOpts(certify=False))
        return xs.reshape(x.shape)

    return GFunctionSpec(g.dim, val, grd, name=f"{g.name}_star", params=g.params)


def biconjugate_batch(g: GFunctionSpec, x: Array,
                      opts: ConjugateOpts = ConjugateOpts()) -> Array:
    """(G*)*(x) for a batch of x, via grid seeding and outer Newton ascent.

    The outer objective phi(y) = <x,y> - G*(y) has gradient x - argmax(y) and
    Hessian -[Hess G*(y)] = -[Hess G(argmax(y))]^{-1}, so each outer Newton
    step reuses the inner solve.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    # seed y tables: conjugate values on a direction x radius grid
    scale = max(1.0, float(np.linalg.norm(g.grad(x), axis=-1).max()))
    plan = SamplingPlan(n_directions=48 if g.dim > 1 else 2,
                        r_min=scale * 1e-6, r_max=scale * 4.0, n_radii=48)
    ygrid = np.vstack([np.zeros((1, g.dim)), plan.grid(g.dim).reshape(-1, g.dim)])
    gstar, _ = conjugate_batch(g, ygrid, dataclasses.replace(opts, certify=False))

    best = np.full(len(x), -np.inf)
    ybest = np.zeros_like(x)
    for lo in range(0, len(x), 2048):
        sel = slice(lo, lo + 2048)
        scores = ygrid @ x[sel].T - gstar[:, None]
        j = np.argmax(scores, axis=0)
        best[sel] = scores[j, np.arange(scores.shape[1])]
        ybest[sel] = ygrid[j]

    y = ybest.copy()
    # warm start at the stationary point y = grad G(x): for differentiable
    # strictly convex G the inner maximizer there is x itself and the outer
    # objective is already optimal
    y_station = g.grad(x)
    gs, xs = conjugate_batch(g, y_station, dataclasses.replace(opts, certify=False))
    v_station = np.einsum("ij,ij->i", x, y_station) - gs
    take = v_station > best
    y[take] = y_station[take]
    best = np.maximum(best, v_station)

    no_certify = dataclasses.replace(opts, certify=False)
    for _ in range(4):
        gs, xs = conjugate_batch(g, y, no_certify)
        val = np.einsum("ij,ij->i", x, y) - gs
        best = np.maximum(best, val)
        resid = x - xs
        if float(np.abs(resid).max()) < 1e-6 * (1.0 + float(np.abs(x).max())):
            break
        hess = _fd_hessian(g, xs)
        step = np.einsum("bij,bj->bi", hess, resid)
        improved_any = False
        for _ in range(10):
            trial = y + step
            gs_t, xs_t = _newton_ascend(g, trial, xs, no_certify)
            val_t = np.einsum("ij,ij->i", x, trial) - gs_t
            better = val_t > best + 1e-14 * (1.0 + np.abs(best))
            y[better] = trial[better]
            best[better] = val_t[better]
            improved_any = improved_any or bool(better.any())
            step = step * 0.5
        if not improved_any:
            break
    return best


# ---------------------------------------------------------------------------
# radial minorant
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class RadialOpts:
    n_directions: int = 1024
    r_min: float = 1e-6
    r_max: float = 1e6
    n_radii: int = 481
    extend_cap: float = 1e12
    seed: int = 0


class RadialMinorantError(RuntimeError):
    pass


def _lower_convex_hull(r: Array, v: Array) -> tuple[Array, Array]:
    """Monotone-chain lower hull of the points (r_i, v_i), r strictly increasing."""
    hull_r: list[float] = []
    hull_v: list[float] = []
    for ri, vi in zip(r, v):
        while len(hull_r) >= 2:
            r1, v1 = hull_r[-2], hull_v[-2]
            r2, v2 = hull_r[-1], hull_v[-1]
            if (v2 - v1) * (ri - r1) >= (vi - v1) * (r2 - r1):
                hull_r.pop(); hull_v.pop()
            else:
                break
        hull_r.append(float(ri)); hull_v.append(float(vi))
    return np.array(hull_r), np.array(hull_v)


def radial_minorant_inverse(g: GFunctionSpec, s: float,
                            opts: RadialOpts = RadialOpts()) -> float:
    """Inverse of the greatest convex radial minorant of G at level s >= 0.

    The minorant is built as the lower convex envelope of the directional
    minimum r -> min_w G(r w) on a log-radius grid through (0, 0).
    """
    if s < 0:
        raise GFunctionError("radial minorant inverse needs s >= 0")
    if s == 0:
        return 0.0
    plan = SamplingPlan(n_directions=opts.n_directions, seed=opts.seed,
                        r_min=opts.r_min, r_max=opts.r_max, n_radii=opts.n_radii)
    dirs = plan.directions(g.dim)
    r_max = opts.r_max
    while True:
        radii = np.geomspace(opts.r_min, r_max, opts.n_radii)
        m = g(radii[:, None, None] * dirs[None, :, :]).min(axis=1)
        r_all = np.concatenate([[0.0], radii])
        v_all = np.concatenate([[0.0], m])
        hr, hv = _lower_convex_hull(r_all, v_all)
        if hv[-1] >= s:
            # first hull segment crossing level s
            k = int(np.searchsorted(hv, s, side="left"))
            if k == 0:
                return 0.0
            r1, v1, r2, v2 = hr[k - 1], hv[k - 1], hr[k], hv[k]
            if v2 == v1:
                return float(r2)
            return float(r1 + (s - v1) * (r2 - r1) / (v2 - v1))
        r_max *= 10.0
        if r_max > opts.extend_cap:
            raise RadialMinorantError(
                f"level {s:g} not reached by the radial minorant below radius {opts.extend_cap:g}")


# ---------------------------------------------------------------------------
# growth comparison
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class GrowthOpts:
    k_max: float = 64.0
    n_k: int = 49
    plan: SamplingPlan = SamplingPlan()


@dataclasses.dataclass(frozen=True)
class GrowthReport:
    dominated: bool
    k: float
    m: float
    worst_ratio: float

    def to_text(self) -> str:
        return render_report("growth_report", {
            "dominated": self.dominated, "K": self.k, "M": self.m,
            "worst_ratio": self.worst_ratio,
        })


def compare_growth(g1: GFunctionSpec, g2: GFunctionSpec,
                   opts: GrowthOpts = GrowthOpts()) -> GrowthReport:
    """Search witnesses (K, M) for g1(x) <= g2(K x) on samples with |x| >= M."""
    if g1.dim != g2.dim:
        raise GFunctionError("growth comparison needs matching dimensions")
    plan = opts.plan
    grid = plan.grid(g1.dim)
    radii = plan.radii()
    n = len(radii)
    v1 = g1(grid)
    ks = np.unique(np.concatenate([[1.0], np.geomspace(1.0, opts.k_max, opts.n_k)]))
    worst = math.inf
    for k in ks:
        v2 = g2(k * grid)
        ok_shell = np.all(v1 <= v2 * (1 + 1e-12) + 1e-300, axis=1)
        start = n
        for i in range(n - 1, -1, -1):
            if ok_shell[i]:
                start = i
            else:
                break
        if start < n:
            m = 0.0 if start == 0 else float(radii[start])
            return GrowthReport(True, float(k), m, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            outer_ratio = np.nanmax((v1 / np.maximum(v2, 1e-300))[n // 2:])
        worst = min(worst, float(outer_ratio))
    return GrowthReport(False, math.nan, math.nan, worst)
