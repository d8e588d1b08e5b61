"""Action functional, exact discrete gradient, tent endpoints, problem library.

The action of a periodic grid function u is

    J(u) = sum_cells h * G(slope) + trapz_t [ K(t,u) - W(t,u) + <f(t), u> ]

where the potential part uses the true trapezoid in t (half weights at both
endpoints, u(T) = u(-T) = u_0 structurally).  The gradient returned by
``action_gradient`` is the exact derivative of this discrete J with respect
to the nodal values, so descent, Newton polish and residual certificates all
see the same object.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

from .gfunction import GFunctionSpec, make_gfunction
from .orlicz_space import PeriodicGridFunction, derivative

Array = np.ndarray

_FD_STEP = 1e-6


class ProblemError(ValueError):
    pass


def _fd_grad_x(fn: Callable[[Array, Array], Array]) -> Callable[[Array, Array], Array]:
    def grad(t: Array, x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        h = _FD_STEP * np.maximum(1.0, np.linalg.norm(x, axis=-1, keepdims=True))
        cols = []
        for j in range(x.shape[-1]):
            e = np.zeros(x.shape[-1])
            e[j] = 1.0
            cols.append((fn(t, x + h * e) - fn(t, x - h * e)) / (2.0 * h[..., 0]))
        return np.stack(np.broadcast_arrays(*cols), axis=-1)
    return grad


@dataclasses.dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Full problem data for the periodic Euler-Lagrange system.

    K, W map (t, x) -> real with x of shape (..., N) and broadcastable t;
    f maps t -> (..., N); a and kappa map t -> (...).  b, rho0, b1, p, mu, nu
    are the certificate constants for the hypothesis checks.
    """

    name: str
    T: float
    N: int
    G: GFunctionSpec
    K: Callable[[Array, Array], Array]
    W: Callable[[Array, Array], Array]
    f: Callable[[Array], Array]
    a: Callable[[Array], Array]
    kappa: Callable[[Array], Array]
    b: float
    rho0: float
    b1: float
    p: float
    mu: float
    nu: float
    K_x: Optional[Callable[[Array, Array], Array]] = None
    W_x: Optional[Callable[[Array, Array], Array]] = None

    def __post_init__(self):
        if self.T <= 0 or self.rho0 <= 0 or self.b <= 1 or self.p <= 1 or self.b1 <= 0:
            raise ProblemError("need T > 0, rho0 > 0, b > 1, p > 1, b1 > 0")
        if self.G.dim != self.N:
            raise ProblemError("G dimension must match N")
        if self.K_x is None:
            object.__setattr__(self, "K_x", _fd_grad_x(self.K))
        if self.W_x is None:
            object.__setattr__(self, "W_x", _fd_grad_x(self.W))

    def V(self, t: Array, x: Array) -> Array:
        return self.K(t, x) - self.W(t, x)

    def V_x(self, t: Array, x: Array) -> Array:
        return self.K_x(t, x) - self.W_x(t, x)


def _closed_nodes(prob: ProblemSpec, u: PeriodicGridFunction) -> tuple[Array, Array]:
    """Times and values at the m+1 closed nodes (both endpoints, u_m = u_0)."""
    t = np.linspace(-prob.T, prob.T, u.m + 1)
    x = np.vstack([u.values, u.values[:1]])
    return t, x


def action(prob: ProblemSpec, u: PeriodicGridFunction) -> float:
    """Discrete action J(u)."""
    if u.dim != prob.N or abs(u.T - prob.T) > 1e-12 * max(1.0, prob.T):
        raise ProblemError("grid function is incompatible with the problem")
    du = derivative(u)
    kinetic = float(u.h * prob.G(du.values).sum())
    t, x = _closed_nodes(prob, u)
    integrand = prob.V(t, x) + np.einsum("ij,ij->i", prob.f(t), x)
    if not np.isfinite(integrand).all():
        j = int(np.argmin(np.isfinite(integrand)))
        raise ProblemError(f"non-finite potential value at t={t[j]:g}, u={tuple(x[j])}")
    potential = float(u.h * (0.5 * integrand[0] + integrand[1:-1].sum() + 0.5 * integrand[-1]))
    if not math.isfinite(kinetic):
        raise ProblemError("non-finite kinetic term")
    return kinetic + potential


def action_gradient(prob: ProblemSpec, u: PeriodicGridFunction) -> Array:
    """Exact gradient of the discrete action w.r.t. nodal values, shape (m, N).

    Node j collects grad G at the two adjacent cell slopes plus the nodal
    trapezoid weight times (V_x(t_j, u_j) + f(t_j)); node 0 averages the two
    endpoint times -T and T at the shared value u_0.
    """
    du = derivative(u)
    gG = prob.G.grad(du.values)                      # (m, N), cell i = (i -> i+1)
    kinetic = np.roll(gG, 1, axis=0) - gG            # grad G(s_{j-1}) - grad G(s_j)
    t, x = _closed_nodes(prob, u)
    force = prob.V_x(t, x) + prob.f(t)               # (m+1, N)
    if not np.isfinite(force).all():
        j = int(np.argmin(np.isfinite(force).all(axis=-1)))
        raise ProblemError(f"non-finite potential gradient at t={t[j]:g}, u={tuple(x[j])}")
    nodal = force[:-1].copy()
    nodal[0] = 0.5 * (force[0] + force[-1])
    return kinetic + u.h * nodal


def el_residual(prob: ProblemSpec, u: PeriodicGridFunction) -> float:
    """Strong-form residual: max nodal |gradient| with the weight h divided out."""
    grad = action_gradient(prob, u)
    return float(np.linalg.norm(grad, axis=-1).max() / u.h)


def tent_function(xi: float, v: Array, T: float, m: int) -> PeriodicGridFunction:
    """The piecewise-linear tent xi * (1 - |t|/(T+1)) * v, sampled at the nodes."""
    if xi <= T + 1.0:
        raise ProblemError(f"tent height must exceed T+1 = {T + 1.0:g}, got {xi:g}")
    v = np.asarray(v, dtype=float).reshape(-1)
    nv = float(np.linalg.norm(v))
    if nv == 0:
        raise ProblemError("tent direction must be nonzero")
    v = v / nv
    t = -T + (2.0 * T / m) * np.arange(m)
    profile = xi * (1.0 - np.abs(t) / (T + 1.0))
    return PeriodicGridFunction(T, profile[:, None] * v[None, :])


# ---------------------------------------------------------------------------
# built-in problems
# ---------------------------------------------------------------------------

def _example1_problem(T: float = 1.0, rho0: float = 1.0, f_amplitude: float = 0.0,
                      a_form: str = "plain") -> ProblemSpec:
    """The anisotropic showcase problem on R^2.

    G(x,y) = x^2 + (x-y)^4,
    K = (2 + sin t) G + (x^2+y^2)^2 cos^2 t,
    W = (x^2+y^2)^{5/2} (exp(t^2 (x^2+y^2-1)) - 1)/(t^2+1) + sin t.

    a_form="plain" keeps the certificate a(t) = sin t; a_form="certified"
    adds the smallest quadratic-in-sin correction that actually makes the
    near-zero lower bound V >= b G - a hold on the stated ball (the plain
    sine certificate fails for t < 0; the checker reports that honestly).
    """
    g = make_gfunction("example1")

    def K(t, x):
        t = np.asarray(t, dtype=float)
        r2 = np.einsum("...j,...j->...", x, x)
        return (2.0 + np.sin(t)) * g(x) + r2 ** 2 * np.cos(t) ** 2

    def K_x(t, x):
        t = np.asarray(t, dtype=float)
        r2 = np.einsum("...j,...j->...", x, x)
        return ((2.0 + np.sin(t))[..., None] * g.grad(x)
                + (4.0 * r2 * np.cos(t) ** 2)[..., None] * x)

    def _wcore(t, x):
        t = np.asarray(t, dtype=float)
        r2 = np.einsum("...j,...j->...", x, x)
        with np.errstate(over="ignore"):
            e = np.exp(t ** 2 * (r2 - 1.0))
        return r2, e

    def W(t, x):
        t = np.asarray(t, dtype=float)
        r2, e = _wcore(t, x)
        return r2 ** 2.5 * (e - 1.0) / (t ** 2 + 1.0) + np.sin(t)

    def W_x(t, x):
        t = np.asarray(t, dtype=float)
        r2, e = _wcore(t, x)
        r = np.sqrt(r2)
        coeff = (5.0 * r ** 3 * (e - 1.0) + 2.0 * t ** 2 * r ** 5 * e) / (t ** 2 + 1.0)
        return coeff[..., None] * x

    def f(t):
        t = np.asarray(t, dtype=float)
        return f_amplitude * np.stack([np.cos(t), np.sin(t)], axis=-1)

    if a_form == "plain":
        a = lambda t: np.sin(np.asarray(t, dtype=float))
    elif a_form == "certified":
        # 0.5 sin^2 t dominates the sampled violation of the plain-sine
        # certificate on the ball |x| <= 2 for T <= 0.15 (dense-scan checked).
        a = lambda t: np.sin(np.asarray(t, dtype=float)) + 0.5 * np.sin(np.asarray(t, dtype=float)) ** 2
    else:
        raise ProblemError("a_form must be 'plain' or 'certified'")

    kappa = lambda t: 5.0 * np.maximum(np.sin(np.asarray(t, dtype=float)), 0.0)

    return ProblemSpec(
        name="example1", T=T, N=2, G=g, K=K, W=W, f=f, a=a, kappa=kappa,
        b=2.0, rho0=rho0, b1=1.0, p=2.0, mu=5.0, nu=0.0, K_x=K_x, W_x=W_x,
    )


def _example2_problem(T: float = 1.0, lam: float = 1.0, N: int = 2,
                      f_power: float = 4.0) -> ProblemSpec:
    """Separable potential V = a(t) G(x) - lam b(t) F(x), G = |x|^2, F = |x|^f_power.

    a(t) = 2 + tanh^2 t and b(t) = 2 - tanh^2 t are even, C^1, strictly
    positive, with t a'(t) > 0 and t b'(t) < 0 away from 0.  F must outgrow
    G, so f_power > 2.
    """
    if f_power <= 2.0:
        raise ProblemError("f_power must exceed 2 so the well dominates at infinity")
    g = make_gfunction("power", 2.0, N)
    fquartic = make_gfunction("power", f_power, N)

    def a_t(t):
        return 2.0 + np.tanh(np.asarray(t, dtype=float)) ** 2

    def b_t(t):
        return 2.0 - np.tanh(np.asarray(t, dtype=float)) ** 2

    def K(t, x):
        return a_t(t) * g(x)

    def K_x(t, x):
        return a_t(t)[..., None] * g.grad(x) if np.ndim(t) else a_t(t) * g.grad(x)

    def W(t, x):
        return lam * b_t(t) * fquartic(x)

    def W_x(t, x):
        scale = lam * b_t(t)
        return scale[..., None] * fquartic.grad(x) if np.ndim(t) else scale * fquartic.grad(x)

    # near zero: (a - b_cert) G - lam b F >= 0.5 r^2 - 2 lam r^f_power, which
    # stays nonnegative up to (0.25 / lam)^(1/(f_power - 2))
    rho0 = (0.25 / lam) ** (1.0 / (f_power - 2.0))
    return ProblemSpec(
        name="example2", T=T, N=N, G=g, K=K, W=W,
        f=lambda t: np.zeros(np.shape(t) + (N,)),
        a=lambda t: np.zeros(np.shape(t)),
        kappa=lambda t: np.zeros(np.shape(t)),
        b=1.5, rho0=rho0, b1=1.5, p=2.0, mu=f_power, nu=0.0,
        K_x=K_x, W_x=W_x,
    )


def _plaplacian_test_problem(T: float = 1.0, rho0: float = 0.3,
                             f_amplitude: float = 0.0) -> ProblemSpec:
    """Desk-scale smooth solver benchmark on R^1.

    G(v) = v^2/2, K = x^2, W = x^4/4, f = amp * cos(pi t / T).  The strong
    form is -u'' + 2u - u^3 = f; for f = 0 the constants +-sqrt(2) are exact
    index-1 saddles, which makes every solver claim independently checkable.
    """
    def val(x):
        return 0.5 * np.einsum("...j,...j->...", x, x)

    def grd(x):
        return np.asarray(x, dtype=float)

    g = GFunctionSpec(1, val, grd, name="half_square")

    def K(t, x):
        return np.broadcast_to(np.einsum("...j,...j->...", x, x),
                               np.broadcast_shapes(np.shape(t), x.shape[:-1])).copy()

    def K_x(t, x):
        return np.broadcast_to(2.0 * x, np.broadcast_shapes(np.shape(t), x.shape[:-1]) + (1,)).copy()

    def W(t, x):
        return np.broadcast_to(0.25 * np.einsum("...j,...j->...", x, x) ** 2,
                               np.broadcast_shapes(np.shape(t), x.shape[:-1])).copy()

    def W_x(t, x):
        r2 = np.einsum("...j,...j->...", x, x)
        return np.broadcast_to(r2[..., None] * x,
                               np.broadcast_shapes(np.shape(t), x.shape[:-1]) + (1,)).copy()

    a0 = rho0 ** 4 / 4.0
    return ProblemSpec(
        name="plaplacian_test", T=T, N=1, G=g, K=K, W=W,
        f=lambda t: f_amplitude * np.cos(np.pi * np.asarray(t, dtype=float) / T)[..., None],
        a=lambda t: np.full(np.shape(t), a0),
        kappa=lambda t: np.zeros(np.shape(t)),
        b=2.0, rho0=rho0, b1=0.9, p=2.0, mu=4.0, nu=0.0, K_x=K_x, W_x=W_x,
    )


_PROBLEMS: dict[str, Callable[..., ProblemSpec]] = {
    "example1": _example1_problem,
    "example2": _example2_problem,
    "plaplacian_test": _plaplacian_test_problem,
}


def registered_problems() -> list[str]:
    return sorted(_PROBLEMS)


def builtin_problem(name: str, **params) -> ProblemSpec:
    if name not in _PROBLEMS:
        raise ProblemError(
            f"unknown problem {name!r}; registered: {', '.join(registered_problems())}")
    return _PROBLEMS[name](**params)
