"""Discretized periodic Orlicz-Sobolev space on [-T, T].

Grid functions are piecewise linear: values live at m equispaced nodes with
node m identified with node 0, so u(-T) = u(T) holds by representation.  The
derivative is the cell-slope function (one slope per cell, midpoint located).

Quadrature: nodal integrands use the periodic trapezoid rule h * sum(...);
cell integrands use the midpoint rule with the same weights.  Integrands that
depend on t itself (and are not 2T-periodic in t) go through
``time_quadrature``, a genuine trapezoid with half weights at both endpoints.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from .gfunction import GFunctionSpec, radial_minorant_inverse, RadialOpts
from .reports import render_report

Array = np.ndarray


class SpaceError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class PeriodicGridFunction:
    """u: [-T, T] -> R^N sampled at nodes t_i = -T + i * (2T/m), i = 0..m-1."""

    T: float
    values: Array

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2:
            raise SpaceError("values must have shape (m, N)")
        if vals.shape[0] < 4:
            raise SpaceError("need at least 4 nodes")
        if not np.isfinite(vals).all():
            raise SpaceError("grid function values must be finite")
        if not self.T > 0:
            raise SpaceError("half-interval length T must be positive")
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def h(self) -> float:
        return 2.0 * self.T / self.m

    @property
    def nodes(self) -> Array:
        return -self.T + self.h * np.arange(self.m)

    @classmethod
    def from_callable(cls, fn: Callable[[Array], Array], T: float, m: int,
                      dim: int = 1) -> "PeriodicGridFunction":
        t = -T + (2.0 * T / m) * np.arange(m)
        vals = np.asarray(fn(t), dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.shape != (m, dim):
            raise SpaceError(f"callable produced shape {vals.shape}, wanted {(m, dim)}")
        return cls(T, vals)

    @classmethod
    def zero(cls, T: float, m: int, dim: int = 1) -> "PeriodicGridFunction":
        return cls(T, np.zeros((m, dim)))

    def scaled(self, s: float) -> "PeriodicGridFunction":
        return PeriodicGridFunction(self.T, s * self.values)

    def rolled(self, k: int) -> "PeriodicGridFunction":
        return PeriodicGridFunction(self.T, np.roll(self.values, k, axis=0))

    def sup_norm(self) -> float:
        return float(np.linalg.norm(self.values, axis=-1).max())


def derivative(u: PeriodicGridFunction) -> PeriodicGridFunction:
    """Cell slopes (u_{i+1} - u_i)/h with periodic wrap; zero mean by telescoping."""
    vals = (np.roll(u.values, -1, axis=0) - u.values) / u.h
    return PeriodicGridFunction(u.T, vals)


def modular(g: GFunctionSpec, u: PeriodicGridFunction) -> float:
    """Integral of G(u) over [-T, T] (periodic trapezoid / midpoint weights)."""
    if g.dim != u.dim:
        raise SpaceError(f"G has dim {g.dim}, grid function has dim {u.dim}")
    vals = g(u.values)
    if not np.isfinite(vals).all():
        raise SpaceError("non-finite integrand in modular")
    return float(u.h * vals.sum())


def time_quadrature(T: float, m: int, samples_closed: Array) -> float:
    """Trapezoid of a time-dependent integrand given m+1 closed samples on [-T, T]."""
    samples_closed = np.asarray(samples_closed, dtype=float)
    if samples_closed.shape[0] != m + 1:
        raise SpaceError("time_quadrature expects m+1 samples including both endpoints")
    h = 2.0 * T / m
    return float(h * (0.5 * samples_closed[0] + samples_closed[1:-1].sum()
                      + 0.5 * samples_closed[-1]))


def integrate_time_function(fn: Callable[[Array], Array], T: float, m: int) -> float:
    t = np.linspace(-T, T, m + 1)
    return time_quadrature(T, m, np.asarray(fn(t), dtype=float))


_BRACKET_CAP = 2.0 ** 60


def _bisect_norm(mod_at: Callable[[float], float], tol: float) -> float:
    """inf{lam > 0 : mod_at(lam) <= 1}; mod_at is non-increasing in lam."""
    lam = 1.0
    m1 = mod_at(lam)
    if not math.isfinite(m1):
        raise SpaceError("non-finite modular at bracket probe lambda=1")
    if m1 <= 1.0:
        hi = lam
        lo = lam
        while mod_at(lo / 2.0) <= 1.0:
            lo /= 2.0
            if lo < 1.0 / _BRACKET_CAP:
                return 0.0
        lo /= 2.0
    else:
        lo = lam
        hi = lam
        while True:
            hi *= 2.0
            mh = mod_at(hi)
            if not math.isfinite(mh):
                raise SpaceError("non-finite modular while bracketing")
            if mh <= 1.0:
                break
            if hi > _BRACKET_CAP:
                raise SpaceError("Luxemburg bracket exceeded cap 2^60")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mod_at(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return hi


def luxemburg_norm(g: GFunctionSpec, u: PeriodicGridFunction, tol: float = 1e-10) -> float:
    """inf{lam > 0 : modular(g, u/lam) <= 1} by bracketed bisection."""
    if tol <= 0:
        raise SpaceError("tolerance must be positive")
    if not u.values.any():
        return 0.0
    return _bisect_norm(lambda lam: modular(g, u.scaled(1.0 / lam)), tol)


def sobolev_norm(g: GFunctionSpec, u: PeriodicGridFunction, tol: float = 1e-10) -> float:
    return luxemburg_norm(g, u, tol) + luxemburg_norm(g, derivative(u), tol)


def joint_norm(g: GFunctionSpec, u: PeriodicGridFunction, tol: float = 1e-10) -> float:
    """inf{lam : modular(u/lam) + modular(u'/lam) <= 1}."""
    if not u.values.any():
        return 0.0
    du = derivative(u)
    return _bisect_norm(
        lambda lam: modular(g, u.scaled(1.0 / lam)) + modular(g, du.scaled(1.0 / lam)), tol)


def embedding_constant(g: GFunctionSpec, T: float,
                       opts: RadialOpts = RadialOpts()) -> float:
    """Sup-norm embedding constant A^{-1}(1/(2T)) * max(1, 2T).

    A is the greatest convex radial minorant of G; with it,
    sup|u| <= c * (|u| + |u'|) in the Luxemburg norms.
    """
    if T <= 0:
        raise SpaceError("T must be positive")
    return radial_minorant_inverse(g, 1.0 / (2.0 * T), opts) * max(1.0, 2.0 * T)


def rho(rho0: float, c: float) -> float:
    """Rim radius in norm: the small-ball radius divided by the embedding constant."""
    if rho0 <= 0 or c <= 0:
        raise SpaceError("rho0 and c must be positive")
    return rho0 / c


def holder_pairing(u: PeriodicGridFunction, v: PeriodicGridFunction) -> float:
    """Quadrature of <u(t), v(t)> on the shared grid."""
    if u.m != v.m or u.dim != v.dim or u.T != v.T:
        raise SpaceError("pairing requires identical grids")
    return float(u.h * np.einsum("ij,ij->", u.values, v.values))


@dataclasses.dataclass(frozen=True)
class SpaceReport:
    modular_u: float
    modular_du: float
    norm_u: float
    norm_du: float
    sobolev_norm: float
    joint_norm: float
    embedding_constant: float
    rho: float

    def to_text(self) -> str:
        return render_report("space_report", dataclasses.asdict(self))


def space_report(g: GFunctionSpec, u: PeriodicGridFunction, rho0: float,
                 tol: float = 1e-10) -> SpaceReport:
    du = derivative(u)
    nu = luxemburg_norm(g, u, tol)
    ndu = luxemburg_norm(g, du, tol)
    c = embedding_constant(g, u.T)
    return SpaceReport(
        modular_u=modular(g, u), modular_du=modular(g, du),
        norm_u=nu, norm_du=ndu, sobolev_norm=nu + ndu,
        joint_norm=joint_norm(g, u, tol),
        embedding_constant=c, rho=rho(rho0, c),
    )


# ---------------------------------------------------------------------------
# CSV import/export (columns: t, u1..uN)
# ---------------------------------------------------------------------------

def write_csv(u: PeriodicGridFunction, path) -> None:
    header = "t," + ",".join(f"u{j + 1}" for j in range(u.dim))
    data = np.column_stack([u.nodes, u.values])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def read_csv(path) -> PeriodicGridFunction:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    vals = data[:, 1:]
    if vals.shape[1] < 1:
        raise SpaceError("CSV must have at least one value column")
    m = len(t)
    h = t[1] - t[0]
    T = -t[0]
    if abs(t[0] + T) > 1e-12 or abs(h * m - 2 * T) > 1e-9 * max(1.0, T):
        raise SpaceError("CSV grid is not a uniform periodic grid on [-T, T)")
    if not np.allclose(np.diff(t), h, rtol=0, atol=1e-9 * max(1.0, T)):
        raise SpaceError("CSV grid spacing is not uniform")
    return PeriodicGridFunction(T, vals)
