import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orliczmp import make_gfunction
from orliczmp.orlicz_space import (
    PeriodicGridFunction,
    SpaceError,
    derivative,
    embedding_constant,
    holder_pairing,
    integrate_time_function,
    joint_norm,
    luxemburg_norm,
    modular,
    read_csv,
    rho,
    sobolev_norm,
    space_report,
    time_quadrature,
    write_csv,
)
from orliczmp import conjugate_gfunction

from conftest import random_trig


# ---------------------------------------------------------------------------
# grid functions and derivative
# ---------------------------------------------------------------------------

def test_grid_function_validation():
    with pytest.raises(SpaceError):
        PeriodicGridFunction(1.0, np.zeros((3, 1)))          # too few nodes
    with pytest.raises(SpaceError):
        PeriodicGridFunction(1.0, np.array([[np.nan]] * 8))  # non-finite
    with pytest.raises(SpaceError):
        PeriodicGridFunction(-1.0, np.zeros((8, 1)))         # bad T


def test_periodicity_is_structural():
    u = PeriodicGridFunction(2.0, np.arange(8.0)[:, None])
    assert u.nodes[0] == -2.0
    assert u.nodes[-1] < 2.0  # the +T node is identified with -T


def test_derivative_of_constant_is_zero():
    u = PeriodicGridFunction(1.0, np.full((16, 2), 3.7))
    assert not derivative(u).values.any()


def test_derivative_of_tent_two_slopes():
    from orliczmp.functional import tent_function
    T = 1.0
    e = tent_function(3.0, [1.0], T, 64)
    slopes = np.unique(np.round(derivative(e).values, 12))
    assert slopes.tolist() == [-3.0 / (T + 1.0), 3.0 / (T + 1.0)]


def test_derivative_matches_analytic_sine():
    T, m = math.pi, 256
    u = PeriodicGridFunction.from_callable(lambda t: np.sin(t)[:, None], T, m)
    du = derivative(u)
    mid = u.nodes + u.h / 2.0
    assert np.abs(du.values[:, 0] - np.cos(mid)).max() < 5.0 * (u.h ** 2)


def test_derivative_has_zero_mean(rng):
    u = random_trig(rng, 1.5, 128, 3)
    assert abs(derivative(u).values.mean()) < 1e-14


# ---------------------------------------------------------------------------
# modular
# ---------------------------------------------------------------------------

def test_modular_zero_function():
    g = make_gfunction("power", 2.0)
    assert modular(g, PeriodicGridFunction.zero(1.0, 32)) == 0.0


def test_modular_constant_closed_form():
    g = make_gfunction("power", 2.0)
    T, c = 1.3, 0.8
    u = PeriodicGridFunction(T, np.full((64, 1), c))
    assert modular(g, u) == pytest.approx(2.0 * T * c ** 2, rel=1e-14)


def test_modular_against_dense_quadrature(example1_g):
    T = math.pi
    u = PeriodicGridFunction.from_callable(
        lambda t: np.stack([np.sin(t), np.cos(t)], axis=-1), T, 256, dim=2)
    val = modular(example1_g, u)
    tt = np.linspace(-T, T, 1000001)[:-1]
    oracle = (2.0 * T / len(tt)) * example1_g(
        np.stack([np.sin(tt), np.cos(tt)], axis=-1)).sum()
    assert val == pytest.approx(oracle, rel=1e-6)


def test_modular_refinement_converges(example1_g):
    T = 1.0
    def fn(t):
        return np.stack([np.sin(np.pi * t / T), 0.3 * np.cos(2 * np.pi * t / T)], axis=-1)
    vals = {m: modular(example1_g, PeriodicGridFunction.from_callable(fn, T, m, dim=2))
            for m in (256, 512, 8192)}
    assert abs(vals[256] - vals[8192]) < 1e-8 * (1.0 + abs(vals[8192]))
    assert abs(vals[512] - vals[8192]) <= abs(vals[256] - vals[8192]) + 1e-12


def test_time_quadrature_second_order():
    # trapezoid error for a non-periodic integrand decays like m^-2
    errs = []
    for m in (64, 128, 256):
        val = integrate_time_function(np.cos, 1.0, m)
        errs.append(abs(val - 2.0 * math.sin(1.0)))
    order = math.log(errs[0] / errs[2]) / math.log(4.0)
    assert 1.9 < order < 2.1


def test_time_quadrature_wrong_sample_count():
    with pytest.raises(SpaceError):
        time_quadrature(1.0, 8, np.zeros(8))


# ---------------------------------------------------------------------------
# Luxemburg norms
# ---------------------------------------------------------------------------

def test_luxemburg_norm_zero():
    g = make_gfunction("power", 2.0)
    assert luxemburg_norm(g, PeriodicGridFunction.zero(0.5, 16)) == 0.0


@given(c=st.floats(0.05, 30.0), T=st.floats(0.1, 8.0))
@settings(max_examples=40, deadline=None)
def test_luxemburg_norm_constant_closed_form(c, T):
    # bracket width terminates at tol * max(1, norm), so small norms carry
    # absolute (not relative) bisection error
    g = make_gfunction("power", 2.0)
    u = PeriodicGridFunction(T, np.full((32, 1), c))
    assert luxemburg_norm(g, u) == pytest.approx(
        c * math.sqrt(2.0 * T), rel=1e-9, abs=2e-10)


def test_luxemburg_norm_quartic_exact_one():
    g = make_gfunction("power", 4.0)
    u = PeriodicGridFunction(0.5, np.ones((32, 1)))
    assert luxemburg_norm(g, u) == pytest.approx(1.0, rel=1e-9)


def test_luxemburg_norm_homogeneous(example1_g, rng):
    u = random_trig(rng, 1.0, 64, 2)
    n1 = luxemburg_norm(example1_g, u)
    assert luxemburg_norm(example1_g, u.scaled(3.5)) == pytest.approx(3.5 * n1, rel=1e-8)


def test_bisection_correctness(example1_g, rng):
    for _ in range(20):
        u = random_trig(rng, 1.0, 64, 2, amplitude=10 ** rng.uniform(-2, 2))
        nrm = luxemburg_norm(example1_g, u, tol=1e-10)
        assert modular(example1_g, u.scaled(1.0 / nrm)) == pytest.approx(1.0, abs=1e-8)


def test_sobolev_and_joint_norm_zero(example1_g):
    z = PeriodicGridFunction.zero(1.0, 32, 2)
    assert sobolev_norm(example1_g, z) == 0.0
    assert joint_norm(example1_g, z) == 0.0


def test_luxemburg_norm_nonfinite_probe_errors():
    from orliczmp.gfunction import GFunctionSpec

    def overflowing(x):
        return np.exp(np.einsum("...j,...j->...", x, x) * 500.0) - 1.0

    g = GFunctionSpec(1, overflowing, name="hot")
    u = PeriodicGridFunction(1.0, np.full((16, 1), 3.0))
    with pytest.raises(SpaceError, match="non-finite"):
        with np.errstate(over="ignore"):
            luxemburg_norm(g, u)


def test_radial_minorant_extension_cap_errors():
    from orliczmp.gfunction import RadialMinorantError, radial_minorant_inverse
    g = make_gfunction("power", 2.0)
    with pytest.raises(RadialMinorantError):
        radial_minorant_inverse(g, 1e30)


def test_read_csv_rejects_nonuniform_grid(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,u1\n-1.0,0\n-0.5,1\n-0.1,2\n0.7,3\n0.9,4\n")
    with pytest.raises(SpaceError):
        read_csv(path)


def test_constant_sobolev_equals_luxemburg():
    g = make_gfunction("power", 2.0)
    T, c = 0.8, 1.7
    u = PeriodicGridFunction(T, np.full((64, 1), c))
    expect = c * math.sqrt(2.0 * T)
    assert sobolev_norm(g, u) == pytest.approx(expect, rel=1e-9)
    assert joint_norm(g, u) == pytest.approx(expect, rel=1e-9)


def test_norm_equivalence(example1_g, rng):
    for _ in range(60):
        u = random_trig(rng, 1.0, 64, 2, amplitude=10 ** rng.uniform(-1.5, 1.5))
        sn = sobolev_norm(example1_g, u)
        jn = joint_norm(example1_g, u)
        assert 0.5 * sn - 1e-9 <= jn <= 2.0 * sn + 1e-9


def test_norm_modular_inequalities(example1_g, rng):
    # norm <= 1 forces norm^q_G <= modular; norm > 1 forces norm^p_G <= modular
    p_g, q_g = 2.0, 4.0
    for _ in range(40):
        u = random_trig(rng, 1.0, 64, 2)
        base = luxemburg_norm(example1_g, u)
        for target in (0.2, 0.85):
            us = u.scaled(target / base)
            assert modular(example1_g, us) >= target ** q_g * (1 - 1e-8)
        for target in (1.3, 9.0):
            us = u.scaled(target / base)
            assert modular(example1_g, us) >= target ** p_g * (1 - 1e-8)


def test_modular_coercive_along_rays(example1_g, rng):
    u0 = random_trig(rng, 1.0, 64, 2)
    u0 = u0.scaled(1.0 / luxemburg_norm(example1_g, u0))
    ratios = []
    for k in range(11):
        uk = u0.scaled(2.0 ** k)
        ratios.append(modular(example1_g, uk) / luxemburg_norm(example1_g, uk))
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] > 1e4 * ratios[0]


# ---------------------------------------------------------------------------
# embedding, rho, pairing
# ---------------------------------------------------------------------------

def test_embedding_constant_square_closed_forms():
    g = make_gfunction("power", 2.0)
    assert embedding_constant(g, 0.5) == pytest.approx(1.0, rel=1e-3)
    assert embedding_constant(g, 2.0) == pytest.approx(2.0, rel=1e-3)


def test_embedding_bound_random(example1_g, rng):
    c = embedding_constant(example1_g, 1.0)
    for _ in range(50):
        u = random_trig(rng, 1.0, 64, 2, amplitude=10 ** rng.uniform(-1, 1))
        assert u.sup_norm() <= c * sobolev_norm(example1_g, u) + 1e-9


@given(rho0=st.floats(1e-3, 1e3), c=st.floats(1e-3, 1e3))
@settings(max_examples=50, deadline=None)
def test_rho_quotient(rho0, c):
    assert rho(rho0, c) == rho0 / c


def test_rho_examples():
    assert rho(1.0, 1.0) == 1.0
    assert rho(3.0, 1.5) == 2.0


def test_holder_pairing_zero(example1_g, rng):
    u = random_trig(rng, 1.0, 64, 2)
    v = PeriodicGridFunction.zero(1.0, 64, 2)
    assert holder_pairing(u, v) == 0.0


def test_holder_pairing_constant_closed_form():
    g = make_gfunction("power", 2.0)
    T, c = 1.0, 0.7
    u = PeriodicGridFunction(T, np.full((64, 1), c))
    assert holder_pairing(u, u) == pytest.approx(2.0 * T * c ** 2, rel=1e-14)
    # two-sided check of the bound with the numerically conjugated integrand
    star = conjugate_gfunction(g, method="exact")
    lhs = holder_pairing(u, u)
    rhs = 2.0 * luxemburg_norm(g, u) * luxemburg_norm(star, u)
    assert lhs <= rhs + 1e-9


def test_holder_inequality_random(example1_g, rng):
    star = conjugate_gfunction(example1_g, method="table")
    nu = make_gfunction("example1")
    for _ in range(40):
        u = random_trig(rng, 1.0, 64, 2)
        v = random_trig(rng, 1.0, 64, 2)
        lhs = abs(holder_pairing(u, v))
        rhs = 2.0 * luxemburg_norm(nu, u) * luxemburg_norm(star, v)
        assert lhs <= rhs + 1e-8 * (1.0 + rhs)


def test_trik_lower_bound(example1_g, rng):
    # int |u|^p >= c_inf^(p-q) c_Gq^(-q) ||u||_W^(p-q) ||u||_G^q with p=2, q=4;
    # c_Gq is estimated on an independent probe family with safety margin
    p, q = 2.0, 4.0
    T, m = 1.0, 64
    probe = [random_trig(rng, T, m, 2, amplitude=10 ** rng.uniform(-1, 1))
             for _ in range(200)]
    c_gq = 1.25 * max(
        luxemburg_norm(example1_g, u)
        / (modular(make_gfunction("power", q, 2), u) ** (1.0 / q) or 1.0)
        for u in probe)
    c_inf = embedding_constant(example1_g, T)
    for _ in range(100):
        u = random_trig(rng, T, m, 2, amplitude=10 ** rng.uniform(-1, 1))
        lhs = modular(make_gfunction("power", p, 2), u)
        rhs = (c_inf ** (p - q) * c_gq ** (-q)
               * sobolev_norm(example1_g, u) ** (p - q)
               * luxemburg_norm(example1_g, u) ** q)
        assert lhs >= rhs * (1 - 1e-9)


# ---------------------------------------------------------------------------
# rim modular estimates
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("target_rho", [0.5, 1.0, 2.0, 3.0, 4.0])
def test_rim_modular_estimates(example1_g, rng, target_rho):
    p_g, q_g = 2.0, 4.0
    for _ in range(60):
        u = random_trig(rng, 1.0, 64, 2)
        u = u.scaled(target_rho / sobolev_norm(example1_g, u))
        du = derivative(u)
        mod_sum = modular(example1_g, u) + modular(example1_g, du)
        rho1 = luxemburg_norm(example1_g, u)
        rho2 = luxemburg_norm(example1_g, du)
        if rho1 <= 1.0 and rho2 <= 1.0:
            assert mod_sum >= (target_rho / 2.0) ** q_g * (1 - 1e-8)
        else:
            assert mod_sum >= (target_rho / 2.0) ** p_g * (1 - 1e-8)
        if target_rho > 2.0:
            assert mod_sum >= target_rho / 2.0 * (1 - 1e-8)


# ---------------------------------------------------------------------------
# reports and CSV round trip
# ---------------------------------------------------------------------------

def test_space_report_fields(example1_g, rng):
    u = random_trig(rng, 1.0, 64, 2)
    rep = space_report(example1_g, u, rho0=1.0)
    assert rep.sobolev_norm == pytest.approx(rep.norm_u + rep.norm_du, rel=1e-12)
    assert 0.5 * rep.sobolev_norm <= rep.joint_norm <= 2.0 * rep.sobolev_norm
    assert rep.rho == pytest.approx(1.0 / rep.embedding_constant, rel=1e-12)
    assert "[space_report]" in rep.to_text()


def test_csv_round_trip(tmp_path, rng):
    u = random_trig(rng, 1.5, 48, 2)
    path = tmp_path / "u.csv"
    write_csv(u, path)
    v = read_csv(path)
    assert v.T == u.T and v.m == u.m
    assert (v.values == u.values).all()  # %.17g is lossless for doubles
