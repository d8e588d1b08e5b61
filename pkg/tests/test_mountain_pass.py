import math

import numpy as np
import pytest

from orliczmp.functional import ProblemSpec, action, builtin_problem
from orliczmp.mountain_pass import (
    MountainPassConfig,
    SolverError,
    certify,
    find_endpoint,
    newton_polish,
    random_rim_function,
    solve,
    verify_rim,
)
from orliczmp.orlicz_space import (PeriodicGridFunction, embedding_constant,
                                   sobolev_norm)


@pytest.fixture(scope="module")
def plap():
    return builtin_problem("plaplacian_test")


@pytest.fixture(scope="module")
def plap_solution(plap):
    return solve(plap, MountainPassConfig(), m=256)


def _rho(prob):
    return prob.rho0 / embedding_constant(prob.G, prob.T)


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(SolverError):
        MountainPassConfig(path_points=4)
    with pytest.raises(SolverError):
        MountainPassConfig(armijo_c=1.5)
    with pytest.raises(SolverError):
        MountainPassConfig(grad_tol=2.0)


# ---------------------------------------------------------------------------
# endpoint search
# ---------------------------------------------------------------------------

def test_find_endpoint_example1():
    prob = builtin_problem("example1")
    e, xi = find_endpoint(prob, _rho(prob), MountainPassConfig(), m=128)
    assert action(prob, e) < 0.0
    assert sobolev_norm(prob.G, e) > _rho(prob)
    assert np.isfinite(xi)


def test_find_endpoint_fails_without_negativity():
    # W = 0 keeps the action nonnegative along tents, so no endpoint exists
    base = builtin_problem("plaplacian_test")
    now = ProblemSpec(**{**base.__dict__,
                         "W": lambda t, x: np.zeros(
                             np.broadcast_shapes(np.shape(t), x.shape[:-1])),
                         "W_x": None})
    with pytest.raises(SolverError, match="no negative endpoint"):
        find_endpoint(now, _rho(now), MountainPassConfig(), m=64)


def test_find_endpoint_plaplacian_close_to_scan_crossover(plap):
    # 1-D oracle: scan tent heights densely for the J < 0 crossover
    cfg = MountainPassConfig()
    e, xi = find_endpoint(plap, _rho(plap), cfg, m=256)
    xis = np.linspace(plap.T + 1.01, 4.0 * xi, 4000)
    jays = np.array([action(plap, _tent(plap, x, 256)) for x in xis])
    crossover = xis[np.argmax(jays < 0)]
    assert xi <= 4.0 * crossover
    assert crossover <= xi * 4.0


def _tent(prob, xi, m):
    from orliczmp.functional import tent_function
    return tent_function(xi, np.ones(prob.N), prob.T, m)


# ---------------------------------------------------------------------------
# rim verification
# ---------------------------------------------------------------------------

def test_rim_analytic_bound_quartic_exponent():
    # f = 0, a = 0, b = 2, globally regular G, rho = 2: bound is exactly 1
    prob = _synthetic_rho(rho=2.0)
    rim = verify_rim(prob, 2.0, MountainPassConfig(rim_samples=16), m=64)
    assert rim.exponent == 2.0  # q_G of the quadratic
    assert rim.alpha == pytest.approx(1.0, rel=1e-9)


def test_rim_bound_takes_sharper_power_route_when_global():
    # rho = 4 with globally regular G: (rho/2)^p_G = 4 beats the linear rho/2
    prob = _synthetic_rho(rho=4.0)
    rim = verify_rim(prob, 4.0, MountainPassConfig(rim_samples=16), m=64)
    assert rim.alpha == pytest.approx(4.0, rel=1e-9)


def test_rim_analytic_bound_linear_regime():
    # with doubling not global only the linear route applies:
    # alpha = min{1, b-1} * rho / 2 = 2 at rho = 4
    from orliczmp.gfunction import make_gfunction
    prob = _synthetic_rho(rho=4.0, g=make_gfunction("exp_degenerate"))
    rim = verify_rim(prob, 4.0, MountainPassConfig(rim_samples=16), m=64)
    assert rim.exponent is None
    assert rim.alpha == pytest.approx(2.0, rel=1e-9)


def _synthetic_rho(rho, g=None):
    from orliczmp.gfunction import make_gfunction
    if g is None:
        g = make_gfunction("power", 2.0, 1)

    def K(t, x):
        return np.broadcast_to(2.0 * g(x),
                               np.broadcast_shapes(np.shape(t), x.shape[:-1])).copy()

    c = embedding_constant(g, 0.5)
    return ProblemSpec(
        name="synthetic", T=0.5, N=1, G=g, K=K,
        W=lambda t, x: np.zeros(np.broadcast_shapes(np.shape(t), x.shape[:-1])),
        f=lambda t: np.zeros(np.shape(t) + (1,)),
        a=lambda t: np.zeros(np.shape(t)),
        kappa=lambda t: np.zeros(np.shape(t)),
        b=2.0, rho0=rho * c, b1=1.0, p=2.0, mu=4.0, nu=0.0)


def test_rim_sampled_min_respects_bound_plaplacian(plap):
    rim = verify_rim(plap, _rho(plap), MountainPassConfig(rim_samples=128), m=128)
    assert rim.alpha > 0
    assert rim.sampled_min >= rim.alpha - 1e-8


def test_rim_sampled_min_respects_bound_example1_certified():
    prob = builtin_problem("example1", T=0.15, rho0=2.0, a_form="certified")
    rim = verify_rim(prob, _rho(prob), MountainPassConfig(rim_samples=128), m=128)
    assert rim.alpha > 0
    assert rim.sampled_min >= rim.alpha - 1e-8


def test_rim_functions_are_grid_resolvable(rng):
    u = random_rim_function(rng, 1.0, 64, 2)
    assert u.m == 64 and u.dim == 2
    spectrum = np.abs(np.fft.rfft(u.values[:, 0]))
    assert spectrum[1:9].sum() > spectrum[9:].sum()  # low modes dominate


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def test_solve_converges_to_constant_saddle(plap, plap_solution):
    rep = plap_solution
    assert rep.converged
    assert rep.grad_norm < 1e-8
    assert rep.el_residual < 1e-4
    # the known mountain-pass point is the constant sqrt(2) with J = 2
    assert np.abs(rep.u_star.values - math.sqrt(2.0)).max() < 1e-8
    assert rep.j_value == pytest.approx(2.0, rel=1e-12)


def test_solve_level_above_rim(plap_solution):
    assert plap_solution.j_value >= plap_solution.alpha_rim - 1e-6
    assert plap_solution.mp_level_c >= plap_solution.alpha_rim - 1e-9


def test_solve_endpoint_recorded(plap_solution):
    assert plap_solution.endpoint_xi > 2.0


def test_solution_is_structurally_periodic(plap_solution):
    u = plap_solution.u_star
    assert u.nodes[0] == -1.0 and u.m == 256  # single shared node at +-T


def test_solve_matches_perturbed_newton_oracle(plap, plap_solution, rng):
    u_star = plap_solution.u_star
    for _ in range(8):
        pert = u_star.values + 0.02 * rng.standard_normal(u_star.values.shape)
        polished, gn, ok = newton_polish(plap, PeriodicGridFunction(plap.T, pert))
        assert ok and gn < 1e-10
        diff = PeriodicGridFunction(plap.T, polished.values - u_star.values)
        assert sobolev_norm(plap.G, diff) < 1e-6


def test_solve_mesh_refinement_stable(plap, plap_solution):
    rep2 = solve(plap, MountainPassConfig(), m=512)
    assert abs(rep2.j_value - plap_solution.j_value) < 1e-3 * abs(plap_solution.j_value)


def test_solve_deterministic(plap, plap_solution):
    rep2 = solve(plap, MountainPassConfig(), m=256)
    assert rep2.j_value == plap_solution.j_value
    assert (rep2.u_star.values == plap_solution.u_star.values).all()
    assert rep2.iterations == plap_solution.iterations


def test_solve_requires_positive_rim():
    # forcing so large the rim bound is negative: solve refuses to certify
    prob = builtin_problem("plaplacian_test", f_amplitude=5.0)
    with pytest.raises(SolverError, match="not positive"):
        solve(prob, MountainPassConfig(), m=64)


def test_solve_report_serializes(plap_solution):
    text = plap_solution.to_text()
    assert "[solve_report]" in text and "converged = true" in text


# ---------------------------------------------------------------------------
# descent internals
# ---------------------------------------------------------------------------

def test_minimax_level_monotone(plap):
    # replicate the outer loop and watch the node-max level directly
    from orliczmp.mountain_pass import (_armijo_descent, _grad_norm,
                                        _redistribute)
    from orliczmp.functional import action_gradient
    cfg = MountainPassConfig()
    e, _ = find_endpoint(plap, _rho(plap), cfg, m=64)
    path = [PeriodicGridFunction(plap.T, w * e.values)
            for w in np.linspace(0.0, 1.0, cfg.path_points)]
    jvals = [action(plap, u) for u in path]
    levels = [max(jvals)]
    for _ in range(60):
        k = int(np.argmax(jvals))
        if k in (0, len(path) - 1):
            break
        grad = action_gradient(plap, path[k])
        if _grad_norm(grad) < cfg.grad_tol:
            break
        new_u, new_j, step = _armijo_descent(plap, path[k], jvals[k], grad, cfg)
        assert step > 0
        # Armijo decrease at the maximizer
        assert new_j <= jvals[k] - cfg.armijo_c * step * float(np.sum(grad * grad))
        path[k] = new_u
        jvals[k] = new_j
        cand = _redistribute(plap, path)
        cand_j = [action(plap, u) for u in cand]
        if max(cand_j) <= max(jvals) + 1e-12 * (1 + abs(max(jvals))):
            path, jvals = cand, cand_j
        levels.append(max(jvals))
    assert all(b <= a + 1e-9 * (1 + abs(a)) for a, b in zip(levels, levels[1:]))


def test_newton_polish_quadratic_convergence(plap, rng):
    u0 = PeriodicGridFunction(plap.T, np.full((64, 1), 1.3)
                              + 0.05 * rng.standard_normal((64, 1)))
    u, gn, ok = newton_polish(plap, u0)
    assert ok and gn < 1e-11
    assert np.abs(u.values - math.sqrt(2.0)).max() < 1e-9


# ---------------------------------------------------------------------------
# certification
# ---------------------------------------------------------------------------

def test_certify_solution_stable(plap, plap_solution):
    cert = certify(plap, plap_solution.u_star)
    assert cert.stable
    assert cert.el_residual < 1e-4
    assert np.isfinite(cert.max_du) and np.isfinite(cert.max_grad_g_du)
    assert cert.refined_max_du <= cert.max_du * 1.05 + 1e-12


def test_certify_zero_on_unforced_critical_zero():
    # x = 0 solves the strong form when V_x(t, 0) = 0 and f = 0
    prob = builtin_problem("plaplacian_test")
    z = PeriodicGridFunction.zero(prob.T, 64)
    cert = certify(prob, z, refine=False)
    assert cert.el_residual < 1e-14
    assert cert.max_du == 0.0 and cert.max_grad_g_du == 0.0


def test_certify_tent_not_critical(plap):
    e = _tent(plap, 3.0, 64)
    cert = certify(plap, e, refine=False)
    assert cert.el_residual > 0.01
    assert np.isfinite(cert.max_du) and cert.max_du > 0
