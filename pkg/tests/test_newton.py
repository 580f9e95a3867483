import numpy as np
import pytest
import scipy.sparse as sp

from entrofv.cases import ddfv_eps, tpfa_mixed
from entrofv.ddfv import DdfvProblem
from entrofv.ddfv_mesh import build_ddfv
from entrofv.mesh import generate_cartesian, generate_distorted_quad
from entrofv.newton import (
    LinearSolver,
    NewtonConfig,
    NonConvergence,
    SingularJacobian,
    linear_solve,
    march,
    solve_step,
)
from entrofv.tpfa import TpfaProblem


@pytest.mark.parametrize("method", list(LinearSolver))
def test_linear_solve_small(method):
    assert np.allclose(linear_solve(sp.identity(4), np.arange(4.0), method), np.arange(4.0))
    x = linear_solve(sp.csr_matrix([[2.0, 1.0], [1.0, 2.0]]), np.array([3.0, 3.0]), method)
    assert np.allclose(x, [1.0, 1.0])


@pytest.mark.parametrize("method", list(LinearSolver))
def test_linear_solve_vs_dense(method, rng):
    d = build_ddfv(generate_cartesian(5, 5))
    n = d.n_unknowns
    rows = np.repeat(d.corners, 4, axis=1).ravel()
    cols = np.tile(d.corners, (1, 4)).ravel()
    B = sp.csr_matrix((rng.normal(size=len(rows)), (rows, cols)), shape=(n, n))
    A = (B @ B.T + 10 * sp.identity(n)).tocsr()  # SPD with diamond sparsity
    b = rng.normal(size=n)
    x = linear_solve(A, b, method)
    assert np.abs(x - np.linalg.solve(A.toarray(), b)).max() < 1e-10
    assert np.abs(A @ x - b).max() <= 1e-12 * (np.abs(A).max() * np.abs(x).max() + np.abs(b).max())


def test_linear_solve_pivoting_fallback():
    # zero diagonal forces the partial-pivoting path
    A = sp.csr_matrix([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(linear_solve(A, np.array([2.0, 3.0])), [3.0, 2.0])


def test_linear_solve_errors():
    with pytest.raises(SingularJacobian):
        linear_solve(sp.csr_matrix((2, 2)), np.ones(2))
    with pytest.raises(ValueError):
        linear_solve(sp.identity(3), np.ones(2))


def test_config_validation():
    with pytest.raises(ValueError):
        NewtonConfig(floor=0.0)
    with pytest.raises(ValueError):
        NewtonConfig(max_iter=0)


def test_steady_start_single_update(tri0_mixed):
    c = tpfa_mixed()
    pb = TpfaProblem(tri0_mixed, c.potential, "logarithmic", 1e-3, c.dirichlet_value, c.initial)
    us = pb.steady_state()
    u, rep = solve_step(pb, us)
    assert rep.iterations == 1 and rep.converged
    assert np.allclose(u, us, rtol=1e-13)


def test_stopping_rule_and_floor(tri0_mixed):
    c = tpfa_mixed()
    pb = TpfaProblem(tri0_mixed, c.potential, "max", 1e-3, c.dirichlet_value, c.initial)
    cfg = NewtonConfig()
    u, rep = solve_step(pb, pb.initial_state(), cfg)
    assert rep.converged and rep.residual_norm <= cfg.tol
    assert np.abs(pb.residual(u, pb.initial_state())).sum() <= cfg.tol
    assert np.all(u >= cfg.floor)


def test_projection_from_zero_data():
    m = generate_cartesian(4, 4)
    init = np.zeros(m.n_cells)
    init[0] = 16.0
    pb = TpfaProblem(m, lambda x, y: 0 * x, "logarithmic", 1e-2, initial=init)
    cfg = NewtonConfig()
    u, rep = solve_step(pb, pb.initial_state(), cfg)
    assert rep.converged and np.all(u >= cfg.floor)
    assert m.areas @ u == pytest.approx(1.0, rel=1e-10)


def test_nonconvergence_report(tri0_mixed):
    c = tpfa_mixed()
    pb = TpfaProblem(tri0_mixed, c.potential, "max", 10.0, c.dirichlet_value, c.initial)
    with pytest.raises(NonConvergence) as info:
        solve_step(pb, pb.initial_state(), NewtonConfig(max_iter=1, tol=1e-300))
    assert info.value.report.iterations == 1


def test_quadratic_tail(tri0_mixed):
    c = tpfa_mixed()
    pb = TpfaProblem(tri0_mixed, c.potential, "arithmetic", 1e-2, c.dirichlet_value, c.initial)
    u, rep = solve_step(pb, pb.initial_state())
    assert rep.iterations >= 2
    first = np.abs(pb.residual(pb.initial_state(), pb.initial_state())).sum()
    norms = [first] + rep.norms
    assert norms[-2] / max(norms[-1], 1e-300) >= 1e3


def test_ddfv_step_and_determinism():
    d = build_ddfv(generate_distorted_quad(6, 0.3), np.diag([0.1, 1.0]))
    case = ddfv_eps(1e-2, 0.1)
    pb = DdfvProblem(d, case.potential, "arithmetic", "arithmetic", 1e-2, case.initial)
    a = [(u.copy(), r.norms) for _, u, r in march(pb, 3)]
    b = [(u.copy(), r.norms) for _, u, r in march(pb, 3)]
    for (ua, na), (ub, nb) in zip(a, b):
        assert np.array_equal(ua, ub) and na == nb
    assert np.all(a[-1][0] >= NewtonConfig().floor)


@pytest.mark.parametrize("mean", ["arithmetic", "logarithmic", "sqrtsquare", "max"])
def test_ddfv_first_step_from_zero_entries(mean):
    # closed-form data has clipped zeros and the boundary-edge unknowns start at 0
    case = ddfv_eps(1e-2, 1.0)
    pb = DdfvProblem(build_ddfv(generate_cartesian(32, 32)), case.potential, mean, "max", 2e-3, case.initial)
    assert pb.n_clipped > 0
    guess = pb.newton_guess(pb.initial_state(), NewtonConfig().floor)
    assert np.all(guess > NewtonConfig().floor)
    u, rep = solve_step(pb, pb.initial_state())
    assert rep.converged and pb.masses(u) == pytest.approx(pb.masses(pb.initial_state()), rel=1e-11)
