import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entrofv.cases import tpfa_mixed
from entrofv.kernels import MeanKind
from entrofv.mesh import EdgeKind, generate_cartesian, generate_distorted_quad
from entrofv.tpfa import TpfaProblem

zero = lambda x, y: 0.0 * x
ALL = list(MeanKind)


def two_cells(mean="logarithmic"):
    # tau = m_sigma / d_sigma = 1 / 0.5 = 2
    return TpfaProblem(generate_cartesian(2, 1), zero, mean, dt=1.0)


def test_two_cell_log_flux():
    pb = two_cells("logarithmic")
    s = int(pb.mesh.interior[0])
    assert pb.flux(np.array([1.0, 3.0]), 0, s) == pytest.approx(-4.0, rel=1e-14)


def test_two_cell_arithmetic_flux():
    pb = two_cells("arithmetic")
    s = int(pb.mesh.interior[0])
    assert pb.flux(np.array([1.0, 3.0]), 0, s) == pytest.approx(-4.0 * np.log(3.0))


def test_neighbor_values(tri0_mixed):
    c = tpfa_mixed()
    pb = TpfaProblem(tri0_mixed, c.potential, "max", 1e-3, c.dirichlet_value, c.initial)
    u = pb.initial_state()
    sN = int(tri0_mixed.neumann[0])
    K = int(tri0_mixed.edge_cells[sN, 0])
    assert pb.neighbor_value(u, K, sN) == u[K]
    assert pb.flux(u, K, sN) == 0.0
    sD = int(tri0_mixed.dirichlet[0])
    KD = int(tri0_mixed.edge_cells[sD, 0])
    x = tri0_mixed.edge_midpoints[sD]
    assert pb.neighbor_value(u, KD, sD) == pytest.approx(np.exp(x[0]))
    sI = int(tri0_mixed.interior[0])
    a, b = tri0_mixed.edge_cells[sI]
    assert pb.neighbor_value(u, a, sI) == u[b]


@pytest.mark.parametrize("kind", ALL)
def test_antisymmetry_exact(kind, tri0, rng):
    pb = TpfaProblem(tri0, lambda x, y: np.sin(3 * x) * y, kind, 1e-2)
    u = rng.uniform(0.1, 5.0, tri0.n_cells)
    for s in tri0.interior[:20]:
        K, L = tri0.edge_cells[s]
        assert pb.flux(u, K, s) == -pb.flux(u, L, s)


@pytest.mark.parametrize("kind", ALL)
def test_steady_state_zero_flux(kind, tri0_mixed):
    c = tpfa_mixed()
    pb = TpfaProblem(tri0_mixed, c.potential, kind, 1e-3, c.dirichlet_value, c.initial)
    us = pb.steady_state()
    assert np.allclose(us, np.exp(tri0_mixed.centers[:, 0]), rtol=1e-14)
    assert np.abs(pb.residual(us, us)).max() <= 1e-12
    F, FD = pb.edge_fluxes(us)
    assert np.abs(F).max() <= 1e-13 and np.abs(FD).max() <= 1e-13


def test_neumann_steady_constant(cart4):
    pb = TpfaProblem(cart4, zero, "arithmetic", 1e-2, initial=lambda x, y: 1.0 + 0 * x)
    assert np.allclose(pb.steady_state(), 1.0)


def test_mass_identity(cart4, rng):
    pb = TpfaProblem(cart4, lambda x, y: x * y, "sqrtsquare", 0.1)
    u, v = rng.uniform(0.5, 2, (2, cart4.n_cells))
    res = pb.residual(u, v)
    assert res.sum() == pytest.approx((cart4.areas @ (u - v)) / 0.1, rel=1e-12, abs=1e-12)


def test_single_cell():
    m = generate_cartesian(1, 1)
    pb = TpfaProblem(m, zero, "max", 0.5)
    assert pb.residual(np.array([3.0]), np.array([2.0])) == pytest.approx([2.0])


@pytest.mark.parametrize("kind", ALL)
def test_jacobian_fd(kind, tri0_mixed, rng):
    c = tpfa_mixed()
    pb = TpfaProblem(tri0_mixed, c.potential, kind, 1e-2, c.dirichlet_value, c.initial)
    u = rng.uniform(0.5, 3.0, tri0_mixed.n_cells)
    if kind is MeanKind.MAX:
        u = u + 1e-3 * np.arange(len(u))  # keep away from kinks
    J = pb.jacobian(u).toarray()
    old = pb.initial_state()
    for j in rng.choice(len(u), 12, replace=False):
        h = 1e-6 * u[j]
        e = np.zeros_like(u)
        e[j] = h
        fd = (pb.residual(u + e, old) - pb.residual(u - e, old)) / (2 * h)
        scale = np.abs(J[:, j]).max()
        assert np.abs(fd - J[:, j]).max() <= 1e-6 * scale


def test_jacobian_diagonal_has_mass(cart4):
    pb = TpfaProblem(cart4, zero, "arithmetic", 0.25)
    J = pb.jacobian(np.ones(cart4.n_cells))
    # flux couplings cancel row-wise at a constant state, leaving m_K / dt
    assert np.allclose(np.asarray(J.sum(axis=1)).ravel(), cart4.areas / 0.25)
    assert np.all(J.diagonal() > cart4.areas / 0.25)


def test_rejections(quad8, tri0_mixed):
    with pytest.raises(ValueError, match="admissible"):
        TpfaProblem(quad8, zero)
    with pytest.raises(ValueError, match="scalar"):
        TpfaProblem(generate_cartesian(2, 2), zero, diffusivity=np.eye(2))
    with pytest.raises(ValueError, match="equilibrium"):
        TpfaProblem(tri0_mixed, lambda x, y: 0 * x, dirichlet_value=lambda x, y: 1 + x)
    with pytest.raises(ValueError, match="boundary data"):
        TpfaProblem(tri0_mixed, zero)
    pb = TpfaProblem(generate_cartesian(2, 2), zero)
    with pytest.raises(ValueError):
        pb.residual(np.array([1.0, 0.0, 1.0, 1.0]), np.ones(4))


def test_literal_potential_sign_rejected(tri0_mixed):
    c = tpfa_mixed(sign=1.0)
    with pytest.raises(ValueError, match="equilibrium"):
        TpfaProblem(tri0_mixed, c.potential, "arithmetic", 1e-3, c.dirichlet_value, c.initial)


@given(u=st.lists(st.floats(0.01, 100.0), min_size=16, max_size=16))
def test_residual_zero_when_states_agree_at_equilibrium(u):
    m = generate_cartesian(4, 4)
    V = lambda x, y: x - 2 * y
    pb = TpfaProblem(m, V, "logarithmic", 1.0, initial=np.array(u))
    us = pb.steady_state()
    assert np.abs(pb.residual(us, us)).max() <= 1e-11 * max(1.0, us.max())
    assert m.areas @ us == pytest.approx(m.areas @ np.array(u), rel=1e-12)
