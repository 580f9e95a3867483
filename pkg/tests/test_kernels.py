import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entrofv.kernels import (
    EntropyGenerator,
    MeanKind,
    check_ineq_func,
    check_ineq_sub_quadratic,
    check_sqrt_log_ineq,
    mean,
    mean_partials,
)

KINDS = list(MeanKind)
pos = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False)
N = 100_000


def test_closed_forms():
    assert mean("logarithmic", 1.0, np.e) == pytest.approx(np.e - 1.0, rel=1e-14)
    assert mean("sqrtsquare", 1.0, 9.0) == 4.0
    assert mean("arithmetic", 1.0, 3.0) == 2.0
    assert mean("max", 1.0, 3.0) == 3.0


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("x", [1e-8, 1.0, 1e8])
def test_diagonal(kind, x):
    assert mean(kind, x, x) == pytest.approx(x, rel=1e-15)


@pytest.mark.parametrize("kind", KINDS)
def test_rejects_nonpositive(kind):
    with pytest.raises(ValueError):
        mean(kind, 0.0, 1.0)
    with pytest.raises(ValueError):
        mean(kind, 1.0, -2.0)


def test_parse():
    assert MeanKind.parse("Max") is MeanKind.MAX
    with pytest.raises(ValueError, match="unknown mean"):
        MeanKind.parse("harmonic")


def test_ordering_chain(rng):
    x, y = np.exp(rng.uniform(-12, 12, (2, N)))
    lg, sq, ar, mx = (mean(k, x, y) for k in KINDS[1:2] + KINDS[2:3] + KINDS[0:1] + KINDS[3:])
    tol = 1e-12 * mx
    assert np.all(lg <= sq + tol)
    assert np.all(sq <= ar + tol)
    assert np.all(ar <= mx + tol)


@pytest.mark.parametrize("kind", KINDS)
def test_axioms_sampled(kind, rng):
    x, y = np.exp(rng.uniform(-10, 10, (2, N)))
    r = mean(kind, x, y)
    assert np.array_equal(r, mean(kind, y, x))
    lo = mean("logarithmic", x, y)
    assert np.all(r >= lo * (1 - 1e-12)) and np.all(r <= np.maximum(x, y) * (1 + 1e-12))
    for lam in (1e-6, 1.0, 1e6):
        assert np.allclose(mean(kind, lam * x, lam * y), lam * r, rtol=1e-12, atol=0)
    bump = x * (1 + rng.uniform(0, 1, N))
    assert np.all(mean(kind, bump, y) >= r * (1 - 1e-13))


@pytest.mark.parametrize("kind", KINDS)
@given(x=pos, y=pos)
def test_mean_between_bounds(kind, x, y):
    r = float(mean(kind, x, y))
    assert min(x, y) * (1 - 1e-12) <= r <= max(x, y) * (1 + 1e-12)


@pytest.mark.parametrize("kind", [k for k in KINDS if k is not MeanKind.MAX])
def test_partials_match_differences(kind, rng):
    x, y = np.exp(rng.uniform(-3, 3, (2, 200)))
    # include near-diagonal pairs to exercise the series branch
    y[:50] = x[:50] * (1 + rng.uniform(-1e-6, 1e-6, 50))
    gx, gy = mean_partials(kind, x, y)
    h = 1e-6 * x
    fx = (mean(kind, x + h, y) - mean(kind, x - h, y)) / (2 * h)
    h = 1e-6 * y
    fy = (mean(kind, x, y + h) - mean(kind, x, y - h)) / (2 * h)
    assert np.allclose(gx, fx, rtol=1e-6, atol=1e-8)
    assert np.allclose(gy, fy, rtol=1e-6, atol=1e-8)


def test_logmean_series_is_continuous():
    x = 2.0
    u = np.array([0.99e-5, 1.01e-5])
    r = mean("logarithmic", x, x * np.exp(u))
    exact = x * np.expm1(u) / u
    assert np.allclose(r, exact, rtol=1e-15)


def test_max_partials_split_ties():
    gx, gy = mean_partials("max", np.array([1.0, 2.0, 3.0]), np.array([2.0, 2.0, 1.0]))
    assert gx.tolist() == [0.0, 0.5, 1.0] and gy.tolist() == [1.0, 0.5, 0.0]


# ------------------------------------------------------------------ generators
@pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
def test_phi_normalization(p):
    g = EntropyGenerator(p)
    assert g.phi(1.0) == pytest.approx(0.0, abs=1e-15)
    assert g.phi_prime(1.0) == pytest.approx(0.0, abs=1e-15)


def test_phi_values():
    assert EntropyGenerator(2.0).phi(3.0) == pytest.approx(4.0)
    assert EntropyGenerator(1.0).phi(np.e) == pytest.approx(1.0)
    assert EntropyGenerator(1.0).phi(0.0) == 1.0


def test_phi_errors():
    with pytest.raises(ValueError):
        EntropyGenerator(1.0).phi(-1.0)
    with pytest.raises(ValueError):
        EntropyGenerator(1.0).phi_prime(0.0)
    with pytest.raises(ValueError):
        EntropyGenerator(2.5)


@pytest.mark.parametrize("p", [1.0, 1.2, 1.5, 2.0])
def test_phi_convex(p):
    s = np.linspace(1e-3, 10, 2001)
    h = s[1] - s[0]
    f = EntropyGenerator(p).phi(s)
    assert np.all((f[2:] - 2 * f[1:-1] + f[:-2]) / h**2 >= -1e-10)


# ------------------------------------------------------------------ inequalities
def test_ineq_examples():
    assert check_ineq_func(1.0, 4.0, 1.0)
    assert check_ineq_func(2.0, 3.0, 1.0)  # equality
    assert check_ineq_sub_quadratic(2.0, 3.0, 1.0)  # equality
    assert check_ineq_sub_quadratic(1.5, 2.0, 2.0)
    assert check_sqrt_log_ineq(4.0, 1.0) and check_sqrt_log_ineq(5.0, 5.0)


def test_ineq_sampled(rng):
    x, y = np.exp(rng.uniform(-8, 8, (2, N)))
    p = rng.uniform(1, 2, N)
    p[:1000] = 1.0
    assert check_ineq_func(p, x, y).all()
    q = rng.uniform(1, 2, N)
    q[q == 1.0] = 1.5
    assert check_ineq_sub_quadratic(q, x, y).all()
    assert check_sqrt_log_ineq(x, y).all()
