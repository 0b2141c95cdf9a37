import numpy as np
import pytest

from steerlab.optimize import finite_difference_gradient_descent, multi_start, nelder_mead


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


def test_quadratic_bowl():
    c = np.array([0.3, -1.2, 2.0])
    f = lambda x: float(np.sum((x - c) ** 2))
    res = nelder_mead(f, np.zeros(3), xatol=1e-9, fatol=1e-14)
    assert np.allclose(res.x, c, atol=1e-6)
    assert res.converged
    gd = finite_difference_gradient_descent(f, np.zeros(3))
    assert np.allclose(gd.x, c, atol=1e-6)


def test_rosenbrock():
    res = nelder_mead(rosenbrock, [-1.2, 1.0], xatol=1e-10, fatol=1e-14, max_evals=5000)
    assert np.allclose(res.x, [1, 1], atol=1e-4)
    # fine grid around the reported optimum finds nothing lower
    g = np.linspace(-1e-3, 1e-3, 41)
    grid = min(rosenbrock(res.x + [a, b]) for a in g for b in g)
    assert res.fun <= grid + 1e-12


def test_gradient_descent_rosenbrock_progress():
    res = finite_difference_gradient_descent(rosenbrock, [-1.2, 1.0], max_iter=5000, max_evals=100000)
    assert rosenbrock(res.x) < 1e-4


def test_bounds_are_respected():
    f = lambda x: float(np.sum((x - 5) ** 2))
    bounds = [(-1, 1), (-1, 1)]
    for method in (nelder_mead, finite_difference_gradient_descent):
        res = method(f, [0.0, 0.0], bounds=bounds)
        assert np.all(np.abs(res.x) <= 1 + 1e-12)
        assert np.allclose(res.x, [1, 1], atol=1e-5)


def test_budget_exhaustion_is_reported():
    res = nelder_mead(rosenbrock, [-1.2, 1.0], max_evals=20)
    assert not res.converged
    assert res.nfev == 20
    assert res.fun <= rosenbrock(np.array([-1.2, 1.0]))


def two_wells(x):
    # shallow well at -1 with a wide basin on the right, deep well at 2
    x = x[0]
    return min((x + 1) ** 2 - 0.5, 4 * (x - 2) ** 2 - 1.0)


def test_multi_start_finds_global_minimum():
    res = multi_start(two_wells, lambda r: r.uniform(-3, 4, 1), restarts=8, seed=3)
    assert res.x[0] == pytest.approx(2, abs=1e-4)
    assert res.fun == pytest.approx(-1.0, abs=1e-8)
    assert len(res.restarts) == 8


def test_multi_start_is_deterministic_and_order_free():
    kw = dict(restarts=6, seed=7)
    a = multi_start(rosenbrock, lambda r: r.uniform(-2, 2, 2), **kw)
    b = multi_start(rosenbrock, lambda r: r.uniform(-2, 2, 2), workers=3, **kw)
    assert np.array_equal(a.x, b.x) and a.fun == b.fun
    assert a.nfev == sum(r["nfev"] for r in a.restarts)


def test_explicit_start_included():
    res = multi_start(lambda x: float(x[0] ** 2), lambda r: r.uniform(5, 6, 1), restarts=0, starts=[[0.1]])
    assert abs(res.x[0]) < 1e-5


def test_multi_start_needs_a_start():
    from steerlab.errors import DomainError

    with pytest.raises(DomainError):
        multi_start(rosenbrock, lambda r: r.uniform(-1, 1, 2), restarts=0)
