"""Derivative-free local optimisers and a deterministic multi-start driver.

All optimisers minimise ``f`` over a box given as ``bounds = [(lo, hi), ...]``
and return an :class:`OptimumResult`.  Exhausting the evaluation budget is
not an error: the best point so far is returned with ``converged=False``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as sopt

from .errors import DomainError


@dataclass
class OptimumResult:
    x: np.ndarray
    fun: float
    nfev: int
    converged: bool
    method: str = ""
    restarts: list = field(default_factory=list)


class _Counted:
    def __init__(self, f, max_evals):
        self.f = f
        self.max_evals = max_evals
        self.nfev = 0
        self.best_x = None
        self.best_f = np.inf

    def __call__(self, x):
        if self.nfev >= self.max_evals:
            raise _Budget
        self.nfev += 1
        v = float(self.f(np.asarray(x, dtype=float)))
        if v < self.best_f:
            self.best_f, self.best_x = v, np.array(x, dtype=float)
        return v


class _Budget(Exception):
    pass


def _clip(x, bounds):
    if bounds is None:
        return np.asarray(x, dtype=float)
    lo, hi = np.asarray(bounds, dtype=float).T
    return np.clip(x, lo, hi)


def nelder_mead(f, x0, bounds=None, xatol=1e-6, fatol=1e-9, max_evals=2000, initial_step=0.1):
    """Bounded Nelder-Mead (SciPy's implementation) with an evaluation budget."""
    x0 = _clip(np.asarray(x0, dtype=float), bounds)
    counted = _Counted(f, max_evals)
    simplex = [x0]
    for k in range(x0.size):
        v = x0.copy()
        step = initial_step if bounds is None else initial_step * (bounds[k][1] - bounds[k][0]) / 2
        v[k] += step if bounds is None or v[k] + step <= bounds[k][1] else -step
        simplex.append(v)
    converged = False
    try:
        res = sopt.minimize(
            counted,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={
                "xatol": xatol,
                "fatol": fatol,
                "maxfev": max_evals,
                "initial_simplex": np.array(simplex),
                "adaptive": x0.size > 4,
            },
        )
        converged = bool(res.success)
    except _Budget:
        pass
    return OptimumResult(counted.best_x, counted.best_f, counted.nfev, converged, "nelder_mead")


def finite_difference_gradient_descent(
    f, x0, bounds=None, step=1e-4, lr=0.5, gtol=1e-7, xtol=1e-9, max_iter=200, max_evals=4000
):
    """Projected steepest descent with central-difference gradients and Armijo backtracking."""
    x = _clip(np.asarray(x0, dtype=float), bounds)
    counted = _Counted(f, max_evals)
    converged = False
    try:
        fx = counted(x)
        rate = lr
        for _ in range(max_iter):
            grad = np.empty_like(x)
            for k in range(x.size):
                e = np.zeros_like(x)
                e[k] = step
                grad[k] = (counted(_clip(x + e, bounds)) - counted(_clip(x - e, bounds))) / (2 * step)
            gnorm = np.linalg.norm(grad)
            if gnorm < gtol:
                converged = True
                break
            accepted = False
            while rate > 1e-12:
                cand = _clip(x - rate * grad, bounds)
                fc = counted(cand)
                if fc <= fx - 1e-4 * rate * gnorm**2 or (fc < fx and np.linalg.norm(cand - x) < xtol):
                    accepted = True
                    break
                rate *= 0.5
            if not accepted:
                converged = True
                break
            moved = np.linalg.norm(cand - x)
            x, fx = cand, fc
            rate = min(rate * 2.0, lr * 16)
            if moved < xtol:
                converged = True
                break
    except _Budget:
        pass
    return OptimumResult(counted.best_x, counted.best_f, counted.nfev, converged, "gradient_descent")


def multi_start(f, sampler, restarts, local=nelder_mead, starts=(), seed=0, workers=1, **local_kwargs):
    """Run ``local`` from the explicit ``starts`` and from ``restarts`` sampled points.

    ``sampler(rng)`` draws one start; all starts are drawn before any local
    search runs.  With ``workers > 1`` the local searches run in a thread
    pool (``f`` must then be thread-safe).  The overall optimum is chosen by
    value, then lexicographically by parameters, so the result does not
    depend on completion order.
    """
    rng = np.random.default_rng(seed)
    points = [np.asarray(s, dtype=float) for s in starts]
    points += [np.asarray(sampler(rng), dtype=float) for _ in range(restarts)]
    if not points:
        raise DomainError("multi_start needs at least one start")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(lambda p: local(f, p, **local_kwargs), points))
    else:
        runs = [local(f, p, **local_kwargs) for p in points]
    best = min(runs, key=lambda r: (round(r.fun, 12), tuple(np.round(r.x, 12))))
    return OptimumResult(
        best.x,
        best.fun,
        sum(r.nfev for r in runs),
        best.converged,
        f"multi_start[{best.method}]",
        restarts=[
            {"start": p.tolist(), "x": r.x.tolist(), "fun": r.fun, "nfev": r.nfev, "converged": r.converged}
            for p, r in zip(points, runs)
        ],
    )
