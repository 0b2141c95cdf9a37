"""Outer optimisation loops.

``lower_bound`` minimises the steering weight over the POVM sets Bob may
have performed, keeping only sets under which every reconstructed state is
physical.  ``find_third_strategy`` maximises the steering weight of a
white-noised assemblage over the measurement directions of a third Alice
strategy.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import qmath
from .assemblage import MeasurementStrategy, add_white_noise, builtin_strategies, ideal_assemblage
from .collision import evolve_joint
from .errors import CompletenessError, DomainError, SearchError, SolverError
from .optimize import finite_difference_gradient_descent, multi_start, nelder_mead
from .steering import enumerate_deterministic_strategies, steering_weight
from .tomography import TomographySet, reconstruct_assemblage

log = logging.getLogger(__name__)

IDEAL_ANGLES = (np.pi / 2, np.pi / 2, 0.0)
ANGLE_BOUNDS = [(1e-6, np.pi - 1e-6), (1e-6, np.pi - 1e-6), (-np.pi + 1e-6, np.pi - 1e-6)]


@dataclass
class LbResult:
    lb: float
    angles_deg: tuple
    projective: bool
    mode: str
    params: list
    b0: list
    lengths: list
    ideal_sw: float
    trace: dict = field(default_factory=dict)

    def report(self):
        return {
            "LB": float(self.lb),
            "theta1_deg": float(self.angles_deg[0]),
            "theta2_deg": float(self.angles_deg[1]),
            "phi2_deg": float(self.angles_deg[2]),
            "projective": bool(self.projective),
            "mode": self.mode,
            "b0": [float(v) for v in self.b0],
            "lengths": [float(v) for v in self.lengths],
            "ideal_set_sw": None if self.ideal_sw is None else float(self.ideal_sw),
            "evaluations": int(self.trace.get("nfev", 0)),
            "restarts": self.trace.get("restarts", []),
        }


def set_from_params(params, mode):
    if mode == "projective3":
        return TomographySet.from_canonical(*params[:3])
    if mode == "full9":
        t1, t2, p2 = params[:3]
        b0 = np.asarray(params[3:6])
        frac = np.asarray(params[6:9])
        lengths = frac * np.minimum(b0, 2 - b0)
        return TomographySet.from_canonical(t1, t2, p2, b0=b0, lengths=lengths)
    raise DomainError(f"unknown lower-bound mode {mode!r}")


class _LbObjective:
    def __init__(self, estimates, mode):
        self.estimates = estimates
        self.mode = mode
        x, a = estimates.p_outcome.shape
        self.table = enumerate_deterministic_strategies(x, a)
        self.failures = 0
        self.feasible = 0
        self.warn = True

    def __call__(self, params):
        try:
            tset = set_from_params(params, self.mode)
            asm, valid, worst = reconstruct_assemblage(tset, self.estimates)
        except (CompletenessError, DomainError):
            return 2.0
        if not valid:
            return 1.0 + worst
        try:
            sw = steering_weight(asm, strategies=self.table, warn_signaling=self.warn).steering_weight
            self.warn = False
        except (SolverError, DomainError) as exc:
            self.failures += 1
            log.warning("SW evaluation failed during LB search: %s", exc)
            return 2.0
        self.feasible += 1
        return sw


def lower_bound(estimates, mode="projective3", restarts=None, local=None, seed=0, max_evals=1500, workers=1):
    """Smallest steering weight over valid tomography sets.

    Parameters
    ----------
    estimates : ProbabilityEstimates
    mode : {"projective3", "full9"}
    restarts : int, optional
        Random restarts besides the ideal-set start.  Defaults to 4 for
        ``N <= 2`` and 0 otherwise.
    local : {"nelder_mead", "gradient"}, optional
        Local method; defaults to Nelder-Mead for ``N <= 2`` and gradient
        descent otherwise.
    workers : int
        Threads running local searches concurrently.

    Returns
    -------
    LbResult

    Raises
    ------
    SearchError
        If no start reaches a set with all reconstructed states physical.
    """
    n_anc = int(round(np.log2(estimates.p_outcome.shape[1])))
    small = n_anc <= 2
    restarts = (4 if small else 0) if restarts is None else restarts
    local = ("nelder_mead" if small else "gradient") if local is None else local
    f = _LbObjective(estimates, mode)
    if mode == "projective3":
        bounds = ANGLE_BOUNDS
        start = list(IDEAL_ANGLES)
    elif mode == "full9":
        bounds = ANGLE_BOUNDS + [(1e-6, 2 - 1e-6)] * 3 + [(0.0, 1.0)] * 3
        start = list(IDEAL_ANGLES) + [1.0] * 3 + [1.0] * 3
    else:
        raise DomainError(f"unknown lower-bound mode {mode!r}")
    lo, hi = np.asarray(bounds).T

    def sampler(rng):
        return rng.uniform(lo, hi)

    if local == "nelder_mead":
        method, kw = nelder_mead, {"bounds": bounds, "max_evals": max_evals}
    elif local == "gradient":
        method, kw = finite_difference_gradient_descent, {"bounds": bounds, "max_evals": max_evals}
    else:
        raise DomainError(f"unknown local method {local!r}")
    ideal_sw = f(np.array(start))
    res = multi_start(f, sampler, restarts, local=method, starts=[start], seed=seed, workers=workers, **kw)
    if res.fun > 1.0:
        raise SearchError("no valid tomography set found", trace=res.restarts)
    tset = set_from_params(res.x, mode)
    angles = np.degrees(tset.canonical_angles())
    return LbResult(
        lb=float(res.fun),
        angles_deg=tuple(float(a) for a in angles),
        projective=bool(
            np.allclose(tset.b0, 1, atol=1e-2) and np.allclose(tset.lengths, 1, atol=1e-2)
        ),
        mode=mode,
        params=[float(v) for v in res.x],
        b0=list(tset.b0),
        lengths=list(tset.lengths),
        ideal_sw=float(ideal_sw) if ideal_sw <= 1.0 else None,
        trace={
            "nfev": res.nfev,
            "restarts": res.restarts,
            "method": res.method,
            "solver_failures": f.failures,
        },
    )


# --- third strategy --------------------------------------------------------


@dataclass
class ThirdStrategyResult:
    theta: np.ndarray
    phi: np.ndarray
    steering_weight: float
    two_setting_sw: float
    trace: dict = field(default_factory=dict)

    @property
    def theta_n(self):
        return float(np.mean(self.theta))

    @property
    def phi_n(self):
        return float(np.mean(self.phi))

    def report(self):
        return {
            "theta_N": self.theta_n,
            "phi_N": self.phi_n,
            "theta": [float(v) for v in self.theta],
            "phi": [float(v) for v in self.phi],
            "steering_weight": float(self.steering_weight),
            "two_setting_steering_weight": float(self.two_setting_sw),
            "evaluations": int(self.trace.get("nfev", 0)),
            "restarts": self.trace.get("restarts", []),
        }


def canonical_directions(dirs):
    """Representative of a direction list under outcome relabelling and complex conjugation.

    Flipping one ancilla's direction only relabels its outcomes, so each
    direction is made to point into the upper (z >= 0) hemisphere, ties broken
    towards y >= 0.  Complex conjugation of the real joint state mirrors all y
    components at once; it is used to make the first ancilla's y >= 0.
    Ancillas are finally ordered by decreasing z component.
    """
    d = np.array(dirs, dtype=float)
    for i in range(len(d)):
        z, y = d[i, 2], d[i, 1]
        if z < -1e-9 or (abs(z) <= 1e-9 and y < 0):
            d[i] = -d[i]
    if d[0, 1] < 0:
        d[:, 1] = -d[:, 1]
    # the collision unitaries commute, so ancillas are interchangeable
    order = sorted(range(len(d)), key=lambda i: tuple(np.round(-d[i, ::-1], 9)))
    d = d[order]
    if d[0, 1] < 0:
        d[:, 1] = -d[:, 1]
    return d


def find_third_strategy(
    config,
    lam=0.05,
    restarts=8,
    seed=0,
    max_evals=1000,
    rho0=None,
    shared=False,
    workers=1,
    xatol=1e-4,
    fatol=1e-7,
):
    """Angles of the third strategy maximising the steering weight at white noise ``lam``.

    With ``shared=True`` a single direction is used for every ancilla, which
    is the structure of the tabulated third strategy; by default each ancilla
    gets its own ``(theta_i, phi_i)``.  The returned directions are put in
    canonical form (see :func:`canonical_directions`).

    Raises
    ------
    SearchError
        If the best local search ran out of evaluations before converging.
    """
    rho0 = qmath.ket_to_dm(qmath.KET0) if rho0 is None else rho0
    joint = evolve_joint(rho0, config)
    x1, x2, _ = builtin_strategies(config, theta=np.pi / 2)
    n = config.N
    table = enumerate_deterministic_strategies(3, 2**n)

    def sw_of(dirs):
        x3 = MeasurementStrategy("x3", dirs)
        asm = add_white_noise(ideal_assemblage(joint, [x1, x2, x3]), lam)
        return steering_weight(asm, strategies=table).steering_weight

    k = 1 if shared else n

    def dirs_of(params):
        th, ph = np.resize(params[:k], n), np.resize(params[k:], n)
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)

    def objective(params):
        return -sw_of(dirs_of(params))

    bounds = [(0.0, np.pi)] * k + [(-np.pi, np.pi)] * k
    lo, hi = np.asarray(bounds).T

    def sampler(rng):
        return rng.uniform(lo, hi)

    res = multi_start(
        objective,
        sampler,
        restarts,
        local=nelder_mead,
        seed=seed,
        workers=workers,
        bounds=bounds,
        max_evals=max_evals,
        xatol=xatol,
        fatol=fatol,
    )
    if not res.converged:
        raise SearchError("third-strategy search did not converge", trace=res.restarts)
    dirs = canonical_directions(dirs_of(res.x))
    theta = np.arccos(np.clip(dirs[:, 2], -1, 1))
    phi = np.arctan2(dirs[:, 1], dirs[:, 0])
    two = add_white_noise(ideal_assemblage(joint, [x1, x2]), lam)
    return ThirdStrategyResult(
        theta=theta,
        phi=phi,
        steering_weight=-res.fun,
        two_setting_sw=steering_weight(two).steering_weight,
        trace={"nfev": res.nfev, "restarts": res.restarts},
    )
