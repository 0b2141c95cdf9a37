"""Steering weight of a qubit assemblage.

The local-hidden-state set is finitised by deterministic response
functions ``D_l(a|x)``.  The steering weight is ``1 - opt`` where::

    opt = max  sum_l Tr[s_l]
          s.t. sum_l D_l(a|x) s_l <= sigma_{a|x}   for all (a, x)
               s_l >= 0

and its dual is::

    min  sum_{a,x} Tr[F_{a|x} sigma_{a|x}]
    s.t. F_{a|x} >= 0,  sum_{a,x} D_l(a|x) F_{a|x} >= I   for all l.

Every PSD block is 2x2 Hermitian, so in the coordinates
``(Tr M, Tr[X M], Tr[Y M], Tr[Z M])`` each block constraint is a
four-dimensional second-order cone.  The solver below is a primal-dual
interior-point method (Nesterov-Todd scaling, Mehrotra predictor-corrector)
specialised to that structure.
"""

import logging
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import linalg as sla
from scipy import sparse

from . import qmath
from .assemblage import no_signaling_defect
from .errors import DomainError, ResourceError, SolverError
from .policy import TOL

log = logging.getLogger(__name__)

MAX_STRATEGIES = 20000
_J = np.array([1.0, -1.0, -1.0, -1.0])


def enumerate_deterministic_strategies(num_settings, outcomes_per_setting, max_strategies=MAX_STRATEGIES):
    """All response functions as an integer table of shape ``(A**X, X)``.

    Row ``l`` lists the outcome assigned to each setting; rows are in
    lexicographic order.
    """
    count = outcomes_per_setting**num_settings
    if count > max_strategies:
        raise ResourceError(
            f"{count} deterministic strategies exceed the budget of {max_strategies}"
        )
    return np.array(list(product(range(outcomes_per_setting), repeat=num_settings)), dtype=np.int64).reshape(
        count, num_settings
    )


@dataclass
class SdpSolution:
    """Optimal decomposition ``sigma = p gamma + (1 - p) sigma_lhs`` and its dual certificate."""

    steering_weight: float
    dual_bound: float
    gap: float
    gamma: np.ndarray
    sigma_lhs: np.ndarray
    hidden_states: np.ndarray
    strategies: np.ndarray
    dual: np.ndarray
    iterations: int
    converged: bool
    no_signaling_defect: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def p(self):
        return self.steering_weight

    def report(self):
        """JSON-ready summary."""
        return {
            "steering_weight": float(self.steering_weight),
            "dual_bound": float(self.dual_bound),
            "gap": float(self.gap),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "no_signaling_defect": float(self.no_signaling_defect),
            "dual_functional": [
                [[[[float(v.real), float(v.imag)] for v in row] for row in fa] for fa in fx]
                for fx in self.dual
            ],
        }


# --- second-order cone helpers (blocks are rows of an (n, 4) array) ---------


def _jdet(u):
    nv = np.linalg.norm(u[:, 1:], axis=1)
    return (u[:, 0] - nv) * (u[:, 0] + nv)


def _jprod(u, v):
    out = np.empty_like(u)
    out[:, 0] = np.einsum("ij,ij->i", u, v)
    out[:, 1:] = u[:, :1] * v[:, 1:] + v[:, :1] * u[:, 1:]
    return out


def _jdiv(u, v):
    """Solve ``u o w = v`` for ``w``."""
    w = np.empty_like(v)
    w[:, 0] = (u[:, 0] * v[:, 0] - np.einsum("ij,ij->i", u[:, 1:], v[:, 1:])) / _jdet(u)
    w[:, 1:] = (v[:, 1:] - w[:, :1] * u[:, 1:]) / u[:, :1]
    return w


def _max_step(u, d):
    """Largest ``a >= 0`` with ``u + a d`` in the cone (``inf`` if unbounded)."""
    a = _jdet(d)
    b = 2 * (u[:, 0] * d[:, 0] - np.einsum("ij,ij->i", u[:, 1:], d[:, 1:]))
    c = _jdet(u)
    step = np.full(u.shape[0], np.inf)
    lin = np.abs(a) < 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = b * b - 4 * a * c
        sq = np.sqrt(np.maximum(disc, 0))
        # numerically stable roots
        q = -0.5 * (b + np.copysign(sq, b))
        r1 = q / a
        r2 = c / q
    for r in (r1, r2):
        ok = (~lin) & (disc >= 0) & np.isfinite(r) & (r > 0)
        step = np.where(ok, np.minimum(step, r), step)
    with np.errstate(divide="ignore", invalid="ignore"):
        rl = -c / b
    ok = lin & (b < 0)
    step = np.where(ok, np.minimum(step, rl), step)
    # leaving through the apex: u0 + a d0 hits zero
    with np.errstate(divide="ignore", invalid="ignore"):
        apex = -u[:, 0] / d[:, 0]
    step = np.where((d[:, 0] < 0) & (apex > 0), np.minimum(step, apex), step)
    return float(step.min()) if step.size else np.inf


def _nt_scaling(x, z):
    """Nesterov-Todd scaling ``W`` (symmetric) with ``W x = W^{-1} z``; returns W, W^{-1}, lambda."""
    xn = np.sqrt(_jdet(x))
    zn = np.sqrt(_jdet(z))
    xb = x / xn[:, None]
    zb = z / zn[:, None]
    gamma = np.sqrt(0.5 * (1 + np.einsum("ij,ij->i", xb, zb)))
    # u = geometric mean of x^{-1} and z (unit determinant); the scaling uses its square root
    u = (zb + _J * xb) / (2 * gamma[:, None])
    wb = u.copy()
    wb[:, 0] += 1.0
    wb /= np.sqrt(2 * (1 + u[:, 0]))[:, None]
    beta = np.sqrt(zn / xn)
    outer = np.einsum("ni,nj->nij", wb, wb)
    jm = np.diag(_J)
    w = beta[:, None, None] * (2 * outer - jm)
    jw = _J * wb
    winv = (2 * np.einsum("ni,nj->nij", jw, jw) - jm) / beta[:, None, None]
    lam = np.einsum("nij,nj->ni", w, x)
    return w, winv, lam


def _project_cone(u):
    t = u[:, 0]
    nv = np.linalg.norm(u[:, 1:], axis=1)
    out = u.copy()
    inside = nv <= t
    zero = nv <= -t
    mid = ~(inside | zero)
    scale = 0.5 * (t[mid] + nv[mid])
    out[mid, 0] = scale
    out[mid, 1:] = u[mid, 1:] * (scale / nv[mid])[:, None]
    out[zero] = 0
    return out


def _min_eig_coords(c):
    """Smallest eigenvalue of ``(c0 I + c . sigma)``-type operators in F-coordinates."""
    return c[:, 0] - np.linalg.norm(c[:, 1:], axis=1)


# --- problem assembly --------------------------------------------------------


class _Problem:
    def __init__(self, coords, strategies, active):
        self.X, self.A = active.shape
        self.table = strategies
        mid = -np.ones((self.X, self.A), dtype=np.int64)
        mid[active] = np.arange(active.sum())
        self.mid = mid
        self.K = int(active.sum())
        keep = np.all(active[np.arange(self.X)[None, :], strategies], axis=1)
        self.keep = keep
        self.resp = strategies[keep]
        self.L = self.resp.shape[0]
        self.b = coords[active]  # (K, 4)
        rows = mid[np.arange(self.X)[None, :], self.resp]  # (L, X)
        self.rows = rows
        cols = np.repeat(np.arange(self.L), self.X)
        self.E = sparse.csr_matrix(
            (np.ones(self.L * self.X), (rows.ravel(), cols)), shape=(self.K, self.L)
        )
        self.ET = self.E.T.tocsr()
        pair = rows[:, :, None] * self.K + rows[:, None, :]  # (L, X, X)
        self.pair_index = pair.reshape(self.L, -1)

    def a_mul(self, xs, xu):
        return self.E @ xs + xu

    def at_mul(self, y):
        return self.ET @ y, y

    def schur(self, hs, hu):
        """``A H A^T`` with block-diagonal ``H = diag(hs, hu)``; returns a (4K, 4K) matrix."""
        K, L = self.K, self.L
        nx2 = self.pair_index.shape[1]
        idx = (self.pair_index[:, :, None] * 16 + np.arange(16)[None, None, :]).ravel()
        w = np.broadcast_to(hs.reshape(L, 1, 16), (L, nx2, 16)).ravel()
        m = np.bincount(idx, weights=w, minlength=K * K * 16).reshape(K, K, 4, 4)
        m[np.arange(K), np.arange(K)] += hu
        return m.transpose(0, 2, 1, 3).reshape(4 * K, 4 * K)


def _prepare(asm, psd_tol=TOL.input_lift):
    """Member coordinates after lifting floating-point negativity; raises on real violations."""
    p = asm.probabilities
    r = asm.bloch.copy()
    norms = np.linalg.norm(r, axis=-1)
    lam_min = p * (1 - norms) / 2
    if np.any(lam_min < -psd_tol):
        raise DomainError(
            f"assemblage member has eigenvalue {lam_min.min():.3e} below -{psd_tol:g}"
        )
    over = norms > 1
    if over.any():
        log.info("lifting %d members with eigenvalues down to %.2e", over.sum(), lam_min.min())
        r[over] /= norms[over][:, None]
    coords = np.concatenate([p[..., None], p[..., None] * r], axis=-1)
    return coords


def steering_weight(
    asm,
    strategies=None,
    tol=TOL,
    zero_prob=1e-14,
    check_signaling=True,
    warn_signaling=True,
):
    """Steering weight with primal decomposition and dual certificate.

    Parameters
    ----------
    asm : Assemblage
    strategies : ndarray, optional
        Deterministic strategy table; enumerated when omitted.  Passing a
        cached table avoids re-enumeration inside optimisation loops.
    check_signaling : bool
        Reject assemblages whose no-signaling defect exceeds the gate.
    warn_signaling : bool
        Log a warning for defects between the warning level and the gate.

    Returns
    -------
    SdpSolution
    """
    X, A = asm.shape
    defect = no_signaling_defect(asm) if X > 1 else 0.0
    if check_signaling:
        if defect > tol.signaling_gate:
            raise DomainError(f"no-signaling defect {defect:.3g} exceeds gate {tol.signaling_gate}")
        if warn_signaling and defect > tol.signaling_warn:
            log.warning("assemblage signals: defect %.3g", defect)
    if strategies is None:
        strategies = enumerate_deterministic_strategies(X, A)
    coords = _prepare(asm)
    totals = coords[..., 0].sum(axis=1)
    tau = float(totals.mean())
    if tau <= 0:
        raise DomainError("assemblage has zero total weight")
    active = coords[..., 0] > zero_prob
    prob = _Problem(coords, strategies, active)
    best_primal, best_dual, info = _interior_point(prob, tol, tau)
    return _finish(asm, prob, best_primal, best_dual, info, tau, defect, tol)


def _interior_point(prob, tol, tau):
    K, L = prob.K, prob.L
    b = prob.b
    n_blocks = L + K
    cs = np.zeros((L, 4))
    cs[:, 0] = -1.0
    cu = np.zeros((K, 4))
    e = np.array([1.0, 0, 0, 0])
    xs = np.tile(e, (L, 1))
    xu = np.tile(e, (K, 1))
    zs = np.tile(e, (L, 1))
    zu = np.tile(e, (K, 1))
    y = np.zeros((K, 4))
    bnorm = max(1.0, np.linalg.norm(b))
    cnorm = max(1.0, np.sqrt(L))
    history = []
    status = "max_iter"
    it = 0
    # near the optimum rounding can undo feasibility, so every late iterate is repaired and the
    # best rigorous bound on each side is kept
    best_primal = best_dual = None
    for it in range(1, tol.sdp_max_iter + 1):
        x = np.vstack([xs, xu])
        z = np.vstack([zs, zu])
        rp = b - prob.a_mul(xs, xu)
        aty_s, aty_u = prob.at_mul(y)
        rd_s = cs - aty_s - zs
        rd_u = cu - aty_u - zu
        gap = float(np.sum(x * z))
        pobj = float(np.sum(cs * xs))
        dobj = float(np.sum(b * y))
        pres = np.linalg.norm(rp) / bnorm
        dres = np.sqrt(np.sum(rd_s**2) + np.sum(rd_u**2)) / cnorm
        relgap = gap / max(1.0, abs(pobj))
        history.append((pobj, dobj, gap, pres, dres))
        if pres <= tol.sdp_feas and dres <= tol.sdp_feas and relgap <= tol.sdp_rel_gap:
            status = "optimal"
            break
        if max(pres, dres, relgap) <= 1e-4:
            best_primal, best_dual = _keep_best(prob, xs, y, tau, best_primal, best_dual)
        mu = gap / n_blocks
        if np.min(_jdet(x)) <= 0 or np.min(_jdet(z)) <= 0:
            # an iterate reached the cone boundary in floating point; the repair step certifies it
            status = "boundary"
            break
        w, winv, lam = _nt_scaling(x, z)
        if not np.all(np.isfinite(w)):
            status = "boundary"
            break
        winv2 = np.einsum("nij,njk->nik", winv, winv)
        hs, hu = winv2[:L], winv2[L:]
        try:
            factor = _factor(prob.schur(hs, hu))
        except np.linalg.LinAlgError:
            status = "schur_breakdown"
            break
        rd = np.vstack([rd_s, rd_u])

        def solve(rc):
            s = _jdiv(lam, rc)
            ws = np.einsum("nij,nj->ni", winv, s)  # W^{-1} s
            t = ws - np.einsum("nij,nj->ni", winv2, rd)  # W^{-1}s - W^{-2} r_d
            rhs = rp - prob.a_mul(t[:L], t[L:])
            dy = factor(rhs.ravel()).reshape(K, 4)
            ats, atu = prob.at_mul(dy)
            at = np.vstack([ats, atu])
            dx = np.einsum("nij,nj->ni", winv2, at) + t
            dz = rd - at
            return dx, dy, dz

        dxa, dya, dza = solve(-_jprod(lam, lam))
        alpha_a = min(1.0, _max_step(x, dxa), _max_step(z, dza))
        mu_a = float(np.sum((x + alpha_a * dxa) * (z + alpha_a * dza))) / n_blocks
        sigma = (max(mu_a, 0.0) / mu) ** 3 if mu > 0 else 0.0
        corr = _jprod(
            np.einsum("nij,nj->ni", winv, dza), np.einsum("nij,nj->ni", w, dxa)
        )
        rc = -_jprod(lam, lam) - corr
        rc[:, 0] += sigma * mu
        dx, dy, dz = solve(rc)
        alpha = min(1.0, 0.99 * min(_max_step(x, dx), _max_step(z, dz)))
        xs = xs + alpha * dx[:L]
        xu = xu + alpha * dx[L:]
        zs = zs + alpha * dz[:L]
        zu = zu + alpha * dz[L:]
        y = y + alpha * dy
    best_primal, best_dual = _keep_best(prob, xs, y, tau, best_primal, best_dual)
    info = {"status": status, "iterations": it, "history": history}
    return best_primal, best_dual, info


def _keep_best(prob, xs, y, tau, best_primal, best_dual):
    rep = _repair(prob, xs, y, tau)
    if best_primal is None or rep[0] < best_primal[0]:
        best_primal = rep
    if best_dual is None or rep[1] > best_dual[1]:
        best_dual = rep
    return best_primal, best_dual


def _factor(m):
    """Solver for ``m v = r``; ``m`` is SPD in exact arithmetic but may lose definiteness near the optimum."""
    scale = float(np.max(np.abs(np.diag(m))))
    if not np.isfinite(scale):
        raise np.linalg.LinAlgError("non-finite Schur complement")
    for reg in (0.0, 1e-13, 1e-10):
        try:
            chol = sla.cho_factor(m + reg * scale * np.eye(m.shape[0]), lower=True)
        except (np.linalg.LinAlgError, ValueError):
            continue
        return lambda r, chol=chol: sla.cho_solve(chol, r)
    w, v = np.linalg.eigh(m)
    keep = w > 1e-14 * scale
    if not keep.any():
        raise np.linalg.LinAlgError("singular Schur complement")
    vk = v[:, keep] / w[keep]
    return lambda r: vk @ (v[:, keep].T @ r)


def _repair(prob, xs, y, tau):
    """Rigorous (upper, lower) steering-weight pair and certificates from an approximate iterate."""
    b = prob.b
    # primal repair: hidden states into the cone, then shrink until every slack is PSD
    hs = _project_cone(xs)
    t = prob.E @ hs
    alpha = _shrink_to_fit(b, t)
    hs = alpha * hs
    t = alpha * t
    opt = float(hs[:, 0].sum())
    sw = 1.0 - opt / tau
    # dual repair: F into the cone, then rescale until sum_l D_l F >= I
    f = _project_cone(-y)
    agg = prob.ET @ f
    worst = float(np.max(1.0 - _min_eig_coords(agg))) if prob.L else 0.0
    if worst >= 1.0:
        dual_value = np.inf
        f_scaled = f
    else:
        f_scaled = f / (1.0 - max(worst, 0.0))
        dual_value = float(np.sum(b * f_scaled))
    dual_bound = 1.0 - dual_value / tau
    return sw, dual_bound, hs, t, alpha, f_scaled, worst


def _finish(asm, prob, best_primal, best_dual, info, tau, defect, tol):
    X, A = asm.shape
    # each repaired side is a valid bound on its own, so primal and dual may come from different iterates
    sw, _, hs, t, alpha, _, _ = best_primal
    _, dual_bound, _, _, _, f_scaled, worst = best_dual
    gap = sw - dual_bound

    full_hidden = np.zeros((prob.table.shape[0], 2, 2), dtype=complex)
    full_hidden[prob.keep] = qmath.from_bloch_coords(hs)
    dual = np.zeros((X, A, 2, 2), dtype=complex)
    dual[:] = np.eye(2)
    active = prob.mid >= 0
    dual[active] = _f_matrix(f_scaled)
    sig = asm.sigma
    lhs_part = np.zeros((X, A, 2, 2), dtype=complex)
    lhs_part[active] = qmath.from_bloch_coords(t)
    p = sw
    sigma_lhs = lhs_part / (1 - p) if 1 - p > 1e-15 else np.zeros_like(lhs_part)
    gamma = (sig - lhs_part) / p if p > 1e-15 else np.zeros_like(sig)
    converged = info["status"] == "optimal" or gap <= tol.certificate_gap
    diag = {
        "status": info["status"],
        "primal_shrink": alpha,
        "dual_rescale": worst,
        "strategies_used": int(prob.L),
        "history": info["history"],
    }
    if not np.isfinite(gap) or gap > tol.certificate_gap:
        raise SolverError(f"SDP did not certify (gap={gap:.3e}, status={info['status']})", diag)
    return SdpSolution(
        steering_weight=float(min(max(sw, 0.0), 1.0)),
        dual_bound=float(dual_bound),
        gap=float(max(gap, 0.0)),
        gamma=gamma,
        sigma_lhs=sigma_lhs,
        hidden_states=full_hidden,
        strategies=prob.table,
        dual=dual,
        iterations=info["iterations"],
        converged=converged,
        no_signaling_defect=defect,
        diagnostics=diag,
    )


def _f_matrix(f):
    """Operators ``f0 I + f . sigma`` from F-coordinates."""
    return np.einsum("nk,kij->nij", f, qmath.PAULIS)


def _shrink_to_fit(b, t, iters=60):
    """Largest ``a`` in [0, 1] with ``b_k - a t_k`` no less PSD than ``b_k`` for all ``k``."""
    floor = np.minimum(_min_eig_half(b), 0.0)

    def ok(a):
        return np.all(_min_eig_half(b - a * t) >= floor - 1e-15)

    if ok(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _min_eig_half(c):
    """Smallest eigenvalue of ``(c0 I + c . sigma) / 2``."""
    return 0.5 * (c[:, 0] - np.linalg.norm(c[:, 1:], axis=1))


def dual_certificate_check(asm, solution, tol=TOL.certificate_gap, psd_tol=1e-9):
    """Re-verify a solution's dual functional against the assemblage.

    Returns ``(ok, margins)`` where ``margins`` holds the smallest eigenvalue
    of any ``F_{a|x}``, the smallest eigenvalue of any
    ``sum_{a,x} D_l(a|x) F_{a|x} - I``, and the primal-dual difference.
    """
    f = np.asarray(solution.dual)
    X, A = asm.shape
    table = solution.strategies
    if f.shape != (X, A, 2, 2) or table.shape[1] != X:
        return False, {"reason": "shape mismatch"}
    f_min = float(np.min(qmath.eig2(f)[0]))
    agg = f[np.arange(X)[None, :], table].sum(axis=1) - np.eye(2)
    cover_min = float(np.min(qmath.eig2(agg)[0]))
    sig = asm.sigma
    tau = float(asm.probabilities.sum(axis=1).mean())
    dual_value = float(np.einsum("xaij,xaji->", f, sig).real)
    dual_sw = 1.0 - dual_value / tau
    diff = abs(solution.steering_weight - dual_sw)
    margins = {"min_eig_F": f_min, "min_eig_cover": cover_min, "primal_dual_diff": diff}
    ok = f_min >= -psd_tol and cover_min >= -psd_tol and diff <= tol
    return bool(ok), margins
