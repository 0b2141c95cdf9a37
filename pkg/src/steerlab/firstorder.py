"""First-order steering-weight solver used to cross-check the interior-point path.

ADMM on the primal in plain matrix form: hidden states ``H_l`` split against
two PSD copies, ``Z1 = H`` and ``Z2 = sigma - D H``.  Projections are
eigenvalue clippings.  Every ``check_every`` iterations both a feasible
primal point (projected and shrunk) and a dual bound
``sum Tr[F sigma] + tau * max(0, max_l lambda_max(I - sum_ax D_l F_ax))``
are evaluated, so the returned bracket is rigorous whatever the iterate.
"""

from dataclasses import dataclass

import numpy as np

from .steering import enumerate_deterministic_strategies


@dataclass
class BracketResult:
    lower: float
    upper: float
    iterations: int

    @property
    def value(self):
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self):
        return self.upper - self.lower


def _psd_part(m):
    w, v = np.linalg.eigh(m)
    return np.einsum("...ij,...j,...kj->...ik", v, np.clip(w, 0, None), v.conj())


def steering_weight_admm(asm, rho=1.0, relax=1.6, max_iter=100000, target=1e-5, check_every=50):
    """Bracket ``[lower, upper]`` on the steering weight from an ADMM run."""
    sig = asm.sigma
    X, A = asm.shape
    table = enumerate_deterministic_strategies(X, A)
    L = table.shape[0]
    tau = float(asm.probabilities.sum(axis=1).mean())
    xi = np.arange(X)[None, :]
    onehot = np.zeros((L, X, A))
    onehot[np.arange(L)[:, None], xi, table] = 1.0
    dmat = onehot.reshape(L, X * A)  # (L, XA)
    kinv = np.linalg.inv(np.eye(L) + dmat @ dmat.T)
    sflat = sig.reshape(X * A, 2, 2)
    eye = np.eye(2)

    def d_apply(h):
        return np.einsum("lk,lij->kij", dmat, h)

    def dt_apply(v):
        return np.einsum("lk,kij->lij", dmat, v)

    h = np.zeros((L, 2, 2), dtype=complex)
    z1 = np.zeros_like(h)
    z2 = sflat.copy()
    u1 = np.zeros_like(h)
    u2 = np.zeros_like(z2)
    best_lo, best_hi = 0.0, 1.0
    it = 0
    for it in range(1, max_iter + 1):
        rhs = z1 - u1 + dt_apply(sflat + u2 - z2) + eye / rho
        h = np.einsum("lm,mij->lij", kinv, rhs)
        a1 = relax * h + (1 - relax) * z1
        a2 = relax * (sflat - d_apply(h)) + (1 - relax) * z2
        z1 = _psd_part(a1 + u1)
        z2 = _psd_part(a2 + u2)
        u1 = u1 + a1 - z1
        u2 = u2 + a2 - z2
        if it % check_every == 0:
            lo_sw, hi_sw = _bounds(z1, sflat, rho * u2, d_apply, dmat, tau)
            best_lo = max(best_lo, lo_sw)
            best_hi = min(best_hi, hi_sw)
            if best_hi - best_lo <= target:
                break
    return BracketResult(float(best_lo), float(best_hi), it)


def _bounds(hid, sflat, dual_guess, d_apply, dmat, tau):
    # primal: shrink projected hidden states until every slack is PSD -> upper bound on SW
    cover = d_apply(hid)
    lo, hi = 0.0, 1.0
    if np.min(np.linalg.eigvalsh(sflat - cover)) >= -1e-13:
        lo = 1.0
    else:
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            if np.min(np.linalg.eigvalsh(sflat - mid * cover)) >= -1e-13:
                lo = mid
            else:
                hi = mid
    opt_lo = lo * float(np.einsum("lii->", hid).real)
    sw_hi = 1.0 - opt_lo / tau
    # dual: any PSD F gives an upper bound on opt -> lower bound on SW
    best = np.inf
    for sign in (1.0, -1.0):
        f = _psd_part(sign * dual_guess)
        agg = np.einsum("lk,kij->lij", dmat, f)
        excess = np.max(np.linalg.eigvalsh(np.eye(2) - agg)[:, -1])
        val = float(np.einsum("kij,kji->", f, sflat).real) + tau * max(0.0, excess)
        best = min(best, val)
    sw_lo = 1.0 - best / tau
    return sw_lo, sw_hi
