"""Qubit collision model producing dephasing in the X basis.

A single collision rotates a fresh ancilla (prepared in ``|0>``) by
``R_y(g)`` and then applies a CNOT controlled by the ancilla and targeting
the system.  On the system Bloch vector the step acts as
``diag(1, 1, cos g, cos g)`` in the extended coordinates ``k = (1, r)``, so
``N`` collisions with ``cos g = exp(-T/N)`` realise the same channel for
every ``N``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import qmath
from .errors import DomainError, ResourceError

MAX_COLLISIONS = 5


@dataclass(frozen=True)
class CollisionConfig:
    """Total dephasing time ``T`` split into ``N`` equal collisions."""

    T: float = 2.0
    N: int = 1
    max_collisions: int = field(default=MAX_COLLISIONS, compare=False)

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError(f"total time must be positive, got T={self.T}")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"number of collisions must be a positive integer, got N={self.N}")

    @property
    def step(self):
        return self.T / self.N

    @property
    def coupling(self):
        return float(np.arccos(np.exp(-self.step)))


def time_step_from_coupling(g):
    return -np.log(np.cos(g))


def _check_coupling(g):
    if not 0 < g < np.pi / 2:
        raise DomainError(f"coupling g={g} outside (0, pi/2)")


def cnot(control, target, n):
    """CNOT on ``n`` qubits as a dense permutation matrix."""
    dim = 2**n
    idx = np.arange(dim)
    cbit = (idx >> (n - 1 - control)) & 1
    flipped = idx ^ (cbit << (n - 1 - target))
    u = np.zeros((dim, dim), dtype=complex)
    u[flipped, idx] = 1
    return u


def collision_unitary(g):
    """Two-qubit collision ``W = CX(ancilla -> system) (I (x) R_y(g))``.

    Ordering is (system, ancilla).
    """
    _check_coupling(g)
    return cnot(1, 0, 2) @ qmath.kron(qmath.I2, qmath.ry(g))


def evolve_joint(rho0, config):
    """System-environment state after ``config.N`` collisions with fresh ``|0>`` ancillas."""
    rho0 = qmath.validate_density(rho0)
    if rho0.shape != (2, 2):
        raise DomainError("initial system state must be a single qubit")
    n_anc = config.N
    if n_anc > config.max_collisions:
        raise ResourceError(
            f"N={n_anc} collisions need {n_anc + 1} qubits, budget is {config.max_collisions + 1}"
        )
    n = n_anc + 1
    anc = qmath.ket_to_dm(qmath.KET0)
    rho = qmath.kron(rho0, *([anc] * n_anc))
    w = collision_unitary(config.coupling)
    for i in range(1, n):
        rho = qmath.apply_unitary(rho, w, [0, i], n)
    return rho


def single_step_channel(g, tomographic=True):
    """4x4 real matrix of one collision acting on extended Bloch vectors ``(1, r)``.

    With ``tomographic=True`` the matrix is obtained by process tomography of
    the Stinespring form on the Pauli basis rather than written down.
    """
    _check_coupling(g)
    if not tomographic:
        return np.diag([1.0, 1.0, np.cos(g), np.cos(g)])
    w = collision_unitary(g)
    anc = qmath.ket_to_dm(qmath.KET0)
    lam = np.zeros((4, 4))
    for j in range(4):
        out = w @ np.kron(qmath.PAULIS[j], anc) @ w.conj().T
        red = qmath.partial_trace(out, [0])
        # column j: image of sigma_j, expressed in the basis sigma_i / 2 coordinates
        lam[:, j] = 0.5 * qmath.bloch_coords(red)
    return lam


def composed_channel(config):
    return np.linalg.matrix_power(single_step_channel(config.coupling), config.N)


def choi_of_bloch_channel(lam):
    """Choi operator ``sum_ij |i><j| (x) E(|i><j|)`` of a qubit map given in extended Bloch form."""
    lam = np.asarray(lam, dtype=float)
    choi = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i, j] = 1
            c = 2 * np.array([np.trace(p @ e) / 2 for p in qmath.PAULIS])
            out = 0.5 * np.einsum("k,kab->ab", lam @ c, qmath.PAULIS)
            choi += np.kron(e, out)
    return choi


def stroboscopic_trajectory(config, r0=(0.0, 0.0, 1.0)):
    """System Bloch vectors after ``k = 0..N`` collisions."""
    lam = single_step_channel(config.coupling)
    k = np.concatenate([[1.0], np.asarray(r0, dtype=float)])
    out = [k[1:].copy()]
    for _ in range(config.N):
        k = lam @ k
        out.append(k[1:].copy())
    return np.array(out)
