"""Dense linear algebra and qubit-state primitives.

Conventions
-----------
Qubit 0 is the system, qubits ``1..N`` are the ancillas in collision order,
and tensor factor 0 is the most significant axis of every state vector and
density matrix.  Single-qubit states are written
``rho = (I + r . sigma) / 2`` with Bloch vector ``r``.
"""

import numpy as np

from .errors import DomainError
from .policy import TOL

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = np.stack([I2, SX, SY, SZ])

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)


def kron(*ops):
    """Kronecker product of any number of matrices, left factor most significant."""
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def num_qubits(rho):
    dim = np.shape(rho)[0]
    n = int(round(np.log2(dim)))
    if 2**n != dim:
        raise DomainError(f"dimension {dim} is not a power of two")
    return n


def is_hermitian(m, atol=TOL.hermitian):
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, rtol=0, atol=atol)


def min_eigenvalue(m):
    """Smallest eigenvalue of a Hermitian matrix.

    2x2 inputs use the closed form; larger inputs go through LAPACK.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or not is_hermitian(m, atol=1e-9):
        raise DomainError("min_eigenvalue requires a Hermitian matrix")
    if m.shape == (2, 2):
        return float(eig2(m)[0])
    return float(np.linalg.eigvalsh(m)[0])


def eig2(m):
    """Eigenvalues ``(low, high)`` of Hermitian 2x2 matrices, batched over leading axes."""
    m = np.asarray(m)
    a = m[..., 0, 0].real
    d = m[..., 1, 1].real
    b = np.abs(m[..., 0, 1])
    mean = 0.5 * (a + d)
    rad = np.hypot(0.5 * (a - d), b)
    return mean - rad, mean + rad


def partial_trace(rho, keep):
    """Reduced density matrix on the qubits listed in ``keep``.

    The kept qubits retain their relative order.
    """
    rho = np.asarray(rho, dtype=complex)
    n = num_qubits(rho)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise DomainError(f"keep={keep} is not a subset of qubits 0..{n - 1}")
    traced = [q for q in range(n) if q not in keep]
    t = rho.reshape([2] * (2 * n))
    # Contract traced qubits from the highest index down so axis numbers stay valid.
    for q in sorted(traced, reverse=True):
        nq = t.ndim // 2
        t = np.trace(t, axis1=q, axis2=q + nq)
    d = 2 ** len(keep)
    return t.reshape(d, d)


def bloch_from_density(rho):
    """Bloch vector ``(Tr[X rho], Tr[Y rho], Tr[Z rho])`` of a single-qubit operator."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise DomainError(f"expected a single-qubit operator, got shape {rho.shape}")
    return np.array(
        [
            2 * rho[0, 1].real,
            -2 * rho[0, 1].imag,
            (rho[0, 0] - rho[1, 1]).real,
        ]
    )


def density_from_bloch(r, trace=1.0):
    """Operator ``trace * (I + r . sigma) / 2``; ``r`` may carry leading batch axes."""
    r = np.asarray(r, dtype=float)
    if r.shape[-1] != 3:
        raise DomainError("Bloch vectors have three components")
    trace = np.asarray(trace, dtype=float)[..., None, None]
    out = 0.5 * (I2 + np.einsum("...k,kij->...ij", r, PAULIS[1:]))
    return trace * out


def bloch_coords(m):
    """Real coordinates ``(Tr m, Tr[X m], Tr[Y m], Tr[Z m])`` of 2x2 Hermitian operators (batched)."""
    m = np.asarray(m)
    return np.stack(
        [
            (m[..., 0, 0] + m[..., 1, 1]).real,
            2 * m[..., 0, 1].real,
            -2 * m[..., 0, 1].imag,
            (m[..., 0, 0] - m[..., 1, 1]).real,
        ],
        axis=-1,
    )


def from_bloch_coords(c):
    """Inverse of :func:`bloch_coords`."""
    c = np.asarray(c, dtype=float)
    return 0.5 * np.einsum("...k,kij->...ij", c, PAULIS)


def validate_density(rho, subnormalized=False):
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho):
        raise DomainError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if subnormalized:
        if tr < -TOL.trace or tr > 1 + TOL.trace:
            raise DomainError(f"trace {tr} outside [0, 1]")
    elif abs(tr - 1) > TOL.trace:
        raise DomainError(f"trace {tr} != 1")
    if min_eigenvalue(rho) < -TOL.psd:
        raise DomainError("density matrix is not positive semidefinite")
    return rho


def ket_to_dm(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def ry(angle):
    """``exp(-i angle Y / 2)``."""
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rx(angle):
    """``exp(-i angle X / 2)``."""
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def embed(op, targets, n):
    """Lift an operator acting on ``targets`` (in the given order) to ``n`` qubits."""
    targets = list(targets)
    k = len(targets)
    op = np.asarray(op, dtype=complex).reshape([2] * (2 * k))
    rest = [q for q in range(n) if q not in targets]
    full = np.tensordot(op, np.eye(2 ** len(rest)).reshape([2] * (2 * len(rest))), axes=0)
    # axes of `full`: out(targets), in(targets), out(rest), in(rest)
    order_out = targets + rest
    perm = [0] * (2 * n)
    for pos, q in enumerate(order_out):
        src_out = pos if pos < k else 2 * k + (pos - k)
        src_in = pos + k if pos < k else 2 * k + len(rest) + (pos - k)
        perm[q] = src_out
        perm[n + q] = src_in
    full = np.transpose(full, perm)
    return full.reshape(2**n, 2**n)


def apply_unitary(rho, u, targets, n=None):
    n = num_qubits(rho) if n is None else n
    big = embed(u, targets, n)
    return big @ rho @ big.conj().T


def depolarize(rho, p, targets):
    """Depolarizing channel of strength ``p`` on the listed qubits.

    ``rho -> (1 - p) rho + p * (I/d_T) (x) Tr_T[rho]`` with the identity placed on ``targets``.
    """
    if p == 0:
        return rho
    n = num_qubits(rho)
    targets = sorted(targets)
    rest = [q for q in range(n) if q not in targets]
    reduced = partial_trace(rho, rest) if rest else np.array([[np.trace(rho)]])
    dt = 2 ** len(targets)
    mixed = embed_product(np.eye(dt) / dt, targets, reduced, rest, n)
    return (1 - p) * rho + p * mixed


def embed_product(a, a_qubits, b, b_qubits, n):
    """Operator ``a (x) b`` with the factors living on the given (sorted) qubit sets."""
    prod = np.kron(a, b)
    order = list(a_qubits) + list(b_qubits)
    t = prod.reshape([2] * (2 * n))
    perm = [0] * (2 * n)
    for pos, q in enumerate(order):
        perm[q] = pos
        perm[n + q] = n + pos
    return np.transpose(t, perm).reshape(2**n, 2**n)


def trace_distance(a, b):
    """``0.5 * ||a - b||_1`` for Hermitian matrices."""
    w = np.linalg.eigvalsh(np.asarray(a) - np.asarray(b))
    return 0.5 * float(np.abs(w).sum())


def random_density(dim, rng, rank=None):
    """Random density matrix from a Ginibre ensemble of the given rank."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(dim, rng):
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
