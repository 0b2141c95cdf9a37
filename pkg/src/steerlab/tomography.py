"""Linear-inversion tomography of Bob's conditional states.

Bob measures three dichotomic POVMs ``{B_i, I - B_i}`` with
``B_i = (b0_i I + b_i . sigma) / 2``.  The outcome-0 probabilities of a state
with Bloch vector ``r`` are ``p = (b0 + B r) / 2`` where ``B`` stacks the
``b_i`` as rows; inversion gives ``r = B^{-1} (2 p - b0)``.  Reconstructions
outside the Bloch ball are reported, never projected back.
"""

from dataclasses import dataclass

import numpy as np

from .assemblage import Assemblage
from .errors import CompletenessError, DomainError

COMPLETENESS_TOL = 1e-10
VALIDITY_TOL = 1e-9


@dataclass(frozen=True)
class TomographySet:
    """Three dichotomic qubit POVMs given by biases ``b0`` and vectors ``b`` (rows)."""

    b0: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        b0 = np.asarray(self.b0, dtype=float).reshape(3)
        b = np.asarray(self.b, dtype=float).reshape(3, 3)
        if np.any(b0 < 0) or np.any(b0 > 2):
            raise DomainError(f"biases {b0} outside [0, 2]")
        lengths = np.linalg.norm(b, axis=1)
        bound = np.minimum(b0, 2 - b0)
        if np.any(lengths > bound + 1e-12):
            raise DomainError(f"POVM elements not positive: |b_i|={lengths}, allowed {bound}")
        object.__setattr__(self, "b0", b0)
        object.__setattr__(self, "b", b)

    @property
    def lengths(self):
        return np.linalg.norm(self.b, axis=1)

    @property
    def det(self):
        return float(np.linalg.det(self.b))

    @property
    def is_complete(self):
        return abs(self.det) > COMPLETENESS_TOL

    @property
    def is_projective(self):
        return bool(np.allclose(self.b0, 1, atol=1e-12) and np.allclose(self.lengths, 1, atol=1e-12))

    @classmethod
    def from_canonical(cls, theta1, theta2, phi2, b0=(1.0, 1.0, 1.0), lengths=(1.0, 1.0, 1.0)):
        """Set in the canonical frame: ``b3`` along z, ``b1`` in the x-z plane.

        ``phi2`` is measured from the y axis:
        ``b2 ~ (-sin phi2 sin theta2, cos phi2 sin theta2, cos theta2)``.
        """
        l1, l2, l3 = lengths
        b = np.array(
            [
                l1 * np.array([np.sin(theta1), 0.0, np.cos(theta1)]),
                l2 * np.array([-np.sin(phi2) * np.sin(theta2), np.cos(phi2) * np.sin(theta2), np.cos(theta2)]),
                l3 * np.array([0.0, 0.0, 1.0]),
            ]
        )
        return cls(np.asarray(b0, dtype=float), b)

    def canonical_angles(self):
        """``(theta1, theta2, phi2)`` in radians after rotating into the canonical frame."""
        rot = canonical_rotation(self.b)
        nb = rot @ self.b.T  # columns are rotated b_i
        u1 = nb[:, 0] / np.linalg.norm(nb[:, 0])
        u2 = nb[:, 1] / np.linalg.norm(nb[:, 1])
        theta1 = float(np.arccos(np.clip(u1[2], -1, 1)))
        theta2 = float(np.arccos(np.clip(u2[2], -1, 1)))
        phi2 = float(np.arctan2(-u2[0], u2[1]))
        return theta1, theta2, phi2

    def rotated(self, rot):
        return TomographySet(self.b0, self.b @ np.asarray(rot).T)


def canonical_rotation(b):
    """Proper rotation taking ``b3`` to +z and ``b1`` into the x-z half-plane with x > 0."""
    e3 = b[2] / np.linalg.norm(b[2])
    v = b[0] - (b[0] @ e3) * e3
    nv = np.linalg.norm(v)
    if nv < 1e-15:
        raise DomainError("b1 is parallel to b3; canonical frame undefined")
    e1 = v / nv
    e2 = np.cross(e3, e1)
    return np.stack([e1, e2, e3])


def ideal_set():
    """Projective Pauli X, Y, Z measurements."""
    return TomographySet(np.ones(3), np.eye(3))


def born_probabilities(tset, r):
    """Outcome-0 probabilities ``(b0 + B r) / 2``; ``r`` may be batched."""
    r = np.asarray(r, dtype=float)
    return 0.5 * (tset.b0 + r @ tset.b.T)


def linear_inversion(tset, p):
    """Bloch vector ``B^{-1} (2 p - b0)``; may leave the Bloch ball."""
    if not tset.is_complete:
        raise CompletenessError(f"|det B| = {abs(tset.det):.3e} is not informationally complete")
    p = np.asarray(p, dtype=float)
    rhs = 2 * p - tset.b0
    return np.linalg.solve(tset.b, rhs.reshape(-1, 3).T).T.reshape(p.shape)


def is_physical(r, tol=VALIDITY_TOL):
    return np.linalg.norm(np.asarray(r), axis=-1) <= 1 + tol


def reconstruct_assemblage(tset, estimates, tol=VALIDITY_TOL):
    """Assemblage from estimated probabilities under the assumed POVM set.

    Returns ``(assemblage, valid, worst_violation)``.  Empty bins become zero
    members and are excluded from the validity check.
    """
    pv = np.nan_to_num(estimates.p_vector, nan=0.5)
    r = linear_inversion(tset, pv)
    empty = estimates.empty
    r[empty] = 0.0
    p = np.where(empty, 0.0, estimates.p_outcome)
    norms = np.linalg.norm(r, axis=-1)
    norms[empty] = 0.0
    worst = float(max(0.0, norms.max() - 1))
    valid = bool(np.all(norms <= 1 + tol))
    asm = Assemblage(p, r, list(estimates.settings), list(estimates.outcomes))
    return asm, valid, worst
