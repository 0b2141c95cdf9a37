"""Alice's measurement strategies and the assemblages they prepare on the system.

An assemblage is stored through its outcome probabilities ``p(a|x)`` and the
Bloch vectors of the normalised conditional states, so that JSON round trips
are bit exact.  Subnormalised members are ``p * (I + r . sigma) / 2``.
Outcome tuples are bit strings with ancilla 1 as the leftmost character.
"""

import json
import warnings
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from . import qmath
from .collision import CollisionConfig
from .errors import DomainError, ParseError

# Third-strategy polar angles for T = 2 (one per collision count).
THETA_TABLE = {1: 1.570, 2: 0.748, 3: 0.456, 4: 0.334}


@dataclass(frozen=True)
class MeasurementStrategy:
    """Local projective measurement on every ancilla.

    ``directions[i]`` is the Bloch direction whose outcome ``0`` element is
    ``(I + a_i . sigma) / 2``.
    """

    label: str
    directions: np.ndarray

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if d.shape[1] != 3:
            raise DomainError("strategy directions must be 3-vectors")
        if not np.allclose(np.linalg.norm(d, axis=1), 1.0, rtol=0, atol=1e-12):
            raise DomainError(f"strategy {self.label}: directions must have unit length")
        object.__setattr__(self, "directions", d)

    @property
    def n_ancillas(self):
        return self.directions.shape[0]

    @classmethod
    def from_angles(cls, label, theta, phi):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        phi = np.broadcast_to(np.asarray(phi, dtype=float), theta.shape)
        dirs = np.stack(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=1
        )
        return cls(label, dirs)


def builtin_strategies(config, theta=None):
    """The three strategies ``x1`` (z), ``x2`` (tilted by g in the x-z plane) and ``x3`` (y-z plane)."""
    if theta is None:
        theta = THETA_TABLE.get(config.N)
        if theta is None:
            raise DomainError(f"no tabulated third-strategy angle for N={config.N}; pass theta")
    if not 0 < theta < np.pi:
        raise DomainError(f"theta={theta} outside (0, pi)")
    g = config.coupling
    n = config.N
    return [
        MeasurementStrategy("x1", np.tile([0.0, 0.0, 1.0], (n, 1))),
        MeasurementStrategy("x2", np.tile([np.sin(g), 0.0, np.cos(g)], (n, 1))),
        MeasurementStrategy("x3", np.tile([0.0, np.sin(theta), np.cos(theta)], (n, 1))),
    ]


def outcome_labels(n_ancillas):
    return ["".join(bits) for bits in product("01", repeat=n_ancillas)]


@dataclass
class Assemblage:
    """Conditional states ``sigma_{a|x}`` for every setting ``x`` and outcome ``a``.

    Attributes
    ----------
    probabilities : ndarray, shape (X, A)
    bloch : ndarray, shape (X, A, 3)
        Bloch vectors of the normalised members; zero where ``p = 0``.
    settings : list of str
    outcomes : list of str
    meta : dict
    """

    probabilities: np.ndarray
    bloch: np.ndarray
    settings: list
    outcomes: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        self.bloch = np.asarray(self.bloch, dtype=float)
        x, a = self.probabilities.shape
        if self.bloch.shape != (x, a, 3):
            raise DomainError(f"bloch array has shape {self.bloch.shape}, expected {(x, a, 3)}")
        if len(self.settings) != x or len(self.outcomes) != a:
            raise DomainError("label lists do not match the array shapes")
        self.settings = list(self.settings)
        self.outcomes = list(self.outcomes)

    @classmethod
    def from_members(cls, sigma, settings=None, outcomes=None, meta=None):
        """Build from subnormalised 2x2 members of shape ``(X, A, 2, 2)``."""
        sigma = np.asarray(sigma, dtype=complex)
        coords = qmath.bloch_coords(sigma)
        p = coords[..., 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(p[..., None] > 0, coords[..., 1:] / p[..., None], 0.0)
        x, a = p.shape
        settings = settings if settings is not None else [f"x{i + 1}" for i in range(x)]
        outcomes = outcomes if outcomes is not None else [str(i) for i in range(a)]
        return cls(np.clip(p, 0.0, None), r, settings, outcomes, dict(meta or {}))

    @property
    def shape(self):
        return self.probabilities.shape

    @property
    def sigma(self):
        return qmath.density_from_bloch(self.bloch, self.probabilities)

    def reduced_states(self):
        """Outcome-averaged state ``sum_a sigma_{a|x}`` for every setting, shape ``(X, 2, 2)``."""
        return self.sigma.sum(axis=1)

    def copy(self, **changes):
        base = dict(
            probabilities=self.probabilities.copy(),
            bloch=self.bloch.copy(),
            settings=list(self.settings),
            outcomes=list(self.outcomes),
            meta=dict(self.meta),
        )
        base.update(changes)
        return Assemblage(**base)

    def check(self, psd_tol=1e-10, norm_tol=1e-8):
        """Raise ``DomainError`` if a member is not PSD or a setting is not normalised."""
        norms = np.linalg.norm(self.bloch, axis=-1)
        worst = np.max(self.probabilities * (norms - 1) / 2)
        if worst > psd_tol:
            raise DomainError(f"assemblage member has negative eigenvalue {-worst:.3e}")
        totals = self.probabilities.sum(axis=1)
        if np.max(np.abs(totals - 1)) > norm_tol:
            raise DomainError(f"outcome probabilities sum to {totals}, expected 1")
        return self


def ideal_assemblage(joint, strategies):
    """Conditional system states after local projective measurements on the ancillas.

    ``sigma_{a|x} = Tr_E[rho_SE (I (x) A^x_{a_1} (x) ... (x) A^x_{a_N})]``.
    """
    joint = np.asarray(joint, dtype=complex)
    n = qmath.num_qubits(joint)
    n_anc = n - 1
    sigmas = []
    for strat in strategies:
        if strat.n_ancillas != n_anc:
            raise DomainError(
                f"strategy {strat.label} has {strat.n_ancillas} directions for {n_anc} ancillas"
            )
        sigmas.append(_condition_on_ancillas(joint, strat.directions))
    return Assemblage.from_members(
        np.stack(sigmas),
        settings=[s.label for s in strategies],
        outcomes=outcome_labels(n_anc),
    )


def _condition_on_ancillas(joint, directions):
    n = directions.shape[0] + 1
    t = joint.reshape([2] * (2 * n))
    for i in range(n - 1, 0, -1):
        a = directions[i - 1]
        proj = qmath.density_from_bloch(np.stack([a, -a]))
        # remaining qubit axes are 0..i (row) and i+1..2i+1 (column); outcome axes trail
        row_axis = i
        col_axis = (i + 1) + i
        t = np.tensordot(t, proj, axes=([row_axis, col_axis], [2, 1]))
    # axes: sys_row, sys_col, a_N, ..., a_1
    n_anc = n - 1
    t = np.transpose(t, list(range(n_anc + 1, 1, -1)) + [0, 1])
    return t.reshape(2**n_anc, 2, 2)


def add_white_noise(asm, lam):
    """Shrink every member's Bloch vector by ``1 - lam``; probabilities are unchanged."""
    if not 0 <= lam <= 1:
        raise DomainError(f"white-noise weight {lam} outside [0, 1]")
    return asm.copy(bloch=(1 - lam) * asm.bloch)


def no_signaling_defect(asm):
    """Largest trace distance between outcome-averaged states of two settings."""
    red = asm.reduced_states()
    x = red.shape[0]
    worst = 0.0
    for i in range(x):
        for j in range(i + 1, x):
            worst = max(worst, qmath.trace_distance(red[i], red[j]))
    return worst


def permute_settings(asm, order):
    order = list(order)
    return asm.copy(
        probabilities=asm.probabilities[order],
        bloch=asm.bloch[order],
        settings=[asm.settings[i] for i in order],
    )


def relabel_outcomes(asm, setting, perm):
    """Permute the outcomes of one setting: new outcome ``k`` is old outcome ``perm[k]``."""
    p = asm.probabilities.copy()
    r = asm.bloch.copy()
    p[setting] = p[setting][list(perm)]
    r[setting] = r[setting][list(perm)]
    return asm.copy(probabilities=p, bloch=r)


def conjugate(asm, u):
    """Apply ``sigma -> U sigma U^dagger`` to every member."""
    u = np.asarray(u, dtype=complex)
    sig = u @ asm.sigma @ u.conj().T
    return Assemblage.from_members(sig, asm.settings, asm.outcomes, asm.meta)


def mix(asm1, asm2, t):
    """Convex combination ``t * asm1 + (1 - t) * asm2`` (same shape and labels)."""
    if asm1.shape != asm2.shape:
        raise DomainError("assemblages must share settings and outcomes")
    sig = t * asm1.sigma + (1 - t) * asm2.sigma
    return Assemblage.from_members(sig, asm1.settings, asm1.outcomes)


# --- JSON ------------------------------------------------------------------


def assemblage_to_dict(asm):
    members = []
    for xi, x in enumerate(asm.settings):
        for ai, a in enumerate(asm.outcomes):
            members.append(
                {
                    "x": x,
                    "a": a,
                    "p": float(asm.probabilities[xi, ai]),
                    "bloch": [float(v) for v in asm.bloch[xi, ai]],
                }
            )
    return {"settings": list(asm.settings), "members": members, "meta": asm.meta}


def assemblage_from_dict(doc):
    if not isinstance(doc, dict):
        raise ParseError("assemblage document must be an object")
    for key in ("settings", "members"):
        if key not in doc:
            raise ParseError("missing key", key)
    extra = set(doc) - {"settings", "members", "meta"}
    if extra:
        warnings.warn(f"ignoring unknown assemblage keys {sorted(extra)}")
    settings = list(doc["settings"])
    outcomes = []
    for m in doc["members"]:
        if m.get("a") not in outcomes:
            outcomes.append(m.get("a"))
    p = np.full((len(settings), len(outcomes)), np.nan)
    r = np.zeros((len(settings), len(outcomes), 3))
    for k, m in enumerate(doc["members"]):
        loc = f"members[{k}]"
        try:
            xi = settings.index(m["x"])
            ai = outcomes.index(m["a"])
            p[xi, ai] = float(m["p"])
            bl = [float(v) for v in m["bloch"]]
        except (KeyError, ValueError, TypeError) as exc:
            raise ParseError(f"malformed member ({exc})", loc) from None
        if len(bl) != 3:
            raise ParseError("bloch must have three components", loc)
        r[xi, ai] = bl
    if np.isnan(p).any():
        raise ParseError("assemblage is missing members for some (x, a)", "members")
    return Assemblage(p, r, settings, outcomes, dict(doc.get("meta", {})))


def write_assemblage(asm, path):
    with open(path, "w") as fh:
        json.dump(assemblage_to_dict(asm), fh, indent=1, sort_keys=False)
        fh.write("\n")


def read_assemblage(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc), f"{path}:{exc.lineno}") from None
    return assemblage_from_dict(doc)


def with_meta(asm, **meta):
    return replace(asm, meta={**asm.meta, **meta})
