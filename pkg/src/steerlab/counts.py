"""Finite-shot emulation of the steering experiment and count-file handling.

One experiment consists of one circuit per (Alice strategy, Bob setting)
pair.  Each circuit prepares all qubits in ``|0>``, rotates the ancillas by
``R_y(g)``, applies the ancilla-controlled CNOTs in collision order, rotates
every qubit so that the requested measurement becomes a Z measurement, and
reads all qubits out.  Sampling draws the full shot budget from the exact
(possibly noisy) outcome distribution in one multinomial call.
"""

import json
import logging
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import qmath
from .assemblage import outcome_labels
from .collision import CollisionConfig, cnot
from .errors import DomainError, InputError, ParseError

log = logging.getLogger(__name__)

JOB_REPETITIONS = {1: 10, 2: 16, 3: 30, 4: 60}
COPIES_PER_JOB = 8
SHOTS_PER_RUN = 8192


def default_shots(n_collisions):
    """Shots per circuit: job repetitions x 8 copies x 8192 shots."""
    try:
        return JOB_REPETITIONS[n_collisions] * COPIES_PER_JOB * SHOTS_PER_RUN
    except KeyError:
        raise DomainError(f"no default shot budget for N={n_collisions}") from None


@dataclass(frozen=True)
class NoiseModel:
    """Device-noise stand-in.

    Attributes
    ----------
    two_qubit_depolarizing : float
        Depolarizing strength applied to (system, ancilla) after each CNOT.
    extra_locations : tuple of int
        Collision indices (1-based) after which one more depolarizing layer
        is applied, emulating a CNOT merged with a SWAP.
    readout : tuple
        Either one ``(p0to1, p1to0)`` pair used for every qubit or one pair
        per qubit (system first).
    white_noise : float
        Weight of the maximally mixed state mixed into the final joint state.
    """

    two_qubit_depolarizing: float = 0.0
    extra_locations: tuple = ()
    readout: tuple = (0.0, 0.0)
    white_noise: float = 0.0

    def __post_init__(self):
        ro = np.asarray(self.readout, dtype=float)
        probs = [self.two_qubit_depolarizing, self.white_noise, *ro.ravel()]
        if any(not 0 <= p <= 1 for p in probs):
            raise DomainError("noise probabilities must lie in [0, 1]")
        if ro.ndim not in (1, 2) or ro.shape[-1] != 2:
            raise DomainError("readout must be a (p0to1, p1to0) pair or a list of pairs")
        object.__setattr__(self, "extra_locations", tuple(int(k) for k in self.extra_locations))
        object.__setattr__(self, "readout", tuple(map(tuple, ro)) if ro.ndim == 2 else tuple(ro))

    def readout_pairs(self, n_qubits):
        ro = np.asarray(self.readout, dtype=float)
        if ro.ndim == 1:
            return np.tile(ro, (n_qubits, 1))
        if ro.shape[0] != n_qubits:
            raise DomainError(f"readout lists {ro.shape[0]} qubits, circuit has {n_qubits}")
        return ro

    @property
    def is_ideal(self):
        return (
            self.two_qubit_depolarizing == 0
            and self.white_noise == 0
            and not np.any(np.asarray(self.readout))
        )


@dataclass
class CountsRecord:
    """Joint outcome counts of one circuit; keys are ``"<alice bits>|<bob bit>"``."""

    x: str
    bob_setting: int
    shots: int
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.bob_setting not in (1, 2, 3):
            raise InputError(f"bob_setting must be 1, 2 or 3, got {self.bob_setting}")
        total = sum(self.counts.values())
        if total != self.shots:
            raise InputError(f"counts sum to {total}, record declares {self.shots} shots")

    def table(self, n_ancillas):
        """Counts as an array of shape ``(2**N, 2)`` indexed by (a, b)."""
        out = np.zeros((2**n_ancillas, 2), dtype=np.int64)
        for key, v in self.counts.items():
            a, b = key.split("|")
            out[int(a, 2), int(b)] += v
        return out


# --- circuit ---------------------------------------------------------------


def measurement_gate(direction):
    """Single-qubit gate ``U`` with ``U^dagger Z U = direction . sigma``.

    Built as ``R_y(-theta) R_z(-phi)``; for directions in the x-z plane this
    reduces to ``R_y(-theta)``.
    """
    d = np.asarray(direction, dtype=float)
    theta = np.arccos(np.clip(d[2] / np.linalg.norm(d), -1, 1))
    phi = np.arctan2(d[1], d[0])
    rz = np.diag([np.exp(1j * phi / 2), np.exp(-1j * phi / 2)])
    return qmath.ry(-theta) @ rz


def bob_gate(setting):
    """Pre-measurement rotation for Bob's X, Y or Z measurement."""
    if setting == 1:
        return qmath.ry(-np.pi / 2)
    if setting == 2:
        return qmath.rx(np.pi / 2)
    if setting == 3:
        return qmath.I2
    raise DomainError(f"unknown Bob setting {setting}")


def prepared_state(config, noise=NoiseModel()):
    """Joint state after the collision layer of the circuit (before measurement rotations)."""
    n_anc = config.N
    n = n_anc + 1
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1
    rot = qmath.ry(config.coupling)
    for i in range(1, n):
        rho = qmath.apply_unitary(rho, rot, [i], n)
    p2 = noise.two_qubit_depolarizing
    for i in range(1, n):
        u = cnot(i, 0, n)
        rho = u @ rho @ u.conj().T
        rho = qmath.depolarize(rho, p2, [0, i])
        for _ in range(noise.extra_locations.count(i)):
            rho = qmath.depolarize(rho, p2, [0, i])
    if noise.white_noise:
        rho = (1 - noise.white_noise) * rho + noise.white_noise * np.eye(2**n) / 2**n
    return rho


def outcome_distribution(config, strategy, bob_setting, noise=NoiseModel(), joint=None):
    """Exact probabilities ``P[a, b]`` of Alice's bit string ``a`` and Bob's bit ``b``."""
    n_anc = config.N
    if strategy.n_ancillas != n_anc:
        raise DomainError(f"strategy {strategy.label} does not match N={n_anc}")
    n = n_anc + 1
    rho = prepared_state(config, noise) if joint is None else joint
    gates = [bob_gate(bob_setting)] + [measurement_gate(d) for d in strategy.directions]
    u = qmath.kron(*gates)
    diag = np.einsum("ij,jk,ik->i", u, rho, u.conj()).real
    probs = np.clip(diag, 0, None).reshape([2] * n)
    for q, (p01, p10) in enumerate(noise.readout_pairs(n)):
        conf = np.array([[1 - p01, p10], [p01, 1 - p10]])
        probs = np.moveaxis(np.tensordot(conf, probs, axes=([1], [q])), 0, q)
    probs = probs.reshape(2, 2**n_anc).T  # (a, b); system is qubit 0
    return probs / probs.sum()


def task_rng(seed, setting_index, bob_setting):
    """Independent generator per circuit so serial and parallel sampling agree."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(setting_index), int(bob_setting)))
    return np.random.default_rng(ss)


def sample_counts(config, strategy, bob_setting, noise, shots, seed, setting_index=0, joint=None):
    """Multinomial draw of ``shots`` runs of one circuit."""
    if shots < 1:
        raise DomainError("shots must be at least 1")
    probs = outcome_distribution(config, strategy, bob_setting, noise, joint)
    rng = task_rng(seed, setting_index, bob_setting)
    draw = rng.multinomial(int(shots), probs.ravel()).reshape(probs.shape)
    labels = outcome_labels(config.N)
    counts = {f"{a}|{b}": int(draw[ai, b]) for ai, a in enumerate(labels) for b in (0, 1)}
    return CountsRecord(strategy.label, bob_setting, int(shots), counts)


def sample_experiment(config, strategies, noise=NoiseModel(), shots=None, seed=0):
    """Counts for every (strategy, Bob setting) circuit of one experiment."""
    shots = default_shots(config.N) if shots is None else shots
    joint = prepared_state(config, noise)
    return [
        sample_counts(config, s, i, noise, shots, seed, setting_index=k, joint=joint)
        for k, s in enumerate(strategies)
        for i in (1, 2, 3)
    ]


def exact_records(config, strategies, noise=NoiseModel()):
    """Noise-model probabilities packaged like counts (float weights, unit 'shots').

    Feeds :func:`estimate_probabilities` with exact distributions.
    """
    joint = prepared_state(config, noise)
    out = []
    for s in strategies:
        for i in (1, 2, 3):
            probs = outcome_distribution(config, s, i, noise, joint)
            out.append((s.label, i, probs))
    return out


# --- estimation ------------------------------------------------------------


@dataclass
class ProbabilityEstimates:
    """Per-setting outcome probabilities and Bob's outcome-0 frequencies.

    ``p_vector[x, a, i]`` is the estimated probability of Bob's outcome 0 in
    setting ``i + 1`` given Alice's ``(x, a)``; it is NaN for empty bins.
    """

    settings: list
    outcomes: list
    p_outcome: np.ndarray
    p_vector: np.ndarray
    empty: np.ndarray


def estimate_probabilities(records, n_ancillas, marginal="pooled"):
    """Bin counts by Alice's outcome and estimate ``p(a|x)`` and ``(p1(0), p2(0), p3(0))``.

    ``records`` holds :class:`CountsRecord` objects or ``(x, bob_setting,
    probability table)`` triples from :func:`exact_records`.  With
    ``marginal="pooled"`` Alice's marginal uses all three circuits of a
    strategy; ``"per_setting"`` averages the three per-circuit marginals
    with equal weight.
    """
    if marginal not in ("pooled", "per_setting"):
        raise InputError(f"unknown marginal mode {marginal!r}")
    tables = {}
    order = []
    for rec in records:
        if isinstance(rec, CountsRecord):
            x, i, tab = rec.x, rec.bob_setting, rec.table(n_ancillas).astype(float)
        else:
            x, i, tab = rec
            tab = np.asarray(tab, dtype=float)
        if x not in order:
            order.append(x)
        if (x, i) in tables:
            raise InputError(f"duplicate record for strategy {x}, Bob setting {i}")
        tables[(x, i)] = tab
    n_out = 2**n_ancillas
    p_out = np.zeros((len(order), n_out))
    p_vec = np.full((len(order), n_out, 3), np.nan)
    for xi, x in enumerate(order):
        missing = [i for i in (1, 2, 3) if (x, i) not in tables]
        if missing:
            raise InputError(f"strategy {x} lacks Bob settings {missing}")
        tabs = np.stack([tables[(x, i)] for i in (1, 2, 3)])  # (3, a, b)
        per_a = tabs.sum(axis=2)  # (3, a)
        if marginal == "pooled":
            p_out[xi] = per_a.sum(axis=0) / per_a.sum()
        else:
            p_out[xi] = (per_a / per_a.sum(axis=1, keepdims=True)).mean(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            freq = tabs[:, :, 0] / per_a
        p_vec[xi] = np.where(per_a > 0, freq, np.nan).T
    empty = np.isnan(p_vec).any(axis=2)
    return ProbabilityEstimates(order, outcome_labels(n_ancillas), p_out, p_vec, empty)


# --- files -----------------------------------------------------------------

_KEY = re.compile(r"^[01]+\|[01]$")
_RECORD_KEYS = {"x", "bob_setting", "shots", "counts"}


def counts_to_dict(records, config):
    return {
        "experiment": {"N": int(config.N), "T": float(config.T)},
        "records": [
            {
                "x": r.x,
                "bob_setting": int(r.bob_setting),
                "shots": int(r.shots),
                "counts": {k: int(r.counts[k]) for k in sorted(r.counts)},
            }
            for r in records
        ],
    }


def write_counts(records, config, path):
    with open(path, "w") as fh:
        json.dump(counts_to_dict(records, config), fh, indent=1)
        fh.write("\n")


def counts_from_dict(doc):
    """Validate a counts document; returns ``(CollisionConfig, records)``."""
    if not isinstance(doc, dict):
        raise ParseError("document must be an object")
    _warn_extra(doc, {"experiment", "records"}, "")
    exp = doc.get("experiment")
    if not isinstance(exp, dict):
        raise ParseError("missing or malformed", "experiment")
    _warn_extra(exp, {"N", "T"}, "experiment")
    n = exp.get("N")
    t = exp.get("T")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError("N must be a positive integer", "experiment.N")
    if not isinstance(t, (int, float)) or isinstance(t, bool) or t <= 0:
        raise ParseError("T must be a positive number", "experiment.T")
    recs = doc.get("records")
    if not isinstance(recs, list):
        raise ParseError("missing or malformed", "records")
    out = []
    for k, r in enumerate(recs):
        loc = f"records[{k}]"
        if not isinstance(r, dict):
            raise ParseError("record must be an object", loc)
        _warn_extra(r, _RECORD_KEYS, loc)
        for key in _RECORD_KEYS:
            if key not in r:
                raise ParseError("missing key", f"{loc}.{key}")
        if r["bob_setting"] not in (1, 2, 3) or isinstance(r["bob_setting"], bool):
            raise ParseError("must be 1, 2 or 3", f"{loc}.bob_setting")
        shots = r["shots"]
        if not isinstance(shots, int) or isinstance(shots, bool) or shots < 1:
            raise ParseError("must be a positive integer", f"{loc}.shots")
        counts = r["counts"]
        if not isinstance(counts, dict):
            raise ParseError("must be an object", f"{loc}.counts")
        for key, v in counts.items():
            if not _KEY.match(key) or len(key) != n + 2:
                raise ParseError(f"bad outcome key {key!r}", f"{loc}.counts")
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ParseError(f"count for {key!r} must be a non-negative integer", f"{loc}.counts")
        total = sum(counts.values())
        if total != shots:
            raise ParseError(f"counts sum to {total}, declared shots {shots}", loc)
        out.append(CountsRecord(str(r["x"]), int(r["bob_setting"]), shots, dict(counts)))
    return CollisionConfig(T=float(t), N=n), out


def read_counts(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None
    return counts_from_dict(doc)


def _warn_extra(obj, allowed, loc):
    extra = sorted(set(obj) - allowed)
    if extra:
        warnings.warn(f"{loc or 'document'}: ignoring unknown fields {extra}", stacklevel=3)
