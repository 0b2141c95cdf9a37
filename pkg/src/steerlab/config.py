"""Versioned JSON run configuration.

A configuration file looks like::

    {
      "version": 1,
      "experiment": {"N": 2, "T": 2.0},
      "noise": {"two_qubit_depolarizing": 0.02, "readout": [0.02, 0.02]},
      "seed": 7
    }

Every section is optional except ``version`` and ``experiment``.  Unknown
keys are rejected and reported with their JSON path.
"""

import json
from dataclasses import dataclass, field, fields, replace

import jsonschema

from .collision import CollisionConfig
from .counts import NoiseModel
from .errors import DomainError, ParseError
from .policy import Tolerances

SCHEMA_VERSION = 1

_prob = {"type": "number", "minimum": 0, "maximum": 1}
_pair = {"type": "array", "items": _prob, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "experiment"],
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "experiment": {
            "type": "object",
            "additionalProperties": False,
            "required": ["N"],
            "properties": {
                "N": {"type": "integer", "minimum": 1},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "max_collisions": {"type": "integer", "minimum": 1},
            },
        },
        "strategies": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "theta": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "settings": {
                    "type": "array",
                    "items": {"enum": ["x1", "x2", "x3"]},
                    "minItems": 1,
                    "uniqueItems": True,
                },
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "two_qubit_depolarizing": _prob,
                "extra_locations": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "readout": {"oneOf": [_pair, {"type": "array", "items": _pair, "minItems": 1}]},
                "white_noise": _prob,
            },
        },
        "shots": {"type": ["integer", "null"], "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                f.name: {"type": "integer" if f.type in (int, "int") else "number", "exclusiveMinimum": 0}
                for f in fields(Tolerances)
            },
        },
        "search": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lb_mode": {"enum": ["projective3", "full9"]},
                "lb_restarts": {"type": ["integer", "null"], "minimum": 0},
                "lb_local": {"enum": ["nelder_mead", "gradient", None]},
                "lb_max_evals": {"type": "integer", "minimum": 1},
                "lambda": _prob,
                "strategy_restarts": {"type": "integer", "minimum": 0},
                "strategy_max_evals": {"type": "integer", "minimum": 1},
                "shared_angles": {"type": "boolean"},
            },
        },
        "output_dir": {"type": "string"},
    },
}


@dataclass(frozen=True)
class SearchSettings:
    lb_mode: str = "projective3"
    lb_restarts: int = None
    lb_local: str = None
    lb_max_evals: int = 1500
    lam: float = 0.05
    strategy_restarts: int = 8
    strategy_max_evals: int = 1000
    shared_angles: bool = False


@dataclass(frozen=True)
class RunConfig:
    experiment: CollisionConfig
    theta: float = None
    settings: tuple = ("x1", "x2", "x3")
    noise: NoiseModel = field(default_factory=NoiseModel)
    shots: int = None
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    search: SearchSettings = field(default_factory=SearchSettings)
    output_dir: str = "out"

    def to_dict(self):
        """Fully resolved configuration in the file format (round-trips through :func:`parse_config`)."""
        n = self.noise
        readout = [list(p) for p in n.readout] if isinstance(n.readout[0], tuple) else list(n.readout)
        s = self.search
        return {
            "version": SCHEMA_VERSION,
            "experiment": {
                "N": self.experiment.N,
                "T": self.experiment.T,
                "max_collisions": self.experiment.max_collisions,
            },
            "strategies": {"theta": self.theta, "settings": list(self.settings)},
            "noise": {
                "two_qubit_depolarizing": n.two_qubit_depolarizing,
                "extra_locations": list(n.extra_locations),
                "readout": readout,
                "white_noise": n.white_noise,
            },
            "shots": self.shots,
            "seed": self.seed,
            "tolerances": {f.name: getattr(self.tolerances, f.name) for f in fields(Tolerances)},
            "search": {
                "lb_mode": s.lb_mode,
                "lb_restarts": s.lb_restarts,
                "lb_local": s.lb_local,
                "lb_max_evals": s.lb_max_evals,
                "lambda": s.lam,
                "strategy_restarts": s.strategy_restarts,
                "strategy_max_evals": s.strategy_max_evals,
                "shared_angles": s.shared_angles,
            },
            "output_dir": self.output_dir,
        }

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _location(error):
    return "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in error.absolute_path)


def parse_config(doc):
    """Validate a decoded configuration document and build a :class:`RunConfig`."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        if err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
            loc = _location(err)
            raise ParseError(f"unknown key {extra[0]!r}", f"{loc}.{extra[0]}" if loc != "$" else f"$.{extra[0]}")
        raise ParseError(err.message, _location(err))
    exp = doc["experiment"]
    try:
        experiment = CollisionConfig(
            T=exp.get("T", 2.0), N=exp["N"], max_collisions=exp.get("max_collisions", 5)
        )
        noise_doc = doc.get("noise", {})
        noise = NoiseModel(
            two_qubit_depolarizing=noise_doc.get("two_qubit_depolarizing", 0.0),
            extra_locations=tuple(noise_doc.get("extra_locations", ())),
            readout=noise_doc.get("readout", (0.0, 0.0)),
            white_noise=noise_doc.get("white_noise", 0.0),
        )
    except DomainError as exc:
        raise ParseError(str(exc), "$.experiment" if "noise" not in str(exc) else "$.noise") from None
    strat = doc.get("strategies", {})
    search = doc.get("search", {})
    return RunConfig(
        experiment=experiment,
        theta=strat.get("theta"),
        settings=tuple(strat.get("settings", ("x1", "x2", "x3"))),
        noise=noise,
        shots=doc.get("shots"),
        seed=doc.get("seed", 0),
        tolerances=Tolerances(**doc.get("tolerances", {})),
        search=SearchSettings(
            lb_mode=search.get("lb_mode", "projective3"),
            lb_restarts=search.get("lb_restarts"),
            lb_local=search.get("lb_local"),
            lb_max_evals=search.get("lb_max_evals", 1500),
            lam=search.get("lambda", 0.05),
            strategy_restarts=search.get("strategy_restarts", 8),
            strategy_max_evals=search.get("strategy_max_evals", 1000),
            shared_angles=search.get("shared_angles", False),
        ),
        output_dir=doc.get("output_dir", "out"),
    )


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(exc.strerror or str(exc), str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None
    return parse_config(doc)
