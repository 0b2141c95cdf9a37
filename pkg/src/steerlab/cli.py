"""``steerlab`` command line: pipeline stages with file handoffs in one output directory.

Stage files::

    simulate       -> assemblage_ideal.json, trajectory.csv
    sample         -> counts.json
    tomo           -> assemblage.json            (reads counts.json)
    sw             -> sw.json                    (reads assemblage.json, else assemblage_ideal.json)
    lb             -> lb.json                    (reads counts.json)
    find-strategy  -> strategy.json
    plot           -> decay.svg/.csv, ensemble.svg/.csv, lb_vs_n.svg/.csv

Timestamps go to ``run_meta.json`` so every other file is reproducible byte
for byte from the configuration and seed.
"""

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, qmath
from .assemblage import (
    assemblage_to_dict,
    builtin_strategies,
    ideal_assemblage,
    read_assemblage,
    with_meta,
    write_assemblage,
)
from .collision import evolve_joint, stroboscopic_trajectory
from .config import load_config
from .counts import default_shots, estimate_probabilities, read_counts, sample_experiment, write_counts
from .errors import InputError, DomainError, ResourceError, SearchError, SolverError
from .plotting import decay_curve, ensemble_scatter, lb_bars
from .search import find_third_strategy, lower_bound
from .steering import dual_certificate_check, steering_weight
from .tomography import ideal_set, reconstruct_assemblage

log = logging.getLogger("steerlab")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_RESOURCE = 0, 2, 3, 4
STAGES = ("simulate", "sample", "tomo", "sw", "lb", "find-strategy", "plot")


def _dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _provenance(cfg):
    # the output directory is left out so identical runs into different directories match byte for byte
    resolved = cfg.to_dict()
    resolved.pop("output_dir")
    return {"version": __version__, "config": resolved}


def _strategies(cfg):
    theta = cfg.theta
    if theta is None and "x3" not in cfg.settings:
        theta = np.pi / 2
    table = {s.label: s for s in builtin_strategies(cfg.experiment, theta=theta)}
    return [table[label] for label in cfg.settings]


def _require(path):
    if not path.exists():
        raise InputError(f"missing stage input {path.name}; run the producing stage first")
    return path


def cmd_simulate(cfg, out):
    joint = evolve_joint(qmath.ket_to_dm(qmath.KET0), cfg.experiment)
    asm = ideal_assemblage(joint, _strategies(cfg))
    write_assemblage(with_meta(asm, source="simulate", **_provenance(cfg)), out / "assemblage_ideal.json")
    traj = stroboscopic_trajectory(cfg.experiment)
    _, table = decay_curve(traj, cfg.experiment.T)
    (out / "trajectory.csv").write_text(table)


def cmd_sample(cfg, out):
    records = sample_experiment(cfg.experiment, _strategies(cfg), cfg.noise, shots=cfg.shots, seed=cfg.seed)
    write_counts(records, cfg.experiment, out / "counts.json")


def _estimates(out):
    exp, records = read_counts(_require(out / "counts.json"))
    return exp, estimate_probabilities(records, exp.N)


def cmd_tomo(cfg, out):
    _, est = _estimates(out)
    asm, valid, worst = reconstruct_assemblage(ideal_set(), est)
    asm = with_meta(
        asm, source="tomo", physical=bool(valid), worst_violation=float(worst), **_provenance(cfg)
    )
    write_assemblage(asm, out / "assemblage.json")


def cmd_sw(cfg, out):
    path = out / "assemblage.json"
    if not path.exists():
        path = _require(out / "assemblage_ideal.json")
    asm = read_assemblage(path)
    sol = steering_weight(asm, tol=cfg.tolerances)
    ok, margins = dual_certificate_check(asm, sol, tol=cfg.tolerances.certificate_gap)
    report = sol.report()
    report["input"] = path.name
    report["certificate_ok"] = bool(ok)
    report["certificate_margins"] = {k: float(v) for k, v in margins.items()}
    report.update(_provenance(cfg))
    _dump(report, out / "sw.json")


def cmd_lb(cfg, out):
    _, est = _estimates(out)
    s = cfg.search
    res = lower_bound(
        est, mode=s.lb_mode, restarts=s.lb_restarts, local=s.lb_local, seed=cfg.seed, max_evals=s.lb_max_evals
    )
    report = res.report()
    report["N"] = cfg.experiment.N
    report.update(_provenance(cfg))
    _dump(report, out / "lb.json")


def cmd_find_strategy(cfg, out):
    s = cfg.search
    res = find_third_strategy(
        cfg.experiment,
        lam=s.lam,
        restarts=s.strategy_restarts,
        seed=cfg.seed,
        max_evals=s.strategy_max_evals,
        shared=s.shared_angles,
    )
    report = res.report()
    report["N"] = cfg.experiment.N
    report["lambda"] = s.lam
    report.update(_provenance(cfg))
    _dump(report, out / "strategy.json")


def cmd_plot(cfg, out):
    svg, table = decay_curve(stroboscopic_trajectory(cfg.experiment), cfg.experiment.T)
    (out / "decay.svg").write_text(svg)
    (out / "decay.csv").write_text(table)
    for name in ("assemblage.json", "assemblage_ideal.json"):
        if (out / name).exists():
            svg, table = ensemble_scatter(read_assemblage(out / name))
            (out / "ensemble.svg").write_text(svg)
            (out / "ensemble.csv").write_text(table)
            break
    entries = []
    for path in sorted(out.rglob("lb.json")):
        doc = json.loads(path.read_text())
        entries.append((int(doc["N"]), float(doc["LB"]), str(path.parent.relative_to(out)) or "."))
    if entries:
        svg, table = lb_bars(entries)
        (out / "lb_vs_n.svg").write_text(svg)
        (out / "lb_vs_n.csv").write_text(table)


COMMANDS = {
    "simulate": cmd_simulate,
    "sample": cmd_sample,
    "tomo": cmd_tomo,
    "sw": cmd_sw,
    "lb": cmd_lb,
    "find-strategy": cmd_find_strategy,
    "plot": cmd_plot,
}


def build_parser():
    p = argparse.ArgumentParser(prog="steerlab", description=__doc__.splitlines()[0])
    p.add_argument("stage", choices=STAGES)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int, help="overrides the configured seed")
    p.add_argument("--out", help="output directory (overrides the configured one)")
    p.add_argument("--mode", choices=("projective3", "full9"), help="lower-bound search family")
    p.add_argument("--shots", type=int, help="shots per circuit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def _record_meta(out, stage, started, status):
    path = out / "run_meta.json"
    try:
        meta = json.loads(path.read_text())
    except (OSError, ValueError):
        meta = {}
    meta[stage] = {
        "started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(started)),
        "seconds": round(time.time() - started, 3),
        "status": status,
        "version": __version__,
    }
    _dump(meta, path)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    started = time.time()
    out = None
    try:
        cfg = load_config(args.config)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise InputError(f"seed {args.seed} is not an unsigned 64-bit integer")
        if args.shots is not None and args.shots < 1:
            raise InputError("--shots must be positive")
        cfg = cfg.with_overrides(seed=args.seed, shots=args.shots, output_dir=args.out)
        if args.mode:
            cfg = replace(cfg, search=replace(cfg.search, lb_mode=args.mode))
        if cfg.shots is None and args.stage == "sample":
            cfg = cfg.with_overrides(shots=default_shots(cfg.experiment.N))
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.stage](cfg, out)
    except (InputError, DomainError) as exc:
        return _fail(exc, EXIT_INPUT, out, args.stage, started)
    except (SolverError, SearchError) as exc:
        return _fail(exc, EXIT_SOLVER, out, args.stage, started)
    except ResourceError as exc:
        return _fail(exc, EXIT_RESOURCE, out, args.stage, started)
    _record_meta(out, args.stage, started, "ok")
    return EXIT_OK


def _fail(exc, code, out, stage, started):
    print(f"steerlab {stage}: error: {exc}", file=sys.stderr)
    diag = getattr(exc, "diagnostics", None) or getattr(exc, "trace", None)
    if diag:
        print(f"diagnostics: {diag}", file=sys.stderr)
    if out is not None:
        _record_meta(out, stage, started, f"exit {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
