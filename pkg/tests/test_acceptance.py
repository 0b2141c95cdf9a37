"""Acceptance criteria, one test (and one PASS/FAIL line) per criterion.

The summary lines are printed in the ``acceptance criteria`` section of the
pytest terminal report.
"""

import json
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from steerlab import qmath
from steerlab.assemblage import (
    MeasurementStrategy,
    builtin_strategies,
    conjugate,
    ideal_assemblage,
    no_signaling_defect,
    permute_settings,
    relabel_outcomes,
)
from steerlab.cli import main as cli_main
from steerlab.collision import CollisionConfig, composed_channel, evolve_joint
from steerlab.counts import NoiseModel, estimate_probabilities, exact_records, sample_experiment
from steerlab.firstorder import steering_weight_admm
from steerlab.search import find_third_strategy, lower_bound
from steerlab.steering import steering_weight
from steerlab.tomography import born_probabilities, ideal_set, linear_inversion, reconstruct_assemblage
from _factories import random_assemblage, random_bloch, random_tomography_set

TABLE_G = {1: 1.435, 2: 1.194, 3: 1.032, 4: 0.919}
TABLE_THETA = {1: 1.570, 2: 0.748, 3: 0.456}
E2 = np.exp(-2)


def record(number, title, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
    print(ACCEPTANCE_LINES[-1])
    assert ok, detail


def zero_state():
    return qmath.ket_to_dm(qmath.KET0)


def test_01_channel_correctness():
    t = time.perf_counter()
    g_ok, ch_err = True, 0.0
    gs = {}
    for n in (1, 2, 3, 4):
        cfg = CollisionConfig(2.0, n)
        gs[n] = cfg.coupling
        g_ok &= round(cfg.coupling, 3) == TABLE_G[n]
        ch_err = max(ch_err, np.abs(composed_channel(cfg) - np.diag([1, 1, E2, E2])).max())
    dt = time.perf_counter() - t
    ok = g_ok and ch_err <= 1e-10 and dt < 1
    detail = f"g={[round(v, 4) for v in gs.values()]}, max channel error {ch_err:.1e} (tol 1e-10), {dt:.3f}s (<1s)"
    record(1, "Channel correctness", ok, detail)


def test_02_reduced_state_endpoint():
    err = 0.0
    for n in (1, 2, 3, 4):
        rho = evolve_joint(zero_state(), CollisionConfig(2.0, n))
        r = qmath.bloch_from_density(qmath.partial_trace(rho, [0]))
        err = max(err, np.abs(r - [0, 0, E2]).max())
    record(2, "Reduced-state endpoint", err <= 1e-10, f"max |r - (0,0,e^-2)| = {err:.1e} over N=1..4 (tol 1e-10)")


def test_03_ideal_steering_weight_saturation():
    worst_sw, worst_gap, t3 = 0.0, 0.0, None
    for n in (1, 2, 3):
        cfg = CollisionConfig(2.0, n)
        asm = ideal_assemblage(evolve_joint(zero_state(), cfg), builtin_strategies(cfg)[:2])
        t = time.perf_counter()
        sol = steering_weight(asm)
        if n == 3:
            t3 = time.perf_counter() - t
        worst_sw = max(worst_sw, abs(sol.steering_weight - 1))
        worst_gap = max(worst_gap, sol.gap)
    ok = worst_sw <= 1e-6 and worst_gap <= 1e-6 and t3 < 5
    detail = f"max |SW-1| = {worst_sw:.1e}, max gap {worst_gap:.1e} (tol 1e-6), N=3 solve {t3:.2f}s (<5s)"
    record(3, "Ideal steering weight saturation", ok, detail)


def test_04_unsteerability_zero(rng):
    worst = 0.0
    for trial in range(12):
        n = 1 + trial % 3
        joint = np.kron(qmath.random_density(2, rng), qmath.random_density(2**n, rng))
        strategies = [
            MeasurementStrategy.from_angles(f"s{k}", rng.uniform(0, np.pi, n), rng.uniform(-np.pi, np.pi, n))
            for k in range(2 + trial % 2)
        ]
        worst = max(worst, steering_weight(ideal_assemblage(joint, strategies)).steering_weight)
    record(4, "Unsteerability zero", worst <= 1e-8, f"max SW over 12 product-state assemblages = {worst:.1e} (tol 1e-8)")


def test_05_sdp_cross_validation(rng):
    worst_diff, worst_gap, outside = 0.0, 0.0, 0
    for k in range(20):
        asm = random_assemblage(rng, 2 + k % 2, 2 + k % 3)
        sol = steering_weight(asm)
        br = steering_weight_admm(asm)
        worst_diff = max(worst_diff, abs(sol.steering_weight - br.value))
        worst_gap = max(worst_gap, sol.gap)
        # the repaired IPM certifies [SW - gap, SW]; both enclosures must intersect
        outside += not (sol.steering_weight - sol.gap <= br.upper + 1e-9 and br.lower - 1e-9 <= sol.steering_weight)
    ok = worst_diff <= 1e-4 and worst_gap <= 1e-6 and outside == 0
    detail = (
        f"max |IPM - ADMM| = {worst_diff:.1e} (tol 1e-4), max gap {worst_gap:.1e} (tol 1e-6), "
        f"{outside} IPM intervals disjoint from the ADMM bracket"
    )
    record(5, "SDP cross-validation", ok, detail)


def _reduced_bloch_estimate(tables, shots):
    # tables[i][a, b]: counts for Bob setting i+1; pooled marginal over the three circuits
    tabs = np.asarray(tables, dtype=float)
    per_a = tabs.sum(axis=2)
    p_a = per_a.sum(axis=0) / (3 * shots)
    q = tabs[:, :, 0] / per_a
    return np.array([np.sum(p_a * (2 * q[i] - 1)) for i in range(3)])


def test_06_no_signaling():
    ideal = 0.0
    for n in (1, 2, 3, 4):
        cfg = CollisionConfig(2.0, n)
        ideal = max(ideal, no_signaling_defect(ideal_assemblage(evolve_joint(zero_state(), cfg), builtin_strategies(cfg))))

    cfg = CollisionConfig(2.0, 1)
    strategies = builtin_strategies(cfg)
    asm = ideal_assemblage(evolve_joint(zero_state(), cfg), strategies)
    shots = 10**6
    # delta-method Gaussian prediction of the reduced Bloch vector estimate of each setting
    means, covs = [], []
    for x in range(3):
        probs = [
            np.stack([asm.probabilities[x] * (1 + s * asm.bloch[x, :, i]) / 2 for s in (1, -1)], axis=1)
            for i in range(3)
        ]
        mu = np.concatenate([shots * p.ravel() for p in probs])
        sigma = np.zeros((mu.size, mu.size))
        for i, p in enumerate(probs):
            v = p.ravel()
            blk = slice(i * v.size, (i + 1) * v.size)
            sigma[blk, blk] = shots * (np.diag(v) - np.outer(v, v))
        f = lambda c: _reduced_bloch_estimate(c.reshape(3, -1, 2), shots)
        jac = np.zeros((3, mu.size))
        h = 1e-3 * shots
        for k in range(mu.size):
            e = np.zeros(mu.size)
            e[k] = h
            jac[:, k] = (f(mu + e) - f(mu - e)) / (2 * h)
        means.append(f(mu))
        covs.append(jac @ sigma @ jac.T)
    g = np.random.default_rng(99)
    draws = [g.multivariate_normal(m, c, size=200_000) for m, c in zip(means, covs)]
    pairs = [(0, 1), (0, 2), (1, 2)]
    pred = np.max([0.5 * np.linalg.norm(draws[a] - draws[b], axis=1) for a, b in pairs], axis=0)
    m, s = pred.mean(), pred.std()

    observed = []
    for seed in range(20):
        recs = sample_experiment(cfg, strategies, NoiseModel(), shots=shots, seed=seed)
        est = estimate_probabilities(recs, 1)
        observed.append(no_signaling_defect(reconstruct_assemblage(ideal_set(), est)[0]))
    observed = np.array(observed)
    within = np.all(np.abs(observed - m) <= 4 * s)
    mean_ok = abs(observed.mean() - m) <= 4 * s / np.sqrt(len(observed))
    ok = ideal <= 1e-12 and within and mean_ok
    detail = (
        f"ideal defect {ideal:.1e} (tol 1e-12); sampled S=1e6 mean {observed.mean():.2e}, "
        f"range [{observed.min():.2e}, {observed.max():.2e}] vs predicted {m:.2e} +/- {s:.2e} (4 sigma)"
    )
    record(6, "No-signaling", ok, detail)


def test_07_tomography_round_trip(rng):
    worst = 0.0
    for _ in range(1000):
        t = random_tomography_set(rng, max_cond=1e3)
        r = random_bloch(rng)
        worst = max(worst, np.abs(linear_inversion(t, born_probabilities(t, r)) - r).max())
    record(7, "Tomography round-trip", worst <= 1e-12, f"max error {worst:.1e} over 1000 pairs, cond(B) <= 1e3 (tol 1e-12)")


def _theta_check(n):
    t = time.perf_counter()
    res = find_third_strategy(CollisionConfig(2.0, n), lam=0.05, restarts=8, seed=0)
    dt = time.perf_counter() - t
    th_ok = np.all(np.abs(res.theta - TABLE_THETA[n]) <= 0.02)
    ph_ok = np.all(np.abs(res.phi - np.pi / 2) <= 0.02)
    ok = th_ok and ph_ok and dt < (120 if n <= 2 else 1800) and res.steering_weight > res.two_setting_sw
    detail = (
        f"N={n}: theta={np.round(res.theta, 4).tolist()} (table {TABLE_THETA[n]} +/- 0.02), "
        f"phi={np.round(res.phi, 4).tolist()} (pi/2 +/- 0.02), SW={res.steering_weight:.6f} "
        f"> two-setting {res.two_setting_sw:.6f}, {dt:.0f}s"
    )
    return ok, detail


def test_08a_theta_n1():
    record("8a", "theta_N reproduction", *_theta_check(1))


def test_08b_theta_n2():
    record("8b", "theta_N reproduction", *_theta_check(2))


@pytest.mark.slow
def test_08c_theta_n3():
    record("8c", "theta_N reproduction", *_theta_check(3))


def test_09_projectivity_of_lb_minimizers():
    parts, ok = [], True
    for n in (1, 2):
        cfg = CollisionConfig(2.0, n)
        est = estimate_probabilities(exact_records(cfg, builtin_strategies(cfg)), n)
        p3 = lower_bound(est, mode="projective3")
        f9 = lower_bound(est, mode="full9")
        dev = max(np.abs(np.array(f9.b0) - 1).max(), np.abs(np.array(f9.lengths) - 1).max())
        diff = abs(p3.lb - f9.lb)
        ok &= dev <= 1e-2 and diff <= 1e-3
        parts.append(f"N={n}: LB3={p3.lb:.6f} LB9={f9.lb:.6f} |diff|={diff:.1e}, max |b-1|={dev:.1e}")
    record(9, "Projectivity of LB minimizers", ok, "; ".join(parts) + " (tol 1e-2 / 1e-3)")


def test_09b_projectivity_on_noisy_exact_data():
    # supplementary: with device-like noise the ideal set is no longer the only valid one
    parts, ok = [], True
    noise = NoiseModel(two_qubit_depolarizing=0.02, readout=(0.02, 0.02))
    for n in (1, 2):
        cfg = CollisionConfig(2.0, n)
        est = estimate_probabilities(exact_records(cfg, builtin_strategies(cfg), noise), n)
        p3 = lower_bound(est, mode="projective3", restarts=0)
        f9 = lower_bound(est, mode="full9", restarts=0, max_evals=3000)
        dev = max(np.abs(np.array(f9.b0) - 1).max(), np.abs(np.array(f9.lengths) - 1).max())
        diff = abs(p3.lb - f9.lb)
        ok &= dev <= 1e-2 and diff <= 1e-3 and p3.lb < p3.ideal_sw
        parts.append(f"N={n}: LB3={p3.lb:.6f} LB9={f9.lb:.6f} |diff|={diff:.1e}, max |b-1|={dev:.1e}")
    record("9b", "Projectivity, noisy exact data", ok, "; ".join(parts))


def test_10_lb_decreases_with_n():
    noise = NoiseModel(two_qubit_depolarizing=0.02, readout=(0.02, 0.02))
    rows, ok = [], True
    for seed in range(5):
        lbs = []
        for n in (1, 2, 3, 4):
            cfg = CollisionConfig(2.0, n)
            recs = sample_experiment(cfg, builtin_strategies(cfg), noise, seed=seed)
            lbs.append(lower_bound(estimate_probabilities(recs, n), restarts=0).lb)
        ok &= all(a > b for a, b in zip(lbs, lbs[1:]))
        rows.append("[" + ", ".join(f"{v:.4f}" for v in lbs) + "]")
    record(10, "LB strictly decreasing in N", ok, f"LB(N=1..4) per seed: {' '.join(rows)}")


def test_11_invariance_suite(rng):
    worst = 0.0
    for k in range(10):
        asm = random_assemblage(rng, 2 + k % 2, 2 + k % 3)
        base = steering_weight(asm).steering_weight
        x, a = asm.shape
        variants = [
            permute_settings(asm, rng.permutation(x)),
            relabel_outcomes(asm, int(rng.integers(x)), rng.permutation(a)),
            conjugate(asm, qmath.random_unitary(2, rng)),
        ]
        for v in variants:
            worst = max(worst, abs(steering_weight(v).steering_weight - base))
    record(11, "Invariance suite", worst <= 1e-6, f"max SW change {worst:.1e} over 10 assemblages x 3 symmetries (tol 1e-6)")


def test_12_pipeline_determinism(tmp_path):
    cfg = {
        "version": 1,
        "experiment": {"N": 2},
        "noise": {"two_qubit_depolarizing": 0.02, "readout": [0.02, 0.02]},
        "shots": 20000,
        "search": {"lb_restarts": 1, "strategy_restarts": 1, "shared_angles": True},
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        for stage in ("simulate", "sample", "tomo", "sw", "lb", "find-strategy", "plot"):
            code = cli_main([stage, "--config", str(path), "--out", str(out), "--seed", "1234"])
            assert code == 0, f"{stage} exited {code}"
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir() if p.name != "run_meta.json")
    differing = [n for n in names if (outs[0] / n).read_bytes() != (outs[1] / n).read_bytes()]
    ok = not differing and len(names) >= 12
    record(12, "Pipeline determinism", ok, f"{len(names)} files compared, differing: {differing or 'none'}")
