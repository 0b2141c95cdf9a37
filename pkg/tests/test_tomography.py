import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from steerlab import qmath
from steerlab.assemblage import builtin_strategies, ideal_assemblage
from steerlab.collision import CollisionConfig, evolve_joint
from steerlab.counts import exact_records, estimate_probabilities, CountsRecord
from steerlab.errors import CompletenessError, DomainError
from steerlab.tomography import (
    TomographySet,
    born_probabilities,
    ideal_set,
    is_physical,
    linear_inversion,
    reconstruct_assemblage,
)
from _factories import random_bloch, random_tomography_set


def test_ideal_set_examples():
    t = ideal_set()
    assert t.det == pytest.approx(1)
    assert t.is_projective and t.is_complete
    assert np.allclose(born_probabilities(t, [0, 0, 1]), [0.5, 0.5, 1])
    assert np.allclose(born_probabilities(t, [0, 0, 0]), 0.5)
    assert np.allclose(born_probabilities(t, [1, 0, 0]), [1, 0.5, 0.5])
    assert np.allclose(born_probabilities(t, [0, 0, np.exp(-2)]), [0.5, 0.5, 0.5677], atol=1e-4)


def test_biased_set_example():
    t = TomographySet([1, 1, 1.1], np.diag([1, 1, 0.9]))
    assert born_probabilities(t, [0, 0, 1])[2] == pytest.approx(1.0)


def test_inversion_examples():
    t = ideal_set()
    assert np.allclose(linear_inversion(t, [0.5, 0.5, 1]), [0, 0, 1])
    r = linear_inversion(t, [1, 1, 1])
    assert np.allclose(r, 1)
    assert not is_physical(r)


def test_round_trip_well_conditioned(rng):
    for _ in range(100):
        t = random_tomography_set(rng, max_cond=1e3)
        r = random_bloch(rng)
        assert np.abs(linear_inversion(t, born_probabilities(t, r)) - r).max() <= 1e-12


def test_round_trip_error_scales_with_condition_number(rng):
    for _ in range(200):
        t = random_tomography_set(rng)
        r = random_bloch(rng)
        err = np.abs(linear_inversion(t, born_probabilities(t, r)) - r).max()
        assert err <= 50 * np.finfo(float).eps * np.linalg.cond(t.b)


def test_batched_inversion(rng):
    t = random_tomography_set(rng, max_cond=100)
    r = random_bloch(rng, size=(4, 5))
    assert np.allclose(linear_inversion(t, born_probabilities(t, r)), r)


def test_invalid_sets():
    with pytest.raises(DomainError):
        TomographySet([1, 1, 1], np.diag([1, 1, 1.2]))
    with pytest.raises(DomainError):
        TomographySet([2.5, 1, 1], np.eye(3))
    flat = TomographySet(np.ones(3), [[1, 0, 0], [0, 1, 0], [1, 0, 0]])
    assert not flat.is_complete
    with pytest.raises(CompletenessError):
        linear_inversion(flat, [0.5, 0.5, 0.5])


def test_canonical_angles(rng):
    assert np.allclose(ideal_set().canonical_angles(), (np.pi / 2, np.pi / 2, 0), atol=1e-12)
    t = TomographySet.from_canonical(1.2, 1.9, -0.3, b0=[0.9, 1.1, 1.0], lengths=[0.8, 0.7, 0.9])
    for _ in range(10):
        rot = Rotation.random(random_state=rng.integers(1 << 31)).as_matrix()
        assert np.allclose(t.rotated(rot).canonical_angles(), (1.2, 1.9, -0.3))


def test_reconstruction_of_exact_data():
    cfg = CollisionConfig(2.0, 2)
    strategies = builtin_strategies(cfg)
    est = estimate_probabilities(exact_records(cfg, strategies), 2)
    asm, valid, worst = reconstruct_assemblage(ideal_set(), est)
    ref = ideal_assemblage(evolve_joint(qmath.ket_to_dm(qmath.KET0), cfg), strategies)
    assert valid and worst <= 1e-12
    assert np.allclose(asm.probabilities, ref.probabilities)
    assert np.allclose(asm.bloch, ref.bloch, atol=1e-12)


def test_shrunken_set_inflates_states():
    cfg = CollisionConfig(2.0, 1)
    est = estimate_probabilities(exact_records(cfg, builtin_strategies(cfg)), 1)
    t = TomographySet(np.ones(3), np.diag([1, 1, 0.5]))
    asm, valid, worst = reconstruct_assemblage(t, est)
    assert not valid
    # x1 members are the z eigenstates, inflated by 1/b3
    assert np.allclose(np.abs(asm.bloch[0, :, 2]), 2)
    assert worst == pytest.approx(1)


def test_empty_bins_are_zero_members():
    recs = [CountsRecord("x", i, 4, {"0|0": 3, "0|1": 1, "1|0": 0, "1|1": 0}) for i in (1, 2, 3)]
    asm, valid, _ = reconstruct_assemblage(ideal_set(), estimate_probabilities(recs, 1))
    assert valid
    assert asm.probabilities[0, 1] == 0
    assert np.allclose(asm.bloch[0, 1], 0)
