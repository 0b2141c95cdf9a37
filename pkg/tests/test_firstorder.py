import numpy as np

from steerlab.firstorder import steering_weight_admm
from steerlab.steering import steering_weight
from _factories import lhs_assemblage, random_assemblage


def test_bracket_is_ordered_and_tight(rng):
    asm = random_assemblage(rng, 2, 3)
    br = steering_weight_admm(asm)
    assert br.lower <= br.upper
    assert br.width <= 1e-4
    assert abs(br.value - steering_weight(asm).steering_weight) <= 1e-4


def test_unsteerable_bracket_touches_zero(rng):
    br = steering_weight_admm(lhs_assemblage(rng, 2, 2))
    assert br.lower <= 1e-6
    assert br.upper <= 1e-4


def test_bracket_is_valid_even_when_stopped_early(rng):
    asm = random_assemblage(rng, 3, 2)
    exact = steering_weight(asm).steering_weight
    br = steering_weight_admm(asm, max_iter=100, check_every=50)
    assert br.lower - 1e-9 <= exact <= br.upper + 1e-9
