"""Searching for the best third measurement strategy.

With 5 % white noise on Bob's side, the direction measured on each ancilla
by a third strategy is optimised.  For one collision the optimum is the y
axis.  For two collisions the search is per ancilla and the best directions
differ between the two ancillas.
"""

import numpy as np

from steerlab.collision import CollisionConfig
from steerlab.search import find_third_strategy

for n in (1, 2):
    res = find_third_strategy(CollisionConfig(2.0, n), lam=0.05, restarts=4)
    print(
        f"N={n}: theta={np.round(res.theta, 3)}, phi={np.round(res.phi, 3)}, "
        f"SW={res.steering_weight:.5f} (two settings only: {res.two_setting_sw:.5f})"
    )

shared = find_third_strategy(CollisionConfig(2.0, 2), lam=0.05, restarts=4, shared=True)
print(f"N=2, one direction for both ancillas: theta={shared.theta_n:.3f}, phi={shared.phi_n:.3f}, SW={shared.steering_weight:.5f}")
