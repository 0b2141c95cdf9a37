"""From simulated shot counts to a reconstructed assemblage.

Counts come from the circuit with a simple device-noise stand-in, Bob's
states are rebuilt by linear inversion and the steering weight is computed
on the result.
"""

import numpy as np

from steerlab.assemblage import builtin_strategies, no_signaling_defect
from steerlab.collision import CollisionConfig
from steerlab.counts import NoiseModel, default_shots, estimate_probabilities, sample_experiment
from steerlab.steering import steering_weight
from steerlab.tomography import ideal_set, reconstruct_assemblage

cfg = CollisionConfig(2.0, 2)
noise = NoiseModel(two_qubit_depolarizing=0.02, readout=(0.02, 0.02))
records = sample_experiment(cfg, builtin_strategies(cfg), noise, seed=1)
print(f"{len(records)} circuits, {default_shots(cfg.N):,} shots each")

est = estimate_probabilities(records, cfg.N)
asm, valid, worst = reconstruct_assemblage(ideal_set(), est)
print("all reconstructed states physical:", valid, f"(worst excess {worst:.2e})")
print(f"no-signaling defect {no_signaling_defect(asm):.2e}")
print("p(a|x1):", np.round(asm.probabilities[0], 4))
print(f"steering weight {steering_weight(asm).steering_weight:.4f}")
