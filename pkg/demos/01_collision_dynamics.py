"""Dephasing a qubit through repeated collisions with fresh ancillas.

The total time T = 2 is split into N collisions.  Whatever N is, the system
ends at Bloch vector (0, 0, e^-2); finer splitting only changes how the
environment stores the information.
"""

import numpy as np

from steerlab import qmath
from steerlab.collision import CollisionConfig, composed_channel, evolve_joint, stroboscopic_trajectory

for n in (1, 2, 3, 4):
    cfg = CollisionConfig(T=2.0, N=n)
    joint = evolve_joint(qmath.ket_to_dm(qmath.KET0), cfg)
    r = qmath.bloch_from_density(qmath.partial_trace(joint, [0]))
    print(f"N={n}  g={cfg.coupling:.3f}  final Bloch vector {np.round(r, 5)}")
    print("      composed channel diag", np.round(np.diag(composed_channel(cfg)), 5))

traj = stroboscopic_trajectory(CollisionConfig(T=2.0, N=4))
print("\nz after each of 4 collisions:", np.round(traj[:, 2], 4))
print("exp(-k/2):                   ", np.round(np.exp(-np.arange(5) / 2), 4))
