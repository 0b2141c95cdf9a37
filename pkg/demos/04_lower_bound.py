"""Lower bound on the steering weight when Bob's measurements are uncertain.

Every set of three projective measurements under which all reconstructed
states stay physical is a candidate; the smallest steering weight among them
is reported.  Runs N = 1..3 (N = 4 takes about a minute more).
"""

from steerlab.assemblage import builtin_strategies
from steerlab.collision import CollisionConfig
from steerlab.counts import NoiseModel, estimate_probabilities, sample_experiment
from steerlab.plotting import lb_bars
from steerlab.search import lower_bound

noise = NoiseModel(two_qubit_depolarizing=0.02, readout=(0.02, 0.02))
entries = []
for n in (1, 2, 3):
    cfg = CollisionConfig(2.0, n)
    est = estimate_probabilities(sample_experiment(cfg, builtin_strategies(cfg), noise, seed=0), n)
    res = lower_bound(est, restarts=0)
    t1, t2, p2 = res.angles_deg
    print(
        f"N={n}: LB={res.lb:.4f} (ideal-set SW {res.ideal_sw:.4f}) at "
        f"theta1={t1:.2f} deg, theta2={t2:.2f} deg, phi2={p2:.2f} deg"
    )
    entries.append((n, res.lb, "seed 0"))

svg, table = lb_bars(entries)
print("\n" + table)
