import xml.etree.ElementTree as ET

import numpy as np

from steerlab import qmath
from steerlab.assemblage import builtin_strategies, ideal_assemblage
from steerlab.collision import CollisionConfig, evolve_joint, stroboscopic_trajectory
from steerlab.plotting import decay_curve, ensemble_scatter, lb_bars

NS = "{http://www.w3.org/2000/svg}"


def test_decay_curve():
    cfg = CollisionConfig(2.0, 4)
    svg, table = decay_curve(stroboscopic_trajectory(cfg), cfg.T)
    root = ET.fromstring(svg)
    assert len(root.findall(f"{NS}circle")) == 5
    rows = table.strip().splitlines()
    assert rows[0] == "k,t,z_sim,z_theory"
    k, t, z, zt = rows[-1].split(",")
    assert k == "4" and abs(float(z) - 0.1353) < 1e-4 and abs(float(zt) - float(z)) < 1e-9
    assert decay_curve(stroboscopic_trajectory(cfg), cfg.T) == (svg, table)


def test_ensemble_scatter_dot_area():
    cfg = CollisionConfig(2.0, 2)
    asm = ideal_assemblage(evolve_joint(qmath.ket_to_dm(qmath.KET0), cfg), builtin_strategies(cfg))
    svg, table = ensemble_scatter(asm)
    root = ET.fromstring(svg)
    dots = [c for c in root.findall(f"{NS}circle") if c.get("fill") != "none"]
    assert len(dots) == 2 * 3 * 4
    r = np.array([float(c.get("r")) for c in dots[:4]])
    # one x-z panel for x1: area proportional to p(a|x1)
    p = asm.probabilities[0]
    assert np.allclose(r**2 / (r**2).sum(), p / p.sum(), atol=1e-3)
    assert len(table.strip().splitlines()) == 1 + 12


def test_lb_bars():
    svg, table = lb_bars([(2, 0.6, "b"), (1, 0.8, "a"), (2, 0.55, "c")])
    root = ET.fromstring(svg)
    bars = [r for r in root.findall(f"{NS}rect") if r.get("fill") != "white"]
    assert len(bars) == 3
    assert table.splitlines()[1] == "1,0.8,a"
