"""Static figures as self-contained SVG, each with a CSV twin.

No plotting library is used; every number is written with a fixed format so
repeated runs produce identical files.
"""

import csv
import io

import numpy as np

W, H = 480, 320
MARGIN = 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _fmt(v):
    return f"{v:.3f}".rstrip("0").rstrip(".")


class _Canvas:
    def __init__(self, width=W, height=H, title=""):
        self.width, self.height = width, height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
            f'<rect width="{width}" height="{height}" fill="white"/>',
        ]
        if title:
            self.text(width / 2, 18, title, anchor="middle", size=13)

    def line(self, x1, y1, x2, y2, stroke="black", width=1, dash=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{stroke}" stroke-width="{width}"{extra}/>'
        )

    def polyline(self, pts, stroke, width=1.5):
        coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
        self.parts.append(f'<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="{width}"/>')

    def circle(self, x, y, r, fill, opacity=0.7):
        self.parts.append(
            f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(r)}" fill="{fill}" fill-opacity="{opacity}"/>'
        )

    def rect(self, x, y, w, h, fill):
        self.parts.append(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" fill="{fill}"/>')

    def text(self, x, y, s, anchor="start", size=11):
        s = str(s).replace("&", "&amp;").replace("<", "&lt;")
        self.parts.append(f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" font-size="{size}">{s}</text>')

    def render(self):
        return "\n".join(self.parts + ["</svg>"]) + "\n"


class _Axes:
    """Linear map from data coordinates to a pixel box."""

    def __init__(self, canvas, xlim, ylim, box=None):
        self.c = canvas
        self.x0, self.y0, self.x1, self.y1 = box or (MARGIN, 30, canvas.width - 20, canvas.height - MARGIN + 10)
        self.xlim, self.ylim = xlim, ylim

    def px(self, x):
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo) * (self.x1 - self.x0)

    def py(self, y):
        lo, hi = self.ylim
        return self.y1 - (y - lo) / (hi - lo) * (self.y1 - self.y0)

    def frame(self, xticks, yticks, xlabel="", ylabel=""):
        c = self.c
        c.line(self.x0, self.y1, self.x1, self.y1)
        c.line(self.x0, self.y0, self.x0, self.y1)
        for t in xticks:
            c.line(self.px(t), self.y1, self.px(t), self.y1 + 4)
            c.text(self.px(t), self.y1 + 16, _fmt(t), anchor="middle")
        for t in yticks:
            c.line(self.x0 - 4, self.py(t), self.x0, self.py(t))
            c.text(self.x0 - 7, self.py(t) + 4, _fmt(t), anchor="end")
        if xlabel:
            c.text((self.x0 + self.x1) / 2, self.y1 + 32, xlabel, anchor="middle")
        if ylabel:
            c.parts.append(
                f'<text x="14" y="{_fmt((self.y0 + self.y1) / 2)}" text-anchor="middle" '
                f'transform="rotate(-90 14 {_fmt((self.y0 + self.y1) / 2)})">{ylabel}</text>'
            )


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.10g}" if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def decay_curve(trajectory, T):
    """Bloch z component of the system after each collision against ``exp(-k T / N)``.

    Parameters
    ----------
    trajectory : ndarray, shape (N + 1, 3)
        Bloch vectors after ``k = 0..N`` collisions.

    Returns
    -------
    svg, csv : str
    """
    traj = np.asarray(trajectory)
    n = len(traj) - 1
    k = np.arange(n + 1)
    theory = np.exp(-k * T / n)
    fine_t = np.linspace(0, T, 101)
    c = _Canvas(title=f"Stroboscopic decay, N={n}, T={_fmt(T)}")
    ax = _Axes(c, (0, T), (0, 1.05))
    ax.frame(np.linspace(0, T, 5), [0, 0.25, 0.5, 0.75, 1.0], "time", "Bloch z")
    ax.c.polyline([(ax.px(t), ax.py(np.exp(-t))) for t in fine_t], PALETTE[0])
    for kk, z in zip(k, traj[:, 2]):
        c.circle(ax.px(kk * T / n), ax.py(z), 4, PALETTE[1], opacity=1)
    rows = [(int(kk), float(kk * T / n), float(z), float(zt)) for kk, z, zt in zip(k, traj[:, 2], theory)]
    return c.render(), _csv(["k", "t", "z_sim", "z_theory"], rows)


def ensemble_scatter(asm, planes=(("x", "z"), ("y", "z"))):
    """Members of every setting projected onto Bloch planes; dot area proportional to probability."""
    idx = {"x": 0, "y": 1, "z": 2}
    X = len(asm.settings)
    panel = 180
    c = _Canvas(width=panel * len(planes) + 40, height=panel * X + 40, title="Assemblage members")
    for xi, setting in enumerate(asm.settings):
        for pi, (h, v) in enumerate(planes):
            box = (30 + pi * panel, 35 + xi * panel, 30 + pi * panel + panel - 30, 35 + xi * panel + panel - 30)
            ax = _Axes(c, (-1.1, 1.1), (-1.1, 1.1), box=box)
            cx, cy = ax.px(0), ax.py(0)
            r = ax.px(1) - cx
            c.parts.append(
                f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" fill="none" stroke="#999"/>'
            )
            c.line(ax.px(-1), cy, ax.px(1), cy, stroke="#ccc")
            c.line(cx, ax.py(-1), cx, ax.py(1), stroke="#ccc")
            c.text(box[0], box[1] - 3, f"{setting}: {h}-{v}")
            for ai in range(len(asm.outcomes)):
                p = asm.probabilities[xi, ai]
                if p <= 0:
                    continue
                b = asm.bloch[xi, ai]
                c.circle(ax.px(b[idx[h]]), ax.py(b[idx[v]]), 12 * np.sqrt(p), PALETTE[xi % len(PALETTE)])
    rows = [
        (s, a, float(asm.probabilities[xi, ai]), *map(float, asm.bloch[xi, ai]))
        for xi, s in enumerate(asm.settings)
        for ai, a in enumerate(asm.outcomes)
    ]
    return c.render(), _csv(["x", "a", "p", "rx", "ry", "rz"], rows)


def lb_bars(entries):
    """Bar chart of lower bounds against the number of collisions.

    Parameters
    ----------
    entries : list of (N, LB, label)
        Several entries per ``N`` are drawn side by side.
    """
    entries = sorted(entries, key=lambda e: (e[0], e[2]))
    ns = sorted({e[0] for e in entries})
    c = _Canvas(title="Steering weight lower bound")
    ax = _Axes(c, (0.5, len(ns) + 0.5), (0, 1.0))
    ax.frame([], [0, 0.25, 0.5, 0.75, 1.0], "collisions N", "LB")
    for i, n in enumerate(ns, start=1):
        group = [e for e in entries if e[0] == n]
        width = 0.7 / len(group)
        for j, (_, lb, _) in enumerate(group):
            left = i - 0.35 + j * width
            c.rect(ax.px(left), ax.py(lb), ax.px(left + width) - ax.px(left), ax.py(0) - ax.py(lb), PALETTE[j % 5])
        c.text(ax.px(i), ax.y1 + 16, str(n), anchor="middle")
    return c.render(), _csv(["N", "LB", "source"], [(int(n), float(lb), lab) for n, lb, lab in entries])
