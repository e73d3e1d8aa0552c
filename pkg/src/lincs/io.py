"""CSV and SVG emitters.  Floats are written with 17 significant digits."""
from __future__ import annotations

import csv
import io

import numpy as np

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
          "#7f7f7f", "#bcbd22", "#17becf"]


def fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def to_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def write_text(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def trajectory_csv(times, states):
    rows = ([t, *np.asarray(g).ravel()] for t, g in zip(times, states))
    return to_csv(["t", "g11", "g12", "g21", "g22"], rows)


def cloud_csv(cloud):
    rows = ([u.duration, *np.asarray(g).ravel(), u.to_string()] for g, u in cloud.points)
    return to_csv(["t", "g11", "g12", "g21", "g22", "control"], rows)


def cylinder_csv(thetas, xs):
    return to_csv(["theta", "x"], zip(thetas, xs))


def matrices_csv(named):
    """Rows ``name, m11, m12, ...`` for named matrices, ``name, value`` for scalars."""
    rows = []
    width = 1
    for name, value in named:
        flat = np.atleast_1d(np.asarray(value, dtype=float)).ravel()
        width = max(width, flat.size)
        rows.append([name, *flat])
    header = ["name"] + [f"v{i + 1}" for i in range(width)]
    return to_csv(header, rows)


def arcs_csv(arcs):
    return to_csv(["label", "kind", "start", "end"],
                  ([a.label, a.kind, a.start, a.end] for a in arcs))


def cellsets_csv(sets, grid):
    rows = []
    for cs in sets:
        i_theta, i_x = grid.unravel(cs.cells)
        thetas, xs = grid.centers(cs.cells)
        rows.extend(zip([cs.label] * len(cs.cells), i_theta, i_x, thetas, xs))
    return to_csv(["label", "i_theta", "i_x", "theta_center", "x_center"], rows)


def render_svg(sets, grid, width=800, height=400, marks=((0.0, 0.0), (np.pi, 0.0))):
    """Unrolled cylinder ``[0, 2 pi] x [x_min, x_max]`` with one color per set."""
    sx = width / (2 * np.pi)
    sy = height / (grid.x_max - grid.x_min)

    def px(theta):
        return theta * sx

    def py(x):
        return (grid.x_max - x) * sy

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height + 40}" '
        f'viewBox="0 0 {width} {height + 40}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white" stroke="black"/>',
        f'<line x1="0" y1="{py(0.0):.3f}" x2="{width}" y2="{py(0.0):.3f}" '
        'stroke="#cccccc" stroke-dasharray="4 4"/>',
    ]
    cw = grid.d_theta * sx
    ch = grid.d_x * sy
    for k, cs in enumerate(sets):
        color = COLORS[k % len(COLORS)]
        out.append(f'<g fill="{color}" stroke="none"><title>{cs.label}</title>')
        i_theta, i_x = grid.unravel(cs.cells)
        for it, ix in zip(i_theta, i_x):
            x0 = px(it * grid.d_theta)
            y0 = py(grid.x_min + (ix + 1) * grid.d_x)
            out.append(f'<rect x="{x0:.3f}" y="{y0:.3f}" width="{cw:.3f}" height="{ch:.3f}"/>')
        out.append("</g>")
        lx = 10 + 90 * k
        out.append(f'<rect x="{lx}" y="{height + 12}" width="12" height="12" fill="{color}"/>')
        out.append(f'<text x="{lx + 16}" y="{height + 23}" font-size="12">{cs.label}</text>')
    for theta, x in marks:
        out.append(f'<circle cx="{px(theta):.3f}" cy="{py(x):.3f}" r="3" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
