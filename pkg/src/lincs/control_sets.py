"""Control sets of the induced system on the circle and on the cylinder.

On the circle the control sets are arcs swept by the attracting (or
repelling) eigendirections of ``H + uX`` as ``u`` ranges over the control
interval.  On the cylinder they are estimated by cell mapping: grid cells
become graph nodes, one step of each constant control flow gives the edges,
and strongly connected components approximate the control sets.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from lincs.cylinder import TWO_PI, CylinderPoint, SpectralData, require_induced_system
from lincs.exceptions import RejectedInputError
from lincs.jordan import check_conditions

MARKED_POINTS = {
    "(e1,0)": (0.0, 0.0),
    "(e2,0)": (np.pi / 2, 0.0),
    "(-e1,0)": (np.pi, 0.0),
    "(-e2,0)": (3 * np.pi / 2, 0.0),
}


# --------------------------------------------------------------------------
# circle


def _hyperbolic_generator(sys, u):
    Hu = sys.generator(u)
    det = Hu[0, 0] * Hu[1, 1] - Hu[0, 1] * Hu[1, 0]
    if not det < 0:
        raise RejectedInputError(f"H + uX is not hyperbolic at u = {u} (det = {det:.6g})")
    return Hu


def circle_attractor(sys, u):
    """Angle of the attracting eigendirection of ``H + uX``, in ``(-pi/2, pi/2]``."""
    v = SpectralData.from_matrix(_hyperbolic_generator(sys, u)).v_plus
    return float(np.arctan2(v[1], v[0]))


def circle_repeller(sys, u):
    """Angle of the repelling eigendirection of ``H + uX``, in ``(-pi/2, pi/2]``."""
    v = SpectralData.from_matrix(_hyperbolic_generator(sys, u)).v_minus
    return float(np.arctan2(v[1], v[0]))


def _near(angle, ref):
    """Representative of the line direction ``angle`` (mod pi) closest to ``ref``."""
    return ref + (angle - ref + np.pi / 2) % np.pi - np.pi / 2


@dataclass(frozen=True)
class Arc:
    """Closed arc ``[start, end]`` on the circle, ``start <= end <= start + 2 pi``."""

    label: str
    start: float
    end: float
    kind: str

    @property
    def length(self):
        return self.end - self.start

    def contains(self, theta, atol=0.0):
        return (theta - self.start + atol) % TWO_PI <= self.length + 2 * atol

    def shifted(self, delta, label):
        return Arc(label, self.start + delta, self.end + delta, self.kind)

    def overlaps(self, other):
        return (self.contains(other.start) or self.contains(other.end)
                or other.contains(self.start) or other.contains(self.end))


def circle_control_sets(sys, rho=None, n_samples=201):
    """The four control sets of the projected system on the circle.

    Returns the arc swept by the attractors of ``H + uX`` that contains
    angle 0 (label ``D1-circle``), its antipode ``D-1-circle``, and the two
    arcs swept by the repellers (``E2-circle`` through ``pi/2`` and
    ``-E2-circle``).  Endpoints are extremes over ``n_samples`` control
    values spanning ``[-rho, rho]``, endpoints included.
    """
    rho = sys.rho if rho is None else float(rho)
    report = check_conditions(sys.drift, sys.controls[0], rho)
    if not report.ok:
        raise RejectedInputError("; ".join(report.failures()))
    us = np.linspace(-rho, rho, max(2, int(n_samples)))
    ref_a = circle_attractor(sys, 0.0)
    ref_r = circle_repeller(sys, 0.0)
    att = np.array([_near(circle_attractor(sys, u), ref_a) for u in us])
    rep = np.array([_near(circle_repeller(sys, u), ref_r) for u in us])
    a = Arc("a", float(att.min()), float(att.max()), "attractor")
    r = Arc("r", float(rep.min()), float(rep.max()), "repeller")
    if not a.contains(0.0):
        a = a.shifted(np.pi, "a")
    if not r.contains(np.pi / 2):
        r = r.shifted(np.pi, "r")
    return [
        Arc("D1-circle", a.start, a.end, a.kind),
        a.shifted(np.pi, "D-1-circle"),
        Arc("E2-circle", r.start, r.end, r.kind),
        r.shifted(np.pi, "-E2-circle"),
    ]


def arcs_disjoint(arcs):
    return all(not arcs[i].overlaps(arcs[j])
               for i in range(len(arcs)) for j in range(i + 1, len(arcs)))


# --------------------------------------------------------------------------
# cylinder grid and graph


@dataclass(frozen=True)
class CellGrid:
    """Uniform grid on ``[0, 2 pi) x [x_min, x_max)`` with half-open cells."""

    n_theta: int = 256
    n_x: int = 128
    x_min: float = -3.0
    x_max: float = 3.0

    def __post_init__(self):
        if self.n_theta < 2 or self.n_theta % 2:
            raise RejectedInputError("n_theta must be a positive even number")
        if self.n_x < 1:
            raise RejectedInputError("n_x must be positive")
        if not self.x_max > self.x_min:
            raise RejectedInputError("x_max must exceed x_min")

    @property
    def n_cells(self):
        return self.n_theta * self.n_x

    @property
    def d_theta(self):
        return TWO_PI / self.n_theta

    @property
    def d_x(self):
        return (self.x_max - self.x_min) / self.n_x

    def index(self, i_theta, i_x):
        return np.asarray(i_theta) * self.n_x + np.asarray(i_x)

    def unravel(self, cells):
        cells = np.asarray(cells)
        return cells // self.n_x, cells % self.n_x

    def x_index(self, x):
        return np.floor((np.asarray(x, dtype=float) - self.x_min) / self.d_x).astype(np.int64)

    def cell_of(self, theta, x):
        """Flat cell index of each point, ``-1`` outside the window."""
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        i_theta = np.floor(theta / self.d_theta).astype(np.int64) % self.n_theta
        i_x = self.x_index(x)
        inside = (i_x >= 0) & (i_x < self.n_x)
        return np.where(inside, self.index(i_theta, i_x), -1)

    def cell_of_vector(self, vx, vy, x):
        """Cell of the point with circle coordinate ``(vx, vy)``.

        The angle is taken from the representative in the closed upper half
        plane, so ``(-vx, -vy)`` lands exactly ``n_theta / 2`` cells away.
        """
        lower = (vy < 0) | ((vy == 0) & (vx < 0))
        ux = np.where(lower, -vx, vx)
        uy = np.where(lower, -vy, vy)
        half = np.floor(np.arctan2(uy, ux) / self.d_theta).astype(np.int64)
        i_theta = (half + np.where(lower, self.n_theta // 2, 0)) % self.n_theta
        i_x = self.x_index(x)
        inside = (i_x >= 0) & (i_x < self.n_x)
        return np.where(inside, self.index(i_theta, i_x), -1)

    def centers(self, cells):
        i_theta, i_x = self.unravel(cells)
        return (i_theta + 0.5) * self.d_theta, self.x_min + (i_x + 0.5) * self.d_x

    def mirror(self, cells):
        """Cell-level image of ``f_{-1}``: shift by half a turn."""
        i_theta, i_x = self.unravel(cells)
        return self.index((i_theta + self.n_theta // 2) % self.n_theta, i_x)

    def sample_vectors(self, cells, offsets):
        """Circle vectors and ``x`` of stencil points, exactly odd under ``mirror``."""
        i_theta, i_x = self.unravel(np.asarray(cells))
        half = self.n_theta // 2
        lower = i_theta >= half
        base = np.where(lower, i_theta - half, i_theta)
        vx, vy, xs = [], [], []
        for s_theta, s_x in offsets:
            theta = (base + s_theta) * self.d_theta
            c, s = np.cos(theta), np.sin(theta)
            vx.append(np.where(lower, -c, c))
            vy.append(np.where(lower, -s, s))
            xs.append(self.x_min + (i_x + s_x) * self.d_x)
        return np.stack(vx), np.stack(vy), np.stack(xs)


def stencil(pts_per_cell):
    """Deterministic sample offsets inside a unit cell."""
    if pts_per_cell == 1:
        return [(0.5, 0.5)]
    if pts_per_cell == 5:
        return [(0.5, 0.5), (0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)]
    k = int(round(np.sqrt(pts_per_cell)))
    if k * k != pts_per_cell:
        raise RejectedInputError("pts_per_cell must be 1, 5 or a perfect square")
    ticks = (np.arange(k) + 0.5) / k
    return [(a, b) for a in ticks for b in ticks]


def default_controls(rho):
    return [-rho, -rho / 2, 0.0, rho / 2, rho]


def step_arrays(vx, vy, x, M):
    """Image of cylinder points under the left action of the matrix ``M``."""
    (a, b), (c, d) = M
    nvx = a * vx + b * vy
    nvy = c * vx + d * vy
    # w = x v + v*, with v* = (-vy, vx)
    wx = x * vx - vy
    wy = x * vy + vx
    nwx = a * wx + b * wy
    nwy = c * wx + d * wy
    norm = np.hypot(nvx, nvy)
    return nvx / norm, nvy / norm, nvx * nwx + nvy * nwy


def flow_vectors(t, vx, vy, x, spec):
    """Closed-form induced flow in vector form; see :func:`lincs.cylinder.flow_closed_arrays`."""
    Pinv = np.linalg.inv(spec.basis)
    a = Pinv[0, 0] * vx + Pinv[0, 1] * vy
    b = Pinv[1, 0] * vx + Pinv[1, 1] * vy
    ap = -Pinv[0, 0] * vy + Pinv[0, 1] * vx
    bp = -Pinv[1, 0] * vy + Pinv[1, 1] * vx
    k = float(np.dot(spec.v_plus, spec.v_minus))
    grow = np.exp(spec.lam * t)
    shrink = np.exp(-spec.lam * t)
    wa = a * grow
    wb = b * shrink
    nvx = wa * spec.v_plus[0] + wb * spec.v_minus[0]
    nvy = wa * spec.v_plus[1] + wb * spec.v_minus[1]
    norm = np.hypot(nvx, nvy)
    new_x = (a * (a * x + ap) * grow * grow
             + k * (2 * a * b * x + a * bp + ap * b)
             + b * (b * x + bp) * shrink * shrink)
    return nvx / norm, nvy / norm, new_x


@dataclass
class ReachGraph:
    """Cell-to-cell transition graph with a sink node for leaving the window."""

    grid: CellGrid
    adjacency: object
    controls: tuple
    tau: float
    provenance: dict = field(default_factory=dict)

    @property
    def sink(self):
        return self.grid.n_cells

    @property
    def n_nodes(self):
        return self.grid.n_cells + 1

    def successors(self, cell):
        A = self.adjacency
        return A.indices[A.indptr[cell]:A.indptr[cell + 1]]

    def edges(self):
        A = self.adjacency.tocoo()
        order = np.lexsort((A.col, A.row))
        return A.row[order], A.col[order]

    def has_edge(self, p, q):
        return bool(np.isin(q, self.successors(p)))


def build_graph(sys, grid, tau, controls=None, pts_per_cell=5, keep_provenance=False,
                strict=True):
    """Cell-mapping graph of the induced system on the cylinder.

    For every cell, every stencil point and every control value ``c`` the
    point is flowed for time ``tau`` along ``H + cX`` and an edge is added to
    the cell it lands in, or to the sink when it leaves the window.
    """
    if not tau > 0:
        raise RejectedInputError("tau must be positive")
    require_induced_system(sys)
    rho = sys.rho
    controls = default_controls(rho) if controls is None else [float(c) for c in controls]
    if any(abs(c) > rho + 1e-12 for c in controls):
        raise RejectedInputError(f"controls must lie in [-{rho}, {rho}]")
    if strict and not all(any(abs(c - r) <= 1e-12 for c in controls) for r in (-rho, 0.0, rho)):
        raise RejectedInputError("controls must include -rho, 0 and rho")

    offsets = stencil(pts_per_cell)
    cells = np.arange(grid.n_cells)
    vx, vy, xs = grid.sample_vectors(cells, offsets)
    src = np.broadcast_to(cells, vx.shape)
    rows, cols = [], []
    provenance = {}
    for c in controls:
        spec = SpectralData.from_matrix(sys.generator(c))
        nvx, nvy, nx = flow_vectors(tau, vx, vy, xs, spec)
        dst = grid.cell_of_vector(nvx, nvy, nx)
        dst = np.where(dst < 0, grid.n_cells, dst)
        rows.append(src.ravel())
        cols.append(dst.ravel())
        if keep_provenance:
            for k, (p, q) in enumerate(zip(src.ravel(), dst.ravel())):
                provenance.setdefault((int(p), int(q)), (c, divmod(k, grid.n_cells)[0]))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    n = grid.n_cells + 1
    A = coo_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.data[:] = 1
    A.sort_indices()
    return ReachGraph(grid, A, tuple(controls), float(tau), provenance)


@dataclass
class ControlSetApprox:
    """A strongly connected set of cells approximating a control set."""

    cells: np.ndarray
    label: str
    contains: list = field(default_factory=list)

    def __len__(self):
        return len(self.cells)

    def __contains__(self, cell):
        i = np.searchsorted(self.cells, cell)
        return bool(i < len(self.cells) and self.cells[i] == cell)

    def bounds(self, grid):
        """``(theta_lo, theta_hi, x_lo, x_hi)`` of the cell hull (theta may wrap)."""
        i_theta, i_x = grid.unravel(self.cells)
        present = np.zeros(grid.n_theta, dtype=bool)
        present[i_theta] = True
        # start the hull right after the longest gap
        gaps = np.flatnonzero(~present)
        if gaps.size == 0:
            lo, hi = 0, grid.n_theta
        else:
            runs = np.split(gaps, np.flatnonzero(np.diff(gaps) != 1) + 1)
            if runs[0][0] == 0 and runs[-1][-1] == grid.n_theta - 1 and len(runs) > 1:
                runs = [np.concatenate([runs[-1], runs[0]])] + runs[1:-1]
            longest = max(runs, key=len)
            lo = (longest[-1] + 1) % grid.n_theta
            hi = lo + grid.n_theta - len(longest)
        return (lo * grid.d_theta, hi * grid.d_theta,
                grid.x_min + i_x.min() * grid.d_x, grid.x_min + (i_x.max() + 1) * grid.d_x)


def _marked_cells(grid, marks):
    out = {}
    for name, (theta, x) in marks.items():
        cell = int(grid.cell_of(theta, x))
        if cell >= 0:
            out[name] = cell
    return out


def extract_control_sets(graph, threshold=4, marks=None):
    """Strongly connected components that avoid the sink and have ``>= threshold`` cells.

    The component holding the cell of ``(theta, x) = (0, 0)`` is labeled
    ``D1``, the one holding ``(pi, 0)`` is labeled ``D-1``; the rest are
    labeled ``C0, C1, ...`` in order of their smallest cell.
    """
    marks = MARKED_POINTS if marks is None else marks
    grid = graph.grid
    n_comp, labels = connected_components(graph.adjacency, directed=True, connection="strong")
    sizes = np.bincount(labels, minlength=n_comp)
    sink_label = labels[graph.sink]
    order = np.argsort(labels[:grid.n_cells], kind="stable")
    sorted_labels = labels[:grid.n_cells][order]
    bounds = np.flatnonzero(np.diff(sorted_labels)) + 1
    groups = np.split(order, bounds)
    marked = _marked_cells(grid, marks)
    found = []
    for members in groups:
        k = labels[members[0]]
        if k == sink_label or sizes[k] < threshold:
            continue
        if sizes[k] == 1 and not graph.has_edge(members[0], members[0]):
            continue
        cells = np.sort(members)
        names = [name for name, cell in marked.items() if labels[cell] == k]
        found.append(ControlSetApprox(cells, "", names))
    found.sort(key=lambda cs: int(cs.cells[0]))
    counter = 0
    for cs in found:
        if "(e1,0)" in cs.contains:
            cs.label = "D1"
        elif "(-e1,0)" in cs.contains:
            cs.label = "D-1"
        else:
            cs.label = f"C{counter}"
            counter += 1
    return found


def cell_distance(grid, a, b):
    """Chebyshev distance in cell units with the angle wrapped."""
    ta, xa = grid.unravel(a)
    tb, xb = grid.unravel(b)
    dt = np.abs(ta - tb) % grid.n_theta
    dt = np.minimum(dt, grid.n_theta - dt)
    return np.maximum(dt, np.abs(xa - xb))


def hausdorff_cells(grid, a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.size == 0 or b.size == 0:
        return 0 if a.size == b.size else np.inf
    D = cell_distance(grid, a[:, None], b[None, :])
    return int(max(D.min(axis=1).max(), D.min(axis=0).max()))


def symmetry_check(A, B, grid):
    """Hausdorff distance in cells between ``f_{-1}(A)`` and ``B``."""
    return hausdorff_cells(grid, grid.mirror(A.cells), B.cells)


def boundary_cells(D, grid):
    """Cells of ``D`` with at least one of their eight neighbours outside ``D``."""
    members = set(int(c) for c in D.cells)
    i_theta, i_x = grid.unravel(D.cells)
    out = []
    for cell, it, ix in zip(D.cells, i_theta, i_x):
        for dt in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dt == dx == 0:
                    continue
                j = ix + dx
                if j < 0 or j >= grid.n_x:
                    out.append(int(cell))
                    break
                if int(grid.index((it + dt) % grid.n_theta, j)) not in members:
                    out.append(int(cell))
                    break
            else:
                continue
            break
    return out


@dataclass(frozen=True)
class EscapeWitness:
    """A point of ``D`` that some constant control carries to a cell outside ``D``."""

    start: CylinderPoint
    control: float
    time: float
    end: CylinderPoint
    end_cell: int


@dataclass(frozen=True)
class ProbeResult:
    witness: EscapeWitness | None
    sink_escapes: int


def invariance_probe(sys, D, grid, controls=None, times=(0.25, 0.5, 1.0), trials=8,
                     pts_per_cell=5, seed=0):
    """Look for a trajectory leaving ``D`` from one of its boundary cells.

    Sample points are the stencil points of each boundary cell plus
    ``trials`` uniformly random points per cell (seeded).  The first escape
    into a grid cell outside ``D`` is returned as the witness; escapes out of
    the window are only counted.
    """
    require_induced_system(sys)
    controls = default_controls(sys.rho) if controls is None else list(controls)
    rng = np.random.default_rng(seed)
    offsets = list(stencil(pts_per_cell)) if pts_per_cell else []
    offsets += [tuple(r) for r in rng.random((trials, 2))]
    border = np.array(boundary_cells(D, grid), dtype=np.int64)
    if border.size == 0 or not offsets:
        return ProbeResult(None, 0)
    member = np.zeros(grid.n_cells, dtype=bool)
    member[D.cells] = True
    vx, vy, xs = grid.sample_vectors(border, offsets)
    sink_escapes = 0
    for t in times:
        for c in controls:
            spec = SpectralData.from_matrix(sys.generator(c))
            nvx, nvy, nx = flow_vectors(t, vx, vy, xs, spec)
            dst = grid.cell_of_vector(nvx, nvy, nx)
            sink_escapes += int(np.sum(dst < 0))
            escaped = (dst >= 0) & ~member[np.maximum(dst, 0)]
            if escaped.any():
                k, j = np.argwhere(escaped)[0]
                start = CylinderPoint.from_vector((vx[k, j], vy[k, j]), xs[k, j])
                end = CylinderPoint.from_vector((nvx[k, j], nvy[k, j]), nx[k, j])
                return ProbeResult(EscapeWitness(start, float(c), float(t), end, int(dst[k, j])),
                                   sink_escapes)
    return ProbeResult(None, sink_escapes)


class ControlSetEstimator(BaseEstimator):
    """Estimate the control sets of the induced system on the cylinder.

    Parameters
    ----------
    n_theta, n_x : int
        Grid resolution around the circle and along ``x``.
    x_min, x_max : float
        Window in ``x``; leaving it counts as reaching the sink.
    tau : float
        Time step of the cell map.
    controls : sequence of float or None
        Constant control values; ``None`` means ``rho * [-1, -1/2, 0, 1/2, 1]``.
    pts_per_cell : int
        Stencil size per cell.
    interior_threshold : int
        Minimum number of cells for a component to be reported.

    Attributes
    ----------
    grid_ : CellGrid
    graph_ : ReachGraph
    control_sets_ : list of ControlSetApprox
    """

    def __init__(self, n_theta=256, n_x=128, x_min=-3.0, x_max=3.0, tau=0.25,
                 controls=None, pts_per_cell=5, interior_threshold=4):
        self.n_theta = n_theta
        self.n_x = n_x
        self.x_min = x_min
        self.x_max = x_max
        self.tau = tau
        self.controls = controls
        self.pts_per_cell = pts_per_cell
        self.interior_threshold = interior_threshold

    def fit(self, system, y=None):
        self.grid_ = CellGrid(self.n_theta, self.n_x, self.x_min, self.x_max)
        self.graph_ = build_graph(system, self.grid_, self.tau, self.controls, self.pts_per_cell)
        self.control_sets_ = extract_control_sets(self.graph_, self.interior_threshold)
        self.system_ = system
        return self

    @property
    def labels_(self):
        check_is_fitted(self, "control_sets_")
        return [cs.label for cs in self.control_sets_]

    def __getitem__(self, label):
        check_is_fitted(self, "control_sets_")
        for cs in self.control_sets_:
            if cs.label == label:
                return cs
        raise KeyError(label)

    def predict(self, points):
        """Index into ``control_sets_`` of the set containing each ``(theta, x)``; -1 if none."""
        check_is_fitted(self, "control_sets_")
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.ndim != 2 or points.shape[1] != 2:
            raise ValueError("points must have shape (n, 2) with columns theta, x")
        owner = np.full(self.grid_.n_cells, -1, dtype=np.int64)
        for k, cs in enumerate(self.control_sets_):
            owner[cs.cells] = k
        cells = self.grid_.cell_of(points[:, 0], points[:, 1])
        return np.where(cells >= 0, owner[np.maximum(cells, 0)], -1)

    def transform(self, points):
        """Flat cell index of each ``(theta, x)``; -1 outside the window."""
        check_is_fitted(self, "grid_")
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self.grid_.cell_of(points[:, 0], points[:, 1])
