"""Solutions of linear control systems on SL(n).

The system is ``g' = X g - g X + sum_j u_j Y_j g``: the drift is the linear
vector field whose flow is conjugation ``g -> exp(tX) g exp(-tX)`` and the
control fields are right invariant.  For a constant control ``c`` the
solution has the closed form ``exp(t(X + c.Y)) g exp(-tX)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from lincs.algebra import H0, X0, ControlRange, check_algebra_element, group_exp
from lincs.exceptions import RejectedInputError


@dataclass(frozen=True)
class LinearSystemSpec:
    """Drift generator ``drift``, right-invariant control fields and control box."""

    drift: np.ndarray
    controls: tuple
    range: ControlRange

    def __post_init__(self):
        drift = check_algebra_element(self.drift)
        controls = tuple(check_algebra_element(Y) for Y in self.controls)
        if any(Y.shape != drift.shape for Y in controls):
            raise RejectedInputError("control fields and drift differ in dimension")
        if len(controls) != self.range.m:
            raise RejectedInputError(
                f"{len(controls)} control fields but the control range has m = {self.range.m}"
            )
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "controls", controls)

    @classmethod
    def from_matrices(cls, drift, controls, rho):
        controls = [np.asarray(Y, dtype=float) for Y in controls]
        return cls(drift, tuple(controls), ControlRange(float(rho), len(controls)))

    @classmethod
    def example(cls, rho=0.1):
        """Drift ``H0 = diag(1, -1)``, single control field ``X0``."""
        return cls.from_matrices(H0, [X0], rho)

    @property
    def rho(self):
        return self.range.rho

    @property
    def m(self):
        return self.range.m

    @property
    def n(self):
        return self.drift.shape[0]

    def control_vector(self, c):
        c = np.atleast_1d(np.asarray(c, dtype=float))
        if c.shape != (self.m,):
            raise RejectedInputError(f"control value must have {self.m} entries")
        return c

    def generator(self, c):
        """Right-invariant generator ``X + sum_j c_j Y_j`` for a constant control."""
        c = self.control_vector(c)
        out = np.array(self.drift)
        for cj, Y in zip(c, self.controls):
            out = out + cj * Y
        return out

    def with_rho(self, rho):
        return LinearSystemSpec(self.drift, self.controls, ControlRange(rho, self.m))


@dataclass(frozen=True)
class PiecewiseControl:
    """Finite sequence of constant-control segments ``(duration, value)``."""

    segments: tuple = ()

    def __post_init__(self):
        segs = []
        for tau, c in self.segments:
            tau = float(tau)
            if not tau > 0:
                raise RejectedInputError(f"segment duration must be positive, got {tau}")
            segs.append((tau, tuple(float(x) for x in np.atleast_1d(c))))
        object.__setattr__(self, "segments", tuple(segs))

    @classmethod
    def constant(cls, tau, c):
        return cls(((tau, c),)) if tau > 0 else cls()

    @property
    def duration(self):
        return float(sum(tau for tau, _ in self.segments))

    def __len__(self):
        return len(self.segments)

    def __add__(self, other):
        """Concatenation: ``self`` is applied first, then ``other``."""
        return PiecewiseControl(self.segments + other.segments)

    def reversed(self):
        return PiecewiseControl(tuple(reversed(self.segments)))

    def admissible(self, rho, atol=1e-12):
        return all(abs(x) <= rho + atol for _, c in self.segments for x in c)

    def restricted(self, t, m=1):
        """Truncate to total time ``t``, padding with zero control if shorter."""
        out = []
        remaining = float(t)
        for tau, c in self.segments:
            if remaining <= 0:
                break
            step = min(tau, remaining)
            out.append((step, c))
            remaining -= step
        if remaining > 1e-15:
            out.append((remaining, (0.0,) * m))
        return PiecewiseControl(tuple(out))

    def to_string(self):
        """Serialize as ``tau:c;tau:c;...`` (channels separated by commas)."""
        parts = []
        for tau, c in self.segments:
            values = ",".join(repr(x) for x in c)
            parts.append(f"{tau!r}:{values}")
        return ";".join(parts)

    @classmethod
    def from_string(cls, text):
        text = text.strip()
        if not text:
            return cls()
        segs = []
        for chunk in text.split(";"):
            tau, values = chunk.split(":")
            segs.append((float(tau), [float(v) for v in values.split(",")]))
        return cls(tuple(segs))


def linear_flow(sys, t, g):
    """Flow of the drift: ``exp(tX) g exp(-tX)``."""
    return group_exp(sys.drift, t) @ np.asarray(g, dtype=float) @ group_exp(sys.drift, -t)


def solve_constant(sys, t, g, c, check=True):
    """Solution at time ``t`` from ``g`` under the constant control ``c``."""
    c = sys.control_vector(c)
    if check and np.any(np.abs(c) > sys.rho + 1e-12):
        raise RejectedInputError(f"control value {c} outside [-{sys.rho}, {sys.rho}]")
    return group_exp(sys.generator(c), t) @ np.asarray(g, dtype=float) @ group_exp(sys.drift, -t)


def solve(sys, g, u):
    """Solution from ``g`` under the piecewise constant control ``u``.

    Segments are applied left to right; an empty control returns ``g``.
    """
    out = np.array(g, dtype=float)
    for tau, c in u.segments:
        out = solve_constant(sys, tau, out, c)
    return out


def solve_reversed(sys, g, u):
    """Solution of the time-reversed system ``g' = -(X(g) + u.Y g)``."""
    out = np.array(g, dtype=float)
    for tau, c in u.segments:
        out = solve_constant(sys, -tau, out, c)
    return out


@dataclass
class ReachCloud:
    """Sampled points of a reachable set together with the controls producing them."""

    base: np.ndarray
    horizon: float
    points: list = field(default_factory=list)

    def replay_residual(self, sys):
        if not self.points:
            return 0.0
        return max(float(np.abs(solve(sys, self.base, u) - g).max()) for g, u in self.points)


def _sample_control(rng, sys, horizon, max_segments, fixed_time):
    k = int(rng.integers(1, max_segments + 1))
    total = horizon if fixed_time else horizon * (1.0 - rng.random())
    weights = rng.dirichlet(np.ones(k))
    values = rng.uniform(-sys.rho, sys.rho, size=(k, sys.m))
    segs = [(total * w, v) for w, v in zip(weights, values) if total * w > 0]
    return PiecewiseControl(tuple(segs))


def reachable_cloud(sys, g, horizon, n_points, seed=0, max_segments=8, fixed_time=False,
                    zero_control=False):
    """Sample ``n_points`` of the reachable set from ``g`` up to time ``horizon``.

    Each sample draws its own stream from ``(seed, index)`` so that results do
    not depend on evaluation order.  Controls are piecewise constant with
    1 to ``max_segments`` segments, values uniform in the control box.
    """
    if n_points < 1:
        raise RejectedInputError("n_points must be at least 1")
    g = np.asarray(g, dtype=float)
    cloud = ReachCloud(base=g, horizon=float(horizon))
    for i in range(n_points):
        rng = np.random.default_rng([seed, i])
        if zero_control:
            u = PiecewiseControl.constant(horizon, np.zeros(sys.m))
        else:
            u = _sample_control(rng, sys, horizon, max_segments, fixed_time)
        cloud.points.append((solve(sys, g, u), u))
    return cloud


@dataclass(frozen=True)
class SteerResult:
    success: bool
    control: PiecewiseControl
    distance: float
    evaluations: int


def _params_to_control(durations, values):
    return PiecewiseControl(tuple((d, v) for d, v in zip(durations, values) if d > 0))


def steer(sys, target, budget=20000, seed=0, tol=0.05, max_segments=6, max_time=6.0,
          n_starts=8):
    """Search for a control steering the identity close to ``target``.

    Random shooting spends a quarter of the budget; the best ``n_starts``
    candidates are then refined by coordinate search over segment durations
    and values with step halving.  Success means the sup-norm distance is at
    most ``tol``.  A failure only reports that the search gave up.
    """
    target = np.asarray(target, dtype=float)
    rng = np.random.default_rng(seed)
    eye = np.eye(sys.n)
    evals = 0

    def distance(durations, values):
        nonlocal evals
        evals += 1
        return float(np.abs(solve(sys, eye, _params_to_control(durations, values)) - target).max())

    best_d = float(np.abs(eye - target).max())
    best = (np.zeros(0), np.zeros((0, sys.m)))
    if best_d <= tol:
        return SteerResult(True, PiecewiseControl(), best_d, evals)

    pool = []
    n_shoot = max(1, budget // 4)
    for _ in range(n_shoot):
        k = int(rng.integers(1, max_segments + 1))
        durations = rng.uniform(0.0, max_time / k, size=k)
        bang = rng.choice([-sys.rho, sys.rho], size=(k, sys.m))
        values = np.where(rng.random((k, sys.m)) < 0.5, bang,
                          rng.uniform(-sys.rho, sys.rho, size=(k, sys.m)))
        d = distance(durations, values)
        pool.append((d, durations, values))
        if d < best_d:
            best_d, best = d, (durations, values)
        if best_d <= tol:
            break
    pool.sort(key=lambda item: item[0])

    steps = (0.25, 0.5 * sys.rho)
    for d0, durations, values in pool[:n_starts]:
        if best_d <= tol or evals >= budget:
            break
        durations = durations.copy()
        values = values.copy()
        d_cur = d0
        h = 1.0
        while h > 1e-4 and evals < budget and d_cur > tol:
            improved = False
            for i in range(len(durations)):
                for j in range(-1, sys.m):
                    for sign in (1.0, -1.0):
                        trial_d = durations.copy()
                        trial_v = values.copy()
                        if j < 0:
                            trial_d[i] = max(0.0, trial_d[i] + sign * h * steps[0])
                        else:
                            trial_v[i, j] = np.clip(trial_v[i, j] + sign * h * steps[1],
                                                    -sys.rho, sys.rho)
                        d = distance(trial_d, trial_v)
                        if d < d_cur:
                            d_cur, durations, values, improved = d, trial_d, trial_v, True
            if not improved:
                h /= 2.0
        if d_cur < best_d:
            best_d, best = d_cur, (durations, values)

    control = _params_to_control(*best)
    return SteerResult(best_d <= tol, control, best_d, evals)
