"""The cylinder model ``SL(2)/A = S^1 x R`` and the flows induced on it.

A coset ``gA`` with columns ``g = (v1, v2)`` maps to ``(v1/|v1|, <v1, v2>)``;
the inverse picks the representative ``(v, x v + v*)`` where ``v*`` is ``v``
rotated counter-clockwise by a right angle.  Points are stored as an angle
``theta`` in ``[0, 2 pi)`` and the real coordinate ``x``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lincs.exceptions import RejectedInputError
from lincs.jordan import check_conditions
from lincs.system import solve

TWO_PI = 2.0 * np.pi


def wrap_angle(theta):
    out = np.mod(theta, TWO_PI)
    # np.mod can return 2 pi for tiny negative inputs
    return np.where(out >= TWO_PI, 0.0, out) if np.ndim(out) else (0.0 if out >= TWO_PI else float(out))


@dataclass(frozen=True)
class CylinderPoint:
    theta: float
    x: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))
        object.__setattr__(self, "x", float(self.x))

    @classmethod
    def from_vector(cls, v, x):
        v = np.asarray(v, dtype=float)
        return cls(np.arctan2(v[1], v[0]), x)

    @property
    def v(self):
        return np.array([np.cos(self.theta), np.sin(self.theta)])

    @property
    def v_star(self):
        return np.array([-np.sin(self.theta), np.cos(self.theta)])

    def distance(self, other):
        """Max of wrapped angular distance and ``|dx|``."""
        d = abs(self.theta - other.theta) % TWO_PI
        return max(min(d, TWO_PI - d), abs(self.x - other.x))


def _orient(v):
    v = v / np.linalg.norm(v)
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return v


@dataclass(frozen=True)
class SpectralData:
    """Positive eigenvalue and unit eigenvectors of a hyperbolic 2x2 matrix."""

    lam: float
    v_plus: np.ndarray
    v_minus: np.ndarray

    @classmethod
    def from_matrix(cls, H):
        H = np.asarray(H, dtype=float)
        det = H[0, 0] * H[1, 1] - H[0, 1] * H[1, 0]
        if H.shape != (2, 2) or not det < 0:
            raise RejectedInputError("need a 2x2 traceless matrix with distinct real eigenvalues")
        w, V = np.linalg.eig(H)
        w = w.real
        V = V.real
        i_plus = int(np.argmax(w))
        return cls(float(w[i_plus]), _orient(V[:, i_plus]), _orient(V[:, 1 - i_plus]))

    @property
    def basis(self):
        return np.column_stack([self.v_plus, self.v_minus])


def project(g):
    """Map a group element (or a stack of them) to ``(theta, x)``."""
    g = np.asarray(g, dtype=float)
    v1 = g[..., :, 0]
    v2 = g[..., :, 1]
    theta = wrap_angle(np.arctan2(v1[..., 1], v1[..., 0]))
    x = np.sum(v1 * v2, axis=-1)
    if g.ndim == 2:
        return CylinderPoint(float(theta), float(x))
    return theta, x


def lift(p):
    """Representative ``(v, x v + v*)`` of the coset of ``p``; it has det 1."""
    v = p.v
    return np.column_stack([v, p.x * v + p.v_star])


def induced_vf(Xa, p):
    """Vector field on the cylinder induced by the right-invariant field of ``Xa``.

    Returns ``(dv, dx)``: ``dv = Xv - <Xv, v> v`` is tangent to the circle at
    ``v`` and ``dx = <Xv, xv + v*> + <v, X(xv + v*)>``.
    """
    Xa = np.asarray(Xa, dtype=float)
    v = p.v
    w = p.x * v + p.v_star
    Xv = Xa @ v
    dv = Xv - np.dot(Xv, v) * v
    dx = float(np.dot(Xv, w) + np.dot(v, Xa @ w))
    return dv, dx


def induced_vf_angle(Xa, theta, x):
    """``(dtheta/dt, dx/dt)`` of :func:`induced_vf`, vectorized over arrays."""
    c, s = np.cos(theta), np.sin(theta)
    (a, b), (cc, d) = np.asarray(Xa, dtype=float)
    Xv0 = a * c + b * s
    Xv1 = cc * c + d * s
    dtheta = -s * Xv0 + c * Xv1
    w0 = x * c - s
    w1 = x * s + c
    Xw0 = a * w0 + b * w1
    Xw1 = cc * w0 + d * w1
    dx = Xv0 * w0 + Xv1 * w1 + c * Xw0 + s * Xw1
    return dtheta, dx


def flow_closed_arrays(t, theta, x, spec):
    """Closed-form flow of the field induced by ``H`` (vectorized).

    With ``v = a v+ + b v-`` and ``v* = a' v+ + b' v-`` in the eigenbasis of
    ``H`` the solution is ``exp(tH) v / |exp(tH) v|`` on the circle and

        x(t) = a (a x + a') e^{2 lam t} + k (2abx + ab' + a'b) + b (b x + b') e^{-2 lam t}

    with ``k = <v+, v->``.  When the eigenbasis is orthonormal ``k = 0`` and
    this is ``cos^2 e^{2 lam t}(x - tan) + sin^2 e^{-2 lam t}(x + cot)``.
    """
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    Pinv = np.linalg.inv(spec.basis)
    a = Pinv[0, 0] * c + Pinv[0, 1] * s
    b = Pinv[1, 0] * c + Pinv[1, 1] * s
    ap = -Pinv[0, 0] * s + Pinv[0, 1] * c
    bp = -Pinv[1, 0] * s + Pinv[1, 1] * c
    k = float(np.dot(spec.v_plus, spec.v_minus))
    grow = np.exp(spec.lam * t)
    shrink = np.exp(-spec.lam * t)
    wa = a * grow
    wb = b * shrink
    vx = wa * spec.v_plus[0] + wb * spec.v_minus[0]
    vy = wa * spec.v_plus[1] + wb * spec.v_minus[1]
    new_theta = wrap_angle(np.arctan2(vy, vx))
    new_x = (a * (a * x + ap) * grow * grow
             + k * (2 * a * b * x + a * bp + ap * b)
             + b * (b * x + bp) * shrink * shrink)
    return new_theta, new_x


def induced_flow_closed(t, p, spec):
    """Closed-form flow of the drift-free field ``f_H`` from ``p`` for time ``t``."""
    theta, x = flow_closed_arrays(t, p.theta, p.x, spec)
    return CylinderPoint(float(theta), float(x))


def eigen_angle(v, spec):
    """Angle of ``v`` measured from ``v+`` in the inner product making the eigenbasis orthonormal.

    The frame ``(v+, v-)`` is taken positively oriented, flipping ``v-`` if needed.
    """
    basis = spec.basis
    if np.linalg.det(basis) < 0:
        basis = basis * np.array([1.0, -1.0])
    a, b = np.linalg.solve(basis, np.asarray(v, dtype=float))
    return float(np.arctan2(b, a))


def phi2_display(t, p, spec, singular_tol=1e-8):
    """Second component in the ``tan``/``cot`` form, exact for symmetric ``H``.

    Near angles where ``tan`` or ``cot`` blows up the analytic limit is used
    instead: ``cos^2 (x - tan) -> -cos sin`` and ``sin^2 (x + cot) -> sin cos``
    as ``cos -> 0`` or ``sin -> 0`` respectively.
    """
    th = eigen_angle(p.v, spec)
    c, s = np.cos(th), np.sin(th)
    grow = np.exp(2 * spec.lam * t)
    shrink = np.exp(-2 * spec.lam * t)
    if abs(c) < singular_tol:
        first = c * c * p.x - c * s
    else:
        first = c * c * (p.x - np.tan(th))
    if abs(s) < singular_tol:
        second = s * s * p.x + s * c
    else:
        second = s * s * (p.x + 1.0 / np.tan(th))
    return float(first * grow + second * shrink)


def require_induced_system(sys):
    """Reject systems whose projection to the cylinder is not well defined."""
    if sys.n != 2 or sys.m != 1:
        raise RejectedInputError("the cylinder projection needs an sl(2) system with one control")
    report = check_conditions(sys.drift, sys.controls[0], sys.rho)
    if not report.ok:
        raise RejectedInputError("; ".join(report.failures()))
    return report


def induced_flow(sys, t, p, u, check=True):
    """Flow of the control system induced on the cylinder.

    ``u`` is truncated (or padded with zero control) to total time ``t``.
    """
    if check:
        require_induced_system(sys)
    return project(solve(sys, lift(p), u.restricted(t, sys.m)))


def f_minus1(p):
    """The component-swap map ``(v, x) -> (-v, x)``."""
    return CylinderPoint(p.theta + np.pi, p.x)
