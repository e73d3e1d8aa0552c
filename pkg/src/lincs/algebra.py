"""Small-matrix Lie algebra operations on sl(n), with closed forms for n = 2.

Algebra elements are traceless real ``(n, n)`` arrays and group elements are
real ``(n, n)`` arrays with unit determinant.  Both are passed around as plain
numpy arrays; :func:`check_algebra_element` and :func:`check_group_element`
validate them and return read-only copies.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from lincs.exceptions import RejectedInputError

H0 = np.array([[1.0, 0.0], [0.0, -1.0]])
E12 = np.array([[0.0, 1.0], [0.0, 0.0]])
E21 = np.array([[0.0, 0.0], [1.0, 0.0]])
# H = diag(1, -1) and X from the worked SL(2) example.
X0 = np.array([[1.0, 1.0], [0.5, -1.0]])


@dataclass
class Tolerances:
    """Numerical thresholds shared across the package."""

    structural: float = 1e-12
    group: float = 1e-9
    exp_series: float = 1e-12
    eigen_zero: float = 1e-8
    angle_singular: float = 1e-8

    def update(self, values):
        for key, value in values.items():
            if not hasattr(self, key):
                raise KeyError(f"unknown tolerance {key!r}")
            if value <= 0:
                raise ValueError(f"tolerance {key!r} must be positive")
            setattr(self, key, float(value))


TOL = Tolerances()


@dataclass(frozen=True)
class ControlRange:
    """The control box ``[-rho, rho]^m``."""

    rho: float
    m: int = 1

    def __post_init__(self):
        if not self.rho > 0:
            raise RejectedInputError("rho must be positive")
        if self.m < 1:
            raise RejectedInputError("need at least one control channel")

    def contains(self, c, atol=1e-12):
        c = np.atleast_1d(np.asarray(c, dtype=float))
        return c.shape == (self.m,) and bool(np.all(np.abs(c) <= self.rho + atol))


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def check_algebra_element(X, tol=None):
    """Validate a traceless square matrix and return a read-only float copy."""
    tol = TOL.structural if tol is None else tol
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise RejectedInputError(f"expected a square matrix, got shape {X.shape}")
    if X.shape[0] < 2:
        raise RejectedInputError("dimension must be at least 2")
    if not np.all(np.isfinite(X)):
        raise RejectedInputError("matrix has non-finite entries")
    if abs(np.trace(X)) > tol:
        raise RejectedInputError(f"matrix not traceless (trace = {np.trace(X):.3g})")
    return _frozen(X)


def check_group_element(g, rtol=None):
    """Validate a unit-determinant square matrix and return a read-only copy."""
    rtol = TOL.group if rtol is None else rtol
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise RejectedInputError(f"expected a square matrix, got shape {g.shape}")
    det = np.linalg.det(g)
    if abs(det - 1.0) > rtol * max(1.0, np.abs(g).max() ** g.shape[0]):
        raise RejectedInputError(f"determinant {det!r} is not 1")
    return _frozen(g)


def _same_dim(X, Y):
    if X.shape != Y.shape:
        raise RejectedInputError(f"dimension mismatch: {X.shape} vs {Y.shape}")


def bracket(X, Y):
    """Matrix commutator ``XY - YX``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    _same_dim(X, Y)
    return X @ Y - Y @ X


@lru_cache(maxsize=None)
def _basis(n):
    basis = []
    for i in range(n):
        for j in range(n):
            if i != j:
                E = np.zeros((n, n))
                E[i, j] = 1.0
                basis.append(E)
            elif i < n - 1:
                Hi = np.zeros((n, n))
                Hi[i, i] = 1.0
                Hi[i + 1, i + 1] = -1.0
                basis.append(Hi)
    return tuple(_frozen(B) for B in basis)


def sl_basis(n=2):
    """Ordered basis of sl(n).

    Row-major elementary matrices, with the diagonal slot ``(i, i)`` holding
    ``E_ii - E_{i+1,i+1}`` and the last diagonal slot dropped.  For ``n = 2``
    this is ``[H0, E12, E21]``.
    """
    return list(_basis(n))


def coordinates(X):
    """Coordinates of a traceless matrix in :func:`sl_basis`."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    diag_coeffs = np.cumsum(np.diag(X))
    out = []
    for i in range(n):
        for j in range(n):
            if i != j:
                out.append(X[i, j])
            elif i < n - 1:
                out.append(diag_coeffs[i])
    return np.array(out)


def from_coordinates(coords, n=2):
    coords = np.asarray(coords, dtype=float)
    return np.tensordot(coords, np.array(_basis(n)), axes=1)


def ad_matrix(X):
    """Matrix of ``ad(X)`` acting on sl(n) in the :func:`sl_basis` order."""
    X = np.asarray(X, dtype=float)
    basis = _basis(X.shape[0])
    return np.column_stack([coordinates(bracket(X, B)) for B in basis])


def killing_form(X, Y):
    """Cartan-Killing form ``tr(ad(X) ad(Y))``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    _same_dim(X, Y)
    return float(np.trace(ad_matrix(X) @ ad_matrix(Y)))


def cartan_involution(X):
    """The Cartan involution ``X -> -X^T`` of sl(n)."""
    return -np.asarray(X, dtype=float).T


def cartan_inner(X, Y):
    """Positive definite form ``B(X, Y) = -C(X, zeta(Y))``."""
    return -killing_form(X, cartan_involution(Y))


def _exp_sl2(X, t):
    det = X[0, 0] * X[1, 1] - X[0, 1] * X[1, 0]
    mu2 = -det * t * t
    if abs(det) < TOL.exp_series:
        # removable singularity of sinh(mu)/mu; X^2 = -det I
        c = 1.0 + mu2 / 2.0
        s = t * (1.0 + mu2 / 6.0)
    elif det < 0:
        mu = np.sqrt(-det)
        c = np.cosh(t * mu)
        s = np.sinh(t * mu) / mu
    else:
        w = np.sqrt(det)
        c = np.cos(t * w)
        s = np.sin(t * w) / w
    return c * np.eye(2) + s * X


def group_exp(X, t=1.0):
    """``exp(tX)``; closed form for 2x2, scaling-and-squaring otherwise."""
    X = np.asarray(X, dtype=float)
    if X.shape == (2, 2):
        return _exp_sl2(X, float(t))
    return expm(t * X)


def adrank_check(H, X, rtol=1e-10):
    """Rank of ``{X, [H, X], [H, [H, X]]}`` in sl(2); 3 means they span."""
    H = np.asarray(H, dtype=float)
    X = np.asarray(X, dtype=float)
    if H.shape != (2, 2) or X.shape != (2, 2):
        raise RejectedInputError("adrank_check is defined for sl(2)")
    HX = bracket(H, X)
    vectors = np.array([coordinates(X), coordinates(HX), coordinates(bracket(H, HX))])
    sv = np.linalg.svd(vectors, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))
