"""Real Jordan decomposition of a drift generator and the ad(H) root-space split."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

from lincs.algebra import TOL, ad_matrix, adrank_check, coordinates, from_coordinates
from lincs.exceptions import NumericalError, RejectedInputError


@dataclass(frozen=True)
class JordanParts:
    """Commuting elliptic, hyperbolic and nilpotent parts of a real matrix."""

    elliptic: np.ndarray
    hyperbolic: np.ndarray
    nilpotent: np.ndarray

    @property
    def semisimple(self):
        return self.elliptic + self.hyperbolic

    def residuals(self, X):
        """Max-norm residuals of reassembly and of the pairwise commutators."""
        E, H, N = self.elliptic, self.hyperbolic, self.nilpotent

        def comm(A, B):
            return float(np.abs(A @ B - B @ A).max())

        return {
            "reassembly": float(np.abs(E + H + N - np.asarray(X)).max()),
            "[E,H]": comm(E, H),
            "[E,N]": comm(E, N),
            "[H,N]": comm(H, N),
        }

    def spectrum_checks(self, tol=1e-9):
        """Spectral class of each part: real, imaginary, nilpotent."""
        n = self.hyperbolic.shape[0]
        eig_h = np.linalg.eigvals(self.hyperbolic)
        eig_e = np.linalg.eigvals(self.elliptic)
        return {
            "hyperbolic_real": bool(np.abs(eig_h.imag).max() <= tol),
            "elliptic_imaginary": bool(np.abs(eig_e.real).max() <= tol),
            "nilpotent": bool(np.abs(np.linalg.matrix_power(self.nilpotent, n)).max() <= tol),
        }


def _cluster(values, tol):
    """Group complex eigenvalues into clusters and return the cluster means."""
    remaining = sorted(values, key=lambda z: (z.real, z.imag))
    means = []
    while remaining:
        seed = remaining.pop(0)
        members = [seed]
        rest = []
        for z in remaining:
            if abs(z - seed) <= tol:
                members.append(z)
            else:
                rest.append(z)
        remaining = rest
        means.append(np.mean(members))
    return means


def _semisimple_part(X, cluster_tol, max_iter=50):
    # Newton iteration S <- S - p(S) p'(S)^{-1} on the square-free part of the
    # characteristic polynomial.  Cluster means of a Jordan block's computed
    # eigenvalues are accurate to O(eps) since they sum to a trace.
    n = X.shape[0]
    roots = _cluster(np.linalg.eigvals(X), cluster_tol)
    poly = np.real_if_close(np.poly(roots), tol=1e6).real
    dpoly = np.polyder(poly)
    eye = np.eye(n)

    def polyval_matrix(coeffs, A):
        out = np.zeros_like(A)
        for c in coeffs:
            out = out @ A + c * eye
        return out

    scale = max(1.0, float(np.abs(X).max()))
    S = X.copy()
    for _ in range(max_iter):
        step = np.linalg.solve(polyval_matrix(dpoly, S).T, polyval_matrix(poly, S).T).T
        S = S - step
        if np.abs(step).max() <= 1e-15 * scale:
            break
    residual = float(np.abs(polyval_matrix(poly, S)).max()) / scale ** len(roots)
    if residual > 1e-8:
        raise NumericalError("semisimple-nilpotent split did not converge", residual)
    return S


def jordan_decompose(X, cluster_tol=1e-6):
    """Split ``X = E + H + N`` into commuting elliptic, hyperbolic, nilpotent parts.

    Parameters
    ----------
    X : array_like, shape (n, n)
        Real square matrix.
    cluster_tol : float
        Eigenvalues closer than ``cluster_tol * max(1, |X|)`` are treated as
        one (possibly defective) eigenvalue.

    Returns
    -------
    JordanParts
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise RejectedInputError(f"expected a square matrix, got shape {X.shape}")
    scale = max(1.0, float(np.abs(X).max()))
    S = _semisimple_part(X, cluster_tol * scale)
    N = X - S
    lam, V = np.linalg.eig(S)
    Vinv = np.linalg.inv(V)
    H = (V * lam.real) @ Vinv
    E = (V * (1j * lam.imag)) @ Vinv
    H = H.real
    E = E.real
    # kill round-off below the structural tolerance
    for part in (H, E, N):
        part[np.abs(part) < 1e-15 * scale] = 0.0
    return JordanParts(elliptic=E, hyperbolic=H, nilpotent=N)


@dataclass(frozen=True)
class EigenspaceSplit:
    """Bases of the positive, zero and negative generalized eigenspaces of ad(H)."""

    positive: list = field(default_factory=list)
    zero: list = field(default_factory=list)
    negative: list = field(default_factory=list)
    positive_tags: list = field(default_factory=list)
    zero_tags: list = field(default_factory=list)
    negative_tags: list = field(default_factory=list)
    defective: bool = False

    @property
    def dims(self):
        return len(self.positive), len(self.zero), len(self.negative)

    def parabolic(self):
        """Basis of ``p_H``: the zero space followed by the positive space."""
        return list(self.zero) + list(self.positive)


def _invariant_basis(A, select, tol):
    T, Q, sdim = schur(A, output="real", sort=select)
    if sdim == 0:
        return [], [], False
    Qs = Q[:, :sdim]
    block = Qs.T @ A @ Qs
    w = np.linalg.eigvals(block)
    if np.abs(w.imag).max() <= tol:
        # eigenvectors per cluster of equal eigenvalues, from null spaces
        out, tags = [], []
        for lam in _cluster(list(w.real.astype(complex)), tol):
            lam = float(lam.real)
            mult = int(np.sum(np.abs(w.real - lam) <= tol))
            _, s, Vh = np.linalg.svd(block - lam * np.eye(sdim))
            null = Vh[sdim - mult:]
            if np.any(s[sdim - mult:] > 1e-9 * max(1.0, s[0])):
                break
            for v in (Qs @ null.T).T:
                v = v / np.linalg.norm(v)
                if v[np.argmax(np.abs(v))] < 0:
                    v = -v
                out.append(v)
                tags.append(lam)
        else:
            return out, tags, False
    # defective block: keep the orthonormal Schur basis, tag with its diagonal
    return list(Qs.T), [float(x) for x in np.diag(T)[:sdim]], True


def eigenspace_split(H, zero_tol=None):
    """Classify sl(n) into ad(H)-eigenspaces by the sign of the eigenvalue.

    ``H`` must have real spectrum.  Eigenvalues with ``|alpha| < zero_tol``
    count as zero.  When ad(H) is diagonalizable each returned basis vector
    is an eigenvector and its tag the eigenvalue.
    """
    zero_tol = TOL.eigen_zero if zero_tol is None else zero_tol
    H = np.asarray(H, dtype=float)
    if np.abs(np.linalg.eigvals(H).imag).max(initial=0.0) > 1e-9:
        raise RejectedInputError("H must have real spectrum")
    A = ad_matrix(H)
    if np.abs(np.linalg.eigvals(A).imag).max(initial=0.0) > 1e-9:
        raise RejectedInputError("ad(H) has non-real spectrum")
    n = H.shape[0]

    pos, pos_t, d1 = _invariant_basis(A, lambda re, im=0.0: re > zero_tol, zero_tol)
    zer, zer_t, d2 = _invariant_basis(A, lambda re, im=0.0: abs(re) <= zero_tol, zero_tol)
    neg, neg_t, d3 = _invariant_basis(A, lambda re, im=0.0: re < -zero_tol, zero_tol)

    def to_mats(vs):
        return [from_coordinates(v, n) for v in vs]

    return EigenspaceSplit(
        positive=to_mats(pos),
        zero=to_mats(zer),
        negative=to_mats(neg),
        positive_tags=pos_t,
        zero_tags=zer_t,
        negative_tags=neg_t,
        defective=d1 or d2 or d3,
    )


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the three structural conditions on ``(H, X, rho)``."""

    h_nonzero_diagonal: bool
    max_det: float
    hyperbolic_for_all_u: bool
    adrank: int
    spans: bool

    @property
    def ok(self):
        return self.h_nonzero_diagonal and self.hyperbolic_for_all_u and self.spans

    def failures(self):
        out = []
        if not self.h_nonzero_diagonal:
            out.append("condition 1: H is not a nonzero diagonal matrix")
        if not self.hyperbolic_for_all_u:
            out.append(f"condition 2: max det(H + uX) = {self.max_det:.6g} is not negative")
        if not self.spans:
            out.append(f"condition 3: ad-rank is {self.adrank}, need 3")
        return out


def det_quadratic(H, X):
    """Coefficients ``(a0, a1, a2)`` with ``det(H + uX) = a0 + a1 u + a2 u^2``."""
    H = np.asarray(H, dtype=float)
    X = np.asarray(X, dtype=float)
    a0 = H[0, 0] * H[1, 1] - H[0, 1] * H[1, 0]
    a2 = X[0, 0] * X[1, 1] - X[0, 1] * X[1, 0]
    a1 = H[0, 0] * X[1, 1] + H[1, 1] * X[0, 0] - H[0, 1] * X[1, 0] - H[1, 0] * X[0, 1]
    return a0, a1, a2


def max_det_on_interval(H, X, rho):
    a0, a1, a2 = det_quadratic(H, X)
    candidates = [-rho, rho]
    if a2 < 0:
        vertex = -a1 / (2 * a2)
        if -rho < vertex < rho:
            candidates.append(vertex)
    return max(a0 + a1 * u + a2 * u * u for u in candidates)


def check_conditions(H, X, rho):
    """Check the structural conditions of the SL(2) example system.

    1. ``H`` is a nonzero diagonal matrix;
    2. ``H + uX`` has two distinct real eigenvalues for every ``|u| <= rho``,
       i.e. ``det(H + uX) < 0`` on the interval;
    3. ``{X, [H, X], [H, [H, X]]}`` spans sl(2).
    """
    H = np.asarray(H, dtype=float)
    X = np.asarray(X, dtype=float)
    if H.shape != (2, 2) or X.shape != (2, 2):
        raise RejectedInputError("check_conditions is defined for sl(2)")
    cond1 = bool(H[0, 1] == 0 and H[1, 0] == 0 and np.any(H != 0))
    max_det = float(max_det_on_interval(H, X, rho))
    rank = adrank_check(H, X)
    return ConditionReport(
        h_nonzero_diagonal=cond1,
        max_det=max_det,
        hyperbolic_for_all_u=max_det < 0,
        adrank=rank,
        spans=rank == 3,
    )


__all__ = [
    "JordanParts",
    "EigenspaceSplit",
    "ConditionReport",
    "jordan_decompose",
    "eigenspace_split",
    "check_conditions",
    "det_quadratic",
    "max_det_on_interval",
    "coordinates",
]
