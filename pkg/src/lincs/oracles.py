"""Independent reference computations used to check the closed forms.

Nothing here is used by the production paths; these routines exist so the
verification harness and the tests can compare against a second route.
"""
import numpy as np


def taylor_exp(X, terms=30):
    """Truncated power series of ``exp(X)``."""
    X = np.asarray(X, dtype=float)
    out = np.eye(X.shape[0])
    term = np.eye(X.shape[0])
    for k in range(1, terms):
        term = term @ X / k
        out = out + term
    return out


def rk4(f, y0, t, h=1e-3):
    """Integrate ``y' = f(y)`` from 0 to ``t`` with classical RK4.

    Uses ``ceil(|t| / h)`` equal steps; ``y0`` may be any array shape that
    ``f`` accepts (batches included).
    """
    y = np.array(y0, dtype=float)
    n = int(np.ceil(abs(t) / h))
    if n == 0:
        return y
    dt = t / n
    for _ in range(n):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def rk4_constant_control(drift, generator, g0, t, h=1e-3):
    """RK4 on ``g' = X g - g X + (A - X) g`` where ``A`` is the full generator.

    ``drift`` and ``generator`` may carry a leading batch axis.
    """
    X = np.asarray(drift, dtype=float)
    A = np.asarray(generator, dtype=float)

    def f(g):
        return A @ g - g @ X

    return rk4(f, g0, t, h)


def eigvec_2x2(M, sign=1):
    """Unit eigenvector of a 2x2 matrix with ``det < 0`` for ``sign * sqrt(-det)``.

    Computed from whichever row of ``M - lambda I`` is better conditioned,
    then oriented so its first nonzero coordinate is positive.
    """
    a, b = M[0]
    c, d = M[1]
    lam = sign * np.sqrt(((a - d) / 2) ** 2 + b * c) + (a + d) / 2
    r1 = np.array([-b, a - lam])  # orthogonal to row 1 of M - lam I
    r2 = np.array([d - lam, -c])
    v = r1 if np.linalg.norm(r1) >= np.linalg.norm(r2) else r2
    v = v / np.linalg.norm(v)
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return lam, v
