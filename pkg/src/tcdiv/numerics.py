"""Special functions and log-determinant inequalities.

Everything here works in natural logarithms (nats). Conversion to bits is
left to the capacity-facing modules.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .exceptions import AccuracyError, DomainError, UnsupportedSizeError

__all__ = [
    "EULER_GAMMA", "Interval", "digamma_int", "digamma_asymptotic",
    "harmonic", "harmonic_approx", "wishart_expected_logdet",
    "wishart_logdet_asymptotic", "digamma_mean_identity",
    "fiedler_det_bounds", "bai_trln_bounds", "gauss_legendre",
]

EULER_GAMMA = 0.57721566490153286


@dataclass(frozen=True)
class Interval:
    """Closed real interval ``[lo, hi]``."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    def __contains__(self, x):
        return self.lo <= x <= self.hi

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mid(self):
        return 0.5 * (self.lo + self.hi)

    def contains(self, x, rtol=0.0, atol=0.0):
        slack = atol + rtol * max(abs(self.lo), abs(self.hi))
        return self.lo - slack <= x <= self.hi + slack

    def shift(self, c):
        return Interval(self.lo + c, self.hi + c)

    def scale(self, c):
        a, b = self.lo * c, self.hi * c
        return Interval(min(a, b), max(a, b))


def _check_positive_int(n, name="n"):
    if isinstance(n, bool) or int(n) != n:
        raise DomainError(f"{name} must be an integer, got {n!r}")
    if n < 1:
        raise DomainError(f"{name} must be >= 1, got {n}")
    return int(n)


def harmonic(n):
    """Exact harmonic number ``H_n`` by direct summation (``H_0 = 0``)."""
    if n < 0:
        raise DomainError(f"harmonic number undefined for n={n}")
    if n == 0:
        return 0.0
    # numpy's pairwise summation keeps the rounding error at O(eps log n)
    return float(np.sum(1.0 / np.arange(n, 0, -1, dtype=float)))


def digamma_int(n):
    """Digamma function at a positive integer, ``-gamma + H_{n-1}``."""
    n = _check_positive_int(n)
    return -EULER_GAMMA + harmonic(n - 1)


def digamma_asymptotic(k):
    """Large-argument surrogate ``psi(k) ~ ln k`` (error is O(1/k))."""
    k = _check_positive_int(k, "k")
    return math.log(k)


def harmonic_approx(n):
    """Asymptotic expansion of ``H_n`` truncated after the ``n**-4`` term.

    The neglected remainder is O(n**-6).
    """
    n = _check_positive_int(n)
    return (EULER_GAMMA + math.log(n) + 1.0 / (2 * n) - 1.0 / (12 * n**2)
            + 1.0 / (120 * n**4))


def wishart_expected_logdet(m, n):
    """``E[ln det(W W^H)]`` for an ``m x n`` matrix ``W`` of i.i.d. CN(0, 1).

    Parameters
    ----------
    m, n : int
        Matrix dimensions with ``n >= m >= 1``.
    """
    m = _check_positive_int(m, "m")
    n = _check_positive_int(n, "n")
    if n < m:
        raise DomainError(f"singular Wishart matrix: n={n} < m={m}")
    return sum(digamma_int(n - ell) for ell in range(m))


def wishart_logdet_asymptotic(m, eta):
    """Per-dimension large-``m`` approximation of ``E[ln det(W W^H)] / m``.

    Returns ``(eta - 1) ln(eta / (eta - 1)) + ln(eta m) - 1`` where
    ``eta = n / m``; the first term is taken as its limit 0 at ``eta = 1``.
    """
    m = _check_positive_int(m, "m")
    if eta < 1:
        raise DomainError(f"eta must be >= 1, got {eta}")
    first = 0.0 if eta == 1 else (eta - 1) * math.log(eta / (eta - 1))
    return first + math.log(eta * m) - 1.0


def digamma_mean_identity(k):
    """``(1/k) sum_{l=1}^{k} psi(l)``; equals ``psi(k + 1) - 1``."""
    k = _check_positive_int(k, "k")
    # running sums: psi(l) = -gamma + H_{l-1}
    inv = 1.0 / np.arange(1, k, dtype=float)
    h = np.concatenate(([0.0], np.cumsum(inv)))
    return math.fsum(h) / k - EULER_GAMMA


def fiedler_det_bounds(eig_a, eig_b):
    """Bounds on ``det(A + B)`` for Hermitian ``A``, ``B`` with given spectra.

    Parameters
    ----------
    eig_a, eig_b : sequence of float
        Eigenvalues of ``A`` and ``B`` (any order; sorted internally).

    Returns
    -------
    Interval
        ``[min_pi prod(a_i + b_pi(i)), max_pi prod(a_i + b_pi(i))]``.

    Notes
    -----
    When ``a_n + b_n >= 0`` the extremes are attained by the same-order and
    reversed-order pairings. Otherwise every permutation is enumerated,
    which is restricted to ``n <= 8``.
    """
    a = np.sort(np.asarray(eig_a, dtype=float))[::-1]
    b = np.sort(np.asarray(eig_b, dtype=float))[::-1]
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError("spectra must be 1-D and of equal length")
    n = a.size
    if n == 0:
        return Interval(1.0, 1.0)
    if a[-1] + b[-1] >= 0:
        same = float(np.prod(a + b))
        rev = float(np.prod(a + b[::-1]))
        return Interval(min(same, rev), max(same, rev))
    if n > 8:
        raise UnsupportedSizeError(
            f"permutation enumeration limited to n <= 8, got n={n}")
    prods = [float(np.prod(a + b[list(p)]))
             for p in itertools.permutations(range(n))]
    return Interval(min(prods), max(prods))


def _quadrature_bound(lam, xi1, xi2, n):
    t = (lam * xi1 - xi2) / (lam * n - xi1)
    mat = np.array([[lam, t], [lam**2, t**2]])
    weights = np.linalg.solve(mat, [xi1, xi2])
    return float(weights[0] * math.log(lam) + weights[1] * math.log(t))


def bai_trln_bounds(xi1, xi2, lambda_min, lambda_max, n):
    """Bounds on ``tr(ln A)`` from ``tr A``, ``tr A^2`` and the extreme eigenvalues.

    Parameters
    ----------
    xi1 : float
        ``tr(A)``.
    xi2 : float
        ``tr(A^2)``.
    lambda_min, lambda_max : float
        Smallest and largest eigenvalue of the SPD matrix ``A``.
    n : int
        Dimension of ``A``.

    Returns
    -------
    Interval
        Bracket on ``tr(ln A)`` in nats. When the spectrum is flat (the
        two-node Gauss-Radau rules degenerate) the exact point
        ``n ln(xi1 / n)`` is returned.
    """
    n = _check_positive_int(n)
    if not 0 < lambda_min <= lambda_max:
        raise DomainError("need 0 < lambda_min <= lambda_max")
    if xi1 <= 0:
        raise DomainError("xi1 must be positive")
    if xi2 < xi1**2 / n * (1 - 1e-12):
        raise DomainError("xi2 violates tr(A^2) >= tr(A)^2 / n")
    scale = max(abs(xi1), 1.0)
    flat = (abs(lambda_min * n - xi1) <= 1e-12 * scale
            or abs(lambda_max * n - xi1) <= 1e-12 * scale)
    if flat:
        v = n * math.log(xi1 / n)
        return Interval(v, v)
    lo = _quadrature_bound(lambda_min, xi1, xi2, n)
    hi = _quadrature_bound(lambda_max, xi1, xi2, n)
    return Interval(min(lo, hi), max(lo, hi))


_GL_CACHE = {}


def _gl_nodes(order):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def gauss_legendre(f: Callable, a: float, b: float, tol: float = 1e-10,
                   order: int = 20, max_depth: int = 14):
    """Adaptive composite Gauss-Legendre quadrature by panel doubling.

    The interval is split into 1, 2, 4, ... equal panels, each integrated
    with an ``order``-point rule, until two successive estimates agree to
    within ``tol`` relative to the largest magnitude of the estimate.

    Parameters
    ----------
    f : callable
        Vectorized integrand. Called with a 1-D array of abscissae and must
        return an array whose first axis matches it; trailing axes (and
        complex values) are integrated element-wise.
    a, b : float
        Integration limits, ``a < b``.
    tol : float
        Relative tolerance.
    order : int
        Nodes per panel.
    max_depth : int
        Maximum number of doublings (``2**max_depth`` panels).

    Returns
    -------
    float, complex or ndarray
        The integral estimate.

    Raises
    ------
    AccuracyError
        If the tolerance is not met after ``max_depth`` doublings. The best
        estimate is attached as ``err.estimate``.
    """
    if not a < b:
        raise DomainError(f"need a < b, got [{a}, {b}]")
    if tol <= 0:
        raise DomainError("tol must be positive")
    x, w = _gl_nodes(order)

    def composite(panels):
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        vals = np.asarray(f(nodes))
        return np.tensordot(weights, vals, axes=(0, 0))

    prev = composite(1)
    for depth in range(1, max_depth + 1):
        cur = composite(2**depth)
        err = np.max(np.abs(cur - prev))
        scale = np.max(np.abs(cur))
        if err <= tol * scale or err <= 1e-300:
            return cur[()] if np.ndim(cur) == 0 else cur
        prev = cur
    raise AccuracyError(
        f"quadrature did not reach tol={tol} after {max_depth} doublings "
        f"(last change {err:.3e})", estimate=cur)
