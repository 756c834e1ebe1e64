"""Closed-form asymptotic sum-capacity expressions for grouped MIMO broadcast
channels.

All values are in bits per channel use. Each result carries the admissible
range of its unknown additive constant as an :class:`~tcdiv.numerics.Interval`;
``value_bits`` is the expression with that constant set to zero.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DomainError, ValidationError
from .grouping import SystemParams
from .numerics import EULER_GAMMA, Interval, digamma_int, harmonic

__all__ = [
    "LOG2E", "CapacityResult", "kappa", "highsnr_sum_capacity", "iid_baseline",
    "rate_gap_equal_eigen", "large_system_ratio", "large_K_scaling",
    "expected_logdet_vandermonde", "vandermonde_highsnr",
]

LOG2E = 1.0 / math.log(2.0)

REGIMES = ("r_lt_Kp", "r_ge_Kp", "large_system_mu_lt_1",
           "large_system_mu_ge_1", "large_K", "iid_baseline", "partial_coop")


@dataclass(frozen=True)
class CapacityResult:
    """Asymptotic capacity expression and the bracket on its constant.

    Attributes
    ----------
    value_bits : float
        Expression with the unknown constant set to 0.
    bracket : Interval
        Admissible range of the additive constant, in bits.
    regime : str
        One of ``REGIMES``.
    per_dimension : bool
        True when ``value_bits`` is a ratio per antenna or per user.
    """

    value_bits: float
    bracket: Interval
    regime: str
    per_dimension: bool = False

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")

    @property
    def lower(self):
        return self.value_bits + self.bracket.lo

    @property
    def upper(self):
        return self.value_bits + self.bracket.hi

    def scaled(self, c):
        """Multiply the value and the bracket by ``c >= 0``."""
        return CapacityResult(self.value_bits * c, self.bracket.scale(c),
                              self.regime, self.per_dimension)


def _posint(v, name):
    if isinstance(v, bool) or int(v) != v or v < 1:
        raise DomainError(f"{name} must be a positive integer, got {v!r}")
    return int(v)


def kappa(x, y, G=1):
    """Digamma constant of the high-SNR expansions, in bits.

    ``yG (-gamma + sum_{l=2}^{x} 1/l + ((x-y)/y) sum_{l=x-y+1}^{x} 1/l) log2(e)``,
    which equals ``G sum_{l=0}^{y-1} psi(x - l)`` converted to bits.
    """
    x, y, G = _posint(x, "x"), _posint(y, "y"), _posint(G, "G")
    if x < y:
        raise DomainError(f"kappa needs x >= y, got x={x}, y={y}")
    hx = harmonic(x)
    tail = hx - harmonic(x - y)
    inner = -EULER_GAMMA + (hx - 1.0) + (x - y) / y * tail
    # factor G applied last so that the G-linearity is exact in floating point
    return G * (y * inner * LOG2E)


def _check_spectra(spectra, G):
    spectra = [np.asarray(s, dtype=float) for s in spectra]
    if len(spectra) != G:
        raise ValidationError(f"expected {G} spectra, got {len(spectra)}")
    r = spectra[0].size
    for s in spectra:
        if s.ndim != 1 or s.size != r:
            raise ValidationError("closed forms need equal-rank groups")
        if np.any(s <= 0):
            raise ValidationError("eigenvalues must be positive")
    return [np.sort(s)[::-1] for s in spectra], r


def highsnr_sum_capacity(params: SystemParams, spectra, P=None):
    """High-SNR sum capacity under the (tall) unitary group structure.

    Parameters
    ----------
    params : SystemParams
        Supplies ``K``, ``G`` and ``K' = K/G``.
    spectra : sequence of array_like
        The ``G`` nonzero per-group spectra, each of length ``r``. When
        ``rG < M`` (tall structure) the antenna count ``M`` in the power
        term is replaced by ``rG``.
    P : float, optional
        Linear total SNR; defaults to ``params.P``.

    Returns
    -------
    CapacityResult
        Regime ``r_lt_Kp`` or ``r_ge_Kp``.

    Notes
    -----
    For ``r >= K'`` only ``K`` streams are active, so the power term is
    ``K log2(P/K)``; this is what makes the ``G = 1, Lambda = I`` case agree
    with :func:`iid_baseline` when ``M > K``.
    """
    P = params.P if P is None else float(P)
    if P <= 0:
        raise DomainError("P must be positive")
    G, kp = params.G, params.Kp
    spectra, r = _check_spectra(spectra, G)
    m_eff = r * G
    if m_eff > params.M:
        raise ValidationError(f"total rank {m_eff} exceeds M={params.M}")
    if r < kp:
        value = (m_eff * math.log2(P / m_eff)
                 + sum(float(np.sum(np.log2(s))) for s in spectra)
                 + kappa(kp, r, G))
        lo = -m_eff * math.log2(kp / r)
        return CapacityResult(value, Interval(lo, 0.0), "r_lt_Kp")
    value = (params.K * math.log2(P / params.K)
             + sum(float(np.sum(np.log2(s[:kp]))) for s in spectra)
             + kappa(r, kp, G))
    lo = sum(float(np.sum(np.log2(s[::-1][:kp] / s[:kp]))) for s in spectra)
    return CapacityResult(value, Interval(min(lo, 0.0), 0.0), "r_ge_Kp")


def iid_baseline(M, K, P):
    """High-SNR sum capacity of the i.i.d. Rayleigh broadcast channel, ``M >= K``.

    Returns ``K log2(P/K) + kappa(M, K, 1)`` with an empty bracket.
    """
    M, K = _posint(M, "M"), _posint(K, "K")
    if M < K:
        raise DomainError(f"iid baseline needs M >= K, got M={M}, K={K}")
    if P <= 0:
        raise DomainError("P must be positive")
    value = K * math.log2(P / K) + kappa(M, K, 1)
    return CapacityResult(value, Interval(0.0, 0.0), "iid_baseline")


def rate_gap_equal_eigen(M, G):
    """Upper bound on the high-SNR gain over i.i.d. fading at ``r = K'``
    with flat spectra: ``((G-1)/2 - (G^2-1)/(12M)) log2(e)`` bits."""
    M, G = _posint(M, "M"), _posint(G, "G")
    if M % G:
        raise DomainError(f"G={G} must divide M={M}")
    return ((G - 1) / 2.0 - (G * G - 1) / (12.0 * M)) * LOG2E


def _xlog_ratio_lt(mu):
    # ((1 - mu)/mu) log2(1/(1 - mu)), limit 0 at mu = 1
    if mu == 1.0:
        return 0.0
    return (1.0 - mu) / mu * -math.log2(1.0 - mu)


def _xlog_ratio_ge(mu):
    # (mu - 1) log2(mu/(mu - 1)), limit 0 at mu = 1
    if mu == 1.0:
        return 0.0
    return (mu - 1.0) * math.log2(mu / (mu - 1.0))


def large_system_ratio(mu, P, lambda_min=None, G=1, iid=False):
    """Per-dimension high-SNR capacity as ``M, K -> inf`` with ``mu = M/K`` fixed.

    For ``mu < 1`` the ratio is per transmit antenna, for ``mu >= 1`` per
    user. Correlated brackets need ``lambda_min`` and ``G``; the i.i.d.
    variants have an empty bracket.
    """
    if not mu > 0:
        raise DomainError(f"mu must be positive, got {mu}")
    if P <= 0:
        raise DomainError("P must be positive")
    if not iid and (lambda_min is None or lambda_min <= 0):
        raise DomainError("correlated ratio needs lambda_min > 0")
    if mu < 1:
        value = math.log2(P / (math.e * mu)) + _xlog_ratio_lt(mu)
        br = (Interval(0.0, 0.0) if iid
              else Interval(min(0.0, math.log2(mu * lambda_min / G)), 0.0))
        return CapacityResult(value, br, "large_system_mu_lt_1", True)
    value = math.log2(mu * P / math.e) + _xlog_ratio_ge(mu)
    br = (Interval(0.0, 0.0) if iid
          else Interval(min(math.log2(lambda_min / G), math.log2(mu)),
                        math.log2(mu)))
    return CapacityResult(value, br, "large_system_mu_ge_1", True)


def large_K_scaling(M, K, P, spectra, mode="no_coop"):
    """Sum capacity for fixed ``M`` and many users, ``r < K'``.

    ``no_coop`` gives ``M log2(P/M) + M log2(log2 K) + sum_g log2|Lambda_g|``;
    ``partial_coop`` replaces the multiuser-diversity term by ``M log2 K'``.
    """
    M, K = _posint(M, "M"), _posint(K, "K")
    if K <= 1:
        raise DomainError("large-K scaling needs K > 1")
    spectra = [np.asarray(s, dtype=float) for s in spectra]
    G = len(spectra)
    if G == 0 or K % G:
        raise DomainError("number of groups must divide K")
    if any(np.any(s <= 0) for s in spectra):
        raise ValidationError("eigenvalues must be positive")
    beam = sum(float(np.sum(np.log2(s))) for s in spectra)
    base = M * math.log2(P / M) + beam
    if mode == "no_coop":
        return CapacityResult(base + M * math.log2(math.log2(K)),
                              Interval(0.0, 0.0), "large_K")
    if mode == "partial_coop":
        return CapacityResult(base + M * math.log2(K // G),
                              Interval(0.0, 0.0), "partial_coop")
    raise DomainError(f"unknown mode {mode!r}")


def expected_logdet_vandermonde(theta, n):
    """``E[ln det(W^H Theta W)]`` for ``W`` ``r x n`` i.i.d. CN(0,1), ``r >= n``.

    Ratio-of-determinants form: with the Vandermonde ``Omega[i, j] =
    theta_i**j`` and ``Omega_k`` equal to ``Omega`` with column ``r-n+k-1``
    (0-based) multiplied by ``psi(k) + ln theta_i``, the expectation is
    ``sum_k det(Omega_k) / det(Omega)``. Requires distinct ``theta``.
    """
    th = np.sort(np.asarray(theta, dtype=float))[::-1]
    r = th.size
    n = _posint(n, "n")
    if r > 12:
        raise DomainError("Vandermonde path limited to r <= 12")
    if n > r:
        raise DomainError(f"need r >= n, got r={r}, n={n}")
    if np.any(th <= 0):
        raise DomainError("eigenvalues must be positive")
    if r > 1 and np.min(-np.diff(th)) < 1e-6 * th[0]:
        raise DomainError("repeated eigenvalues make the Vandermonde singular")
    scale = th[0]
    t = th / scale
    omega = np.vander(t, r, increasing=True)
    sign, base = np.linalg.slogdet(omega)
    total = 0.0
    for k in range(1, n + 1):
        col = r - n + k - 1
        mod = omega.copy()
        mod[:, col] *= digamma_int(k) + np.log(t)
        s2, ld = np.linalg.slogdet(mod)
        total += s2 * sign * math.exp(ld - base) if s2 != 0 else 0.0
    return total + n * math.log(scale)


def vandermonde_highsnr(P, spectra, Kp):
    """High-SNR sum capacity for ``r >= K'`` via exact Wishart-type expectations.

    Independent of :func:`highsnr_sum_capacity`: the value is
    ``K log2(P/K) + log2(e) sum_g E[ln det(W_g^H Lambda_g W_g)]`` with
    ``K = G K'``, each expectation evaluated by
    :func:`expected_logdet_vandermonde`.
    """
    if isinstance(spectra, np.ndarray) and spectra.ndim == 1:
        spectra = [spectra]
    Kp = _posint(Kp, "Kp")
    K = Kp * len(spectra)
    value = K * math.log2(P / K)
    for s in spectra:
        value += LOG2E * expected_logdet_vandermonde(s, Kp)
    return value
