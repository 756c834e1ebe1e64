"""Training overhead and net multiplexing gain of pilot-aided systems.

System I trains ``M* = min(M, K, floor(Tc G / 2))`` antennas; system II may
train more antennas than it serves users to collect the eigen-beamforming
power gain. The TDD helpers count degrees of freedom when downlink
per-user pilots must be orthogonal.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .capacity_bounds import LOG2E, CapacityResult, kappa
from .exceptions import DomainError, ValidationError
from .grouping import SystemParams
from .numerics import EULER_GAMMA, Interval, harmonic

__all__ = [
    "PilotSystemResult", "TddConfig", "TddTable", "optimal_antennas",
    "figure1_dataset", "system1_rate_ratio", "system2_objective",
    "system2_optimize", "figure2_dataset", "figure3_dataset",
    "figure5_dataset", "multiclass_prelog", "tdd_dof", "tdd_optimal_users",
    "tdd_limits",
]


@dataclass(frozen=True)
class PilotSystemResult:
    """Antenna choice and pre-log factor of a pilot-aided system.

    Attributes
    ----------
    m_star : int
        Streams (and, in system I, trained antennas).
    prelog : float
        Net multiplexing gain ``M* (1 - M*/(Tc G))``.
    m_p2_star : int or None
        Antennas trained by system II.
    f_curve : tuple of (int, float)
        System II objective over the scanned antenna counts.
    regime : str
    degenerate : bool
        True when system II was requested with ``M <= K`` and fell back to
        system I.
    ratio : CapacityResult or None
        Per-user high-SNR ratio of system II at ``m_p2_star``.
    """

    m_star: int
    prelog: float
    m_p2_star: int = None
    f_curve: tuple = ()
    regime: str = ""
    degenerate: bool = False
    ratio: CapacityResult = None
    prelog_exact: Fraction = field(default=None, repr=False, compare=False)


def _posint(v, name):
    if isinstance(v, bool) or int(v) != v or v < 1:
        raise DomainError(f"{name} must be a positive integer, got {v!r}")
    return int(v)


def _prelog(m, denom):
    return m * (1 - Fraction(m, denom))


def optimal_antennas(M, K, Tc, G=1, correlated=True):
    """Number of antennas to train and the resulting pre-log factor.

    The pre-log is computed in exact rational arithmetic; ``prelog_exact``
    keeps the :class:`~fractions.Fraction`.
    """
    M, K, Tc, G = (_posint(M, "M"), _posint(K, "K"), _posint(Tc, "Tc"),
                   _posint(G, "G"))
    if not correlated:
        if G != 1:
            raise DomainError("the i.i.d. system has G = 1")
    budget = Tc * G
    m = min(M, K, budget // 2)
    exact = _prelog(m, budget)
    return PilotSystemResult(m, float(exact),
                             regime="correlated" if correlated else "iid",
                             prelog_exact=exact)


def figure1_dataset(tc_list=(32, 100), g_list=(1, 4, 8), minmk_grid=range(1, 201)):
    """Pre-log factor versus ``min(M, K)`` for each ``(Tc, G)`` pair.

    Rows carry keys ``min_mk, tc, g, prelog``.
    """
    rows = []
    for tc in tc_list:
        for g in g_list:
            for n in minmk_grid:
                res = optimal_antennas(n, n, tc, g, correlated=g > 1)
                rows.append(dict(min_mk=int(n), tc=int(tc), g=int(g),
                                 prelog=res.prelog))
    return rows


def system1_rate_ratio(params: SystemParams, regime, P=None, lambda_min=None,
                       zeta=None):
    """Per-stream high-SNR rate of pilot-aided system I.

    Parameters
    ----------
    params : SystemParams
        ``M, K, G, Tc`` and, unless overridden, ``P``.
    regime : {"large_G", "large_r"}
        ``large_G`` keeps ``r_p1 = M*/G`` fixed while ``G`` grows and needs
        ``zeta`` (eigenvalue spread bound, ``>= 1``); ``large_r`` keeps
        ``G`` fixed and needs ``lambda_min``.
    P : float, optional
    lambda_min, zeta : float, optional

    Returns
    -------
    CapacityResult
        Per-dimension ratio (bits per stream) with value and bracket scaled
        by the training loss ``1 - nu``, ``nu = M*/(Tc G)``.
    """
    P = params.P if P is None else float(P)
    if P <= 0:
        raise DomainError("P must be positive")
    G, K, Tc = params.G, params.K, params.Tc
    m_star = optimal_antennas(params.M, K, Tc, G).m_star
    nu = m_star / (Tc * G)
    if nu > 1:
        raise DomainError("training overhead exceeds the coherence time")
    mu = params.mu
    mu_p1 = m_star / K
    if regime == "large_G":
        if zeta is None or zeta < 1:
            raise DomainError("large_G regime needs zeta >= 1")
        if m_star % G:
            raise DomainError(f"G={G} must divide M*={m_star}")
        r_p1 = m_star // G
        kp = params.Kp
        if mu < 1:
            if kp < r_p1:
                raise DomainError("need K' >= r_p1 when mu < 1")
            value = math.log2(P / r_p1) + kappa(kp, r_p1, 1) / r_p1
            br = Interval(min(math.log2(mu / zeta), 0.0), 0.0)
            res = CapacityResult(value, br, "r_lt_Kp", True)
        else:
            value = (math.log2(P / r_p1)
                     + (-EULER_GAMMA + harmonic(kp) - 1.0) * LOG2E)
            br = Interval(-math.log2(zeta), math.log2(mu))
            res = CapacityResult(value, br, "r_ge_Kp", True)
        return res.scaled(1.0 - nu)
    if regime == "large_r":
        if lambda_min is None or lambda_min <= 0:
            raise DomainError("large_r regime needs lambda_min > 0")
        if mu_p1 > 1:
            raise DomainError("mu_p1 > 1 cannot occur in system I")
        value = math.log2(P / (math.e * mu_p1))
        if mu_p1 < 1:
            value += (1 - mu_p1) / mu_p1 * -math.log2(1 - mu_p1)
        br = Interval(min(math.log2(mu_p1 * lambda_min / G), 0.0), 0.0)
        return CapacityResult(value, br, "large_system_mu_lt_1",
                              True).scaled(1.0 - nu)
    raise DomainError(f"unknown regime {regime!r}")


def _stream_rate(q_over_k, P):
    # bracket-top per-user rate when q antennas serve k users
    x = np.asarray(q_over_k, dtype=float)
    out = np.empty_like(x)
    hi = x >= 1
    xh = x[hi]
    tail = np.zeros_like(xh)
    above = xh > 1
    tail[above] = (xh[above] - 1) * np.log2(xh[above] / (xh[above] - 1))
    out[hi] = np.log2(P / math.e * xh) + tail + np.log2(xh)
    xl = x[~hi]
    out[~hi] = np.log2(P / (math.e * xl)) + (1 - xl) / xl * -np.log2(1 - xl)
    return out


def system2_objective(q, M_star, K, Tc, G, P):
    """System II objective ``f(Q) = M* (Tc - ceil(Q/G)) rho(Q/K)``.

    For ``Q >= K``, ``rho(x) = log2(xP/e) + (x-1) log2(x/(x-1)) + log2 x``,
    the per-user ratio at the top of its constant bracket, with the middle
    term equal to its limit 0 at ``Q = K``. For ``Q < K`` (possible only
    when ``M* < K``) the per-antenna ratio ``log2(P/(e x)) +
    ((1-x)/x) log2(1/(1-x))`` is used; both branches give ``log2(P/e)`` at
    ``Q = K``.
    """
    q = np.atleast_1d(np.asarray(q, dtype=np.int64))
    train = -(-q // G)
    return M_star * (Tc - train) * _stream_rate(q / K, P)


def system2_optimize(M, K, Tc, G, P, lambda_min=None):
    """Antenna count maximizing the system II objective.

    Scans every integer ``Q`` in ``[M*, M]``; ties go to the smallest
    ``Q``. ``lambda_min`` (default ``G``, the flat-spectrum value) only
    enters the bracket of the returned per-user ratio.
    """
    M, K, Tc, G = (_posint(M, "M"), _posint(K, "K"), _posint(Tc, "Tc"),
                   _posint(G, "G"))
    if P <= 0:
        raise DomainError("P must be positive")
    base = optimal_antennas(M, K, Tc, G)
    m_star = base.m_star
    if M <= K:
        return PilotSystemResult(m_star, base.prelog, m_p2_star=m_star,
                                 regime="system_I", degenerate=True,
                                 prelog_exact=base.prelog_exact)
    q = np.arange(m_star, M + 1)
    f = system2_objective(q, m_star, K, Tc, G, P)
    best = int(np.argmax(f))
    m_p2 = int(q[best])
    mu_p2 = m_p2 / K
    nu_p2 = m_p2 / (Tc * G)
    lam = G if lambda_min is None else lambda_min
    value = math.log2(mu_p2 * P / math.e)
    if mu_p2 > 1:
        value += (mu_p2 - 1) * math.log2(mu_p2 / (mu_p2 - 1))
    ratio = None
    if mu_p2 >= 1:
        br = Interval(min(math.log2(lam / G), math.log2(mu_p2)),
                      math.log2(mu_p2))
        ratio = CapacityResult(value, br, "large_system_mu_ge_1",
                               True).scaled(max(1.0 - nu_p2, 0.0))
    curve = tuple((int(a), float(b)) for a, b in zip(q, f))
    return PilotSystemResult(m_star, base.prelog, m_p2_star=m_p2,
                             f_curve=curve, regime="system_II", ratio=ratio,
                             prelog_exact=base.prelog_exact)


def figure2_dataset(P=30.0, Tc=50, r_p1=10, mu_list=(0.5, 1.0, 2.0),
                    minmk_grid=range(10, 201, 10)):
    """Large-``G`` system I sum-rate upper bounds versus ``min(M, K)``.

    ``r_p1`` is held fixed so ``G = min(M, K) / r_p1``; each row reports
    ``min(M, K)`` times the per-stream ratio at the top of its bracket.
    """
    rows = []
    for mu in mu_list:
        for n in minmk_grid:
            if n % r_p1:
                continue
            G = n // r_p1
            if mu < 1:
                M, K = n, int(round(n / mu))
            else:
                M, K = int(round(n * mu)), n
            params = SystemParams(M=M, K=K, G=G, Tc=Tc, P=P)
            res = system1_rate_ratio(params, "large_G", zeta=1.0)
            rows.append(dict(min_mk=int(n), mu=float(mu),
                             rate_bits=n * res.upper))
    return rows


def figure3_dataset(M=200, K=40, Tc=64, G=10, P=30.0):
    """Rows ``q, f_q, is_optimal`` of the system II objective."""
    res = system2_optimize(M, K, Tc, G, P)
    return [dict(q=q, f_q=fq, is_optimal=int(q == res.m_p2_star))
            for q, fq in res.f_curve], res


def figure5_dataset(mu=2, G=10, P=30.0, tc_list=(32, 128), k_grid=None):
    """System I and II sum-rate upper bounds versus ``min(M, K) = K``.

    ``M = mu K``. The default grid holds multiples of ``G`` up to
    ``min(Tc) G / 2`` so that ``M* = K`` for every ``Tc``. Rates are
    ``f(Q)/Tc`` with ``Q = M*`` for system I and ``Q = M_p2*`` for system II.
    """
    if k_grid is None:
        kmax = min(tc_list) * G // 2
        k_grid = range(G, kmax + 1, G)
    rows = []
    for tc in tc_list:
        for K in k_grid:
            M = int(round(mu * K))
            res = system2_optimize(M, K, tc, G, P)
            f1 = float(system2_objective(res.m_star, res.m_star, K, tc, G, P)[0])
            f2 = float(system2_objective(res.m_p2_star, res.m_star, K, tc, G,
                                         P)[0])
            rows.append(dict(min_mk=int(min(M, K)), tc=int(tc), system="I",
                             rate_bits=f1 / tc))
            rows.append(dict(min_mk=int(min(M, K)), tc=int(tc), system="II",
                             rate_bits=f2 / tc))
    return rows


def multiclass_prelog(M, K, Tc, G, T):
    """Pre-log factor when ``T`` classes need separate training resources."""
    M, K, Tc, G, T = (_posint(M, "M"), _posint(K, "K"), _posint(Tc, "Tc"),
                      _posint(G, "G"), _posint(T, "T"))
    if Tc * G < 2 * T:
        return 0.0
    m = min(M, K, (Tc * G) // (2 * T))
    return float(m * (1 - Fraction(m * T, Tc * G)))


@dataclass(frozen=True)
class TddConfig:
    """TDD overhead parameters.

    ``N1`` and ``N2`` are the frequency smoothness intervals (in symbols) of
    the common and downlink per-user pilots, ``N_LLN`` the antenna count
    beyond which per-user pilots can share one resource, ``alpha = M/K``.
    """

    alpha: float
    Tc: int
    N1: int
    N2: int
    N_LLN: float

    def __post_init__(self):
        if not self.alpha >= 1:
            raise ValidationError("alpha must be >= 1")
        for name in ("Tc", "N1", "N2"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ValidationError(f"{name} must be a positive integer")
        if not self.N1 > self.N2:
            raise ValidationError("need N1 > N2")
        if not self.N_LLN > 0:
            raise ValidationError("N_LLN must be positive")


def tdd_dof(q, cfg: TddConfig, lln=False):
    """Degrees of freedom for ``q`` scheduled users, exact rational."""
    q = Fraction(q)
    if lln:
        return q * (cfg.Tc - q / cfg.N1 - 1)
    return q * (cfg.Tc - q / cfg.N1 - q / cfg.N2)


def _vertex(cfg, lln):
    if lln:
        return Fraction(cfg.Tc - 1) * cfg.N1 / 2
    return Fraction(cfg.Tc * cfg.N1 * cfg.N2, 2 * (cfg.N1 + cfg.N2))


def tdd_optimal_users(K, cfg: TddConfig, lln=False):
    """Integer number of scheduled users maximizing :func:`tdd_dof` on ``[1, K]``.

    The objective is a concave parabola, so the best integer is the one
    nearest its real vertex (the smaller one on a tie), clipped to
    ``[1, K]``.
    """
    K = _posint(K, "K")
    v = _vertex(cfg, lln)
    lo = math.floor(v)
    q = lo + 1 if v - lo > Fraction(1, 2) else lo
    return min(max(q, 1), K)


@dataclass(frozen=True)
class TddTable:
    """Per-``K`` regime and degrees of freedom plus the regime breakpoints.

    ``ordered`` is False when the breakpoints are not strictly increasing,
    in which case the three-regime picture does not apply as drawn.
    """

    rows: tuple
    breakpoints: dict
    ordered: bool


def tdd_limits(k_grid, cfg: TddConfig):
    """Regime and optimal degrees of freedom of a TDD system with ``M = alpha K``."""
    rows = []
    for K in k_grid:
        lln = cfg.alpha * K >= cfg.N_LLN
        q = tdd_optimal_users(K, cfg, lln)
        rows.append(dict(k=int(K), regime="lln" if lln else "orthogonal_pilots",
                         q=int(q), dof=float(tdd_dof(q, cfg, lln))))
    bp = dict(saturation=float(_vertex(cfg, False)),
              lln_entry=float(Fraction(cfg.N_LLN) / Fraction(cfg.alpha)),
              lln_ceiling=float(_vertex(cfg, True)))
    ordered = bp["saturation"] < bp["lln_entry"] < bp["lln_ceiling"]
    return TddTable(tuple(rows), bp, ordered)
