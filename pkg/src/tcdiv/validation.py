"""Quick self-checks of the library's structural invariants.

Used by the ``validate`` command; each check returns ``(name, passed,
detail)`` and is cheap enough to run in a few seconds.
"""

import math

import numpy as np

from . import capacity_bounds as cb
from . import pilot_systems as ps
from .grouping import SystemParams, build_unitary_structure, orthogonality_defect
from .montecarlo import dual_mac_objective, dual_mac_sum_capacity, trial_rng
from .covariance import complex_normal
from .numerics import wishart_expected_logdet

__all__ = ["run_invariants"]


def _kappa_linear(rng):
    worst = 0.0
    for x in range(1, 30):
        for y in range(1, x + 1):
            for G in (2, 3, 7):
                worst = max(worst, abs(cb.kappa(x, y, G) - G * cb.kappa(x, y, 1)))
    return worst == 0.0, f"max deviation {worst:.2e}"


def _iid_consistency(rng):
    worst = 0.0
    for M in range(1, 13):
        for K in range(1, M + 1):
            a = cb.highsnr_sum_capacity(SystemParams(M, K, 1), [np.ones(M)], 1e3)
            b = cb.iid_baseline(M, K, 1e3)
            worst = max(worst, abs(a.value_bits - b.value_bits))
    return worst <= 1e-9, f"max deviation {worst:.2e}"


def _mu_continuity(rng):
    d = 0.0
    for P in (10.0, 1e3):
        lo = cb.large_system_ratio(1 - 1e-6, P, iid=True).value_bits
        hi = cb.large_system_ratio(1 + 1e-6, P, iid=True).value_bits
        d = max(d, abs(hi - lo))
    return d <= 1e-9, f"jump {d:.2e}"


def _flat_beamforming(rng):
    worst = 0.0
    for G in (1, 2, 4, 8):
        for r in (1, 2, 3):
            for kp in (1, 2, 3, 5):
                total = sum(np.sum(np.log2(np.full(r, float(G))[:min(r, kp)]))
                            for _ in range(G))
                worst = max(worst, abs(total - min(r * G, kp * G) * math.log2(G)))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def _prelog_order(rng):
    ok = True
    for tc in (1, 2, 7, 32, 100, 256):
        for n in (1, 5, 50, 200):
            iid = ps.optimal_antennas(n, n, tc, 1, False).prelog_exact
            prev = None
            for G in range(1, 17):
                cur = ps.optimal_antennas(n, n, tc, G).prelog_exact
                ok &= cur >= iid and (prev is None or cur >= prev)
                prev = cur
    return ok, "monotone in G, dominates i.i.d."


def _multiclass(rng):
    bad = 0
    for _ in range(1000):
        M, K, tc, G = (int(v) for v in rng.integers(1, 257, size=4))
        if ps.multiclass_prelog(M, K, tc, G, 1) != ps.optimal_antennas(M, K, tc, G).prelog:
            bad += 1
    return bad == 0, f"{bad} mismatches"


def _tdd(rng):
    bad = 0
    for _ in range(300):
        n2 = int(rng.integers(1, 20))
        cfg = ps.TddConfig(alpha=float(rng.integers(1, 20)),
                           Tc=int(rng.integers(2, 200)),
                           N1=n2 + int(rng.integers(1, 20)), N2=n2,
                           N_LLN=float(rng.integers(1, 1000)))
        K = int(rng.integers(1, 400))
        for lln in (False, True):
            q = ps.tdd_optimal_users(K, cfg, lln)
            best = max(ps.tdd_dof(x, cfg, lln) for x in range(1, K + 1))
            bad += ps.tdd_dof(q, cfg, lln) != best
    return bad == 0, f"{bad} mismatches"


def _system2(rng):
    bad = 0
    for _ in range(50):
        K = int(rng.integers(1, 200))
        M = int(rng.integers(K + 1, 513))
        tc, G = int(rng.integers(1, 257)), int(rng.integers(1, 17))
        P = float(10 ** rng.uniform(0, 4))
        res = ps.system2_optimize(M, K, tc, G, P)
        q = np.arange(res.m_star, M + 1)
        f = ps.system2_objective(q, res.m_star, K, tc, G, P)
        fbest = ps.system2_objective(res.m_p2_star, res.m_star, K, tc, G, P)[0]
        bad += bool(np.any(f > fbest)) or not res.m_star <= res.m_p2_star <= M
    return bad == 0, f"{bad} violations"


def _structure(rng):
    gs = build_unitary_structure(8, [np.full(2, 4.0)] * 4)
    tall = build_unitary_structure(8, [np.full(3, 8 / 3)] * 2)
    res = max(gs.orthonormality_residual(), tall.orthonormality_residual())
    d = max(orthogonality_defect(gs), orthogonality_defect(tall))
    return res <= 1e-10 and d <= 1e-10, f"residual {res:.1e}, defect {d:.1e}"


def _mac_grid(rng):
    h = complex_normal(rng, (2, 2))
    P = 10.0
    res = dual_mac_sum_capacity(h, P, track=True)
    grid = np.linspace(0, P, 10001)
    best = max(dual_mac_objective(h, np.array([a, P - a])) for a in grid)
    ascent = bool(np.all(np.diff(res.history) >= -1e-12))
    dev = abs(res.capacity_bits - best)
    return dev <= 1e-4 and ascent, f"grid deviation {dev:.1e}"


def _wishart(rng):
    worst = 0.0
    for m, n in ((2, 2), (2, 4)):
        w = complex_normal(rng, (4000, m, n))
        v = np.linalg.slogdet(w @ np.conj(np.swapaxes(w, 1, 2)))[1]
        z = abs(v.mean() - wishart_expected_logdet(m, n)) / (v.std(ddof=1) / math.sqrt(v.size))
        worst = max(worst, z)
    return worst <= 4.0, f"max z-score {worst:.2f}"


def _vandermonde(rng):
    bad = 0
    for _ in range(50):
        r = int(rng.integers(1, 7))
        kp = int(rng.integers(1, r + 1))
        lam = np.sort(rng.uniform(0.2, 3.0, size=r))[::-1]
        if r > 1 and np.min(-np.diff(lam)) < 1e-3:
            continue
        lam *= r / lam.sum()
        ref = cb.highsnr_sum_capacity(SystemParams(r, kp, 1), [lam], 1e3)
        v = cb.vandermonde_highsnr(1e3, lam, kp)
        bad += not (ref.lower - 1e-9 <= v <= ref.upper + 1e-9)
    return bad == 0, f"{bad} outside bracket"


CHECKS = (
    ("kappa_g_linear", _kappa_linear),
    ("highsnr_matches_iid_baseline", _iid_consistency),
    ("large_system_continuity_mu_1", _mu_continuity),
    ("flat_spectrum_beamforming_gain", _flat_beamforming),
    ("prelog_monotone_and_dominant", _prelog_order),
    ("multiclass_t1_consistency", _multiclass),
    ("tdd_closed_form_vs_brute_force", _tdd),
    ("system2_argmax_certificate", _system2),
    ("unitary_structure_orthonormal", _structure),
    ("dual_mac_grid_oracle", _mac_grid),
    ("wishart_logdet_monte_carlo", _wishart),
    ("vandermonde_within_bracket", _vandermonde),
)


def run_invariants(seed=0):
    """Run every check with its own seeded stream; returns a list of tuples."""
    out = []
    for idx, (name, fn) in enumerate(CHECKS):
        rng = trial_rng(seed, 99, idx)
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # report, do not abort the suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
