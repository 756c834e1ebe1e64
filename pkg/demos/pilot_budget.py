"""
Training budget and the number of antennas to use
=================================================

With a coherence block of Tc symbols, training every antenna costs
channel uses. Grouping users by eigenspace lets G groups share pilots,
which raises the saturation point of the multiplexing gain from Tc/4 to
Tc G/4. When M exceeds K, training more than K antennas can still pay off
through the beamforming power gain.
"""

from tcdiv.pilot_systems import (TddConfig, optimal_antennas,
                                 system2_optimize, tdd_limits)

for tc in (32, 100):
    for g in (1, 4, 8):
        best = max(optimal_antennas(n, n, tc, g, correlated=g > 1).prelog
                   for n in range(1, 2 * tc * g))
        print(f"Tc={tc:3d} G={g}: pre-log saturates at {best:g}")

res = system2_optimize(M=200, K=40, Tc=64, G=10, P=30.0)
print(f"\nM=200, K=40, Tc=64, G=10, P=30: train {res.m_p2_star} antennas "
      f"instead of M*={res.m_star}")

cfg = TddConfig(alpha=10, Tc=40, N1=12, N2=4, N_LLN=600)
tab = tdd_limits(range(20, 101, 20), cfg)
print("\nTDD breakpoints:", tab.breakpoints, "ordered" if tab.ordered else "not ordered")
for row in tab.rows:
    print(f"  K={row['k']:3d} {row['regime']:18s} users={row['q']:3d} dof={row['dof']:.1f}")
