import math

import numpy as np
import pytest

from tcdiv.covariance import EigenStructure, OneRingGeometry
from tcdiv.exceptions import (DomainError, InfeasibleStructureError,
                              ValidationError)
from tcdiv.grouping import (IDEAL_UNITARY, ONE_RING_APPROXIMATE, TALL_UNITARY,
                            GroupedSystem, SystemParams,
                            build_unitary_structure, dft_matrix,
                            diversity_degrees, effective_channels,
                            one_ring_groups, orthogonality_defect,
                            sample_group_channels)


def test_dft_is_unitary():
    f = dft_matrix(16)
    assert np.max(np.abs(f.conj().T @ f - np.eye(16))) < 1e-12


def test_square_structure_m4_g2():
    gs = build_unitary_structure(4, [[2.0, 2.0], [2.0, 2.0]])
    assert gs.structure_kind == IDEAL_UNITARY
    assert [g.basis.shape for g in gs.groups] == [(4, 2), (4, 2)]
    u = gs.stacked_basis()
    assert np.max(np.abs(u @ u.conj().T - np.eye(4))) <= 1e-10
    assert gs.orthonormality_residual() <= 1e-10


def test_flat_spectra_logdet_is_m_ln_g():
    gs = build_unitary_structure(8, [np.full(2, 4.0)] * 4)
    dets = [np.prod(s) for s in gs.spectra]
    assert dets == [16.0] * 4
    total = sum(np.sum(np.log(s)) for s in gs.spectra)
    assert total == pytest.approx(8 * math.log(4))


def test_tall_structure():
    gs = build_unitary_structure(8, [np.full(3, 8 / 3)] * 2, users_per_group=2)
    assert gs.structure_kind == TALL_UNITARY
    u = gs.stacked_basis()
    assert u.shape == (8, 6)
    assert np.max(np.abs(u.conj().T @ u - np.eye(6))) <= 1e-10


def test_infeasible_structure():
    with pytest.raises(InfeasibleStructureError):
        build_unitary_structure(4, [[1.0, 1.0, 1.0]] * 2)


def test_bad_spectra_rejected():
    with pytest.raises(ValidationError):
        build_unitary_structure(4, [[1.0, 2.0]])
    with pytest.raises(ValidationError):
        build_unitary_structure(4, [[1.0, -1.0]])


def test_custom_unitary():
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 6)))
    gs = build_unitary_structure(6, [[2.0, 1.0]] * 3, unitary=q)
    assert np.allclose(gs.stacked_basis(), q)
    assert orthogonality_defect(gs) <= 1e-10


def test_system_params():
    p = SystemParams(M=8, K=16, G=4, Tc=10, P=100.0)
    assert (p.r, p.Kp) == (2, 4)
    assert p.mu == 0.5
    assert p.m_star == 8
    assert p.nu == pytest.approx(8 / 40)
    with pytest.raises(ValidationError):
        SystemParams(M=8, K=6, G=4)
    with pytest.raises(ValidationError):
        SystemParams(M=8, K=8, P=0.0)
    with pytest.raises(ValidationError):
        SystemParams(M=0, K=8)


@pytest.mark.parametrize("counts,expected", [([4], 4), ([4, 4], 4), ([3, 4], 3)])
def test_diversity_degrees(counts, expected):
    assert diversity_degrees(counts) == expected


def test_diversity_degrees_errors():
    with pytest.raises(DomainError):
        diversity_degrees([])
    with pytest.raises(DomainError):
        diversity_degrees([0, 2])


def test_defect_ideal_is_zero():
    assert orthogonality_defect(build_unitary_structure(8, [np.full(2, 4.0)] * 4)) <= 1e-10


def test_defect_identical_groups_is_one():
    es = EigenStructure(dft_matrix(4)[:, :2], np.array([2.0, 2.0]))
    gs = GroupedSystem((es, es), 1, ONE_RING_APPROXIMATE)
    assert orthogonality_defect(gs) == pytest.approx(1.0, abs=1e-12)


def test_defect_single_group_is_zero():
    gs = build_unitary_structure(4, [[4.0]])
    assert orthogonality_defect(gs) == 0.0


def test_defect_one_ring_shrinks_with_m():
    def defect(m):
        geoms = [OneRingGeometry.from_degrees(45, 5, 0.5, m),
                 OneRingGeometry.from_degrees(-45, 5, 0.5, m)]
        # keep the eigenvectors that carry energy; the numerically null
        # tail spans the whole space and would swamp the measure
        return orthogonality_defect(one_ring_groups(geoms, 1, truncation=1e-3))

    d32, d128 = defect(32), defect(128)
    assert 0.0 < d32 < 0.5
    assert 0.0 < d128 < d32


def test_effective_channels_norm_and_cross_projection():
    gs = build_unitary_structure(8, [np.array([3.0, 1.0])] * 4, users_per_group=3)
    raw = sample_group_channels(gs, np.random.default_rng(2))
    eff = effective_channels(gs, raw)
    for g, (h, he) in enumerate(zip(raw, eff)):
        assert he.shape == (2, 3)
        assert np.linalg.norm(h) == pytest.approx(np.linalg.norm(he), rel=1e-12)
        for k, other in enumerate(gs.groups):
            if k != g:
                assert np.max(np.abs(other.basis.conj().T @ h)) < 1e-12


def test_effective_channel_second_moment():
    lam = np.array([3.0, 1.0])
    gs = build_unitary_structure(4, [lam, lam], users_per_group=100000)
    raw = sample_group_channels(gs, np.random.default_rng(4))
    he = effective_channels(gs, raw)[0]
    emp = he @ he.conj().T / he.shape[1]
    assert np.linalg.norm(emp - np.diag(lam)) <= 0.02 * np.linalg.norm(lam)


def test_effective_channels_dimension_errors():
    gs = build_unitary_structure(4, [[2.0, 2.0]] * 2)
    with pytest.raises(ValidationError):
        effective_channels(gs, [np.zeros((4, 1))])
    with pytest.raises(ValidationError):
        effective_channels(gs, [np.zeros((3, 1)), np.zeros((3, 1))])


def test_json_roundtrip_dft():
    gs = build_unitary_structure(8, [np.array([3.0, 1.0])] * 2, users_per_group=5)
    back = GroupedSystem.from_json(gs.to_json())
    assert back.structure_kind == gs.structure_kind
    assert back.users_per_group == 5
    assert np.array_equal(back.stacked_basis(), gs.stacked_basis())
    assert all(np.array_equal(a, b) for a, b in zip(back.spectra, gs.spectra))


def test_json_roundtrip_one_ring():
    geoms = [OneRingGeometry.from_degrees(30, 5, 0.5, 16),
             OneRingGeometry.from_degrees(-30, 5, 0.5, 16)]
    gs = one_ring_groups(geoms, 2, truncation=1e-3)
    back = GroupedSystem.from_json(gs.to_json())
    assert back.ranks == gs.ranks
    assert np.array_equal(back.stacked_basis(), gs.stacked_basis())
