"""User-group eigenspace structures and per-group effective channels."""

import json
import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .covariance import (EigenStructure, OneRingGeometry, eigen_decompose,
                         one_ring_correlation, sample_channel)
from .exceptions import DomainError, InfeasibleStructureError, ValidationError

__all__ = [
    "IDEAL_UNITARY", "TALL_UNITARY", "ONE_RING_APPROXIMATE",
    "GroupedSystem", "SystemParams", "dft_matrix", "build_unitary_structure",
    "one_ring_groups", "diversity_degrees", "orthogonality_defect",
    "effective_channels", "sample_group_channels",
]

IDEAL_UNITARY = "ideal-unitary"
TALL_UNITARY = "tall-unitary"
ONE_RING_APPROXIMATE = "one-ring-approximate"


def dft_matrix(m):
    """Unitary ``m``-point DFT matrix."""
    k = np.arange(m)
    return np.exp(-2j * np.pi * np.outer(k, k) / m) / math.sqrt(m)


@dataclass(frozen=True)
class GroupedSystem:
    """``G`` user groups, each with a common eigen-structure.

    ``generator`` records how the bases were built so that a serialized
    system can be rebuilt without storing the bases.
    """

    groups: tuple
    users_per_group: int
    structure_kind: str
    generator: dict = field(default_factory=dict)

    @property
    def antennas(self):
        return self.groups[0].antennas

    @property
    def num_groups(self):
        return len(self.groups)

    @property
    def ranks(self):
        return [g.effective_rank for g in self.groups]

    @property
    def spectra(self):
        return [g.eigenvalues for g in self.groups]

    def stacked_basis(self):
        return np.hstack([g.basis for g in self.groups])

    def orthonormality_residual(self):
        u = self.stacked_basis()
        return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1]))))

    def to_json(self):
        return json.dumps({
            "structure_kind": self.structure_kind,
            "users_per_group": int(self.users_per_group),
            "antennas": int(self.antennas),
            "generator": self.generator,
            "spectra": [[float(x) for x in s] for s in self.spectra],
        })

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text) if isinstance(text, str) else text
        gen = obj["generator"]
        kind = gen.get("kind")
        if kind == "dft":
            return build_unitary_structure(
                obj["antennas"], [np.array(s) for s in obj["spectra"]],
                users_per_group=obj["users_per_group"])
        if kind == "one-ring":
            geoms = [OneRingGeometry(**g) for g in gen["geometries"]]
            return one_ring_groups(geoms, obj["users_per_group"],
                                   truncation=gen.get("truncation", 1e-8))
        raise ValidationError(f"unknown generator {kind!r}")


@dataclass(frozen=True)
class SystemParams:
    """Symmetric system dimensions: ``r = M/G`` and ``K' = K/G``."""

    M: int
    K: int
    G: int = 1
    Tc: int = 1
    P: float = 1.0

    def __post_init__(self):
        for name in ("M", "K", "G", "Tc"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValidationError(f"{name} must be a positive integer")
        if self.P <= 0:
            raise ValidationError("P must be positive")
        if self.M % self.G or self.K % self.G:
            raise ValidationError("G must divide both M and K")

    @property
    def r(self):
        return self.M // self.G

    @property
    def Kp(self):
        return self.K // self.G

    @property
    def mu(self):
        return self.M / self.K

    @property
    def m_star(self):
        return min(self.M, self.K, (self.Tc * self.G) // 2)

    @property
    def nu(self):
        return self.m_star / (self.Tc * self.G)


def build_unitary_structure(M, spectra, users_per_group=1, unitary=None):
    """Partition a fixed ``M x M`` unitary into ``G`` orthogonal group bases.

    Parameters
    ----------
    M : int
        Number of transmit antennas.
    spectra : sequence of array_like
        Per-group eigenvalues (positive, descending). Group ``g`` receives the
        next ``len(spectra[g])`` columns of the unitary.
    users_per_group : int
    unitary : ndarray, optional
        Common unitary to partition; defaults to the unitary DFT.

    Returns
    -------
    GroupedSystem
        ``ideal-unitary`` when the ranks fill ``M``, ``tall-unitary`` otherwise.
    """
    spectra = [np.asarray(s, dtype=float) for s in spectra]
    widths = [s.size for s in spectra]
    if sum(widths) > M:
        raise InfeasibleStructureError(
            f"total rank {sum(widths)} exceeds M={M}")
    for s in spectra:
        if s.size == 0 or np.any(s <= 0) or np.any(np.diff(s) > 1e-12 * s[0]):
            raise ValidationError("each spectrum must be positive and descending")
    u = dft_matrix(M) if unitary is None else np.asarray(unitary)
    groups, start = [], 0
    for s in spectra:
        groups.append(EigenStructure(u[:, start:start + s.size].copy(), s.copy()))
        start += s.size
    kind = IDEAL_UNITARY if start == M else TALL_UNITARY
    gen = {"kind": "dft"} if unitary is None else {"kind": "custom"}
    return GroupedSystem(tuple(groups), int(users_per_group), kind, gen)


def one_ring_groups(geometries: Sequence[OneRingGeometry], users_per_group,
                    truncation=1e-8):
    """Groups whose common covariance is a one-ring correlation matrix."""
    groups = tuple(eigen_decompose(one_ring_correlation(g), truncation)
                   for g in geometries)
    if len({g.antennas for g in groups}) != 1:
        raise ValidationError("all groups must share the antenna count")
    gen = {"kind": "one-ring", "truncation": truncation,
           "geometries": [dict(theta=g.theta, delta=g.delta, spacing=g.spacing,
                               antennas=g.antennas) for g in geometries]}
    return GroupedSystem(groups, int(users_per_group), ONE_RING_APPROXIMATE, gen)


def diversity_degrees(group_counts):
    """Degrees of transmit correlation diversity: floor of the mean ``G_t``."""
    counts = list(group_counts)
    if not counts:
        raise DomainError("need at least one class")
    if any(int(c) != c or c < 1 for c in counts):
        raise DomainError("group counts must be positive integers")
    return sum(int(c) for c in counts) // len(counts)


def orthogonality_defect(gs: GroupedSystem):
    """Largest spectral norm of ``U_g^H U_h`` over distinct group pairs."""
    worst = 0.0
    bases = [g.basis for g in gs.groups]
    for i in range(len(bases)):
        for j in range(i + 1, len(bases)):
            cross = bases[i].conj().T @ bases[j]
            worst = max(worst, float(np.linalg.norm(cross, 2)))
    return worst


def effective_channels(gs: GroupedSystem, raw):
    """Project each group's ``M x K'`` channel onto its own eigenspace.

    Returns the list of ``r_g x K'`` matrices ``U_g^H H_g``.
    """
    if len(raw) != gs.num_groups:
        raise ValidationError("need one channel matrix per group")
    out = []
    for g, h in zip(gs.groups, raw):
        h = np.asarray(h)
        if h.ndim != 2 or h.shape[0] != g.antennas:
            raise ValidationError(
                f"channel shape {h.shape} does not match M={g.antennas}")
        out.append(g.basis.conj().T @ h)
    return out


def sample_group_channels(gs: GroupedSystem, rng):
    """Full-dimension ``M x K'`` channel draws, one matrix per group."""
    return [sample_channel(g, gs.users_per_group, rng) for g in gs.groups]
