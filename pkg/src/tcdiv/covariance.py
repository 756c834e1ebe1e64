"""One-ring transmit correlation matrices and their eigen-structure.

A user at azimuth ``theta`` surrounded by a ring of scatterers seen under an
angular spread ``delta`` produces, on a uniform linear array with spacing
``spacing`` (in wavelengths), the Toeplitz correlation

    R[p, q] = 1/(2 delta) * int_{-delta}^{delta}
              exp(j 2 pi spacing (p - q) sin(alpha + theta)) d alpha.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .exceptions import AccuracyError, DomainError, ValidationError
from .numerics import gauss_legendre

__all__ = [
    "OneRingGeometry", "CorrelationMatrix", "EigenStructure",
    "one_ring_correlation", "one_ring_lags_batch", "eigen_decompose",
    "szego_spectrum", "support_intervals", "support_measure",
    "support_rank", "szego_logdet_rate", "bai_logdet_lower",
    "complex_normal", "sample_channel",
]

EDGE_DELTA = 1e-12


@dataclass(frozen=True)
class OneRingGeometry:
    """Geometry of a one-ring scattering user seen from a ULA.

    Attributes
    ----------
    theta : float
        Azimuth angle of departure (radians), ``|theta| <= pi``.
    delta : float
        Angular spread half-width (radians), ``0 < delta <= pi/2``.
    spacing : float
        Antenna spacing in wavelengths.
    antennas : int
        Number of array elements ``M``.
    """

    theta: float
    delta: float
    spacing: float = 0.5
    antennas: int = 8

    def __post_init__(self):
        if not 0 < self.delta <= math.pi / 2:
            raise ValidationError(f"delta must lie in (0, pi/2], got {self.delta}")
        if self.spacing <= 0:
            raise ValidationError("spacing must be positive")
        if int(self.antennas) != self.antennas or self.antennas < 1:
            raise ValidationError("antennas must be a positive integer")
        if abs(self.theta) > math.pi:
            raise ValidationError("|theta| must not exceed pi")

    @classmethod
    def from_degrees(cls, theta_deg, delta_deg, spacing=0.5, antennas=8):
        return cls(math.radians(theta_deg), math.radians(delta_deg),
                   spacing, antennas)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Hermitian PSD transmit correlation with ``trace == M``.

    Toeplitz matrices are stored through their first column (``lags``),
    ``lags[k] = R[p + k, p]``.
    """

    entries: np.ndarray
    lags: np.ndarray = None

    @property
    def m(self):
        return self.entries.shape[0]

    @property
    def trace_target(self):
        return float(self.m)

    @classmethod
    def from_lags(cls, lags):
        lags = np.asarray(lags, dtype=complex)
        # column = lags (R[k, 0]), row = conj(lags) (R[0, k])
        return cls(toeplitz(lags, lags.conj()), lags)

    def validate(self, psd_tol=1e-8):
        r = self.entries
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValidationError("correlation matrix must be square")
        if np.max(np.abs(r - r.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(r))):
            raise ValidationError("correlation matrix is not Hermitian")
        ev = np.linalg.eigvalsh(r)
        if ev[0] < -psd_tol * max(ev[-1], 0.0):
            raise ValidationError(
                f"correlation matrix not PSD: min eigenvalue {ev[0]:.3e}")
        return self

    def to_json(self):
        if self.lags is None:
            raise ValidationError("only Toeplitz matrices are serializable")
        return json.dumps({"m": int(self.m),
                           "lags": [[float(z.real), float(z.imag)] for z in self.lags]})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text) if isinstance(text, str) else text
        lags = np.array([complex(re, im) for re, im in obj["lags"]])
        if lags.size != obj["m"]:
            raise ValidationError("lag count does not match m")
        return cls.from_lags(lags)


@dataclass(frozen=True)
class EigenStructure:
    """Truncated Karhunen-Loeve form ``R ~= U diag(eigenvalues) U^H``."""

    basis: np.ndarray
    eigenvalues: np.ndarray

    @property
    def antennas(self):
        return self.basis.shape[0]

    @property
    def effective_rank(self):
        return self.eigenvalues.size

    @property
    def condition(self):
        return float(self.eigenvalues[0] / self.eigenvalues[-1])

    @property
    def logdet(self):
        """``ln |Lambda|`` in nats."""
        return float(np.sum(np.log(self.eigenvalues)))

    def covariance(self):
        u = self.basis
        return (u * self.eigenvalues) @ u.conj().T


def one_ring_lags_batch(theta, delta, spacing, antennas, tol=1e-10):
    """Correlation lags ``R[k, 0]`` for a batch of one-ring users.

    Parameters
    ----------
    theta, delta : array_like
        Per-user azimuth and angular spread (radians), broadcast together.
    spacing : float
    antennas : int
    tol : float
        Relative quadrature tolerance.

    Returns
    -------
    ndarray, shape (n_users, antennas)
        Complex lags; column 0 is identically one.
    """
    theta, delta = np.broadcast_arrays(np.atleast_1d(np.asarray(theta, float)),
                                       np.atleast_1d(np.asarray(delta, float)))
    k = np.arange(antennas)
    freq = 2 * np.pi * spacing * k

    # alpha = delta * u maps [-1, 1] onto the spread; the 1/(2 delta)
    # normalization then leaves a plain average over u.
    def integrand(u):
        ang = np.sin(delta[None, :] * u[:, None] + theta[None, :])
        return 0.5 * np.exp(1j * ang[:, :, None] * freq[None, None, :])

    lags = gauss_legendre(integrand, -1.0, 1.0, tol=tol)
    lags[:, 0] = 1.0
    return lags


def one_ring_correlation(geom: OneRingGeometry, tol=1e-10):
    """Toeplitz one-ring correlation matrix for ``geom``.

    Only the ``M`` distinct lags are integrated; the matrix is filled from
    them.
    """
    lags = one_ring_lags_batch(geom.theta, geom.delta, geom.spacing,
                               geom.antennas, tol=tol)[0]
    return CorrelationMatrix.from_lags(lags).validate()


def _canonical_phase(vecs):
    # make the largest-magnitude coordinate of each column real positive
    idx = np.argmax(np.abs(vecs), axis=0)
    ph = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.abs(ph) / ph)[None, :], idx


def eigen_decompose(r, truncation=1e-8, rank=None, tie_tol=1e-12):
    """Karhunen-Loeve decomposition of a correlation matrix.

    Parameters
    ----------
    r : CorrelationMatrix or ndarray
    truncation : float
        Eigenvalues below ``truncation * lambda_1`` are discarded.
    rank : int, optional
        Keep exactly the ``rank`` dominant eigenvalues instead.
    tie_tol : float
        Relative gap below which two eigenvalues are treated as tied.

    Returns
    -------
    EigenStructure
        Retained eigenvalues are rescaled by a common factor so that they
        sum to ``M``. Ties are ordered by the position of each
        eigenvector's largest coordinate, then by index, and every
        eigenvector's largest coordinate is made real positive.
    """
    mat = r.entries if isinstance(r, CorrelationMatrix) else np.asarray(r)
    m = mat.shape[0]
    ev, vecs = np.linalg.eigh(mat)
    lam1 = ev[-1]
    if lam1 <= 0 or ev[0] < -1e-8 * lam1:
        raise ValidationError(
            f"matrix is not numerically PSD (eigenvalues in [{ev[0]:.3e}, {lam1:.3e}])")
    ev, vecs = ev[::-1], vecs[:, ::-1]
    vecs, peak = _canonical_phase(vecs)
    # group near-equal eigenvalues and order within groups deterministically
    key_level = np.zeros(m, dtype=int)
    for i in range(1, m):
        tied = ev[i - 1] - ev[i] <= tie_tol * lam1
        key_level[i] = key_level[i - 1] + (0 if tied else 1)
    order = np.lexsort((np.arange(m), peak, key_level))
    ev, vecs = ev[order], vecs[:, order]
    if rank is None:
        keep = int(np.sum(ev > truncation * lam1))
    else:
        if not 1 <= rank <= m:
            raise DomainError(f"rank must be in [1, {m}], got {rank}")
        keep = int(rank)
    kept = ev[:keep] * (m / np.sum(ev[:keep]))
    return EigenStructure(vecs[:, :keep].copy(), kept)


def _preimage_count(u, geom):
    """Number of angles alpha in [-delta, delta] with D sin(alpha + theta) = u."""
    d = geom.spacing
    base = np.arcsin(np.clip(u / d, -1.0, 1.0))
    count = np.zeros(np.shape(u), dtype=int)
    for beta in (base, np.pi - base):
        off = np.mod(beta - geom.theta + np.pi, 2 * np.pi) - np.pi
        count += (np.abs(off) <= geom.delta).astype(int)
    # the two branches coincide at the fold |u| = D
    fold = np.isclose(np.abs(u), d, rtol=0, atol=0)
    return np.where(fold, np.minimum(count, 1), count)


def szego_spectrum(geom: OneRingGeometry, xi):
    """Eigenvalue spectrum ``S(xi)`` of the one-ring Toeplitz sequence.

    ``S(xi) = 1/(2 delta) * sum_k 1/sqrt(D^2 - (k - xi)^2)``, the sum running
    over integers ``k`` whose offset ``k - xi`` is reached by
    ``D sin(alpha + theta)`` for some ``|alpha| <= delta`` (counted with
    multiplicity when the angular interval straddles broadside +-90 deg).
    At a fold edge the summand is capped at ``1/sqrt(1e-12 * D)``.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(np.abs(xi) > 0.5 + 1e-15):
        raise DomainError("xi must lie in [-1/2, 1/2]")
    d = geom.spacing
    kmax = int(math.ceil(d + 1))
    total = np.zeros(xi.shape)
    for k in range(-kmax, kmax + 1):
        u = k - xi
        inside = np.abs(u) <= d
        if not np.any(inside):
            continue
        mult = np.where(inside, _preimage_count(np.where(inside, u, 0.0), geom), 0)
        gap = np.maximum(d * d - u * u, EDGE_DELTA * d)
        total = total + mult / np.sqrt(gap)
    out = total / (2 * geom.delta)
    return out[()] if out.ndim == 0 else out


def _breakpoints(geom):
    d = geom.spacing
    lo_a, hi_a = geom.theta - geom.delta, geom.theta + geom.delta
    offs = [d * math.sin(lo_a), d * math.sin(hi_a)]
    # folds at +-90 degrees inside the angular interval
    for fold in (math.pi / 2, -math.pi / 2):
        for shift in (-2 * math.pi, 0.0, 2 * math.pi):
            if lo_a <= fold + shift <= hi_a:
                offs.append(d * math.sin(fold))
    pts = {-0.5, 0.5}
    kmax = int(math.ceil(d + 1))
    for u in offs:
        for k in range(-kmax, kmax + 1):
            x = k - u
            if -0.5 < x < 0.5:
                pts.add(x)
    return np.array(sorted(pts))


def support_intervals(geom: OneRingGeometry):
    """Sub-intervals of ``[-1/2, 1/2]`` on which ``S > 0``."""
    pts = _breakpoints(geom)
    out = []
    for a, b in zip(pts[:-1], pts[1:]):
        if b - a <= 1e-15:
            continue
        if szego_spectrum(geom, 0.5 * (a + b)) > 0:
            if out and abs(out[-1][1] - a) <= 1e-15:
                out[-1] = (out[-1][0], b)
            else:
                out.append((a, b))
    return out


def support_measure(geom: OneRingGeometry):
    """Lebesgue measure ``rho`` of the support of ``S`` (``spacing <= 1/2``)."""
    if geom.spacing > 0.5:
        raise DomainError("support measure is only defined for spacing <= 1/2")
    return float(sum(b - a for a, b in support_intervals(geom)))


def support_rank(geom: OneRingGeometry):
    """Number of dominant eigenvalues predicted by the support, ``round(rho M)``."""
    return max(1, int(round(support_measure(geom) * geom.antennas)))


def szego_logdet_rate(geom: OneRingGeometry, tol=1e-10):
    """``int ln S(xi) d xi`` over the support of ``S`` (nats).

    Each support panel is mapped through ``xi = a + (b - a)(1 - cos(pi s))/2``
    so that the logarithmic endpoint singularities at fold edges are damped
    before Gauss-Legendre integration.
    """
    total = 0.0
    for a, b in _support_panels(geom):
        def integrand(s, a=a, b=b):
            x = a + 0.5 * (b - a) * (1 - np.cos(np.pi * s))
            jac = 0.5 * (b - a) * np.pi * np.sin(np.pi * s)
            return np.log(szego_spectrum(geom, x)) * jac
        try:
            total += gauss_legendre(integrand, 0.0, 1.0, tol=tol)
        except AccuracyError as err:
            if abs(err.estimate) < 1e-14:
                total += err.estimate
            else:
                raise
    return float(total)


def _support_panels(geom):
    pts = _breakpoints(geom)
    for a, b in zip(pts[:-1], pts[1:]):
        if b - a > 1e-15 and szego_spectrum(geom, 0.5 * (a + b)) > 0:
            yield a, b


def bai_logdet_lower(lambda_min, M, r, G):
    """Lower bound on ``ln |Lambda_g|`` from ``lambda_min``, ``M``, ``r`` only.

    Uses ``tr(Lambda) = M`` and ``tr(Lambda^2) <= M^2`` in the lower
    two-node quadrature bound on ``tr ln``; ``tau`` is the free node
    ``(lambda_min M - M^2) / (lambda_min r - M)``.

    Parameters
    ----------
    lambda_min : float
        Smallest retained eigenvalue of the group.
    M : int
        Trace of the group spectrum.
    r : int
        Group rank.
    G : int
        Number of groups (``r G <= M``).

    Returns
    -------
    float
        Lower bound in nats.
    """
    if lambda_min <= 0:
        raise DomainError("lambda_min must be positive")
    if r * G > M:
        raise DomainError(f"need r*G <= M, got r={r}, G={G}, M={M}")
    den = lambda_min * r - M
    if abs(den) <= 1e-12 * M:
        return r * math.log(M / r)
    if lambda_min > M / r:
        raise DomainError("lambda_min cannot exceed the mean eigenvalue M/r")
    tau = (lambda_min * M - M * M) / den
    if abs(tau - lambda_min) <= 1e-12 * tau:
        return r * math.log(M / r)
    coef = 1.0 / (lambda_min * tau**2 - lambda_min**2 * tau)
    return coef * ((tau**2 * M - tau * M**2) * math.log(lambda_min)
                   + (lambda_min * M**2 - lambda_min**2 * M) * math.log(tau))


def complex_normal(rng, shape):
    """i.i.d. CN(0, 1) samples (real and imaginary parts of variance 1/2)."""
    z = rng.standard_normal(shape + (2,) if isinstance(shape, tuple) else (shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) / math.sqrt(2.0)


def sample_channel(es: EigenStructure, users, rng):
    """Draw ``users`` channel vectors ``h = U Lambda^{1/2} w`` as columns.

    Parameters
    ----------
    es : EigenStructure
    users : int
    rng : numpy.random.Generator or int
        Owned random stream (an int is used as a seed).

    Returns
    -------
    ndarray, shape (M, users)
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    w = complex_normal(rng, (es.effective_rank, users))
    return es.basis @ (np.sqrt(es.eigenvalues)[:, None] * w)
