"""Band structure and spectral diagnostics.

Analytic dispersion relations for the infinite lattices:

* square: ``E(kx, ky) = 2 vx cos(kx dx) + 2 vy cos(ky dy)`` (one band),
* Lieb:   ``E(kx, ky) = 0, +-2 sqrt(vx^2 cos^2(kx dx) + vy^2 cos^2(ky dy))``
  (two dispersive bands and one flat band pinned at zero energy).

Finite lattices are handled numerically: full Hermitian eigendecomposition,
density-of-states histograms, and counting of (near-)zero modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NonDifferentiableError, SolverError, ValidationError
from .lattice import Hamiltonian, LatticeKind, LatticeSpec

DENSE_DIM_LIMIT = 4096


@dataclass(frozen=True)
class BandModel:
    """Parameters of the analytic band formulas."""

    kind: LatticeKind
    vx: float
    vy: float
    dx: float = 1.0
    dy: float = 1.0

    @classmethod
    def from_spec(cls, spec: LatticeSpec) -> "BandModel":
        return cls(kind=spec.kind, vx=spec.vx, vy=spec.vy, dx=spec.dx, dy=spec.dy)

    @property
    def n_bands(self) -> int:
        return 1 if self.kind is LatticeKind.SQUARE else 3


@dataclass(frozen=True)
class SpectrumResult:
    """Sorted eigenvalues and (optionally) the orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None


@dataclass(frozen=True)
class DOSHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


@dataclass(frozen=True)
class BinRule:
    """Histogram binning: fixed ``width`` (bins centered on E=0) or a fixed
    bin ``count`` spanning the data range.  Exactly one must be given."""

    width: Optional[float] = None
    count: Optional[int] = None

    def __post_init__(self):
        if (self.width is None) == (self.count is None):
            raise ValidationError("specify exactly one of width or count")
        if self.width is not None and self.width <= 0:
            raise ValidationError("bin width must be positive")
        if self.count is not None and self.count < 1:
            raise ValidationError("bin count must be >= 1")


def default_bin_rule(vx: float, vy: float) -> BinRule:
    """Default DOS binning: width 0.1 * max(|vx|, |vy|), one bin centered at 0."""
    w = 0.1 * max(abs(vx), abs(vy))
    if w == 0:
        raise ValidationError("default binning needs a nonzero coupling")
    return BinRule(width=w)


def square_dispersion(model: BandModel, kx, ky):
    """Single-band square-lattice dispersion; accepts scalars or arrays."""
    if model.kind is not LatticeKind.SQUARE:
        raise ValidationError("square_dispersion needs a square BandModel")
    return 2 * model.vx * np.cos(np.asarray(kx) * model.dx) + 2 * model.vy * np.cos(
        np.asarray(ky) * model.dy
    )


def lieb_dispersion(model: BandModel, kx, ky):
    """Three Lieb bands at (kx, ky), sorted: (E-, 0, E+).

    The middle band is exactly zero for every wavenumber.
    """
    if model.kind is not LatticeKind.LIEB:
        raise ValidationError("lieb_dispersion needs a Lieb BandModel")
    kx = np.asarray(kx)
    ky = np.asarray(ky)
    ep = 2 * np.sqrt(
        (model.vx * np.cos(kx * model.dx)) ** 2 + (model.vy * np.cos(ky * model.dy)) ** 2
    )
    return -ep, np.zeros_like(ep), ep


def group_velocity(model: BandModel, band_index: int, kx: float, ky: float) -> tuple[float, float]:
    """Analytic band gradient (dE/dkx, dE/dky) at one k-point.

    The Lieb flat band returns (0, 0) everywhere; the dispersive Lieb bands
    are singular at the band-touching points (both cosines zero), where a
    :class:`NonDifferentiableError` is raised.
    """
    if not 0 <= band_index < model.n_bands:
        raise ValidationError(f"band index {band_index} out of range for {model.kind.value}")
    if model.kind is LatticeKind.SQUARE:
        return (
            -2 * model.vx * model.dx * float(np.sin(kx * model.dx)),
            -2 * model.vy * model.dy * float(np.sin(ky * model.dy)),
        )
    if band_index == 1:
        return (0.0, 0.0)
    cx = model.vx * np.cos(kx * model.dx)
    cy = model.vy * np.cos(ky * model.dy)
    root = np.hypot(cx, cy)
    if root == 0.0:
        raise NonDifferentiableError(
            "dispersive Lieb band gradient is singular at the band-touching point"
        )
    sign = -1.0 if band_index == 0 else 1.0
    dfx = -2 * model.vx * model.dx * np.cos(kx * model.dx) * np.sin(kx * model.dx)
    dfy = -2 * model.vy * model.dy * np.cos(ky * model.dy) * np.sin(ky * model.dy)
    return (
        sign * float(model.vx * dfx / root),
        sign * float(model.vy * dfy / root),
    )


def eigendecompose(
    H: Hamiltonian, keep_vectors: bool = False, dense_threshold: int = DENSE_DIM_LIMIT
) -> SpectrumResult:
    """Full spectrum of ``H`` via a dense Hermitian solve.

    A full spectrum is required by every consumer (DOS, exact propagator),
    so the dense LAPACK path is used throughout; ``dense_threshold`` guards
    against accidentally diagonalizing huge systems.
    """
    if H.dim > dense_threshold:
        raise SolverError(
            f"dim {H.dim} exceeds dense_threshold {dense_threshold}; "
            "raise the threshold explicitly for large systems"
        )
    try:
        if keep_vectors:
            vals, vecs = np.linalg.eigh(H.toarray())
            return SpectrumResult(eigenvalues=vals, eigenvectors=vecs)
        vals = np.linalg.eigvalsh(H.toarray())
        return SpectrumResult(eigenvalues=vals)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SolverError(f"eigensolver failed for dim {H.dim}: {exc}")


def dos_histogram(eigenvalues: np.ndarray, rule: BinRule) -> DOSHistogram:
    """Histogram of the eigenvalue list under ``rule``.

    With a width rule the edges sit at (m + 1/2) * width so that one bin is
    symmetric about E = 0.  All eigenvalues are counted.
    """
    eigs = np.sort(np.asarray(eigenvalues, dtype=float))
    if eigs.size == 0:
        raise ValidationError("empty eigenvalue list")
    lo, hi = eigs[0], eigs[-1]
    if lo == hi:
        w = rule.width if rule.width is not None else 1.0
        edges = np.array([lo - 0.5 * w, lo + 0.5 * w])
        return DOSHistogram(bin_edges=edges, counts=np.array([eigs.size]))
    if rule.width is not None:
        w = rule.width
        m_lo = int(np.floor(lo / w - 0.5))
        m_hi = int(np.ceil(hi / w + 0.5))
        edges = (np.arange(m_lo, m_hi + 1) + 0.5) * w
    else:
        edges = np.linspace(lo, hi, rule.count + 1)
    counts, edges = np.histogram(eigs, bins=edges)
    if int(counts.sum()) != eigs.size:
        raise SolverError("histogram lost eigenvalues; edges do not cover the range")
    return DOSHistogram(bin_edges=edges, counts=counts)


def flat_band_count(eigenvalues: np.ndarray, tol: float, center: float = 0.0) -> int:
    """Number of eigenvalues within ``tol`` of ``center``."""
    if tol <= 0:
        raise ValidationError("tolerance must be positive")
    eigs = np.asarray(eigenvalues, dtype=float)
    return int(np.count_nonzero(np.abs(eigs - center) <= tol))


def zero_mode_tolerance(eigenvalues: np.ndarray) -> float:
    """Default zero-mode tolerance: 1e-8 times the spectral max-magnitude."""
    scale = float(np.max(np.abs(eigenvalues))) if len(eigenvalues) else 1.0
    return 1e-8 * max(scale, 1.0)


def zero_energy_subspace(H: Hamiltonian, tol: Optional[float] = None) -> np.ndarray:
    """Orthonormal basis (columns) of the eigenspace with |E| <= tol."""
    res = eigendecompose(H, keep_vectors=True)
    if tol is None:
        tol = zero_mode_tolerance(res.eigenvalues)
    mask = np.abs(res.eigenvalues) <= tol
    if not np.any(mask):
        raise ValidationError("no zero-energy modes within tolerance")
    return res.eigenvectors[:, mask]


def band_surface(model: BandModel, n_kx: int, n_ky: int):
    """Sample all bands on a uniform Brillouin-zone grid.

    Returns (kx, ky, bands) where kx/ky are flat arrays of length
    n_kx * n_ky and bands is a list of same-length energy arrays.  The grid
    spans kx * dx in [-pi, pi] and ky * dy in [-pi, pi] inclusive.
    """
    if n_kx < 1 or n_ky < 1:
        raise ValidationError("k-grid sizes must be >= 1")
    kxs = np.linspace(-np.pi, np.pi, n_kx) / model.dx
    kys = np.linspace(-np.pi, np.pi, n_ky) / model.dy
    KX, KY = np.meshgrid(kxs, kys, indexing="ij")
    kx, ky = KX.ravel(), KY.ravel()
    if model.kind is LatticeKind.SQUARE:
        bands = [square_dispersion(model, kx, ky)]
    else:
        em, e0, ep = lieb_dispersion(model, kx, ky)
        bands = [em, e0, ep]
    return kx, ky, bands
