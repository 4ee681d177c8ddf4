"""Diagnostics on trajectories: emitter population, participation ratio,
intensity profiles, revival detection, and the flat-band reference model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .errors import ValidationError
from .dynamics import StateTrajectory, ZGrid, amplitudes_of, evolve_exact
from .lattice import EMITTER, Hamiltonian


@dataclass(frozen=True)
class ObservableSeries:
    """A scalar observable sampled on the trajectory's z grid."""

    z: np.ndarray
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if z.shape != v.shape:
            raise ValidationError("z and values must have equal length")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class RevivalReport:
    """Population revivals found after the first decay-threshold crossing."""

    decayed: bool
    revivals: tuple[tuple[float, float], ...]  # (z, peak value)
    max_revival: float
    decay_threshold: float
    revival_threshold: float

    def to_dict(self) -> dict:
        return {
            "decayed": self.decayed,
            "decay_threshold": self.decay_threshold,
            "revival_threshold": self.revival_threshold,
            "revivals": [{"z": z, "value": v} for z, v in self.revivals],
            "max_revival": self.max_revival,
        }


def qe_population(traj: StateTrajectory) -> ObservableSeries:
    """Fraction of the power remaining at the emitter waveguide, per z."""
    if traj.labels is None or EMITTER not in traj.labels:
        raise ValidationError("trajectory has no emitter site")
    idx = traj.labels.index(EMITTER)
    values = np.abs(traj.amplitudes[:, idx]) ** 2
    return ObservableSeries(z=traj.grid.values, values=values, name="qe_population")


def participation_ratio(state) -> float:
    """R = (sum P_n)^2 / sum P_n^2 with P_n = |c_n|^2.

    Counts the number of effectively excited sites: 1 for a single-site
    state, N for a uniform spread over N sites.  Invariant under global
    phase, normalization and site permutations.
    """
    p = np.abs(amplitudes_of(state)) ** 2
    total = p.sum()
    if total == 0.0:
        raise ValidationError("participation ratio of a zero state")
    return float(total**2 / np.sum(p**2))


def participation_series(traj: StateTrajectory) -> ObservableSeries:
    p = traj.populations()
    values = p.sum(axis=1) ** 2 / np.sum(p**2, axis=1)
    return ObservableSeries(z=traj.grid.values, values=values, name="participation_ratio")


def intensity_profile(state) -> np.ndarray:
    """Per-site intensities P_n = |c_n|^2."""
    return np.abs(amplitudes_of(state)) ** 2


def detect_revivals(
    series: ObservableSeries,
    decay_threshold: float = 0.1,
    revival_threshold: float = 0.05,
) -> RevivalReport:
    """Find population returns after the series first drops below
    ``decay_threshold``.

    A revival is a discrete 3-point local maximum (v[j-1] < v[j] >= v[j+1])
    located after the first decay crossing with peak >= revival_threshold.
    No interpolation is applied; grid density is controlled upstream.
    """
    for name, t in (("decay_threshold", decay_threshold), ("revival_threshold", revival_threshold)):
        if not 0.0 < t < 1.0:
            raise ValidationError(f"{name} must lie in (0, 1)")
    v = series.values
    z = series.z
    below = np.nonzero(v < decay_threshold)[0]
    if below.size == 0:
        return RevivalReport(False, (), 0.0, decay_threshold, revival_threshold)
    first = int(below[0])
    revivals = []
    for j in range(max(first + 1, 1), v.size - 1):
        if v[j - 1] < v[j] >= v[j + 1] and v[j] >= revival_threshold:
            revivals.append((float(z[j]), float(v[j])))
    max_rev = max((val for _, val in revivals), default=0.0)
    return RevivalReport(True, tuple(revivals), max_rev, decay_threshold, revival_threshold)


def fb_oracle_population(v2: float, n: float, z) -> np.ndarray:
    """Closed-form emitter population for coupling to an ideal flat band:
    cos^2(v2 * z / (2 sqrt(n)))."""
    if n < 1:
        raise ValidationError("mode count n must be >= 1")
    return np.cos(v2 * np.asarray(z, dtype=float) / (2.0 * np.sqrt(n))) ** 2


def fb_projected_evolution(
    H: Hamiltonian,
    fb_subspace: np.ndarray,
    emitter_index: int,
    grid: ZGrid,
) -> ObservableSeries:
    """Emitter population when it couples *only* to the flat-band subspace.

    ``fb_subspace`` holds orthonormal zero-energy eigenvectors of the
    lattice-only Hamiltonian (columns, over the lattice sites in the same
    order as ``H`` with the emitter row/column removed).  The evolution runs
    in the reduced basis {emitter} + flat-band modes, i.e. under
    P H P with P the projector on that subspace.
    """
    q = np.asarray(fb_subspace, dtype=float)
    if q.ndim != 2 or q.shape[1] == 0:
        raise ValidationError("flat-band subspace is empty")
    if not 0 <= emitter_index < H.dim:
        raise ValidationError("emitter index out of range")
    if q.shape[0] != H.dim - 1:
        raise ValidationError("subspace must span the lattice sites (dim - 1 rows)")
    lattice_idx = np.array([i for i in range(H.dim) if i != emitter_index])
    dense = H.toarray()
    h_lat = dense[np.ix_(lattice_idx, lattice_idx)]
    coupling = dense[lattice_idx, emitter_index]
    m = q.shape[1]
    h_eff = np.zeros((m + 1, m + 1))
    h_eff[0, 0] = dense[emitter_index, emitter_index]
    h_eff[0, 1:] = coupling @ q
    h_eff[1:, 0] = h_eff[0, 1:]
    block = q.T @ h_lat @ q  # ~0 for true zero modes
    h_eff[1:, 1:] = 0.5 * (block + block.T)
    psi0 = np.zeros(m + 1, dtype=complex)
    psi0[0] = 1.0
    traj = evolve_exact(Hamiltonian.from_matrix(h_eff), psi0, grid)
    values = np.abs(traj.amplitudes[:, 0]) ** 2
    return ObservableSeries(z=grid.values, values=values, name="fb_projected_population")


def fit_cos2_frequency(z, values) -> tuple[float, float]:
    """Least-squares fit of cos^2(w z) to a population series.

    Returns (w, r_squared).  The initial guess comes from the first sample
    below 1/2 (the quarter period of cos^2).
    """
    z = np.asarray(z, dtype=float)
    v = np.asarray(values, dtype=float)
    if z.size < 4:
        raise ValidationError("need at least 4 samples to fit")
    below = np.nonzero(v < 0.5)[0]
    if below.size == 0:
        raise ValidationError("series never drops below 1/2; cannot seed the fit")
    w0 = (np.pi / 4.0) / z[below[0]]
    popt, _ = curve_fit(lambda x, w: np.cos(w * x) ** 2, z, v, p0=[w0])
    w = float(abs(popt[0]))
    resid = v - np.cos(w * z) ** 2
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((v - v.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return w, r2
