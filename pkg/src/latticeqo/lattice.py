"""Lattice geometry, emitter attachment and Hamiltonian assembly.

Two reservoir geometries are supported:

* ``square`` -- one site per unit cell on an ``nx`` x ``ny`` grid.
* ``lieb``   -- three sites per unit cell (sublattices A, B, C).

Sites live on an integer grid ``(gx, gy)``.  For the Lieb lattice the grid
holds B sites at (even, even), C at (odd, even) and A at (even, odd); the
(odd, odd) positions are empty.  In cell coordinates that places B at the
cell corner, C half a cell to the right and A half a cell up, so A-B bonds
are vertical (weight ``vy``) and B-C bonds horizontal (weight ``vx``).

Site ordering is cell-major row-major: sites are sorted by (cell_iy,
cell_ix, sublattice) with A < B < C inside a cell, and the emitter (when
attached) always comes last.  Example, open Lieb with nx=ny=2::

    index  0       1       2       3       4       5       6  ...
    label  A(0,0)  B(0,0)  C(0,0)  A(1,0)  B(1,0)  C(1,0)  A(0,1) ...

With ``cap_edges=True`` a Lieb lattice is closed with a final column/row of
boundary sites so that it spans the full (2*nx+1) x (2*ny+1) site area
(3*nx*ny + 2*nx + 2*ny + 1 sites); those extra sites carry cell indices
ix == nx or iy == ny.  This is the geometry of finite arrays terminated by
B corners on all four sides, e.g. nx=ny=9 gives the 280-site lattice.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError


class LatticeKind(enum.Enum):
    SQUARE = "square"
    LIEB = "lieb"


class Boundary(enum.Enum):
    OPEN = "open"
    PERIODIC = "periodic"


class Sublattice(enum.Enum):
    S = "S"          # the single square-lattice sublattice
    A = "A"          # Lieb: vertical-bond site
    B = "B"          # Lieb: corner site
    C = "C"          # Lieb: horizontal-bond site
    EMITTER = "QE"   # the emitter waveguide, outside the lattice


_SUBLATTICE_ORDER = {Sublattice.S: 0, Sublattice.A: 0, Sublattice.B: 1, Sublattice.C: 2}


@dataclass(frozen=True)
class SiteLabel:
    """Human-readable site identity: unit cell plus sublattice.

    The emitter label has ``cell=None``.
    """

    cell: Optional[tuple[int, int]]
    sublattice: Sublattice

    def __post_init__(self):
        if self.sublattice is Sublattice.EMITTER:
            if self.cell is not None:
                raise ValidationError("emitter label carries no cell index")
        elif self.cell is None:
            raise ValidationError("lattice site label requires a cell index")

    def __str__(self):
        if self.sublattice is Sublattice.EMITTER:
            return "QE"
        ix, iy = self.cell
        return f"{self.sublattice.value}({ix},{iy})"


EMITTER = SiteLabel(None, Sublattice.EMITTER)


def site(sublattice: str | Sublattice, ix: int, iy: int) -> SiteLabel:
    """Shorthand constructor, e.g. ``site("A", 0, 3)``."""
    if isinstance(sublattice, str):
        sublattice = Sublattice(sublattice.upper() if sublattice != "QE" else "QE")
    return SiteLabel((ix, iy), sublattice)


@dataclass(frozen=True)
class LatticeSpec:
    """Declarative description of a lattice reservoir.

    Couplings ``vx``/``vy`` and ``onsite_energy`` are in cm^-1, spacings
    ``dx``/``dy`` in um (the spacings only enter the k-space formulas).
    """

    kind: LatticeKind
    nx: int
    ny: int
    vx: float = 1.0
    vy: float = 1.0
    onsite_energy: float = 0.0
    boundary: Boundary = Boundary.OPEN
    dx: float = 1.0
    dy: float = 1.0
    cap_edges: bool = False

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValidationError(f"cell counts must be >= 1, got nx={self.nx}, ny={self.ny}")
        for name in ("vx", "vy", "onsite_energy"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.dx <= 0 or self.dy <= 0:
            raise ValidationError("spacings dx, dy must be positive")
        if self.cap_edges and self.kind is not LatticeKind.LIEB:
            raise ValidationError("cap_edges only applies to the Lieb lattice")
        if self.boundary is Boundary.PERIODIC:
            if self.cap_edges:
                raise ValidationError("cap_edges is incompatible with periodic boundaries")
            nmin = 3 if self.kind is LatticeKind.SQUARE else 2
            if self.nx < nmin or self.ny < nmin:
                raise ValidationError(
                    f"periodic {self.kind.value} lattice needs nx, ny >= {nmin} "
                    "so that wrap-around edges are distinct"
                )

    @property
    def n_sites(self) -> int:
        if self.kind is LatticeKind.SQUARE:
            return self.nx * self.ny
        n = 3 * self.nx * self.ny
        if self.cap_edges:
            n += 2 * self.nx + 2 * self.ny + 1
        return n


@dataclass(frozen=True)
class EmitterSpec:
    """Emitter waveguide: coupling ``v2`` to lattice site ``attachment``."""

    v2: float
    attachment: SiteLabel
    omega0: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.v2):
            raise ValidationError("v2 must be finite")
        if not np.isfinite(self.omega0):
            raise ValidationError("omega0 must be finite")
        if self.attachment.sublattice is Sublattice.EMITTER:
            raise ValidationError("emitter cannot attach to itself")


@dataclass(frozen=True)
class SystemGraph:
    """Explicit site list plus weighted coupling edges.

    ``edges`` hold index pairs ``(i, j, weight)`` with ``i < j``; ``onsite``
    is the per-site diagonal energy.  Instances are immutable and safe to
    share between workers.
    """

    sites: tuple[SiteLabel, ...]
    edges: tuple[tuple[int, int, float], ...]
    onsite: tuple[float, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.sites)
        if len(self.onsite) != n:
            raise ValidationError("onsite length must match site count")
        index = {}
        for i, lab in enumerate(self.sites):
            if lab in index:
                raise ValidationError(f"duplicate site label {lab}")
            index[lab] = i
        seen = set()
        for i, j, w in self.edges:
            if i == j:
                raise ValidationError(f"self-edge at site index {i}")
            if not (0 <= i < j < n):
                raise ValidationError(f"edge ({i}, {j}) out of order or out of range")
            if (i, j) in seen:
                raise ValidationError(f"duplicate edge ({i}, {j})")
            if not np.isfinite(w):
                raise ValidationError(f"edge ({i}, {j}) has non-finite weight")
            seen.add((i, j))
        object.__setattr__(self, "_index", index)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def has_emitter(self) -> bool:
        return EMITTER in self._index

    @property
    def emitter_index(self) -> int:
        if not self.has_emitter:
            raise ValidationError("graph has no emitter site")
        return self._index[EMITTER]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_sites, dtype=int)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


@dataclass(frozen=True)
class Hamiltonian:
    """Real-symmetric sparse matrix over the single-excitation site basis."""

    dim: int
    matrix: sp.csr_matrix

    @classmethod
    def from_matrix(cls, m) -> "Hamiltonian":
        m = sp.csr_matrix(m)
        if m.shape[0] != m.shape[1]:
            raise ValidationError("Hamiltonian matrix must be square")
        if (m != m.T).nnz != 0:
            raise ValidationError("Hamiltonian matrix must be symmetric")
        return cls(dim=m.shape[0], matrix=m)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def _lieb_grid_span(spec: LatticeSpec) -> tuple[int, int]:
    """Extent of the integer site grid holding the Lieb lattice."""
    gx_max = 2 * spec.nx if spec.cap_edges else 2 * spec.nx - 1
    gy_max = 2 * spec.ny if spec.cap_edges else 2 * spec.ny - 1
    return gx_max, gy_max


def _lieb_sublattice(gx: int, gy: int) -> Sublattice:
    if gx % 2 == 0:
        return Sublattice.B if gy % 2 == 0 else Sublattice.A
    return Sublattice.C


def _grid_of(label: SiteLabel) -> tuple[int, int]:
    """Integer-grid position of a lattice site label."""
    ix, iy = label.cell
    if label.sublattice is Sublattice.S:
        return ix, iy
    gx, gy = 2 * ix, 2 * iy
    if label.sublattice is Sublattice.A:
        gy += 1
    elif label.sublattice is Sublattice.C:
        gx += 1
    return gx, gy


def build_lattice(spec: LatticeSpec) -> SystemGraph:
    """Construct the reservoir graph for ``spec``.

    Horizontal bonds carry weight ``vx``, vertical bonds ``vy``; periodic
    boundaries add the wrap-around bonds.
    """
    if spec.kind is LatticeKind.SQUARE:
        positions = [(gx, gy) for gy in range(spec.ny) for gx in range(spec.nx)]
        labels = {p: SiteLabel(p, Sublattice.S) for p in positions}
        span = (spec.nx - 1, spec.ny - 1)
    else:
        gx_max, gy_max = _lieb_grid_span(spec)
        positions = [
            (gx, gy)
            for gy in range(gy_max + 1)
            for gx in range(gx_max + 1)
            if not (gx % 2 == 1 and gy % 2 == 1)
        ]
        labels = {
            (gx, gy): SiteLabel((gx // 2, gy // 2), _lieb_sublattice(gx, gy))
            for gx, gy in positions
        }
        span = (gx_max, gy_max)

    def sort_key(pos):
        lab = labels[pos]
        return (lab.cell[1], lab.cell[0], _SUBLATTICE_ORDER[lab.sublattice])

    positions.sort(key=sort_key)
    index = {pos: i for i, pos in enumerate(positions)}

    periodic = spec.boundary is Boundary.PERIODIC
    period = (span[0] + 1, span[1] + 1)
    edges = []
    for pos in positions:
        gx, gy = pos
        for step, weight in (((1, 0), spec.vx), ((0, 1), spec.vy)):
            tx, ty = gx + step[0], gy + step[1]
            if periodic:
                tx, ty = tx % period[0], ty % period[1]
            elif tx > span[0] or ty > span[1]:
                continue
            if (tx, ty) not in index:
                continue  # empty (odd, odd) Lieb position
            i, j = index[pos], index[(tx, ty)]
            edges.append((min(i, j), max(i, j), float(weight)))

    edges.sort()
    sites = tuple(labels[pos] for pos in positions)
    onsite = (float(spec.onsite_energy),) * len(sites)
    return SystemGraph(sites=sites, edges=tuple(edges), onsite=onsite)


def attach_emitter(graph: SystemGraph, em: EmitterSpec) -> SystemGraph:
    """Return a new graph with the emitter waveguide appended last."""
    if graph.has_emitter:
        raise ValidationError("graph already contains an emitter")
    try:
        n0 = site_index(graph, em.attachment)
    except ValidationError:
        raise ValidationError(f"attachment site {em.attachment} not found in graph")
    e = graph.n_sites
    return SystemGraph(
        sites=graph.sites + (EMITTER,),
        edges=graph.edges + ((n0, e, float(em.v2)),),
        onsite=graph.onsite + (float(em.omega0),),
    )


def assemble_hamiltonian(graph: SystemGraph) -> Hamiltonian:
    """Single-excitation Hamiltonian: onsite diagonal plus symmetric bonds."""
    n = graph.n_sites
    rows, cols, vals = [], [], []
    for i, e in enumerate(graph.onsite):
        if e != 0.0:
            rows.append(i)
            cols.append(i)
            vals.append(e)
    for i, j, w in graph.edges:
        rows.extend((i, j))
        cols.extend((j, i))
        vals.extend((w, w))
    m = sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=float)
    return Hamiltonian(dim=n, matrix=m)


def site_index(graph: SystemGraph, label: SiteLabel) -> int:
    """Index of ``label`` in the graph's deterministic site order."""
    try:
        return graph._index[label]
    except KeyError:
        raise ValidationError(f"site {label} not in graph")


def label_of(graph: SystemGraph, index: int) -> SiteLabel:
    """Inverse of :func:`site_index`."""
    if not 0 <= index < graph.n_sites:
        raise ValidationError(f"site index {index} out of range [0, {graph.n_sites})")
    return graph.sites[index]


def boundary_midpoint(spec: LatticeSpec, sublattice: Optional[Sublattice] = None) -> SiteLabel:
    """Default emitter attachment: the midpoint site of one open boundary.

    Square lattices use the middle of the bottom row.  For Lieb lattices the
    sublattice selects the boundary: A and B sit on the left column, C on
    the bottom row.
    """
    if spec.kind is LatticeKind.SQUARE:
        return SiteLabel((spec.nx // 2, 0), Sublattice.S)
    sub = sublattice or Sublattice.A
    if sub is Sublattice.A:
        return SiteLabel((0, spec.ny // 2), Sublattice.A)
    if sub is Sublattice.B:
        return SiteLabel((0, (spec.ny + (1 if spec.cap_edges else 0)) // 2), Sublattice.B)
    if sub is Sublattice.C:
        return SiteLabel((spec.nx // 2, 0), Sublattice.C)
    raise ValidationError(f"no boundary attachment rule for sublattice {sub}")


def bulk_center_site(spec: LatticeSpec, sublattice: Optional[Sublattice] = None) -> SiteLabel:
    """A site as close as possible to the lattice center (bulk excitation)."""
    if spec.kind is LatticeKind.SQUARE:
        return SiteLabel((spec.nx // 2, spec.ny // 2), Sublattice.S)
    sub = sublattice or Sublattice.B
    if sub is Sublattice.EMITTER:
        raise ValidationError("emitter is not a lattice site")
    return SiteLabel((spec.nx // 2, spec.ny // 2), sub)


def dump_adjacency(graph: SystemGraph, path) -> None:
    """Debug dump of the edge list as CSV with columns i, j, weight."""
    from .csvio import write_csv

    rows = [(i, j, w) for i, j, w in graph.edges]
    write_csv(path, ["i", "j", "weight"], rows, header_lines=["adjacency dump"])
