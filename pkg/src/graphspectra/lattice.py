"""Finite-volume 5-point lattices on unions of axis-aligned rectangles.

Geometry lives on an integer lattice with physical spacing h; a domain is a
set of unit cells, and every rectangle corner must land on the lattice, so
rasterization is exact.  Edge and node weights are the fractions of adjacent
cells inside the domain, which reproduces the mirrored-ghost Neumann stencil
on straight boundaries and handles re-entrant corners without special cases.
Dirichlet boundary nodes are eliminated.  The operator is assembled as a
stiffness matrix K (with 1/h^2) and a diagonal weight vector w, so that the
eigenproblem reads K u = mu diag(w) u; the similarity-transformed
W^{-1/2} K W^{-1/2} is symmetric with identical eigenvalues.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError


def to_units(value: float, h: float, what: str) -> int:
    """Exact conversion of a physical coordinate to lattice units."""
    q = value / h
    n = round(q)
    if abs(q - n) > 1e-9 * max(1.0, abs(q)):
        raise ValidationError(f"{what} = {value} is not a multiple of the grid spacing {h}")
    return int(n)


@dataclass(frozen=True)
class BoundarySegment:
    """An axis-aligned boundary piece with its own condition label.

    axis "h": the segment lies on the grid line y = coord, spanning
    lo <= x <= hi (lattice units); axis "v" analogously on x = coord.
    """

    axis: str
    coord: int
    lo: int
    hi: int
    label: str

    def contains(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        if self.axis == "h":
            return (j == self.coord) & (i >= self.lo) & (i <= self.hi)
        return (i == self.coord) & (j >= self.lo) & (j <= self.hi)


@dataclass
class Grid:
    """Active nodes, weights, and index map for a rectangle-union domain."""

    h: float
    origin: tuple[int, int]            # lattice coordinates of cell (0, 0)
    cells: np.ndarray                  # (nx, ny) bool
    active: np.ndarray                 # (nx+1, ny+1) bool
    node_weight: np.ndarray            # (nx+1, ny+1) cell fraction in [0, 1]
    index: np.ndarray                  # (nx+1, ny+1) int, -1 for inactive
    n_active: int
    w_h: np.ndarray = field(repr=False, default=None)   # (nx, ny+1) edge weights
    w_v: np.ndarray = field(repr=False, default=None)   # (nx+1, ny) edge weights

    def node_id(self, i: int, j: int) -> int:
        """Index of the lattice node at absolute lattice coordinates (i, j)."""
        return int(self.index[i - self.origin[0], j - self.origin[1]])

    def node_ids(self, ii: np.ndarray, jj: np.ndarray) -> np.ndarray:
        return self.index[ii - self.origin[0], jj - self.origin[1]]

    def weights_vector(self) -> np.ndarray:
        return self.node_weight[self.active]

    def active_coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Absolute lattice coordinates (i, j) of the active nodes, index order."""
        ii, jj = np.nonzero(self.active)
        order = np.argsort(self.index[ii, jj])
        return ii[order] + self.origin[0], jj[order] + self.origin[1]


def build_grid(rects: Sequence[tuple[int, int, int, int]], h: float,
               default_bc: str | None,
               overrides: Sequence[BoundarySegment] = ()) -> Grid:
    """Grid over the union of closed rectangles given as (x0, y0, x1, y1) in lattice units.

    ``default_bc`` labels all boundary not covered by an override; pass None
    to require full coverage by overrides (unlabeled boundary is an error).
    """
    if not rects:
        raise ValidationError("no rectangles given")
    for r in rects:
        if r[2] <= r[0] or r[3] <= r[1]:
            raise ValidationError(f"degenerate rectangle {r}")
    x0 = min(r[0] for r in rects)
    y0 = min(r[1] for r in rects)
    x1 = max(r[2] for r in rects)
    y1 = max(r[3] for r in rects)
    nx, ny = x1 - x0, y1 - y0
    cells = np.zeros((nx, ny), dtype=bool)
    for (a, b, c, d) in rects:
        cells[a - x0:c - x0, b - y0:d - y0] = True

    pad = np.pad(cells, 1)
    count = (pad[:-1, :-1].astype(np.int8) + pad[1:, :-1] + pad[:-1, 1:] + pad[1:, 1:])
    boundary = (count > 0) & (count < 4)

    # label boundary nodes
    dirichlet = np.zeros_like(boundary)
    if np.any(boundary):
        ii, jj = np.nonzero(boundary)
        abs_i, abs_j = ii + x0, jj + y0
        label = np.full(len(ii), "", dtype=object)
        for seg in overrides:
            mask = seg.contains(abs_i, abs_j)
            label[mask & (label == "")] = seg.label
        unlabeled = label == ""
        if default_bc is None and np.any(unlabeled):
            k = int(np.nonzero(unlabeled)[0][0])
            raise ValidationError(f"unlabeled boundary node at ({abs_i[k]}, {abs_j[k]})")
        label[unlabeled] = default_bc
        bad = ~np.isin(label.astype(str), ("dirichlet", "neumann"))
        if np.any(bad):
            raise ValidationError(f"unknown boundary label {label[np.nonzero(bad)[0][0]]!r}")
        dirichlet[ii, jj] = label == "dirichlet"

    active = (count > 0) & ~dirichlet
    index = np.full(active.shape, -1, dtype=np.int64)
    index[active] = np.arange(int(active.sum()))

    cpad = np.pad(cells, ((0, 0), (1, 1)))
    w_h = 0.5 * (cpad[:, :-1].astype(float) + cpad[:, 1:])
    cpad = np.pad(cells, ((1, 1), (0, 0)))
    w_v = 0.5 * (cpad[:-1, :].astype(float) + cpad[1:, :])

    return Grid(h=h, origin=(x0, y0), cells=cells, active=active,
                node_weight=count / 4.0, index=index, n_active=int(active.sum()),
                w_h=w_h, w_v=w_v)


def stiffness(grid: Grid) -> tuple[sp.csr_matrix, np.ndarray]:
    """(K, w): stiffness with 1/h^2 scaling and the diagonal cell-fraction weights.

    K is exactly symmetric.  Eliminated Dirichlet neighbors contribute to the
    diagonal only, which is the standard node-elimination form.
    """
    h2 = grid.h ** 2
    idx = grid.index
    nx1, ny1 = grid.active.shape

    diag = np.zeros((nx1, ny1))
    diag[:-1, :] += grid.w_h
    diag[1:, :] += grid.w_h
    diag[:, :-1] += grid.w_v
    diag[:, 1:] += grid.w_v

    rows = [idx[grid.active]]
    cols = [idx[grid.active]]
    vals = [diag[grid.active] / h2]

    # horizontal couplings between active node pairs
    pa = grid.active[:-1, :] & grid.active[1:, :] & (grid.w_h > 0)
    r = idx[:-1, :][pa]
    c = idx[1:, :][pa]
    w = grid.w_h[pa] / h2
    rows.extend([r, c])
    cols.extend([c, r])
    vals.extend([-w, -w])

    pa = grid.active[:, :-1] & grid.active[:, 1:] & (grid.w_v > 0)
    r = idx[:, :-1][pa]
    c = idx[:, 1:][pa]
    w = grid.w_v[pa] / h2
    rows.extend([r, c])
    cols.extend([c, r])
    vals.extend([-w, -w])

    k = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(grid.n_active, grid.n_active)).tocsr()
    return k, grid.weights_vector()


def symmetrized(k: sp.csr_matrix, w: np.ndarray) -> sp.csr_matrix:
    """W^{-1/2} K W^{-1/2}: plain-symmetric operator with the same spectrum."""
    d = 1.0 / np.sqrt(w)
    return sp.diags(d) @ k @ sp.diags(d)


# ---------------------------------------------------------------------------
# discrete transverse modes of an interval cross-section
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransverseBasis:
    """Discrete eigenpairs of the 1D cross-section stencil of a width-w port.

    offsets are the included node positions 0..n relative to the lower wall;
    profiles are orthonormal under the weighted product sum_j w_t[j] u_j v_j.
    nu_hat are the stencil eigenvalues (2/h^2)(1 - cos(omega_k h)) and nu the
    continuum values omega_k^2.
    """

    bc: str                 # "DD" | "NN" | "DN" | "ND"
    n: int                  # cells across: w = n h
    h: float
    offsets: np.ndarray     # included transverse node offsets
    weights: np.ndarray     # w_t per included node
    omegas: np.ndarray      # continuum wavenumbers omega_k
    nu: np.ndarray          # continuum transverse eigenvalues
    nu_hat: np.ndarray      # discrete transverse eigenvalues
    profiles: np.ndarray    # (K, len(offsets))

    def project(self, values: np.ndarray) -> np.ndarray:
        """Coefficients <phi_k, values>_w for each mode."""
        return self.profiles @ (self.weights * values)


def transverse_basis(n: int, h: float, bc: str, k_modes: int) -> TransverseBasis:
    """First k_modes discrete transverse modes for an n-cell cross-section."""
    w = n * h
    if bc == "DD":
        offsets = np.arange(1, n)
        weights = np.ones(n - 1)
        omegas = np.array([(k + 1) * math.pi / w for k in range(k_modes)])
        raw = [np.sin(om * offsets * h) for om in omegas]
    elif bc == "NN":
        offsets = np.arange(0, n + 1)
        weights = np.ones(n + 1)
        weights[0] = weights[-1] = 0.5
        omegas = np.array([k * math.pi / w for k in range(k_modes)])
        raw = [np.cos(om * offsets * h) for om in omegas]
    elif bc in ("DN", "ND"):
        offsets = np.arange(1, n + 1)
        weights = np.ones(n)
        weights[-1] = 0.5
        omegas = np.array([(k + 0.5) * math.pi / w for k in range(k_modes)])
        raw = [np.sin(om * offsets * h) for om in omegas]
        if bc == "ND":
            offsets = n - offsets[::-1]
            raw = [r[::-1] for r in raw]
            weights = weights[::-1]
    else:
        raise ValidationError(f"unknown transverse condition {bc!r}")
    if k_modes > len(offsets):
        raise ValidationError(f"requested {k_modes} modes but the section has {len(offsets)} nodes")
    profiles = np.zeros((k_modes, len(offsets)))
    for k, r in enumerate(raw):
        nrm = math.sqrt(float(np.sum(weights * r * r)))
        profiles[k] = r / nrm
    nu_hat = (2.0 / h ** 2) * (1.0 - np.cos(omegas * h))
    return TransverseBasis(bc=bc, n=n, h=h, offsets=offsets, weights=weights,
                           omegas=omegas, nu=omegas ** 2, nu_hat=nu_hat, profiles=profiles)
