"""Rectangular 2D lattice geometry with row-major site indexing.

All distances are measured in units of the lattice constant. Boundaries are
open (hard wall): edge and corner sites simply have fewer neighbors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SiteCoord:
    """Integer lattice coordinate, column x and row y."""

    x: int
    y: int


@dataclass(frozen=True)
class LatticeGeometry:
    """An lx-by-ly grid of sites indexed row-major: index = x + lx*y."""

    lx: int
    ly: int

    def __post_init__(self):
        if self.lx < 1 or self.ly < 1:
            raise ValueError(f"lattice extents must be >= 1, got {self.lx}x{self.ly}")

    @property
    def n_sites(self) -> int:
        return self.lx * self.ly

    def contains(self, c: SiteCoord) -> bool:
        return 0 <= c.x < self.lx and 0 <= c.y < self.ly

    @property
    def center(self) -> tuple[float, float]:
        """Geometric center, half-integer for even extents."""
        return (self.lx - 1) / 2.0, (self.ly - 1) / 2.0

    def coordinate_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(xs, ys) for all sites in index order."""
        idx = np.arange(self.n_sites)
        return idx % self.lx, idx // self.lx


def from_padding(padding: int) -> LatticeGeometry:
    """Square lattice of extent 2p+1, leaving p sites around a centered nucleus."""
    if padding < 0:
        raise ValueError(f"padding must be >= 0, got {padding}")
    side = 2 * padding + 1
    return LatticeGeometry(side, side)


def site_index(c: SiteCoord, g: LatticeGeometry) -> int:
    """Row-major basis index of a coordinate; raises on out-of-bounds."""
    if not g.contains(c):
        raise ValueError(f"coordinate {c} outside {g.lx}x{g.ly} lattice")
    return c.x + g.lx * c.y


def site_coord(index: int, g: LatticeGeometry) -> SiteCoord:
    """Inverse of site_index."""
    if not 0 <= index < g.n_sites:
        raise ValueError(f"index {index} outside lattice with {g.n_sites} sites")
    return SiteCoord(index % g.lx, index // g.lx)


def euclidean_distance(a: SiteCoord, b: SiteCoord) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def neighbors(c: SiteCoord, g: LatticeGeometry) -> list[SiteCoord]:
    """Nearest neighbors under open boundary conditions (2 to 4 sites)."""
    if not g.contains(c):
        raise ValueError(f"coordinate {c} outside {g.lx}x{g.ly} lattice")
    out = []
    for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        n = SiteCoord(c.x + dx, c.y + dy)
        if g.contains(n):
            out.append(n)
    return out


def bond_list(g: LatticeGeometry) -> np.ndarray:
    """All nearest-neighbor bonds as an (n_bonds, 2) index array with i < j.

    Bond count is lx*(ly-1) + ly*(lx-1).
    """
    xs, ys = g.coordinate_arrays()
    idx = np.arange(g.n_sites)
    right = idx[xs < g.lx - 1]
    up = idx[ys < g.ly - 1]
    bonds = np.concatenate(
        [np.stack([right, right + 1], axis=1), np.stack([up, up + g.lx], axis=1)]
    )
    return bonds
