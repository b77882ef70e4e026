"""One- and two-particle spatial bases with exchange symmetry sectors.

The Hamiltonian never couples the spin projections, so for two fermions the
spin state only selects the exchange symmetry of the spatial wavefunction:
a spin singlet means a symmetric (bosonic) spatial sector, a triplet an
antisymmetric (fermionic) one. The distinguishable sector (all ordered site
pairs) exists for validation: embedding both symmetry sectors into it must
reproduce its spectrum exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lattice import LatticeGeometry


class ExchangeSymmetry(enum.Enum):
    SYMMETRIC = "symmetric"          # spin singlet, bosonic spatial wavefunction
    ANTISYMMETRIC = "antisymmetric"  # spin triplet, fermionic spatial wavefunction
    DISTINGUISHABLE = "distinguishable"


@dataclass(frozen=True)
class SectorBasis:
    """Dense index maps for a one- or two-particle sector.

    For two particles, basis state b holds the site pair (pair_i[b], pair_j[b]),
    canonically ordered i <= j (symmetric), i < j (antisymmetric), or free
    (distinguishable). For one particle both arrays equal the site index.
    """

    geometry: LatticeGeometry
    particle_count: int
    symmetry: ExchangeSymmetry
    pair_i: np.ndarray
    pair_j: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.pair_i)

    def index_of_pair(self, i, j):
        """Basis index of site pair (i, j); accepts scalars or arrays.

        Order of i and j does not matter outside the distinguishable sector.
        """
        n = self.geometry.n_sites
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        if self.particle_count == 1:
            return i
        if self.symmetry is ExchangeSymmetry.DISTINGUISHABLE:
            return i * n + j
        lo = np.minimum(i, j)
        hi = np.maximum(i, j)
        if self.symmetry is ExchangeSymmetry.SYMMETRIC:
            return lo * n - lo * (lo - 1) // 2 + (hi - lo)
        if np.any(lo == hi):
            raise ValueError("antisymmetric sector has no i == j states")
        return lo * n - lo * (lo + 1) // 2 + (hi - lo - 1)

    def pair_of_index(self, b: int) -> tuple[int, int]:
        return int(self.pair_i[b]), int(self.pair_j[b])

    def basis_state(self, sites) -> np.ndarray:
        """Unit vector on the basis ket holding the given site occupation."""
        sites = np.atleast_1d(np.asarray(sites, dtype=np.int64))
        if len(sites) != self.particle_count:
            raise ValueError(
                f"need {self.particle_count} sites for this sector, got {len(sites)}"
            )
        psi = np.zeros(self.dim, dtype=complex)
        if self.particle_count == 1:
            psi[int(sites[0])] = 1.0
        else:
            psi[int(self.index_of_pair(sites[0], sites[1]))] = 1.0
        return psi


def build_sector_basis(
    g: LatticeGeometry,
    particle_count: int,
    symmetry: ExchangeSymmetry | None = None,
) -> SectorBasis:
    """Enumerate the sector in lexicographic pair order."""
    n = g.n_sites
    if particle_count == 1:
        idx = np.arange(n, dtype=np.int64)
        return SectorBasis(g, 1, ExchangeSymmetry.DISTINGUISHABLE, idx, idx.copy())
    if particle_count != 2:
        raise ValueError(
            f"only 1- and 2-particle sectors are supported, got {particle_count}"
        )
    if symmetry is None:
        raise ValueError("two-particle sector needs an exchange symmetry")
    if symmetry is ExchangeSymmetry.SYMMETRIC:
        pi, pj = np.triu_indices(n, k=0)
    elif symmetry is ExchangeSymmetry.ANTISYMMETRIC:
        pi, pj = np.triu_indices(n, k=1)
    else:
        pi, pj = np.divmod(np.arange(n * n, dtype=np.int64), n)
    return SectorBasis(g, 2, symmetry, pi.astype(np.int64), pj.astype(np.int64))


def sector_isometry(basis: SectorBasis) -> sp.csr_matrix:
    """Embedding S of a symmetry sector into the ordered-pair (N^2) space.

    Columns are the sector kets: |ii> maps to itself, |{i,j}> maps to
    (|ij> +/- |ji>)/sqrt(2). S^T S = identity on the sector; S^T A S pulls a
    distinguishable-space operator back onto the sector.
    """
    if basis.particle_count != 2:
        raise ValueError("isometry is defined for two-particle sectors")
    n = basis.geometry.n_sites
    dim = basis.dim
    if basis.symmetry is ExchangeSymmetry.DISTINGUISHABLE:
        return sp.identity(n * n, format="csr")
    i, j = basis.pair_i, basis.pair_j
    cols = np.arange(dim, dtype=np.int64)
    off = i != j
    inv = 1.0 / np.sqrt(2.0)
    rows = np.concatenate([i[off] * n + j[off], j[off] * n + i[off], i[~off] * n + j[~off]])
    col_idx = np.concatenate([cols[off], cols[off], cols[~off]])
    sign = -1.0 if basis.symmetry is ExchangeSymmetry.ANTISYMMETRIC else 1.0
    vals = np.concatenate(
        [np.full(off.sum(), inv), np.full(off.sum(), sign * inv), np.ones((~off).sum())]
    )
    return sp.csr_matrix((vals, (rows, col_idx)), shape=(n * n, dim))


def pair_amplitude(state: np.ndarray, basis: SectorBasis, i: int, j: int) -> complex:
    """Amplitude <i,j|state> with the sector's swap symmetry applied.

    Normalized so the squared amplitudes over canonical pairs sum to one.
    Antisymmetric sectors return exactly 0 for i == j and flip sign under swap.
    """
    if basis.particle_count != 2:
        raise ValueError("pair_amplitude needs a two-particle state")
    if basis.symmetry is ExchangeSymmetry.ANTISYMMETRIC:
        if i == j:
            return 0.0 + 0.0j
        amp = complex(state[int(basis.index_of_pair(i, j))])
        return -amp if i > j else amp
    return complex(state[int(basis.index_of_pair(i, j))])
