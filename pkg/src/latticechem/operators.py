"""Sparse Hamiltonian assembly over sector bases.

Hamiltonians are real symmetric in the site basis; states may be complex.
Two-particle operators are built by pulling the Kronecker-sum lift of the
single-particle matrix back through the sector isometry, which fixes all
exchange normalization factors (the sqrt(2) couplings onto coincident-site
kets) by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import ExchangeSymmetry, SectorBasis, sector_isometry
from .interactions import InteractionSpec, pair_kernel
from .lattice import LatticeGeometry, bond_list


@dataclass
class SparseOperator:
    """Hermitian sparse operator in compressed-row form over a SectorBasis."""

    matrix: sp.csr_matrix
    basis: SectorBasis | None = None
    _norm_est: float | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, psi: np.ndarray) -> np.ndarray:
        if psi.shape[0] != self.dim:
            raise ValueError(f"state has dim {psi.shape[0]}, operator has {self.dim}")
        return self.matrix @ psi

    def expectation(self, psi: np.ndarray) -> float:
        return float(np.real(np.vdot(psi, self.matrix @ psi)))

    def norm_estimate(self) -> float:
        """Infinity-norm upper bound on the spectral radius; cached."""
        if self._norm_est is None:
            self._norm_est = float(np.abs(self.matrix).sum(axis=1).max())
        return self._norm_est

    def is_value_symmetric(self, tol: float = 1e-12) -> bool:
        d = self.matrix - self.matrix.T
        return d.nnz == 0 or float(np.abs(d.data).max()) <= tol

    def scaled(self, factor: float) -> "SparseOperator":
        return SparseOperator(self.matrix * factor, self.basis)

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(
            (self.matrix + other.matrix).tocsr(), self.basis or other.basis
        )

    def dump_triplets(self, path) -> None:
        """Debug dump as 'row col value' lines."""
        coo = self.matrix.tocoo()
        with open(path, "w") as f:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                f.write(f"{r} {c} {v!r}\n")


def apply(op: SparseOperator, psi: np.ndarray) -> np.ndarray:
    return op.apply(psi)


def single_particle_hopping(g: LatticeGeometry, J: float = 1.0) -> sp.csr_matrix:
    """-J on every nearest-neighbor bond of the open lattice."""
    bonds = bond_list(g)
    n = g.n_sites
    if len(bonds) == 0:
        return sp.csr_matrix((n, n))
    i, j = bonds[:, 0], bonds[:, 1]
    data = np.full(len(bonds), -J)
    h = sp.coo_matrix(
        (np.concatenate([data, data]), (np.concatenate([i, j]), np.concatenate([j, i]))),
        shape=(n, n),
    )
    return h.tocsr()


def _lift_one_body(h: sp.csr_matrix, basis: SectorBasis) -> sp.csr_matrix:
    """Sector matrix of h acting on each particle: S^T (h x 1 + 1 x h) S."""
    if basis.particle_count == 1:
        return h.tocsr()
    n = h.shape[0]
    eye = sp.identity(n, format="csr")
    two_body = sp.kron(h, eye, format="csr") + sp.kron(eye, h, format="csr")
    s = sector_isometry(basis)
    lifted = (s.T @ two_body @ s).tocsr()
    lifted.sum_duplicates()
    return lifted


def assemble_hopping(basis: SectorBasis, J: float = 1.0) -> SparseOperator:
    """Kinetic term alone, lifted to the sector."""
    h = single_particle_hopping(basis.geometry, J)
    return SparseOperator(_lift_one_body(h, basis), basis)


def assemble_site_diagonal(
    basis: SectorBasis, field_values: np.ndarray, sign: float = 1.0
) -> SparseOperator:
    """Diagonal operator sign * sum_particles field(site of particle)."""
    field_values = np.asarray(field_values, dtype=float)
    n = basis.geometry.n_sites
    if field_values.shape != (n,):
        raise ValueError(
            f"field has shape {field_values.shape}, expected ({n},) for this lattice"
        )
    if basis.particle_count == 1:
        diag = sign * field_values
    else:
        diag = sign * (field_values[basis.pair_i] + field_values[basis.pair_j])
    return SparseOperator(sp.diags(diag, format="csr"), basis)


def assemble_h0(basis: SectorBasis, potential_field: np.ndarray, J: float = 1.0) -> SparseOperator:
    """Hopping plus background potential; the field enters with a minus sign."""
    hop = assemble_hopping(basis, J)
    pot = assemble_site_diagonal(basis, potential_field, sign=-1.0)
    return hop + pot


def assemble_interaction(basis: SectorBasis, spec: InteractionSpec) -> SparseOperator:
    """Diagonal pair-interaction operator; two-particle sectors only.

    Coincident-site entries exist only where the basis has them (symmetric and
    distinguishable sectors); the antisymmetric sector excludes them by Pauli.
    """
    if basis.particle_count != 2:
        raise ValueError("interaction operator needs a two-particle basis")
    g = basis.geometry
    xi, yi = basis.pair_i % g.lx, basis.pair_i // g.lx
    xj, yj = basis.pair_j % g.lx, basis.pair_j // g.lx
    dist = np.hypot(xi - xj, yi - yj)
    return SparseOperator(sp.diags(pair_kernel(dist, spec), format="csr"), basis)


def distinguishable_reference(
    g: LatticeGeometry, potential_field: np.ndarray, spec: InteractionSpec | None, J: float = 1.0
) -> np.ndarray:
    """Dense H x 1 + 1 x H (+ interaction diagonal) on ordered pairs.

    Brute-force oracle for sector assembly; keep lattices tiny.
    """
    n = g.n_sites
    h = (
        single_particle_hopping(g, J) - sp.diags(np.asarray(potential_field, dtype=float))
    ).toarray()
    eye = np.eye(n)
    full = np.kron(h, eye) + np.kron(eye, h)
    if spec is not None:
        dist_basis = SectorBasis(
            g, 2, ExchangeSymmetry.DISTINGUISHABLE,
            *np.divmod(np.arange(n * n, dtype=np.int64), n),
        )
        full += assemble_interaction(dist_basis, spec).matrix.toarray()
    return full
