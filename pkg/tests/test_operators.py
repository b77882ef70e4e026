import numpy as np
import pytest

from latticechem.basis import ExchangeSymmetry, build_sector_basis
from latticechem.interactions import InteractionSpec
from latticechem.lattice import LatticeGeometry
from latticechem.operators import (
    assemble_h0,
    assemble_hopping,
    assemble_interaction,
    assemble_site_diagonal,
    apply,
    distinguishable_reference,
    single_particle_hopping,
)

ES = ExchangeSymmetry


def test_two_site_hopping_spectrum():
    g = LatticeGeometry(2, 1)
    basis = build_sector_basis(g, 1)
    h = assemble_h0(basis, np.zeros(2), J=1.0)
    vals = np.linalg.eigvalsh(h.matrix.toarray())
    np.testing.assert_allclose(vals, [-1.0, 1.0], atol=1e-14)


def test_distinguishable_spectrum_is_kronecker_sum():
    g = LatticeGeometry(3, 3)
    basis = build_sector_basis(g, 2, ES.DISTINGUISHABLE)
    h2 = assemble_h0(basis, np.zeros(9), J=1.0)
    single = single_particle_hopping(g, 1.0).toarray()
    e1 = np.linalg.eigvalsh(single)
    expected = np.sort((e1[:, None] + e1[None, :]).ravel())
    got = np.sort(np.linalg.eigvalsh(h2.matrix.toarray()))
    np.testing.assert_allclose(got, expected, atol=1e-10)


def test_uniform_potential_shifts_spectrum():
    g = LatticeGeometry(4, 3)
    basis = build_sector_basis(g, 1)
    base = np.linalg.eigvalsh(assemble_h0(basis, np.zeros(12)).matrix.toarray())
    shifted = np.linalg.eigvalsh(
        assemble_h0(basis, np.full(12, 0.37)).matrix.toarray()
    )
    np.testing.assert_allclose(shifted, base - 0.37, atol=1e-12)


@pytest.mark.parametrize("lx,ly", [(3, 3), (3, 2)])
def test_sector_embedding_oracle(lx, ly):
    """Symmetric + antisymmetric sector spectra = distinguishable spectrum."""
    rng = np.random.default_rng(42)
    g = LatticeGeometry(lx, ly)
    n = g.n_sites
    field = rng.normal(size=n)
    spec = InteractionSpec(0.8, alpha=6.0)
    sector_vals = []
    for symmetry in (ES.SYMMETRIC, ES.ANTISYMMETRIC):
        basis = build_sector_basis(g, 2, symmetry)
        h = assemble_h0(basis, field) + assemble_interaction(basis, spec)
        sector_vals.append(np.linalg.eigvalsh(h.matrix.toarray()))
    got = np.sort(np.concatenate(sector_vals))
    expected = np.sort(np.linalg.eigvalsh(distinguishable_reference(g, field, spec)))
    np.testing.assert_allclose(got, expected, atol=1e-10)


def test_interaction_diagonal_structure():
    g = LatticeGeometry(3, 3)
    spec = InteractionSpec(0.5, alpha=6.0)
    anti = assemble_interaction(build_sector_basis(g, 2, ES.ANTISYMMETRIC), spec)
    assert (anti.matrix - anti.matrix.multiply(np.eye(anti.dim))).nnz == 0
    # no coincident-site entries in the antisymmetric sector
    diag = anti.matrix.diagonal()
    assert diag.max() < 2 * 0.5

    sym_basis = build_sector_basis(g, 2, ES.SYMMETRIC)
    sym = assemble_interaction(sym_basis, spec)
    onsite = int(sym_basis.index_of_pair(4, 4))
    assert sym.matrix.diagonal()[onsite] == pytest.approx(1.0)  # 2 * v_int

    zero = assemble_interaction(sym_basis, InteractionSpec(0.0))
    assert np.all(zero.matrix.diagonal() == 0.0)


def test_interaction_rejects_single_particle():
    g = LatticeGeometry(3, 3)
    with pytest.raises(ValueError):
        assemble_interaction(build_sector_basis(g, 1), InteractionSpec(1.0))


def test_apply_identity_and_hermiticity():
    g = LatticeGeometry(4, 4)
    basis = build_sector_basis(g, 2, ES.SYMMETRIC)
    ident = assemble_site_diagonal(basis, np.full(16, 0.5))  # 0.5 per particle = 1
    rng = np.random.default_rng(5)
    psi = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    np.testing.assert_allclose(apply(ident, psi), psi, atol=1e-14)

    h = assemble_h0(basis, rng.normal(size=16)) + assemble_interaction(
        basis, InteractionSpec(0.9)
    )
    phi = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    lhs = np.vdot(phi, h.apply(psi))
    rhs = np.conj(np.vdot(psi, h.apply(phi)))
    assert abs(lhs - rhs) < 1e-12 * abs(lhs)
    assert abs(np.imag(np.vdot(psi, h.apply(psi)))) < 1e-12 * np.linalg.norm(psi) ** 2
    assert h.is_value_symmetric(1e-12)


def test_apply_twice_matches_dense_square():
    g = LatticeGeometry(10, 5)  # 50-site single-particle instance
    basis = build_sector_basis(g, 1)
    rng = np.random.default_rng(11)
    h = assemble_h0(basis, rng.normal(size=50))
    dense_sq = h.matrix.toarray() @ h.matrix.toarray()
    psi = rng.normal(size=50) + 1j * rng.normal(size=50)
    np.testing.assert_allclose(h.apply(h.apply(psi)), dense_sq @ psi, atol=1e-10)


def test_dim_mismatch_errors():
    g = LatticeGeometry(3, 3)
    basis = build_sector_basis(g, 1)
    h = assemble_h0(basis, np.zeros(9))
    with pytest.raises(ValueError):
        h.apply(np.zeros(4, dtype=complex))
    with pytest.raises(ValueError):
        assemble_site_diagonal(basis, np.zeros(5))


def test_hopping_sparsity_bound():
    # row nonzeros <= 2 * coordination per particle
    g = LatticeGeometry(6, 7)
    for symmetry, per_particle in ((ES.SYMMETRIC, 2), (ES.ANTISYMMETRIC, 2)):
        basis = build_sector_basis(g, 2, symmetry)
        hop = assemble_hopping(basis).matrix
        row_nnz = np.diff(hop.indptr)
        assert row_nnz.max() <= 1 + per_particle * 4 * 2


def test_symmetric_coincident_coupling_is_sqrt2():
    # <ii|H|{i,j}> = sqrt(2) h_ij for nearest neighbors i, j
    g = LatticeGeometry(3, 1)
    basis = build_sector_basis(g, 2, ES.SYMMETRIC)
    hop = assemble_hopping(basis, J=1.0).matrix.toarray()
    ii = int(basis.index_of_pair(1, 1))
    ij = int(basis.index_of_pair(0, 1))
    assert hop[ii, ij] == pytest.approx(-np.sqrt(2))
    assert hop[ij, ii] == pytest.approx(-np.sqrt(2))
