import numpy as np
import pytest

from latticechem.basis import (
    ExchangeSymmetry,
    build_sector_basis,
    pair_amplitude,
    sector_isometry,
)
from latticechem.lattice import LatticeGeometry


def test_sector_dimensions():
    g = LatticeGeometry(21, 21)
    assert build_sector_basis(g, 2, ExchangeSymmetry.SYMMETRIC).dim == 97_461
    assert build_sector_basis(g, 2, ExchangeSymmetry.ANTISYMMETRIC).dim == 97_020
    assert build_sector_basis(g, 1).dim == 441
    tiny = LatticeGeometry(2, 1)
    assert build_sector_basis(tiny, 2, ExchangeSymmetry.ANTISYMMETRIC).dim == 1
    small = LatticeGeometry(3, 3)
    assert build_sector_basis(small, 2, ExchangeSymmetry.DISTINGUISHABLE).dim == 81


def test_three_particles_unsupported():
    with pytest.raises(ValueError):
        build_sector_basis(LatticeGeometry(3, 3), 3, ExchangeSymmetry.SYMMETRIC)


@pytest.mark.parametrize(
    "symmetry",
    [ExchangeSymmetry.SYMMETRIC, ExchangeSymmetry.ANTISYMMETRIC, ExchangeSymmetry.DISTINGUISHABLE],
)
def test_index_pair_roundtrip(symmetry):
    g = LatticeGeometry(13, 9)
    basis = build_sector_basis(g, 2, symmetry)
    idx = np.arange(basis.dim)
    back = basis.index_of_pair(basis.pair_i, basis.pair_j)
    np.testing.assert_array_equal(back, idx)


def test_roundtrip_large_sector():
    # full bijection at the production scale used by the two-well runs
    g = LatticeGeometry(24, 21)
    basis = build_sector_basis(g, 2, ExchangeSymmetry.SYMMETRIC)
    assert basis.dim == 504 * 505 // 2
    back = basis.index_of_pair(basis.pair_i, basis.pair_j)
    np.testing.assert_array_equal(back, np.arange(basis.dim))


def test_pair_ordering_is_lexicographic():
    g = LatticeGeometry(3, 2)
    basis = build_sector_basis(g, 2, ExchangeSymmetry.ANTISYMMETRIC)
    pairs = list(zip(basis.pair_i.tolist(), basis.pair_j.tolist()))
    assert pairs == sorted(pairs)
    assert all(i < j for i, j in pairs)


def test_pair_amplitude_symmetric():
    g = LatticeGeometry(2, 1)
    basis = build_sector_basis(g, 2, ExchangeSymmetry.SYMMETRIC)
    psi = basis.basis_state([0, 0])
    assert pair_amplitude(psi, basis, 0, 0) == pytest.approx(1.0)
    psi01 = basis.basis_state([0, 1])
    assert pair_amplitude(psi01, basis, 0, 1) == pair_amplitude(psi01, basis, 1, 0)


def test_pair_amplitude_antisymmetric():
    g = LatticeGeometry(3, 1)
    basis = build_sector_basis(g, 2, ExchangeSymmetry.ANTISYMMETRIC)
    psi = basis.basis_state([0, 2])
    assert pair_amplitude(psi, basis, 1, 1) == 0.0
    assert pair_amplitude(psi, basis, 0, 2) == -pair_amplitude(psi, basis, 2, 0)
    assert abs(pair_amplitude(psi, basis, 0, 2)) == pytest.approx(1.0)


def test_isometry_is_isometric():
    g = LatticeGeometry(3, 3)
    for symmetry in (ExchangeSymmetry.SYMMETRIC, ExchangeSymmetry.ANTISYMMETRIC):
        basis = build_sector_basis(g, 2, symmetry)
        s = sector_isometry(basis)
        gram = (s.T @ s).toarray()
        np.testing.assert_allclose(gram, np.eye(basis.dim), atol=1e-14)


def test_basis_state_validation():
    g = LatticeGeometry(3, 3)
    basis = build_sector_basis(g, 2, ExchangeSymmetry.SYMMETRIC)
    with pytest.raises(ValueError):
        basis.basis_state([1])
    anti = build_sector_basis(g, 2, ExchangeSymmetry.ANTISYMMETRIC)
    with pytest.raises(ValueError):
        anti.index_of_pair(4, 4)
