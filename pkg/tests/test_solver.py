import numpy as np
import pytest
import scipy.sparse as sp

from latticechem.basis import build_sector_basis
from latticechem.lattice import LatticeGeometry
from latticechem.operators import SparseOperator, assemble_h0
from latticechem.potentials import NucleusSpec, nuclear_field
from latticechem.solver import (
    classify_orbital,
    free_lattice_energy,
    ground_state,
    low_spectrum,
    orient_degenerate_pair,
    principal_energy,
)


def _single_particle(lx, ly, a0, charge, cx=None, cy=None):
    g = LatticeGeometry(lx, ly)
    basis = build_sector_basis(g, 1)
    cx = (lx - 1) / 2 if cx is None else cx
    cy = (ly - 1) / 2 if cy is None else cy
    field = nuclear_field(g, NucleusSpec(cx, cy, charge=charge), a0)
    return g, assemble_h0(basis, field)


def test_two_site_ground():
    g = LatticeGeometry(2, 1)
    h = assemble_h0(build_sector_basis(g, 1), np.zeros(2))
    e, psi = ground_state(h)
    assert e == pytest.approx(-1.0)
    assert np.linalg.norm(psi) == pytest.approx(1.0)


def test_square_plaquette_spectrum():
    g = LatticeGeometry(2, 2)
    h = assemble_h0(build_sector_basis(g, 1), np.zeros(4))
    vals, vecs = low_spectrum(h, 4)
    np.testing.assert_allclose(vals, [-2.0, 0.0, 0.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(vecs.T @ vecs, np.eye(4), atol=1e-8)


def test_diagonal_operator_ground():
    diag = np.array([3.0, -1.5, 0.2, 7.0])
    op = SparseOperator(sp.diags(diag, format="csr"))
    e, psi = ground_state(op)
    assert e == pytest.approx(-1.5)
    assert abs(psi[1]) == pytest.approx(1.0)


def test_arpack_matches_dense_oracle():
    # same 441-site instance through ARPACK and dense diagonalization
    _, h = _single_particle(21, 21, a0=4.0, charge=2.0)
    vals_sparse, vecs_sparse = low_spectrum(h, 4, dense_below=0)
    vals_dense, _ = low_spectrum(h, 4, dense_below=10**9)
    np.testing.assert_allclose(vals_sparse, vals_dense, atol=1e-8)
    gram = vecs_sparse.T @ vecs_sparse
    np.testing.assert_allclose(gram, np.eye(4), atol=1e-8)


def test_k1_reduces_to_ground_state():
    _, h = _single_particle(9, 9, a0=2.0, charge=1.0)
    vals, vecs = low_spectrum(h, 1)
    e, psi = ground_state(h)
    assert vals[0] == pytest.approx(e, abs=1e-12)
    assert abs(np.dot(vecs[:, 0], psi)) == pytest.approx(1.0, abs=1e-10)


def test_principal_energy():
    assert principal_energy(1, 1.0) == pytest.approx(-1.0)
    assert principal_energy(2, 1.0) == pytest.approx(-1.0 / 9)
    gap = principal_energy(3, 1.0) - principal_energy(2, 1.0)
    assert gap == pytest.approx(1 / 9 - 1 / 25)
    assert gap == pytest.approx(0.0711, abs=2e-4)
    with pytest.raises(ValueError):
        principal_energy(0, 1.0)


@pytest.mark.parametrize(
    "side,a0",
    [(21, 2.0), (41, 4.0)],  # lattice >= (10 a0 + 1)^2
)
def test_bound_level_bands(side, a0):
    """Lowest level within 25% of -Ry, first excited within 0.1 Ry of -Ry/9,
    both measured against the free-lattice energy of the same box."""
    g, h = _single_particle(side, side, a0=a0, charge=1.0)
    vals, _ = low_spectrum(h, 3)
    ry = 1.0 / a0**2
    e_free = free_lattice_energy(g)
    e1 = vals[0] - e_free
    e2p = vals[1] - e_free
    assert abs(e1 - (-ry)) / ry <= 0.25
    assert abs(e2p - (-ry / 9)) / ry <= 0.1


def _sampled(g, fn, cx, cy):
    xs, ys = g.coordinate_arrays()
    dx, dy = xs - cx, ys - cy
    r = np.hypot(dx, dy)
    psi = fn(r, dx, dy)
    return psi / np.linalg.norm(psi)


def test_classify_continuum_profiles():
    g = LatticeGeometry(31, 31)
    cx = cy = 15.0
    s1 = _sampled(g, lambda r, dx, dy: np.exp(-r / 2.0), cx, cy)
    assert classify_orbital(s1, g, (cx, cy)) == "1s"
    p2 = _sampled(g, lambda r, dx, dy: dx * np.exp(-r / 3.0), cx, cy)
    assert classify_orbital(p2, g, (cx, cy)) == "2p"
    s2 = _sampled(g, lambda r, dx, dy: (r - 3.0) * np.exp(-r / 3.0), cx, cy)
    assert classify_orbital(s2, g, (cx, cy)) == "2s"
    d3 = _sampled(g, lambda r, dx, dy: (dx**2 - dy**2) * np.exp(-r / 3.0), cx, cy)
    assert classify_orbital(d3, g, (cx, cy)) == "3d"
    f4 = _sampled(g, lambda r, dx, dy: (dx**3 - 3 * dx * dy**2) * np.exp(-r / 3.5), cx, cy)
    assert classify_orbital(f4, g, (cx, cy)) == "4f"


def test_classify_random_is_other():
    g = LatticeGeometry(21, 21)
    rng = np.random.default_rng(2)
    psi = rng.normal(size=g.n_sites)
    psi /= np.linalg.norm(psi)
    assert classify_orbital(psi, g, (10.0, 10.0)) == "other"


def test_classify_phase_and_symmetry_invariance():
    g = LatticeGeometry(25, 25)
    cx = cy = 12.0
    p2 = _sampled(g, lambda r, dx, dy: dx * np.exp(-r / 3.0), cx, cy)
    assert classify_orbital(np.exp(1j * 0.7) * p2, g, (cx, cy)) == "2p"
    mirrored = p2.reshape(25, 25)[:, ::-1].ravel()  # x -> -x about the center
    assert classify_orbital(mirrored, g, (cx, cy)) == "2p"


def test_classify_on_computed_spectrum():
    g, h = _single_particle(41, 41, a0=4.0, charge=1.0)
    vals, vecs = low_spectrum(h, 4)
    labels = [classify_orbital(vecs[:, m], g, (20.0, 20.0)) for m in range(4)]
    assert labels[0] == "1s"
    assert labels[1] == "2p" and labels[2] == "2p"


def test_orient_degenerate_pair_picks_axis():
    g, h = _single_particle(21, 21, a0=2.0, charge=1.0)
    vals, vecs = low_spectrum(h, 3)
    pair = vecs[:, 1:3]
    px = orient_degenerate_pair(pair, g, axis="x")
    xs, _ = g.coordinate_arrays()
    dipole = float(np.abs(px) ** 2 @ (xs - 10.0) ** 2)
    # oriented state is x-odd: its density has larger x spread than y spread
    _, ys = g.coordinate_arrays()
    spread_y = float(np.abs(px) ** 2 @ (ys - 10.0) ** 2)
    assert dipole > 2 * spread_y


def test_nonconvergence_reports():
    from latticechem.solver import ConvergenceError

    rng = np.random.default_rng(0)
    mat = sp.random(2500, 2500, density=0.002, random_state=0, format="csr")
    mat = mat + mat.T
    op = SparseOperator(mat.tocsr())
    with pytest.raises(ConvergenceError):
        low_spectrum(op, 4, tol=1e-14, maxiter=3, dense_below=0)
