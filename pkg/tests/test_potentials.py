import numpy as np
import pytest

from latticechem.lattice import LatticeGeometry, SiteCoord, site_index
from latticechem.potentials import (
    ExtraTerm,
    NucleusSpec,
    PotentialSpec,
    assemble_potential,
    eval_linear_drive,
    eval_nuclear,
    linear_drive_field,
    nuclear_field,
    orbital_bias_field,
)


def test_eval_nuclear_values():
    n = NucleusSpec(0, 0, charge=1.0)
    assert eval_nuclear(SiteCoord(1, 0), n, a0=2.0) == pytest.approx(0.5)
    n2 = NucleusSpec(0, 0, charge=2.0)
    assert eval_nuclear(SiteCoord(4, 0), n2, a0=4.0) == pytest.approx(0.125)
    # on-site value is set by the core regularization radius
    assert eval_nuclear(SiteCoord(0, 0), NucleusSpec(0, 0, core_radius=0.5), a0=2.0) == pytest.approx(1.0)


def test_eval_nuclear_monotone_decay():
    n = NucleusSpec(0, 0, charge=1.0)
    vals = [eval_nuclear(SiteCoord(x, 0), n, a0=2.0) for x in range(10)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    assert all(v > 0 for v in vals)


def test_eval_nuclear_bad_a0():
    with pytest.raises(ValueError):
        eval_nuclear(SiteCoord(0, 0), NucleusSpec(0, 0), a0=0.0)


def test_nuclear_field_matches_pointwise():
    g = LatticeGeometry(6, 5)
    n = NucleusSpec(2.5, 2.0, charge=1.3, strength_scale=0.9)
    field = nuclear_field(g, n, a0=2.0)
    for x in range(g.lx):
        for y in range(g.ly):
            assert field[site_index(SiteCoord(x, y), g)] == pytest.approx(
                eval_nuclear(SiteCoord(x, y), n, 2.0)
            )


def test_linear_drive_profile():
    g = LatticeGeometry(40, 3)
    assert eval_linear_drive(SiteCoord(20, 0), g, a0=1.0) == 0.0
    assert eval_linear_drive(SiteCoord(0, 1), g, a0=1.0) == -20.0
    assert eval_linear_drive(SiteCoord(30, 2), g, a0=1.0) == 10.0
    field = linear_drive_field(g, 1.0)
    assert field[site_index(SiteCoord(30, 2), g)] == 10.0


def test_assemble_empty_is_zero():
    g = LatticeGeometry(4, 4)
    spec = PotentialSpec(a0=1.0)
    assert np.all(assemble_potential(spec, g) == 0.0)


def test_assemble_peak_at_nucleus():
    g = LatticeGeometry(21, 21)
    spec = PotentialSpec(nuclei=(NucleusSpec(10, 10, charge=2.0),), a0=4.0)
    field = assemble_potential(spec, g)
    assert np.argmax(field) == site_index(SiteCoord(10, 10), g)


def test_assemble_superposition_and_linearity():
    g = LatticeGeometry(9, 7)
    n1 = NucleusSpec(2, 3, charge=1.0)
    n2 = NucleusSpec(6, 3, charge=1.0)
    both = assemble_potential(PotentialSpec(nuclei=(n1, n2), a0=2.0), g)
    single = assemble_potential(PotentialSpec(nuclei=(n1,), a0=2.0), g)
    other = assemble_potential(PotentialSpec(nuclei=(n2,), a0=2.0), g)
    np.testing.assert_allclose(both, single + other, rtol=0, atol=0)
    # doubling strength_scale doubles the contribution exactly
    doubled = assemble_potential(
        PotentialSpec(nuclei=(NucleusSpec(2, 3, charge=1.0, strength_scale=2.0),), a0=2.0), g
    )
    np.testing.assert_allclose(doubled, 2 * single, rtol=0, atol=0)


def test_spin_independent_fields_identical():
    g = LatticeGeometry(5, 5)
    spec = PotentialSpec(nuclei=(NucleusSpec(2, 2),), a0=2.0)
    up = assemble_potential(spec, g, "up")
    dn = assemble_potential(spec, g, "down")
    assert np.array_equal(up, dn)


def test_spin_dependence_scales():
    g = LatticeGeometry(5, 5)
    spec = PotentialSpec(
        nuclei=(NucleusSpec(2, 2),), a0=2.0, spin_dependence={"up": 1.0, "down": 0.5}
    )
    up = assemble_potential(spec, g, "up")
    dn = assemble_potential(spec, g, "down")
    np.testing.assert_allclose(dn, 0.5 * up)
    assert spec.is_spin_dependent()


def test_orbital_bias_field():
    psi = np.zeros(16)
    psi[5] = 1.0
    field = orbital_bias_field(psi, 0.01)
    assert field[5] == pytest.approx(0.01)
    assert np.count_nonzero(field) == 1
    assert np.all(orbital_bias_field(psi, 0.0) == 0.0)
    rng = np.random.default_rng(1)
    arbitrary = rng.normal(size=16)
    assert orbital_bias_field(arbitrary, 0.37).max() == pytest.approx(0.37)
    with pytest.raises(ValueError):
        orbital_bias_field(np.zeros(16), 0.01)


def test_custom_per_site_shape_error():
    g = LatticeGeometry(4, 4)
    bad = PotentialSpec(
        a0=1.0, extra_terms=(ExtraTerm("custom_per_site", 1.0, np.ones(7)),)
    )
    with pytest.raises(ValueError):
        assemble_potential(bad, g)


def test_nuclear_symmetry_about_nucleus():
    # lattice mirror that fixes the nucleus leaves the field invariant
    g = LatticeGeometry(9, 9)
    field = nuclear_field(g, NucleusSpec(4, 4, charge=1.0), a0=2.0)
    grid = field.reshape(9, 9)
    np.testing.assert_allclose(grid, grid[::-1, :])
    np.testing.assert_allclose(grid, grid[:, ::-1])
    np.testing.assert_allclose(grid, grid.T)
