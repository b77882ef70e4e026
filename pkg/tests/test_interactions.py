import numpy as np
import pytest

from latticechem.interactions import (
    InteractionSpec,
    default_vint,
    pair_interaction,
    pair_kernel,
)
from latticechem.lattice import SiteCoord


def test_onsite_doubling():
    spec = InteractionSpec(0.7)
    assert pair_interaction(SiteCoord(3, 3), SiteCoord(3, 3), spec) == pytest.approx(1.4)


def test_power_law_values():
    spec = InteractionSpec(1.0, alpha=6.0)
    assert pair_interaction(SiteCoord(0, 0), SiteCoord(1, 0), spec) == pytest.approx(1.0)
    assert pair_interaction(SiteCoord(0, 0), SiteCoord(2, 0), spec) == pytest.approx(1 / 64)


def test_symmetry():
    spec = InteractionSpec(0.3, alpha=3.0)
    a, b = SiteCoord(1, 5), SiteCoord(4, 2)
    assert pair_interaction(a, b, spec) == pair_interaction(b, a, spec)


def test_default_vint():
    assert default_vint(2.0, 6.0) == pytest.approx(16 / 6)
    assert default_vint(4.0, 6.0) == pytest.approx(256 / 6)
    for alpha in (3.0, 4.0, 6.0):
        assert default_vint(1.0, alpha) == pytest.approx(1.0 / alpha)


def test_calibration_at_bohr_radius():
    # pair energy at r = a0 equals Ry / alpha = J / (alpha a0^2)
    for a0 in (2.0, 4.0):
        for alpha in (3.0, 6.0):
            spec = InteractionSpec(default_vint(a0, alpha), alpha)
            got = float(pair_kernel(np.array(a0), spec))
            assert got == pytest.approx(1.0 / (alpha * a0**2))


def test_monotone_decrease():
    spec = InteractionSpec(2.0, alpha=3.0)
    r = np.arange(1.0, 12.0)
    vals = pair_kernel(r, spec)
    assert np.all(np.diff(vals) < 0)


def test_clamp():
    spec = InteractionSpec(1.0, alpha=6.0, clamp=0.5)
    assert pair_interaction(SiteCoord(0, 0), SiteCoord(1, 0), spec) == pytest.approx(0.5)
    assert pair_interaction(SiteCoord(0, 0), SiteCoord(0, 0), spec) == pytest.approx(0.5)
    assert pair_interaction(SiteCoord(0, 0), SiteCoord(2, 0), spec) == pytest.approx(1 / 64)


def test_validation():
    with pytest.raises(ValueError):
        InteractionSpec(-1.0)
    with pytest.raises(ValueError):
        InteractionSpec(1.0, alpha=2.0)
    with pytest.raises(ValueError):
        default_vint(0.0, 6.0)
