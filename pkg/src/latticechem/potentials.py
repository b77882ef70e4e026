"""Per-site background potential fields: nuclear wells, bias terms, linear drive.

Fields returned here follow the convention that a *positive* value is an
attractive well: the single-particle Hamiltonian receives the field with a
minus sign on its diagonal. The oscillating linear drive profile is the one
exception; it is its own operator and enters the Hamiltonian with a plus sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeGeometry, SiteCoord

#: On-site regularization length for the 1/r nuclear well, in lattice constants.
DEFAULT_CORE_RADIUS = 0.5


@dataclass(frozen=True)
class NucleusSpec:
    """A pointlike attractive 1/r well.

    The position may be non-integer (needed to center nuclei on even-sized
    lattices). ``strength_scale`` multiplies the whole well; the auxiliary
    preparation well runs at 0.9.
    """

    x: float
    y: float
    charge: float = 1.0
    strength_scale: float = 1.0
    core_radius: float = DEFAULT_CORE_RADIUS

    def __post_init__(self):
        if self.charge < 0:
            raise ValueError(f"charge must be >= 0, got {self.charge}")
        if self.core_radius <= 0:
            raise ValueError(f"core_radius must be > 0, got {self.core_radius}")


@dataclass(frozen=True)
class ExtraTerm:
    """Additional potential component: 'linear_x', 'orbital_bias' or 'custom_per_site'.

    payload: per-site array (orbital amplitudes or a custom field); unused for
    linear_x.
    """

    kind: str
    amplitude: float
    payload: np.ndarray | None = None

    _KINDS = ("linear_x", "orbital_bias", "custom_per_site")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown extra term kind {self.kind!r}")
        if not np.isfinite(self.amplitude):
            raise ValueError("extra term amplitude must be finite")


@dataclass(frozen=True)
class PotentialSpec:
    """Composable per-site, per-spin background potential."""

    nuclei: tuple[NucleusSpec, ...] = ()
    a0: float = 1.0
    hopping: float = 1.0
    extra_terms: tuple[ExtraTerm, ...] = ()
    spin_dependence: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.a0 <= 0:
            raise ValueError(f"a0 must be > 0, got {self.a0}")
        object.__setattr__(self, "nuclei", tuple(self.nuclei))
        object.__setattr__(self, "extra_terms", tuple(self.extra_terms))

    def is_spin_dependent(self) -> bool:
        scales = set(self.spin_dependence.values())
        return len(scales - {1.0}) > 0


def eval_nuclear(site: SiteCoord, nucleus: NucleusSpec, a0: float, J: float = 1.0) -> float:
    """Well depth J*Z/(a0*r) at one site, with r clamped to the core radius."""
    if a0 <= 0:
        raise ValueError(f"a0 must be > 0, got {a0}")
    r = np.hypot(site.x - nucleus.x, site.y - nucleus.y)
    r = max(r, nucleus.core_radius)
    return J * nucleus.charge * nucleus.strength_scale / (a0 * r)


def nuclear_field(g: LatticeGeometry, nucleus: NucleusSpec, a0: float, J: float = 1.0) -> np.ndarray:
    """Vectorized eval_nuclear over all sites."""
    if a0 <= 0:
        raise ValueError(f"a0 must be > 0, got {a0}")
    xs, ys = g.coordinate_arrays()
    r = np.hypot(xs - nucleus.x, ys - nucleus.y)
    np.maximum(r, nucleus.core_radius, out=r)
    return J * nucleus.charge * nucleus.strength_scale / (a0 * r)


def eval_linear_drive(site: SiteCoord, g: LatticeGeometry, a0: float) -> float:
    """Static profile of the oscillating drive: (x - lx/2)/a0."""
    return (site.x - g.lx / 2.0) / a0


def linear_drive_field(g: LatticeGeometry, a0: float) -> np.ndarray:
    xs, _ = g.coordinate_arrays()
    return (xs - g.lx / 2.0) / a0


def orbital_bias_field(psi2p: np.ndarray, eps: float) -> np.ndarray:
    """Attractive bias proportional to |psi|, rescaled so its peak equals eps."""
    mag = np.abs(np.asarray(psi2p, dtype=float))
    peak = mag.max()
    if peak == 0.0:
        raise ValueError("orbital bias needs a nonzero orbital amplitude pattern")
    return eps * mag / peak


def assemble_potential(spec: PotentialSpec, g: LatticeGeometry, spin: str = "up") -> np.ndarray:
    """Total per-site field for one spin: nuclear wells plus extra terms."""
    n = g.n_sites
    total = np.zeros(n)
    for nuc in spec.nuclei:
        total += nuclear_field(g, nuc, spec.a0, spec.hopping)
    for term in spec.extra_terms:
        if term.kind == "linear_x":
            total += term.amplitude * linear_drive_field(g, spec.a0)
        elif term.kind == "orbital_bias":
            total += orbital_bias_field(term.payload, term.amplitude)
        else:  # custom_per_site
            payload = np.asarray(term.payload, dtype=float)
            if payload.shape != (n,):
                raise ValueError(
                    f"custom_per_site payload has shape {payload.shape}, expected ({n},)"
                )
            total += term.amplitude * payload
    return total * spec.spin_dependence.get(spin, 1.0)
