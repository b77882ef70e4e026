"""Repulsive power-law pair interaction with a doubled on-site term.

The kernel between distinct sites is v_int / r^alpha; two opposite-spin
particles on the same site repel with onsite_factor * v_int. The default
overall strength ties the repulsion at r = a0 to the nuclear attraction
there: v_int = J * a0^(alpha-2) / alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import SiteCoord, euclidean_distance


@dataclass(frozen=True)
class InteractionSpec:
    v_int: float
    alpha: float = 6.0
    onsite_factor: float = 2.0
    clamp: float | None = None

    def __post_init__(self):
        if self.v_int < 0:
            raise ValueError(f"v_int must be >= 0, got {self.v_int}")
        if self.alpha <= 2:
            raise ValueError(
                f"alpha must be > 2 for a convergent 2D lattice sum, got {self.alpha}"
            )
        if self.clamp is not None and self.clamp < 0:
            raise ValueError(f"clamp must be >= 0, got {self.clamp}")


def default_vint(a0: float, alpha: float, J: float = 1.0) -> float:
    """J * a0^(alpha-2) / alpha."""
    if a0 <= 0:
        raise ValueError(f"a0 must be > 0, got {a0}")
    if alpha <= 2:
        raise ValueError(f"alpha must be > 2, got {alpha}")
    return J * a0 ** (alpha - 2) / alpha


def pair_kernel(dist: np.ndarray, spec: InteractionSpec) -> np.ndarray:
    """Vectorized pair energy for an array of distances (0 means same site)."""
    dist = np.asarray(dist, dtype=float)
    out = np.empty_like(dist)
    onsite = dist == 0.0
    out[onsite] = spec.onsite_factor * spec.v_int
    out[~onsite] = spec.v_int / dist[~onsite] ** spec.alpha
    if spec.clamp is not None:
        np.minimum(out, spec.clamp, out=out)
    return out


def pair_interaction(a: SiteCoord, b: SiteCoord, spec: InteractionSpec) -> float:
    """Interaction energy of a particle pair at sites a and b."""
    return float(pair_kernel(np.array(euclidean_distance(a, b)), spec))
