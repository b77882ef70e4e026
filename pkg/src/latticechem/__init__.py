"""Few-body lattice simulation: exact diagonalization, adiabatic preparation,
and drive spectroscopy for particles in attractive wells with power-law
repulsion on 2D optical lattices."""

from .basis import ExchangeSymmetry, SectorBasis, build_sector_basis, pair_amplitude
from .dynamics import Schedule, Segment, TimeDependentHamiltonian, evolve, fidelity
from .interactions import InteractionSpec, default_vint, pair_interaction
from .lattice import LatticeGeometry, SiteCoord, euclidean_distance, neighbors, site_index
from .operators import (
    SparseOperator,
    assemble_h0,
    assemble_hopping,
    assemble_interaction,
    assemble_site_diagonal,
)
from .potentials import NucleusSpec, PotentialSpec, assemble_potential
from .solver import classify_orbital, ground_state, low_spectrum, principal_energy

__version__ = "0.1.0"
