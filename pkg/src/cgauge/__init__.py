"""Coulomb-gauge 1/c^2 Hamiltonians: classical dynamics, plane-wave exact
diagonalization and a photon-exchange cross-check."""

from .classical import (
    HamiltonianModel, KernelMode, ModelKind, PairKernel, ParticleSet, UnitSystem,
    coulomb_energy, darwin_pair_term, gradients, h_total, kernel_closed, pair_unit_vector,
)
from .dynamics import (
    ConservationReport, IntegratorConfig, Trajectory, conservation_report, hamilton_rhs,
    integrate, trajectory_divergence,
)
from .fock import (
    BoxGeometry, CouplingToggles, SectorBasis, apply_pair_operator, assemble_hamiltonian,
    coulomb_coefficient, current_current_coefficient, current_density_expectation, diagonalize,
    enumerate_sector_basis, minimal_substitution,
)
from .qed import (
    equivalence_report, photon_exchange_amplitude, polarization_pair, polarization_sum,
    vertex_coefficient,
)
from .quadrature import QuadratureSettings, kernel_quadrature

__version__ = "0.1.0"
