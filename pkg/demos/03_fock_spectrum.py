"""
Two electrons in a periodic box
===============================

Exact diagonalization in a fixed (N, P, Sz) sector with plane-wave modes
|n| <= 1 along each axis.  The current-current term shifts levels by an
amount that falls off as 1/c^2.
"""

import numpy as np

from cgauge import BoxGeometry, CouplingToggles, UnitSystem
from cgauge import assemble_hamiltonian, diagonalize, enumerate_sector_basis

geom = BoxGeometry(2 * np.pi)
basis = enumerate_sector_basis(geom, n_max=1, N=2, P_total=(1, 0, 0), Sz=0)
print(basis.describe())

coulomb_only = CouplingToggles(include_current_current=False)
e_ref = diagonalize(assemble_hamiltonian(basis, coulomb_only, UnitSystem())).eigenvalues
print("lowest Coulomb-only levels", np.round(e_ref[:4], 6))

for c in (20.0, 40.0, 80.0, 137.036):
    spectrum = diagonalize(assemble_hamiltonian(basis, CouplingToggles(c=c), UnitSystem(c=c)))
    shift = spectrum.eigenvalues - e_ref
    print(f"c = {c:8.3f}   ground shift {shift[0]:+.3e}   |shift| * c^2 = {np.linalg.norm(shift) * c**2:.5f}")
