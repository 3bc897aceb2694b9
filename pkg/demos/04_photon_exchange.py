"""
Where the current-current term comes from
=========================================

Second-order exchange of one transverse photon between two electrons, in
the static limit, gives a two-body coefficient.  Here it is evaluated next
to the current-current coefficient for a handful of momentum transfers.
"""

import numpy as np

from cgauge import BoxGeometry, CouplingToggles, UnitSystem, equivalence_report
from cgauge.qed import current_current_amplitude, photon_exchange_amplitude, polarization_pair

geom = BoxGeometry(2 * np.pi)
u = UnitSystem()
coup = CouplingToggles()

pol = polarization_pair((1, 1, 0))
print("polarizations for q = (1, 1, 0):", np.round(pol.e1, 4), np.round(pol.e2, 4))

for k, p, q in [((1, 0, 0), (1, 1, 0), (0, 1, 1)), ((2, -1, 0), (1, 1, 1), (1, 0, -1)), ((0, 0, 1), (0, 0, 2), (1, 0, 0))]:
    a = current_current_amplitude(k, p, q, geom, u, coup).value
    b = photon_exchange_amplitude(k, p, q, geom, u, coup).value
    print(f"k={k} p={p} q={q}:  current-current {a:+.6e}  photon exchange {b:+.6e}")

rep = equivalence_report(500, seed=7, geom=geom, u=u, couplings=coup)
print("\n500 random triples, largest relative difference", rep["max_rel_diff"])

# With hbar read in place of h in the field amplitude the paths disagree by 2 pi.
bad = equivalence_report(20, seed=7, geom=geom, u=u, couplings=coup, h_reading="raw_h")
print("raw h reading:", bad["max_rel_diff"], "-", bad["warning"])
