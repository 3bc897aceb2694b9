"""
The magnetic pair kernel
========================

Every 1/c^2 model in cgauge couples two particles through a 3x3 kernel
T(r) = (a I + b n n) acting between their momenta.  This script compares
the closed forms against the numerical three-dimensional integral.
"""

import numpy as np

from cgauge import HamiltonianModel, QuadratureSettings, kernel_closed, kernel_quadrature

r = np.array([1.0, 2.0, 2.0])  # |r| = 3
print("separation", r, "distance", np.linalg.norm(r))

# closed forms for the four models; Coulomb has no magnetic part
for name in ("coulomb", "darwin", "transverse_literal", "transverse_projection"):
    k = kernel_closed(HamiltonianModel.parse(name), r)
    print(f"{name:22s} a*R = {k.a * k.R:+.3f}   b*R = {k.b * k.R:+.3f}")

# The literal bracket is a singular integral over all space.  The quadrature
# handles the singularities with a smooth partition of unity and maps the
# far field onto a finite interval.
quad = kernel_quadrature(r, QuadratureSettings())
print("\nquadrature, gradient on x:      a*R = %.10f  b*R = %.10f  (error %.1e)"
      % (quad.a * quad.R, quad.b * quad.R, quad.error))

# Moving the inner gradient onto the source point gives the Darwin kernel back.
src = kernel_quadrature(r, QuadratureSettings(), inner_gradient="source")
print("quadrature, gradient on source: a*R = %.10f  b*R = %.10f" % (src.a * src.R, src.b * src.R))

# The two readings differ by I - n n over R: identical along n, different across it.
n = r / np.linalg.norm(r)
print("\nT n          ", quad.T @ n)
print("difference   ", (quad.T - src.T) * quad.R)
