"""Numerical evaluation of the Coulomb-gauge pair kernel.

The kernel is

    T_{mu nu}(r) = delta_{mu nu} / R
                   - (s / 4 pi) * Int d^3x  1/|r - x|  d_mu d_nu (1/|x|)

with the source particle at the origin, the probe at ``r`` and ``s = +1``
when both gradients act on the integration variable (``s = -1`` when the
inner gradient acts on the source position).

The pointwise second derivative of ``1/|x|`` misses its contact term
``-(4 pi / 3) delta_{mu nu} delta(x)``, so the integral is evaluated after one
integration by parts,

    Int 1/|r-x| d_mu d_nu 1/|x| = Int (r-x)_mu x_nu / (|r-x|^3 |x|^3),

whose integrand is absolutely integrable.  The two point singularities are
separated with a smooth partition of unity: a ball around ``r`` in spherical
coordinates centred on ``r``, everything else in spherical coordinates centred
on the origin, and the region beyond ``R_max`` mapped onto ``u = R_max/|x|``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import PairKernel
from .errors import ConvergenceError, DegenerateConfigurationError

# partition-of-unity radii, in units of R, around the probe point
_S0, _S1 = 0.25, 0.5


@dataclass(frozen=True)
class QuadratureSettings:
    r_max_factor: float = 50.0
    level: int = 1
    max_level: int = 6
    tol: float = 1e-6
    order: int = 10
    n_phi: int = 8


def _smooth_step(t):
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _bump(s):
    """1 for s <= _S0, 0 for s >= _S1, C-infinity in between."""
    up = _smooth_step(_S1 - s)
    down = _smooth_step(s - _S0)
    return up / (up + down)


def _composite_gauss(edges, panels, order):
    """Gauss-Legendre nodes/weights over consecutive intervals of ``edges``."""
    x0, w0 = np.polynomial.legendre.leggauss(order)
    xs, ws = [], []
    for lo, hi, npan in zip(edges[:-1], edges[1:], panels):
        cuts = np.linspace(lo, hi, npan + 1)
        for a, b in zip(cuts[:-1], cuts[1:]):
            half = 0.5 * (b - a)
            xs.append(0.5 * (a + b) + half * x0)
            ws.append(half * w0)
    return np.concatenate(xs), np.concatenate(ws)


def _frame(n_hat):
    axis = np.eye(3)[int(np.argmin(np.abs(n_hat)))]
    e1 = np.cross(n_hat, axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n_hat, e1)
    return e1, e2, n_hat


def _directions(frame, mu, n_phi):
    """Unit vectors on a (cos theta, phi) product grid; returns (n_mu, n_phi, 3)."""
    e1, e2, e3 = frame
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(np.clip(1 - mu**2, 0, None))
    return (st[:, None, None] * (np.cos(phi)[None, :, None] * e1 + np.sin(phi)[None, :, None] * e2)
            + mu[:, None, None] * e3)


def _integrand(r, x):
    """(r-x)_mu x_nu / (|r-x|^3 |x|^3) for points x of shape (..., 3)."""
    y = r - x
    ny = np.linalg.norm(y, axis=-1)
    nx = np.linalg.norm(x, axis=-1)
    scale = 1.0 / (ny**3 * nx**3)
    return y[..., :, None] * x[..., None, :] * scale[..., None, None]


def _shell_sum(r, center, rho, w_rho, jac, dirs, w_dir, R, inside_ball):
    """Sum the integrand over a spherical grid about ``center``.

    ``jac`` multiplies each radial weight (rho^2 or the mapped-variable
    Jacobian); ``inside_ball`` selects the partition weight w or 1 - w.
    """
    total = np.zeros((3, 3))
    for rk, wk, jk in zip(rho, w_rho, jac):
        x = center + rk * dirs
        pu = _bump(np.linalg.norm(x - r, axis=-1) / R)
        part = pu if inside_ball else 1.0 - pu
        f = _integrand(r, x)
        total += wk * jk * np.einsum("ij,ij,ijab->ab", w_dir, part, f)
    return total


def longitudinal_integral(r, settings: QuadratureSettings, level: int):
    """Int (r-x)_mu x_nu / (|r-x|^3 |x|^3) d^3x at one refinement level."""
    r = np.asarray(r, float)
    R = float(np.linalg.norm(r))
    frame = _frame(r / R)
    k = 2**level
    order = settings.order
    r_max = settings.r_max_factor * R

    mu, w_mu = _composite_gauss([-1.0, 0.5, 0.9, 1.0], [k, k, 2 * k], order)
    dirs = _directions(frame, mu, settings.n_phi)
    w_dir = np.repeat(w_mu[:, None], settings.n_phi, axis=1) * (2 * np.pi / settings.n_phi)

    # ball around the probe point, spherical coordinates centred on r
    rho, w_rho = _composite_gauss([0.0, _S0 * R, _S1 * R], [k, 2 * k], order)
    ball = _shell_sum(r, r, rho, w_rho, rho**2, dirs, w_dir, R, inside_ball=True)

    # all space minus the ball, centred on the source at the origin
    edges = [0.0, (1 - _S1) * R, (1 - _S0) * R, (1 + _S0) * R, (1 + _S1) * R, 4 * R]
    edges += list(np.geomspace(4 * R, r_max, 5)[1:])
    panels = [k, 2 * k, 2 * k, 2 * k, 2 * k] + [k] * 4
    rho, w_rho = _composite_gauss(edges, panels, order)
    inner = _shell_sum(r, np.zeros(3), rho, w_rho, rho**2, dirs, w_dir, R, inside_ball=False)

    # |x| > r_max through u = r_max / |x|, d^3x = r_max^3 / u^4 du dOmega
    u, w_u = _composite_gauss([0.0, 1.0], [k], order)
    outer = _shell_sum(r, np.zeros(3), r_max / u, w_u, r_max**3 / u**4, dirs, w_dir, R,
                       inside_ball=False)
    return ball + inner + outer


def kernel_quadrature(r, settings: QuadratureSettings | None = None, inner_gradient="x") -> PairKernel:
    """Pair kernel by adaptive refinement of the split quadrature.

    The level is doubled until two successive estimates of the tensor agree
    to ``settings.tol`` relative to its largest entry.  The returned kernel
    carries the last difference (absolute, on ``T``) as its error estimate.
    """
    settings = settings or QuadratureSettings()
    r = np.asarray(r, float)
    R = float(np.linalg.norm(r))
    if R == 0.0:
        raise DegenerateConfigurationError("kernel undefined at zero separation")
    sign = {"x": 1.0, "source": -1.0}[inner_gradient]
    n_hat = r / R

    def to_T(J):
        return np.eye(3) / R - sign * J / (4 * np.pi)

    prev = to_T(longitudinal_integral(r, settings, settings.level))
    err = np.inf
    for level in range(settings.level + 1, settings.max_level + 1):
        cur = to_T(longitudinal_integral(r, settings, level))
        err = float(np.max(np.abs(cur - prev)))
        if err <= settings.tol * np.max(np.abs(cur)):
            T = 0.5 * (cur + cur.T)
            nTn = float(n_hat @ T @ n_hat)
            a = 0.5 * (float(np.trace(T)) - nTn)
            return PairKernel(T=T, a=a, b=nTn - a, R=R, n_hat=n_hat, error=err)
        prev = cur
    raise ConvergenceError(
        f"kernel quadrature not converged at level {settings.max_level}: "
        f"change {err:.3e}", estimate=err)
