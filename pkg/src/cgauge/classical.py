"""Classical charged particles with Coulomb, Darwin and Coulomb-gauge 1/c^2 terms.

Every 1/c^2 model used here has a pair interaction of the form

    -(e_i e_j / (c^2 m_i m_j)) * p_i . T(r_i - r_j) . p_j,

with a 3x3 kernel ``T(r) = (alpha * I + beta * n n) / R``.  The models differ
only in ``(alpha, beta)``:

=======================  ==========  =========
model                    alpha       beta
=======================  ==========  =========
Darwin                   1/2         1/2
TransverseProjection     1/2         1/2
TransverseLiteral (x)    3/2         -1/2
TransverseLiteral (r_j)  1/2         1/2
=======================  ==========  =========

The literal coefficients come from evaluating the longitudinal-subtraction
integral with both gradients on the integration variable; the quadrature in
:mod:`cgauge.quadrature` checks them numerically.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConfigurationError, UnsupportedModeError


class ModelKind(enum.Enum):
    COULOMB = "coulomb"
    DARWIN = "darwin"
    TRANSVERSE_LITERAL = "transverse_literal"
    TRANSVERSE_PROJECTION = "transverse_projection"


class KernelMode(enum.Enum):
    CLOSED = "closed"
    QUADRATURE = "quadrature"


# which variable the inner gradient of the longitudinal correction acts on
INNER_GRADIENT_READINGS = ("x", "source")


@dataclass(frozen=True)
class UnitSystem:
    """Gaussian units with lengths, masses and charges of order one."""

    c: float = 137.036
    hbar: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")


@dataclass(frozen=True)
class HamiltonianModel:
    kind: ModelKind = ModelKind.COULOMB
    kernel_mode: KernelMode = KernelMode.CLOSED
    inner_gradient: str = "x"

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "kernel_mode", KernelMode(self.kernel_mode))
        if self.inner_gradient not in INNER_GRADIENT_READINGS:
            raise ValueError(f"inner_gradient must be one of {INNER_GRADIENT_READINGS}")

    @classmethod
    def parse(cls, name, **kwargs):
        """Build a model from a short name such as ``"darwin"`` or ``"transverse_literal"``."""
        aliases = {
            "coulomb_only": "coulomb",
            "coulombonly": "coulomb",
            "transverseliteral": "transverse_literal",
            "literal": "transverse_literal",
            "transverseprojection": "transverse_projection",
            "projection": "transverse_projection",
        }
        key = str(name).strip().lower()
        return cls(ModelKind(aliases.get(key, key)), **kwargs)

    @property
    def name(self):
        return self.kind.value


@dataclass(frozen=True)
class ParticleSet:
    """Phase-space configuration of ``n`` point charges.

    Arrays are copied on construction and made read-only.
    """

    m: np.ndarray
    e: np.ndarray
    r: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float).reshape(-1)
        e = np.array(self.e, dtype=float).reshape(-1)
        n = m.size
        r = np.array(self.r, dtype=float).reshape(n, 3)
        p = np.array(self.p, dtype=float).reshape(n, 3)
        if e.size != n:
            raise ValueError("charges and masses differ in length")
        if np.any(m <= 0):
            raise ValueError("all masses must be strictly positive")
        for name, arr in (("m", m), ("e", e), ("r", r), ("p", p)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if n > 1:
            i, j = np.triu_indices(n, 1)
            dist = np.linalg.norm(r[i] - r[j], axis=1)
            if np.any(dist == 0.0):
                k = int(np.argmin(dist))
                raise DegenerateConfigurationError(
                    f"particles {i[k]} and {j[k]} coincide")

    @property
    def n(self):
        return self.m.size

    def with_phase_space(self, r, p):
        return ParticleSet(self.m, self.e, r, p)

    def shifted(self, d):
        return self.with_phase_space(self.r + np.asarray(d, float), self.p)

    def rotated(self, rot):
        rot = np.asarray(rot, float)
        return self.with_phase_space(self.r @ rot.T, self.p @ rot.T)

    def total_momentum(self):
        return self.p.sum(axis=0)

    def angular_momentum(self):
        return np.cross(self.r, self.p).sum(axis=0)


@dataclass(frozen=True)
class PairKernel:
    """3x3 pair tensor ``T = a I + b n n`` at separation ``R``."""

    T: np.ndarray
    a: float
    b: float
    R: float
    n_hat: np.ndarray = field(default=None)
    error: float = 0.0

    def reconstruct(self):
        return self.a * np.eye(3) + self.b * np.outer(self.n_hat, self.n_hat)


def pair_unit_vector(r_i, r_j):
    d = np.asarray(r_i, float) - np.asarray(r_j, float)
    R = np.linalg.norm(d)
    if R == 0.0:
        raise DegenerateConfigurationError("coincident positions have no pair direction")
    return d / R


def coulomb_energy(ps: ParticleSet) -> float:
    if ps.n < 2:
        return 0.0
    i, j = np.triu_indices(ps.n, 1)
    R = np.linalg.norm(ps.r[i] - ps.r[j], axis=1)
    return float(np.sum(ps.e[i] * ps.e[j] / R))


def darwin_pair_term(i, j, ps: ParticleSet, u: UnitSystem) -> float:
    """Darwin 1/c^2 energy of the pair ``(i, j)``."""
    if i == j:
        raise ValueError("pair term needs two distinct particles")
    n_hat = pair_unit_vector(ps.r[i], ps.r[j])
    R = np.linalg.norm(ps.r[i] - ps.r[j])
    pi, pj = ps.p[i], ps.p[j]
    bracket = pi @ pj + (pi @ n_hat) * (pj @ n_hat)
    return float(-ps.e[i] * ps.e[j] / (2 * u.c**2 * ps.m[i] * ps.m[j] * R) * bracket)


def kernel_coefficients(model: HamiltonianModel):
    """``(alpha, beta)`` such that ``T = (alpha I + beta n n) / R``."""
    kind = model.kind
    if kind is ModelKind.COULOMB:
        return 0.0, 0.0
    if kind is ModelKind.TRANSVERSE_LITERAL and model.inner_gradient == "x":
        return 1.5, -0.5
    return 0.5, 0.5


def kernel_closed(model: HamiltonianModel, r) -> PairKernel:
    r = np.asarray(r, float)
    R = float(np.linalg.norm(r))
    if R == 0.0:
        raise DegenerateConfigurationError("kernel undefined at zero separation")
    n_hat = r / R
    alpha, beta = kernel_coefficients(model)
    T = (alpha * np.eye(3) + beta * np.outer(n_hat, n_hat)) / R
    return PairKernel(T=T, a=alpha / R, b=beta / R, R=R, n_hat=n_hat)


def _pair_arrays(ps):
    i, j = np.triu_indices(ps.n, 1)
    d = ps.r[i] - ps.r[j]
    R = np.linalg.norm(d, axis=1)
    return i, j, d, R


def _kinetic(ps):
    return float(np.sum(np.einsum("ij,ij->i", ps.p, ps.p) / (2 * ps.m)))


def magnetic_energy(ps: ParticleSet, model: HamiltonianModel, u: UnitSystem, quad_cfg=None) -> float:
    """The 1/c^2 pair sum alone."""
    if model.kind is ModelKind.COULOMB or ps.n < 2:
        return 0.0
    i, j, d, R = _pair_arrays(ps)
    pref = ps.e[i] * ps.e[j] / (u.c**2 * ps.m[i] * ps.m[j])
    pi, pj = ps.p[i], ps.p[j]
    if model.kernel_mode is KernelMode.QUADRATURE:
        from .quadrature import kernel_quadrature

        vals = np.array([
            pi[k] @ kernel_quadrature(d[k], quad_cfg, inner_gradient=_reading(model)).T @ pj[k]
            for k in range(len(R))
        ])
    else:
        alpha, beta = kernel_coefficients(model)
        pp = np.einsum("ij,ij->i", pi, pj)
        pin = np.einsum("ij,ij->i", pi, d)
        pjn = np.einsum("ij,ij->i", pj, d)
        vals = alpha * pp / R + beta * pin * pjn / R**3
    return float(-np.sum(pref * vals))


def _reading(model):
    # Darwin and the projection reading coincide with the r_j reading of the integral.
    if model.kind is ModelKind.TRANSVERSE_LITERAL:
        return model.inner_gradient
    return "source"


def h_total(ps: ParticleSet, model: HamiltonianModel, u: UnitSystem, quad_cfg=None) -> float:
    """Kinetic + Coulomb + model-dependent 1/c^2 energy."""
    return _kinetic(ps) + coulomb_energy(ps) + magnetic_energy(ps, model, u, quad_cfg)


def gradients(ps: ParticleSet, model: HamiltonianModel, u: UnitSystem):
    """Analytic ``(dH/dr, dH/dp)``, each of shape ``(n, 3)``."""
    if model.kernel_mode is not KernelMode.CLOSED:
        raise UnsupportedModeError("gradients are only defined for closed-form kernels")
    return pair_gradients(ps.m, ps.e, ps.r, ps.p, kernel_coefficients(model), u.c)


def pair_gradients(m, e, r, p, coeffs, c):
    """Array-level gradient kernel shared with the integrators.

    ``coeffs`` is the ``(alpha, beta)`` pair of :func:`kernel_coefficients`;
    ``(0, 0)`` gives the pure Coulomb gradients.  Works on dense ``(n, n)``
    pair arrays with row ``i`` holding the terms ``d = r_i - r_j``.
    """
    n = m.size
    dp = p / m[:, None]
    if n < 2:
        return np.zeros((n, 3)), dp
    d = r[:, None, :] - r[None, :, :]
    R2 = np.einsum("ijk,ijk->ij", d, d)
    np.fill_diagonal(R2, 1.0)
    inv_R = 1.0 / np.sqrt(R2)
    ee = np.outer(e, e)
    np.fill_diagonal(ee, 0.0)
    inv_R3 = inv_R**3
    g = -(ee * inv_R3)[:, :, None] * d
    alpha, beta = coeffs
    if alpha or beta:
        pref = -ee / (c**2 * np.outer(m, m))
        pp = p @ p.T
        a_ = np.einsum("ik,ijk->ij", p, d)  # p_i . d_ij
        b_ = np.einsum("jk,ijk->ij", p, d)  # p_j . d_ij
        dW_dd = (
            -(alpha * pp * inv_R3)[:, :, None] * d
            + (beta * inv_R3)[:, :, None] * (b_[:, :, None] * p[:, None, :] + a_[:, :, None] * p[None, :, :])
            - (3 * beta * a_ * b_ * inv_R3 * inv_R**2)[:, :, None] * d
        )
        g = g + pref[:, :, None] * dW_dd
        dW_dpi = (alpha * pref * inv_R) @ p + np.einsum("ij,ijk->ik", beta * pref * b_ * inv_R3, d)
        dp = dp + dW_dpi
    return g.sum(axis=1), dp
