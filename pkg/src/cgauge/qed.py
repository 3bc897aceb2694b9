"""Single-photon exchange in non-relativistic QED versus the current-current term.

The photon field in the Coulomb gauge is expanded as

    A(x) = sum_{q, lam} sqrt(2 pi hbar c / (Omega |q|)) e_lam(q) e^{i q.x} (b_{q lam} + b+_{-q lam}),

and couples to electrons through the cross term of the minimally coupled
kinetic energy.  The seagull (A^2) term is left out: in the no-photon
subspace it only contributes beyond 1/c^2.

Bookkeeping for :func:`photon_exchange_amplitude`: electron 1 goes
``k - q -> k`` and electron 2 goes ``p + q -> p``.  The two time orderings
each contribute ``g1 g2 / (-hbar omega_q)`` in the static limit, and the
ordered operator sum counts every physical pair twice, so the coefficient
comparable to the current-current one is ``sum_lam g1 g2 / (-hbar omega_q)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .classical import UnitSystem
from .errors import DegenerateConfigurationError
from .fock import BoxGeometry, CouplingToggles, current_current_coefficient

H_READINGS = ("2pi_hbar", "raw_h")
CONVENTION = (
    "e1 = unit(q x a), a = coordinate axis least aligned with q (ties x<y<z), "
    "e2 = q_hat x e1, both from the lexicographically positive member of {q, -q}; "
    "static propagator, two time orderings times 1/2 ordered-sum double counting"
)


@dataclass(frozen=True)
class PhotonMode:
    q: tuple
    lam: int
    omega: float

    @classmethod
    def make(cls, q, lam, geom: BoxGeometry, u: UnitSystem):
        qv = geom.wavevector(q)
        qn = float(np.linalg.norm(qv))
        if qn == 0.0:
            raise DegenerateConfigurationError("photon mode needs q != 0")
        if lam not in (1, 2):
            raise ValueError("polarization index is 1 or 2")
        return cls(tuple(int(v) for v in q), lam, u.c * qn)


@dataclass(frozen=True)
class PolarizationPair:
    e1: np.ndarray
    e2: np.ndarray

    def __getitem__(self, lam):
        return {1: self.e1, 2: self.e2}[lam]


@dataclass(frozen=True)
class EffectiveAmplitude:
    value: float
    path: str  # "current_current" or "photon_exchange"


def _positive_representative(q):
    for v in q:
        if v > 0:
            return q
        if v < 0:
            return -q
    raise DegenerateConfigurationError("polarization vectors need q != 0")


def polarization_pair(q) -> PolarizationPair:
    q = _positive_representative(np.asarray(q, float))
    q_hat = q / np.linalg.norm(q)
    axis = np.eye(3)[int(np.argmin(np.abs(q)))]
    e1 = np.cross(q, axis)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(q_hat, e1)
    return PolarizationPair(e1, e2)


def polarization_sum(q):
    pol = polarization_pair(q)
    return np.outer(pol.e1, pol.e1) + np.outer(pol.e2, pol.e2)


def transverse_projector(q):
    q = np.asarray(q, float)
    q2 = float(q @ q)
    if q2 == 0.0:
        raise DegenerateConfigurationError("projector undefined at q = 0")
    return np.eye(3) - np.outer(q, q) / q2


def _mixed_pair(q, mixing_angle):
    pol = polarization_pair(q)
    c, s = np.cos(mixing_angle), np.sin(mixing_angle)
    return PolarizationPair(c * pol.e1 + s * pol.e2, -s * pol.e1 + c * pol.e2)


def field_normalization(q, geom: BoxGeometry, u: UnitSystem, h_reading="2pi_hbar"):
    """Mode amplitude ``sqrt(h c / (Omega |q|))`` with ``h`` read as ``2 pi hbar``.

    ``h_reading="raw_h"`` substitutes ``hbar`` for ``h`` instead.
    """
    if h_reading not in H_READINGS:
        raise ValueError(f"h_reading must be one of {H_READINGS}")
    h = 2 * np.pi * u.hbar if h_reading == "2pi_hbar" else u.hbar
    qn = float(np.linalg.norm(geom.wavevector(q)))
    return np.sqrt(h * u.c / (geom.volume * qn))


def vertex_coefficient(k, q, lam, geom: BoxGeometry, u: UnitSystem, couplings: CouplingToggles,
                       h_reading="2pi_hbar", mixing_angle=0.0) -> float:
    """Amplitude for an electron ``k -> k - q`` emitting photon ``(q, lam)``.

    ``-(e/c) (hbar/2m) (2k - q).e_lam(q) sqrt(2 pi hbar c / (Omega |q|))``;
    ``k`` and ``q`` are integer triples.
    """
    q = np.asarray(q, dtype=int)
    if not np.any(q):
        raise DegenerateConfigurationError("vertex needs q != 0")
    if u.c != couplings.c:
        u = UnitSystem(c=couplings.c, hbar=u.hbar)
    kv, qv = geom.wavevector(k), geom.wavevector(q)
    e_lam = _mixed_pair(q, mixing_angle)[lam]
    norm = field_normalization(q, geom, u, h_reading)
    return float(-(couplings.e / u.c) * (u.hbar / (2 * couplings.m)) * ((2 * kv - qv) @ e_lam) * norm)


def photon_exchange_amplitude(k, p, q, geom: BoxGeometry, u: UnitSystem, couplings: CouplingToggles,
                              h_reading="2pi_hbar", mixing_angle=0.0) -> EffectiveAmplitude:
    """Second-order exchange coefficient for ``(k-q, p+q) -> (k, p)``."""
    k, p, q = (np.asarray(v, dtype=int) for v in (k, p, q))
    if not np.any(q):
        raise DegenerateConfigurationError("exchange amplitude needs q != 0")
    uc = UnitSystem(c=couplings.c, hbar=u.hbar)
    omega = PhotonMode.make(q, 1, geom, uc).omega
    total = 0.0
    for lam in (1, 2):
        # electron 1 emits -q (k-q -> k), electron 2 emits +q (p+q -> p)
        g1 = vertex_coefficient(k - q, -q, lam, geom, uc, couplings, h_reading, mixing_angle)
        g2 = vertex_coefficient(p + q, q, lam, geom, uc, couplings, h_reading, mixing_angle)
        total += g1 * g2
    # two time orderings x 1/2 for the ordered (k, p, q) double count
    value = 2 * 0.5 * total / (-u.hbar * omega)
    return EffectiveAmplitude(value=value, path="photon_exchange")


def current_current_amplitude(k, p, q, geom, u, couplings) -> EffectiveAmplitude:
    uc = UnitSystem(c=couplings.c, hbar=u.hbar)
    return EffectiveAmplitude(current_current_coefficient(k, p, q, geom, couplings, uc), path="current_current")


def _transverse_numerator(k, p, q):
    """Exact integer ``(k.p) q^2 - (q.k)(q.p)``; zero means the coefficient vanishes."""
    k, p, q = (np.asarray(v, dtype=np.int64) for v in (k, p, q))
    return int(k @ p) * int(q @ q) - int(q @ k) * int(q @ p)


def relative_difference(a, b):
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


def sample_triples(samples, seed, bound=4):
    """Random integer ``(k, p, q)`` with ``q != 0`` and non-vanishing coefficient.

    Triples whose transverse numerator is exactly zero have both paths equal
    to zero up to rounding and are redrawn; the count is returned.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    out, rejected = [], 0
    while len(out) < samples:
        k, p, q = rng.integers(-bound, bound + 1, size=(3, 3))
        if not np.any(q) or _transverse_numerator(k, p, q) == 0:
            rejected += 1
            continue
        out.append((k, p, q))
    return out, rejected


def equivalence_report(samples, seed, geom: BoxGeometry, u: UnitSystem, couplings: CouplingToggles,
                       h_reading="2pi_hbar", bound=4):
    """Compare both paths over random lattice triples.

    Returns a JSON-ready dict with keys ``samples, seed, max_rel_diff,
    mean_rel_diff, convention, h_reading`` plus diagnostics.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    triples, rejected = sample_triples(samples, seed, bound)
    diffs, worst = [], None
    for k, p, q in triples:
        a = current_current_amplitude(k, p, q, geom, u, couplings).value
        b = photon_exchange_amplitude(k, p, q, geom, u, couplings, h_reading).value
        d = relative_difference(a, b)
        diffs.append(d)
        if worst is None or d > worst[0]:
            worst = (d, [k.tolist(), p.tolist(), q.tolist()], a, b)
    report = {
        "samples": int(samples),
        "seed": int(seed),
        "max_rel_diff": float(np.max(diffs)),
        "mean_rel_diff": float(np.mean(diffs)),
        "convention": CONVENTION,
        "h_reading": h_reading,
        "rejected_zero_numerator": rejected,
        "worst_triple": worst[1],
        "worst_current_current": float(worst[2]),
        "worst_photon_exchange": float(worst[3]),
    }
    if h_reading != "2pi_hbar":
        report["warning"] = "raw h reading selected: field normalization uses hbar in place of 2 pi hbar"
    return report


def dumps_report(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
