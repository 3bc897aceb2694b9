"""Plane-wave Fock sectors and the second-quantized 1/c^2 Hamiltonian.

Single-particle modes are plane waves ``exp(i k.x)/sqrt(Omega)`` in a cube of
edge ``L`` with ``k = 2 pi n / L``, ``n`` an integer triple with
``max|n_a| <= n_max``, and spin ``sigma = +-1``.  Modes are indexed in
lexicographic order of ``(n, sigma)``; a Fock state is the bitmask of its
occupied modes and stands for ``a+_{m1} a+_{m2} ... |0>`` with
``m1 < m2 < ...``.

The interaction is written in the operator ordering

    sum_{k,p,q != 0} V(k, p, q) a+_{k s} a+_{p s'} a_{p+q s'} a_{k-q s}

where ``V`` is the Coulomb coefficient ``(1/2) 4 pi e^2 / (Omega q^2)`` plus
the transverse current-current coefficient

    -(e^2 hbar^2 / (m^2 c^2 Omega)) (2 pi / q^2) (k.p - (q.k)(q.p)/q^2).

Only terms whose four legs all lie inside the cutoff are kept.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .classical import UnitSystem
from .errors import (
    CapacityError, ExcludedTransferError, NormalizationError, SolverError, UnsupportedFeatureError,
)

DEFAULT_CAPACITY = 20000
DENSE_LIMIT = 2000


@dataclass(frozen=True)
class BoxGeometry:
    L: float = 2 * np.pi

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("box length must be positive")

    @property
    def volume(self):
        return self.L**3

    def wavevector(self, n):
        return 2 * np.pi * np.asarray(n, float) / self.L


@dataclass(frozen=True)
class Mode:
    n: tuple
    sigma: int
    k: tuple

    @classmethod
    def make(cls, n, sigma, geom: BoxGeometry):
        n = tuple(int(v) for v in n)
        return cls(n, int(sigma), tuple(geom.wavevector(n)))


@dataclass(frozen=True)
class CouplingToggles:
    include_coulomb: bool = True
    include_current_current: bool = True
    c: float = 137.036
    e: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not self.m > 0:
            raise ValueError("m must be positive")


class ModeTable:
    """All spin-orbitals inside the cutoff, in canonical order."""

    def __init__(self, geom: BoxGeometry, n_max: int):
        if n_max < 0:
            raise ValueError("n_max must be >= 0")
        self.geom = geom
        self.n_max = n_max
        rng = range(-n_max, n_max + 1)
        self.modes = [Mode.make(n, s, geom) for n in itertools.product(rng, rng, rng) for s in (-1, 1)]
        self.index = {(md.n, md.sigma): i for i, md in enumerate(self.modes)}
        self.n = np.array([md.n for md in self.modes], dtype=int)
        self.sigma = np.array([md.sigma for md in self.modes], dtype=int)
        self.k = geom.wavevector(self.n)

    def __len__(self):
        return len(self.modes)

    def lookup(self, n, sigma):
        return self.index.get((tuple(int(v) for v in n), int(sigma)))


def occupied(state):
    """Mode indices set in a bitmask, ascending."""
    out = []
    i = 0
    while state:
        if state & 1:
            out.append(i)
        state >>= 1
        i += 1
    return out


def _parity_below(state, i):
    return bin(state & ((1 << i) - 1)).count("1") & 1


def annihilate(state, i):
    """Return ``(sign, new_state)`` or ``(0, None)``."""
    if not state >> i & 1:
        return 0, None
    return (-1 if _parity_below(state, i) else 1), state ^ (1 << i)


def create(state, i):
    if state >> i & 1:
        return 0, None
    return (-1 if _parity_below(state, i) else 1), state | (1 << i)


@dataclass
class SectorBasis:
    states: list
    N: int
    P_total: tuple | None
    Sz: int | None
    n_max: int
    table: ModeTable

    def __len__(self):
        return len(self.states)

    @cached_property
    def lookup(self):
        return {s: i for i, s in enumerate(self.states)}

    def labels(self, state):
        occ = occupied(state)
        P = tuple(int(v) for v in self.table.n[occ].sum(axis=0)) if occ else (0, 0, 0)
        return len(occ), P, int(self.table.sigma[occ].sum()) if occ else 0

    def describe(self):
        return {"N": self.N, "P": list(self.P_total) if self.P_total is not None else None,
                "Sz": self.Sz, "n_max": self.n_max}


def enumerate_sector_basis(geom: BoxGeometry, n_max: int, N: int, P_total=None, Sz=None,
                           capacity: int = DEFAULT_CAPACITY) -> SectorBasis:
    """All Pauli-allowed ``N``-mode states with the requested labels.

    ``Sz`` is the sum of ``sigma = +-1`` (twice the spin projection).  ``None``
    disables the corresponding filter.  States come out in lexicographic
    order of their ascending mode-index tuples.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    table = ModeTable(geom, n_max)
    M = len(table)
    P = None if P_total is None else np.array(P_total, dtype=int)
    states = []

    def push(state):
        states.append(state)
        if len(states) > capacity:
            raise CapacityError(f"sector dimension exceeds capacity {capacity}")

    def rec(start, depth, state, nsum, ssum):
        remaining = N - depth
        if remaining == 0:
            if (P is None or np.array_equal(nsum, P)) and (Sz is None or ssum == Sz):
                push(state)
            return
        if Sz is not None and abs(Sz - ssum) > remaining:
            return
        if remaining == 1 and P is not None:
            # last mode is fixed by momentum conservation
            need = P - nsum
            for s in (-1, 1):
                i = table.lookup(need, s)
                if i is not None and i >= start and (Sz is None or ssum + s == Sz):
                    push(state | (1 << i))
            return
        for i in range(start, M - remaining + 1):
            rec(i + 1, depth + 1, state | (1 << i), nsum + table.n[i], ssum + table.sigma[i])

    rec(0, 0, 0, np.zeros(3, dtype=int), 0)
    return SectorBasis(states=states, N=N, P_total=None if P is None else tuple(int(v) for v in P),
                       Sz=Sz, n_max=n_max, table=table)


def apply_pair_operator(state, table: ModeTable, k, sigma, p, sigma_p, q):
    """Apply ``a+_{k s} a+_{p s'} a_{p+q s'} a_{k-q s}`` to a basis state.

    ``k, p, q`` are integer triples.  Returns ``(sign, new_state)``, or
    ``(0, None)`` when the result vanishes or a leg leaves the cutoff.
    """
    k, p, q = (np.asarray(v, dtype=int) for v in (k, p, q))
    legs = [
        ("a", table.lookup(k - q, sigma)),
        ("a", table.lookup(p + q, sigma_p)),
        ("c", table.lookup(p, sigma_p)),
        ("c", table.lookup(k, sigma)),
    ]
    sign = 1
    for kind, i in legs:
        if i is None:
            return 0, None
        s, state = (annihilate if kind == "a" else create)(state, i)
        if state is None:
            return 0, None
        sign *= s
    return sign, state


def _check_transfer(q):
    if not np.any(np.asarray(q) != 0):
        raise ExcludedTransferError("q = 0 is excluded (neutralizing background)")


def coulomb_coefficient(q, geom: BoxGeometry, toggles: CouplingToggles) -> float:
    """``(1/2) 4 pi e^2 / (Omega |q|^2)`` for integer transfer ``q``."""
    _check_transfer(q)
    qv = geom.wavevector(q)
    return 0.5 * 4 * np.pi * toggles.e**2 / (geom.volume * float(qv @ qv))


def current_current_coefficient(k, p, q, geom: BoxGeometry, toggles: CouplingToggles,
                                u: UnitSystem) -> float:
    """Transverse current-current coefficient for integer triples ``k, p, q``."""
    _check_transfer(q)
    kv, pv, qv = geom.wavevector(k), geom.wavevector(p), geom.wavevector(q)
    q2 = float(qv @ qv)
    pref = -(toggles.e**2 * u.hbar**2) / (toggles.m**2 * toggles.c**2 * geom.volume)
    return pref * (2 * np.pi / q2) * (kv @ pv - (qv @ kv) * (qv @ pv) / q2)


def minimal_substitution(basis: SectorBasis, a_ext, toggles: CouplingToggles, u: UnitSystem):
    """Kinetic diagonal with ``hbar k -> hbar k - (e/c) A_ext`` for uniform ``A_ext``.

    The interaction coefficients are left alone; the corrections they would
    receive are of order 1/c^3.
    """
    if callable(a_ext):
        raise UnsupportedFeatureError("only a uniform external vector potential is supported")
    A = np.zeros(3) if a_ext is None else np.asarray(a_ext, float)
    if A.shape != (3,):
        raise UnsupportedFeatureError("only a uniform external vector potential is supported")
    shift = toggles.e / toggles.c * A
    kin = u.hbar * basis.table.k - shift
    eps = np.einsum("ij,ij->i", kin, kin) / (2 * toggles.m)
    return np.array([eps[occupied(s)].sum() for s in basis.states])


def _interaction_elements(basis, toggles, u):
    """Yield ``(row, col, value)`` for the normal-ordered pair interaction."""
    table, geom = basis.table, basis.table.geom
    n_max = basis.n_max
    span = range(-2 * n_max, 2 * n_max + 1)
    transfers = [np.array(q) for q in itertools.product(span, span, span) if any(q)]
    cache = {}

    def coeff(kn, pn, qn):
        key = (kn, pn, qn)
        if key not in cache:
            v = 0.0
            if toggles.include_coulomb:
                v += coulomb_coefficient(qn, geom, toggles)
            if toggles.include_current_current:
                v += current_current_coefficient(kn, pn, qn, geom, toggles, u)
            cache[key] = v
        return cache[key]

    for col, state in enumerate(basis.states):
        occ = occupied(state)
        for i1, i2 in itertools.permutations(occ, 2):
            # i1 = (k - q, sigma), i2 = (p + q, sigma')
            n1, n2 = table.n[i1], table.n[i2]
            s1, s2 = table.sigma[i1], table.sigma[i2]
            for q in transfers:
                kn, pn = n1 + q, n2 - q
                if np.max(np.abs(kn)) > n_max or np.max(np.abs(pn)) > n_max:
                    continue
                sign, new = apply_pair_operator(state, table, kn, s1, pn, s2, q)
                if new is None:
                    continue
                row = basis.lookup.get(new)
                if row is None:
                    continue
                v = coeff(tuple(kn), tuple(pn), tuple(q))
                if v != 0.0:
                    yield row, col, sign * v


def assemble_hamiltonian(basis: SectorBasis, toggles: CouplingToggles, u: UnitSystem,
                         a_ext=None) -> sp.csr_matrix:
    """Sparse real symmetric Hamiltonian on ``basis``.

    The result is symmetrized as ``(H + H^T)/2`` so it equals its transpose
    bit for bit.
    """
    if len(basis) == 0:
        raise ValueError("empty basis")
    dim = len(basis)
    rows, cols, vals = [], [], []
    if toggles.include_coulomb or toggles.include_current_current:
        for r, c, v in _interaction_elements(basis, toggles, u):
            rows.append(r)
            cols.append(c)
            vals.append(v)
    H = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    H = H + sp.diags(minimal_substitution(basis, a_ext, toggles, u))
    H = ((H + H.T) * 0.5).tocsr()
    H.sum_duplicates()
    H.sort_indices()
    return H


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    ground_vector: np.ndarray
    residual: float

    @property
    def e0(self):
        return float(self.eigenvalues[0])

    @property
    def gap(self):
        return float(self.eigenvalues[1] - self.eigenvalues[0]) if len(self.eigenvalues) > 1 else None


def _one_norm(H):
    if sp.issparse(H):
        return float(abs(H).sum(axis=0).max())
    return float(np.abs(H).sum(axis=0).max())


def diagonalize(H, dense_limit: int = DENSE_LIMIT, k: int = 6, maxiter: int | None = None) -> Spectrum:
    """Full spectrum below ``dense_limit``, lowest ``k`` eigenpairs above it."""
    dim = H.shape[0]
    if dim < 1:
        raise ValueError("cannot diagonalize an empty matrix")
    norm = _one_norm(H) or 1.0
    if dim <= dense_limit:
        A = H.toarray() if sp.issparse(H) else np.asarray(H)
        w, V = scipy.linalg.eigh(A)
        v = V[:, 0]
        residual = float(np.linalg.norm(A @ v - w[0] * v))
    else:
        try:
            w, V = spla.eigsh(H, k=min(k, dim - 1), which="SA", tol=1e-14, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            raise SolverError("Lanczos did not converge", residual=None) from exc
        order = np.argsort(w)
        w, V = w[order], V[:, order]
        v = V[:, 0]
        residual = float(np.linalg.norm(H @ v - w[0] * v))
    if residual > 1e-10 * norm:
        raise SolverError(f"ground-state residual {residual:.3e} exceeds 1e-10 |H|", residual=residual)
    return Spectrum(eigenvalues=np.asarray(w), ground_vector=v, residual=residual)


def one_body_density_matrix(vec, basis: SectorBasis):
    """``rho[m', m] = <a+_{m'} a_m>`` over the mode table (spin-diagonal)."""
    table = basis.table
    M = len(table)
    rho = np.zeros((M, M), dtype=complex)
    vec = np.asarray(vec)
    for col, state in enumerate(basis.states):
        c = vec[col]
        if c == 0:
            continue
        for m in occupied(state):
            s1, mid = annihilate(state, m)
            for mp in np.flatnonzero(table.sigma == table.sigma[m]):
                s2, new = create(mid, int(mp))
                if new is None:
                    continue
                row = basis.lookup.get(new)
                if row is not None:
                    rho[mp, m] += np.conj(vec[row]) * c * s1 * s2
    return rho


def current_density_expectation(vec, basis: SectorBasis, x, a_ext, toggles: CouplingToggles,
                                u: UnitSystem):
    """``<j(x)>`` including the diamagnetic ``-(e^2/mc) n(x) A_ext`` term."""
    vec = np.asarray(vec)
    if abs(np.linalg.norm(vec) - 1.0) > 1e-10:
        raise NormalizationError("state vector is not normalized")
    if callable(a_ext):
        raise UnsupportedFeatureError("only a uniform external vector potential is supported")
    A = np.zeros(3) if a_ext is None else np.asarray(a_ext, float)
    rho = one_body_density_matrix(vec, basis)
    k = basis.table.k
    x = np.asarray(x, float)
    phase = np.exp(1j * ((k @ x)[None, :] - (k @ x)[:, None]))  # e^{i (k_m - k_m') x}
    weights = rho * phase
    omega = basis.table.geom.volume
    para = u.hbar * toggles.e / (2 * toggles.m * omega) * np.einsum(
        "ab,abk->k", weights, k[:, None, :] + k[None, :, :])
    density = weights.sum() / omega
    dia = -(toggles.e**2 / (toggles.m * toggles.c)) * density * A
    return np.real(para + dia)


def fmt17(x):
    return format(float(x), ".17g")


def write_spectrum_csv(eigenvalues, path):
    with open(path, "w") as fh:
        fh.write("index,eigenvalue\n")
        for i, w in enumerate(eigenvalues):
            fh.write(f"{i},{fmt17(w)}\n")


def spectrum_report(basis: SectorBasis, toggles: CouplingToggles, spectrum: Spectrum):
    return {
        "sector": basis.describe(),
        "toggles": asdict(toggles),
        "dimension": len(basis),
        "e0": spectrum.e0,
        "gap": spectrum.gap,
    }


def dumps_report(report):
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
