import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cgauge.classical import (
    HamiltonianModel, KernelMode, ModelKind, ParticleSet, UnitSystem, coulomb_energy,
    darwin_pair_term, gradients, h_total, kernel_closed, magnetic_energy, pair_unit_vector,
)
from cgauge.errors import ConvergenceError, DegenerateConfigurationError, UnsupportedModeError
from cgauge.quadrature import QuadratureSettings, kernel_quadrature

from oracles import central_difference_gradients, random_rotation

ALL_MODELS = [HamiltonianModel(k) for k in ModelKind]

# Frozen from kernel_quadrature at r = (1, 0, 0), default settings.
QUAD_A_X, QUAD_B_X = 1.5, -0.5
QUAD_A_SRC, QUAD_B_SRC = 0.5, 0.5


def two_body(p1, p2, R=1.0, e=(-1.0, -1.0), m=(1.0, 1.0)):
    return ParticleSet(m, e, [[R, 0, 0], [0, 0, 0]], [p1, p2])


def random_config(rng, n=3):
    while True:
        r = rng.uniform(-2, 2, size=(n, 3))
        i, j = np.triu_indices(n, 1)
        if np.min(np.linalg.norm(r[i] - r[j], axis=1)) > 0.5:
            break
    return ParticleSet(rng.uniform(0.5, 2, n), rng.choice([-1.0, 1.0], n) * rng.uniform(0.5, 1.5, n),
                       r, rng.normal(size=(n, 3)))


@pytest.mark.parametrize("ri, rj, expected", [
    ((1, 0, 0), (0, 0, 0), (1, 0, 0)),
    ((0, 0, 0), (0, 2, 0), (0, -1, 0)),
    ((1, 1, 0), (0, 0, 0), (2**-0.5, 2**-0.5, 0)),
])
def test_pair_unit_vector(ri, rj, expected):
    n = pair_unit_vector(ri, rj)
    np.testing.assert_allclose(n, expected, atol=1e-15)
    assert abs(np.linalg.norm(n) - 1) < 1e-14


def test_degenerate_configurations_rejected():
    with pytest.raises(DegenerateConfigurationError):
        pair_unit_vector((1, 2, 3), (1, 2, 3))
    with pytest.raises(DegenerateConfigurationError):
        ParticleSet([1, 1], [1, 1], [[0, 0, 0], [0, 0, 0]], np.zeros((2, 3)))
    with pytest.raises(DegenerateConfigurationError):
        kernel_closed(HamiltonianModel(ModelKind.DARWIN), [0, 0, 0])
    with pytest.raises(ValueError):
        ParticleSet([0.0], [1], [[0, 0, 0]], [[0, 0, 0]])


def test_coulomb_energy_examples():
    assert coulomb_energy(ParticleSet([1, 1], [1, 1], [[0, 0, 0], [2, 0, 0]], np.zeros((2, 3)))) == 0.5
    assert coulomb_energy(ParticleSet([1], [1], [[0, 0, 0]], [[1, 0, 0]])) == 0.0
    tri = [[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0]]
    assert coulomb_energy(ParticleSet([1] * 3, [1] * 3, tri, np.zeros((3, 3)))) == pytest.approx(3.0, rel=1e-15)


def test_darwin_pair_term_examples():
    u = UnitSystem(c=3.0)
    e, m, R, p = 1.3, 0.7, 2.0, 0.9
    mk = lambda p1, p2: ParticleSet([m, m], [e, e], [[R, 0, 0], [0, 0, 0]], [p1, p2])
    assert darwin_pair_term(0, 1, mk([0, p, 0], [0, 0, 0]), u) == 0.0
    perp = darwin_pair_term(0, 1, mk([0, p, 0], [0, p, 0]), u)
    assert perp == pytest.approx(-e**2 * p**2 / (2 * u.c**2 * m**2 * R), rel=1e-15)
    par = darwin_pair_term(0, 1, mk([p, 0, 0], [p, 0, 0]), u)
    assert par == pytest.approx(-e**2 * p**2 / (u.c**2 * m**2 * R), rel=1e-15)
    ps = mk([0.3, -0.2, 0.5], [0.1, 0.4, -0.6])
    assert darwin_pair_term(0, 1, ps, u) == pytest.approx(darwin_pair_term(1, 0, ps, u), rel=1e-15)


def test_darwin_pair_term_matches_h_total():
    rng = np.random.default_rng(3)
    ps = random_config(rng)
    u = UnitSystem(c=2.0)
    pairs = sum(darwin_pair_term(i, j, ps, u) for i in range(3) for j in range(i))
    assert magnetic_energy(ps, HamiltonianModel(ModelKind.DARWIN), u) == pytest.approx(pairs, rel=1e-13)


def test_darwin_kernel_coefficients():
    k = kernel_closed(HamiltonianModel(ModelKind.DARWIN), [2, 0, 0])
    assert (k.a, k.b) == (0.25, 0.25)
    np.testing.assert_array_equal(k.T, np.diag([0.5, 0.25, 0.25]))


@pytest.mark.parametrize("model", ALL_MODELS[1:] + [HamiltonianModel(ModelKind.TRANSVERSE_LITERAL, inner_gradient="source")])
def test_kernel_maps_n_onto_n(model):
    r = np.array([0.3, -1.2, 0.7])
    k = kernel_closed(model, r)
    v = k.T @ k.n_hat
    assert np.linalg.norm(v - (v @ k.n_hat) * k.n_hat) < 1e-15


def test_quadrature_regression_and_symmetry():
    settings_ = QuadratureSettings()
    kx = kernel_quadrature([1, 0, 0], settings_, inner_gradient="x")
    assert kx.a == pytest.approx(QUAD_A_X, abs=1e-8)
    assert kx.b == pytest.approx(QUAD_B_X, abs=1e-8)
    for mu, nu in ((1, 2), (0, 1), (0, 2)):
        assert abs(kx.T[mu, nu]) < 1e-12
    ks = kernel_quadrature([1, 0, 0], settings_, inner_gradient="source")
    assert ks.a == pytest.approx(QUAD_A_SRC, abs=1e-8)
    assert ks.b == pytest.approx(QUAD_B_SRC, abs=1e-8)


def test_quadrature_has_rotational_form():
    r = 1.7 * np.array([1, 2, -2]) / 3
    k = kernel_quadrature(r)
    np.testing.assert_allclose(k.T, k.T.T, atol=1e-14)
    np.testing.assert_allclose(k.T, k.reconstruct(), atol=1e-9)


def test_quadrature_matches_closed_literal():
    r = np.array([1.0, 0.0, 0.0])
    quad = kernel_quadrature(r)
    closed = kernel_closed(HamiltonianModel(ModelKind.TRANSVERSE_LITERAL), r)
    assert np.max(np.abs(quad.T - closed.T)) / np.max(np.abs(closed.T)) < 1e-5


def test_quadrature_convergence_error_carries_estimate():
    with pytest.raises(ConvergenceError) as exc:
        kernel_quadrature([1, 0, 0], QuadratureSettings(level=0, max_level=1, tol=1e-14))
    assert exc.value.estimate > 0


def test_zero_momenta_identical_across_models():
    rng = np.random.default_rng(0)
    ps = random_config(rng)
    ps = ps.with_phase_space(ps.r, np.zeros((3, 3)))
    vals = [h_total(ps, m, UnitSystem()) for m in ALL_MODELS]
    assert vals == [coulomb_energy(ps)] * 4


def test_large_c_suppresses_magnetic_terms():
    ps = random_config(np.random.default_rng(1))
    u = UnitSystem(c=1e12)
    ref = h_total(ps, ALL_MODELS[0], u)
    for m in ALL_MODELS[1:]:
        assert h_total(ps, m, u) == pytest.approx(ref, rel=1e-12)


def test_darwin_vs_literal_two_electrons():
    # p_i = p_j perpendicular to n at R = 1: Darwin bracket gives 1/2, literal 3/2.
    u = UnitSystem(c=5.0)
    ps = two_body([0, 1, 0], [0, 1, 0])
    d = magnetic_energy(ps, HamiltonianModel(ModelKind.DARWIN), u)
    lit = magnetic_energy(ps, HamiltonianModel(ModelKind.TRANSVERSE_LITERAL), u)
    assert d == pytest.approx(-0.5 / 25, rel=1e-14)
    assert lit - d == pytest.approx(-1 / 25, rel=1e-13)
    # independent route: the literal energy through the quadrature kernel
    quad = magnetic_energy(ps, HamiltonianModel(ModelKind.TRANSVERSE_LITERAL, KernelMode.QUADRATURE), u)
    assert quad == pytest.approx(lit, rel=1e-6)
    assert h_total(ps, HamiltonianModel(ModelKind.TRANSVERSE_PROJECTION), u) == pytest.approx(
        h_total(ps, HamiltonianModel(ModelKind.DARWIN), u), rel=1e-15)


def test_gradients_simple_cases():
    u = UnitSystem()
    free = ParticleSet([2.0], [1.0], [[1, 2, 3]], [[1, -1, 4]])
    for m in ALL_MODELS:
        dr, dp = gradients(free, m, u)
        np.testing.assert_array_equal(dr, 0)
        np.testing.assert_allclose(dp, [[0.5, -0.5, 2.0]])
    static = ParticleSet([1, 1], [1, 1], [[2, 0, 0], [0, 0, 0]], np.zeros((2, 3)))
    for m in ALL_MODELS:
        dr, dp = gradients(static, m, u)
        np.testing.assert_array_equal(dp, 0)
        np.testing.assert_allclose(dr, [[-0.25, 0, 0], [0.25, 0, 0]])


def test_gradients_quadrature_mode_unsupported():
    ps = random_config(np.random.default_rng(2))
    with pytest.raises(UnsupportedModeError):
        gradients(ps, HamiltonianModel(ModelKind.DARWIN, KernelMode.QUADRATURE), UnitSystem())


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.name)
def test_gradients_match_finite_differences(model):
    rng = np.random.default_rng(11)
    u = UnitSystem(c=2.0)
    for _ in range(5):
        ps = random_config(rng)
        dr, dp = gradients(ps, model, u)
        fr, fp = central_difference_gradients(lambda s: h_total(s, model, u), ps)
        scale = max(np.max(np.abs(dr)), np.max(np.abs(dp)))
        assert np.max(np.abs(dr - fr)) <= 1e-6 * scale
        assert np.max(np.abs(dp - fp)) <= 1e-6 * scale


vec3 = st.lists(st.floats(-3, 3), min_size=3, max_size=3)


@settings(max_examples=40, deadline=None)
@given(d=vec3, seed=st.integers(0, 2**32 - 1))
def test_translation_invariance(d, seed):
    ps = random_config(np.random.default_rng(seed))
    u = UnitSystem(c=3.0)
    for m in ALL_MODELS:
        assert h_total(ps.shifted(d), m, u) == pytest.approx(h_total(ps, m, u), rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_rotation_invariance(seed):
    rng = np.random.default_rng(seed)
    ps = random_config(rng)
    rot = random_rotation(rng)
    u = UnitSystem(c=3.0)
    for m in ALL_MODELS:
        assert h_total(ps.rotated(rot), m, u) == pytest.approx(h_total(ps, m, u), rel=1e-12, abs=1e-12)


def test_pair_symmetry_and_kernel_parity():
    rng = np.random.default_rng(5)
    for model in ALL_MODELS[1:]:
        r = rng.normal(size=3)
        np.testing.assert_array_equal(kernel_closed(model, r).T, kernel_closed(model, -r).T)
    ps = random_config(rng, n=2)
    swapped = ParticleSet(ps.m[::-1], ps.e[::-1], ps.r[::-1], ps.p[::-1])
    for model in ALL_MODELS:
        assert h_total(swapped, model, UnitSystem(c=2)) == pytest.approx(h_total(ps, model, UnitSystem(c=2)), rel=1e-14)


def test_kernel_reconstruction_random_directions():
    rng = np.random.default_rng(7)
    for model in ALL_MODELS[1:]:
        for _ in range(100):
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            k = kernel_closed(model, rng.uniform(0.5, 10) * n)
            assert np.max(np.abs(k.reconstruct() - k.T)) <= 1e-12
