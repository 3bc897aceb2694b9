import numpy as np
import pytest

from cgauge.classical import HamiltonianModel, ModelKind, ParticleSet, UnitSystem, h_total
from cgauge.dynamics import (
    IntegratorConfig, conservation_report, hamilton_rhs, integrate, read_trajectory_csv,
    trajectory_divergence, write_trajectory_csv,
)
from cgauge.errors import AlignmentError, CollisionError, StiffnessError

from oracles import central_difference_gradients, kepler_circular

COULOMB = HamiltonianModel(ModelKind.COULOMB)
DARWIN = HamiltonianModel(ModelKind.DARWIN)
LITERAL = HamiltonianModel(ModelKind.TRANSVERSE_LITERAL)


def orbit(c=10.0):
    r, p, omega = kepler_circular()
    return ParticleSet([1, 1], [1, -1], r, p), omega


def test_rhs_free_particle():
    ps = ParticleSet([1], [1], [[0, 0, 0]], [[1, 0, 0]])
    rdot, pdot = hamilton_rhs(ps, LITERAL, UnitSystem())
    np.testing.assert_array_equal(rdot, [[1, 0, 0]])
    np.testing.assert_array_equal(pdot, 0)


def test_rhs_repulsion():
    ps = ParticleSet([1, 1], [1, 1], [[1, 0, 0], [-1, 0, 0]], np.zeros((2, 3)))
    _, pdot = hamilton_rhs(ps, DARWIN, UnitSystem())
    assert pdot[0, 0] > 0 and pdot[1, 0] < 0
    np.testing.assert_allclose(pdot[:, 1:], 0)


def test_rhs_matches_finite_difference_flow():
    rng = np.random.default_rng(4)
    ps = ParticleSet([1, 2, 1.5], [1, -1, 0.5], [[0, 0, 0], [1.5, 0.2, 0], [0, 1.1, 0.9]], rng.normal(size=(3, 3)))
    u = UnitSystem(c=2.0)
    rdot, pdot = hamilton_rhs(ps, LITERAL, u)
    fr, fp = central_difference_gradients(lambda s: h_total(s, LITERAL, u), ps)
    np.testing.assert_allclose(rdot, fp, rtol=1e-7, atol=1e-8)
    np.testing.assert_allclose(pdot, -fr, rtol=1e-7, atol=1e-8)


@pytest.mark.parametrize("method", ["RK4", "RK45"])
def test_free_particle_straight_line(method):
    ps = ParticleSet([2.0], [1.0], [[1, 2, 3]], [[1, -2, 0.5]])
    cfg = IntegratorConfig(method=method, dt=0.5, tol=1e-10, t_end=10.0)
    traj = integrate(ps, DARWIN, UnitSystem(), cfg)
    assert traj.times[-1] == 10.0
    np.testing.assert_allclose(traj.r[-1, 0], ps.r[0] + ps.p[0] / 2 * 10, rtol=0, atol=1e-12)
    rep = conservation_report(traj, UnitSystem())
    assert max(rep.energy_drift, rep.momentum_drift, rep.angular_momentum_drift) <= 1e-13


def test_kepler_period():
    ps, omega = orbit()
    period = 2 * np.pi / omega
    cfg = IntegratorConfig(tol=1e-12, t_end=period, dt=1e-3)
    traj = integrate(ps, COULOMB, UnitSystem(), cfg)
    np.testing.assert_allclose(traj.r[-1], ps.r, atol=1e-6)
    np.testing.assert_allclose(traj.p[-1], ps.p, atol=1e-6)
    # a quarter period is a quarter turn
    quarter = integrate(ps, COULOMB, UnitSystem(), IntegratorConfig(tol=1e-12, t_end=period / 4))
    np.testing.assert_allclose(quarter.r[-1, 0], [0, 0.5, 0], atol=1e-6)


def test_darwin_orbit_deviates_from_coulomb():
    ps, omega = orbit()
    u = UnitSystem(c=10.0)
    cfg = IntegratorConfig(tol=1e-11, t_end=4 * 2 * np.pi / omega)
    a = integrate(ps, COULOMB, u, cfg)
    b = integrate(ps, DARWIN, u, cfg, step_times=a.step_times, step_sizes=a.step_sizes)
    div, env = trajectory_divergence(a, b)
    assert div[0] == 0.0
    assert env[-1] > 1e-3
    assert np.all(np.diff(env) >= 0)
    assert env[len(env) // 2] < env[-1]


def test_divergence_same_model_is_zero():
    ps, _ = orbit()
    cfg = IntegratorConfig(tol=1e-10, t_end=3.0)
    a = integrate(ps, LITERAL, UnitSystem(c=10), cfg)
    b = integrate(ps, LITERAL, UnitSystem(c=10), cfg, step_times=a.step_times, step_sizes=a.step_sizes)
    div, _ = trajectory_divergence(a, b)
    assert np.all(div == 0.0)


def test_divergence_alignment_error():
    ps, _ = orbit()
    a = integrate(ps, COULOMB, UnitSystem(), IntegratorConfig(tol=1e-8, t_end=1.0))
    b = integrate(ps, COULOMB, UnitSystem(), IntegratorConfig(tol=1e-10, t_end=1.0))
    with pytest.raises(AlignmentError):
        trajectory_divergence(a, b)


def test_coulomb_drift_bound():
    ps, _ = orbit()
    cfg = IntegratorConfig(tol=1e-10, t_end=1e6, max_steps=10_000, record_every=20)
    traj = integrate(ps, COULOMB, UnitSystem(), cfg)
    assert len(traj.step_times) == 10_001
    rep = conservation_report(traj, UnitSystem())
    assert rep.energy_drift <= 1e-7


def test_literal_momentum_drift():
    ps, _ = orbit()
    ps = ps.with_phase_space(ps.r, ps.p + [0.1, 0.05, 0.0])
    u = UnitSystem(c=10)
    traj = integrate(ps, LITERAL, u, IntegratorConfig(tol=1e-10, t_end=20))
    assert conservation_report(traj, u).momentum_drift <= 1e-9


def test_collision_detected():
    ps = ParticleSet([1, 1], [0, 0], [[-1, 0, 0], [1, 0, 0]], [[1, 0, 0], [-1, 0, 0]])
    with pytest.raises(CollisionError) as exc:
        integrate(ps, COULOMB, UnitSystem(), IntegratorConfig(method="RK4", dt=0.5, t_end=3))
    assert exc.value.t == 1.0


def test_step_underflow():
    ps, _ = orbit()
    with pytest.raises(StiffnessError):
        integrate(ps, COULOMB, UnitSystem(), IntegratorConfig(tol=1e-300, t_end=1.0))


def test_time_reversal():
    ps, _ = orbit()
    ps = ps.with_phase_space(ps.r, ps.p * 0.8)
    u = UnitSystem(c=5)
    cfg = IntegratorConfig(tol=1e-10, t_end=5.0)
    for model in (COULOMB, DARWIN, LITERAL):
        fwd = integrate(ps, model, u, cfg).final
        back = integrate(fwd.with_phase_space(fwd.r, -fwd.p), model, u, cfg).final
        np.testing.assert_allclose(back.r, ps.r, rtol=1e-6, atol=1e-6)
        np.testing.assert_allclose(-back.p, ps.p, rtol=1e-6, atol=1e-6)


def test_rk4_fourth_order():
    ps, omega = orbit()
    t_end = 2 * np.pi / omega
    exact = ps.r
    errs = []
    for n in (200, 400):
        traj = integrate(ps, COULOMB, UnitSystem(), IntegratorConfig(method="RK4", dt=t_end / n, t_end=t_end))
        errs.append(np.max(np.abs(traj.r[-1] - exact)))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.2)


def test_drift_shrinks_with_tolerance():
    ps, omega = orbit()
    ps = ps.with_phase_space(ps.r, ps.p * 0.9)  # eccentric
    u = UnitSystem(c=10)
    for model in (COULOMB, DARWIN, LITERAL):
        drifts = []
        for tol in (1e-6, 1e-8, 1e-10, 1e-12):
            traj = integrate(ps, model, u, IntegratorConfig(tol=tol, t_end=3 * 2 * np.pi / omega))
            drifts.append(conservation_report(traj, u).energy_drift)
        ratios = np.array(drifts[1:]) / np.array(drifts[:-1])
        assert np.all(ratios <= 0.5), drifts


def test_trajectory_csv_roundtrip(tmp_path):
    ps, _ = orbit()
    traj = integrate(ps, DARWIN, UnitSystem(c=10), IntegratorConfig(tol=1e-9, t_end=1.0, record_every=3))
    path = tmp_path / "traj.csv"
    write_trajectory_csv(traj, path)
    header = path.read_text().splitlines()[0].split(",")
    assert header == ["t", "rx0", "ry0", "rz0", "px0", "py0", "pz0", "rx1", "ry1", "rz1", "px1", "py1", "pz1"]
    t, r, p = read_trajectory_csv(path)
    np.testing.assert_array_equal(t, traj.times)
    np.testing.assert_array_equal(r, traj.r)
    np.testing.assert_array_equal(p, traj.p)
    assert traj.times[-1] == 1.0
    assert np.all(np.diff(traj.times) > 0)
