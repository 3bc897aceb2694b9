"""Hamilton's equations for the classical models, with conservation audits."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from .classical import (
    HamiltonianModel, KernelMode, ParticleSet, UnitSystem, gradients, h_total,
    kernel_coefficients, pair_gradients,
)
from .errors import AlignmentError, CollisionError, StiffnessError, UnsupportedModeError

MIN_STEP = 1e-14
COLLISION_DISTANCE = 1e-9


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "RK45"
    dt: float = 1e-2
    tol: float = 1e-10
    t_end: float = 1.0
    record_every: int = 1
    max_steps: int | None = None

    def __post_init__(self):
        if self.method not in ("RK4", "RK45"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (self.dt > 0 and self.tol > 0 and self.t_end > 0):
            raise ValueError("dt, tol and t_end must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class Trajectory:
    times: np.ndarray
    r: np.ndarray  # (n_snap, n, 3)
    p: np.ndarray
    m: np.ndarray
    e: np.ndarray
    model: HamiltonianModel
    step_times: np.ndarray = field(default=None)
    step_sizes: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.times)

    def snapshot(self, k) -> ParticleSet:
        return ParticleSet(self.m, self.e, self.r[k], self.p[k])

    @property
    def snapshots(self):
        return [self.snapshot(k) for k in range(len(self.times))]

    @property
    def final(self) -> ParticleSet:
        return self.snapshot(-1)

    def to_csv(self, path):
        write_trajectory_csv(self, path)


@dataclass(frozen=True)
class ConservationReport:
    energy_drift: float
    momentum_drift: float
    angular_momentum_drift: float

    def as_dict(self):
        return {
            "energy_drift": self.energy_drift,
            "momentum_drift": self.momentum_drift,
            "angular_momentum_drift": self.angular_momentum_drift,
        }


def hamilton_rhs(ps: ParticleSet, model: HamiltonianModel, u: UnitSystem):
    """Return ``(rdot, pdot)`` = ``(dH/dp, -dH/dr)``."""
    dr, dp = gradients(ps, model, u)
    return dp, -dr


def _flat_rhs(ps0, model, u):
    n = ps0.n
    m, e = np.array(ps0.m), np.array(ps0.e)
    coeffs = kernel_coefficients(model)
    if model.kernel_mode is not KernelMode.CLOSED:
        raise UnsupportedModeError("dynamics needs closed-form kernels")

    def f(t, y):
        dr, dp = pair_gradients(m, e, y[: 3 * n].reshape(n, 3), y[3 * n:].reshape(n, 3), coeffs, u.c)
        return np.concatenate([dp.ravel(), -dr.ravel()])

    return f


def _min_distance(y, n):
    if n < 2:
        return np.inf
    r = y[: 3 * n].reshape(n, 3)
    i, j = np.triu_indices(n, 1)
    return float(np.min(np.linalg.norm(r[i] - r[j], axis=1)))


def _rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + h / 2, y + h / 2 * k1)
    k3 = f(t + h / 2, y + h / 2 * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _dp45_step(f, t, y, k1, h):
    """One Dormand-Prince step; returns (y5, error vector, f(t+h, y5))."""
    K = [k1]
    for s in range(1, 7):
        dy = sum(a * k for a, k in zip(_A[s], K) if a)
        K.append(f(t + _C[s] * h, y + h * dy))
    y5 = y + h * sum(b * k for b, k in zip(_B5, K) if b)
    err = h * sum(c * k for c, k in zip(_E, K))
    return y5, err, K[6]


def _dp45_segment(f, t, y, k1, t_target, h, tol, on_accept, check, exact_first=False):
    """Advance adaptively to exactly ``t_target``.

    A step is accepted when the max-norm of the embedded error estimate is
    at most ``tol``.  ``on_accept(t, y, h)`` may return True to stop early.
    With ``exact_first`` the first attempt uses ``h`` verbatim as the step
    that lands on ``t_target``.  Returns ``(t, y, k1, h_next, stopped)``.
    """
    while t < t_target:
        last = exact_first or h >= t_target - t
        step = h if exact_first else (t_target - t if last else h)
        exact_first = False
        y_new, err, k_new = _dp45_step(f, t, y, k1, step)
        e = float(np.max(np.abs(err)))
        if e <= tol:
            t = t_target if last else t + step
            y, k1 = y_new, k_new
            check(t, y)
            factor = 5.0 if e == 0 else min(5.0, 0.9 * (tol / e) ** 0.2)
            h = step * factor
            if on_accept(t, y, step):
                return t, y, k1, h, True
        else:
            h = step * max(0.2, 0.9 * (tol / e) ** 0.2)
            if h < MIN_STEP:
                raise StiffnessError(f"step size {h:.3e} underflow at t = {t:.17g}", t=t, step=h)
    return t, y, k1, h, False


class _Recorder:
    def __init__(self, n, every):
        self.n = n
        self.every = every
        self.times, self.states, self.steps, self.sizes = [], [], [], []
        self.count = 0
        self.last = None

    def add(self, t, y, h=None):
        self.steps.append(t)
        if h is not None:
            self.sizes.append(h)
        self.last = y
        if self.count % self.every == 0:
            self.times.append(t)
            self.states.append(y.copy())
        self.count += 1

    def finish(self, ps0, model):
        n = self.n
        if self.times[-1] != self.steps[-1]:
            self.times.append(self.steps[-1])
            self.states.append(self.last.copy())
        Y = np.array(self.states)
        return Trajectory(
            times=np.array(self.times), r=Y[:, : 3 * n].reshape(-1, n, 3),
            p=Y[:, 3 * n:].reshape(-1, n, 3), m=np.array(ps0.m), e=np.array(ps0.e),
            model=model, step_times=np.array(self.steps), step_sizes=np.array(self.sizes))


def integrate(ps0: ParticleSet, model: HamiltonianModel, u: UnitSystem,
              cfg: IntegratorConfig, step_times=None, step_sizes=None) -> Trajectory:
    """Integrate from ``t = 0``.

    RK4 takes fixed steps ``cfg.dt``.  RK45 is an embedded Dormand-Prince
    pair whose accepted steps all have max-norm local error estimate
    ``<= cfg.tol``.  When ``step_times`` is given (RK45 only) every listed
    time is hit exactly: each interval is first tried as a single step and
    subdivided only if the error test fails, so two runs on the same grid can
    be compared point by point.  Passing the ``step_sizes`` recorded with
    that grid makes a rerun of the same model bit-identical.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        return _integrate(ps0, model, u, cfg, step_times, step_sizes)


def _integrate(ps0, model, u, cfg, step_times, step_sizes):
    f = _flat_rhs(ps0, model, u)
    n = ps0.n
    y = np.concatenate([ps0.r.ravel(), ps0.p.ravel()])
    rec = _Recorder(n, cfg.record_every)
    rec.add(0.0, y)

    def check(t, y):
        if _min_distance(y, n) < COLLISION_DISTANCE:
            raise CollisionError(f"particles collided at t = {t:.17g}", t=t)

    if cfg.method == "RK4":
        nsteps = int(round(cfg.t_end / cfg.dt))
        if cfg.max_steps is not None:
            nsteps = min(nsteps, cfg.max_steps)
        t = 0.0
        for k in range(1, nsteps + 1):
            y = _rk4_step(f, t, y, cfg.dt)
            t = k * cfg.dt
            check(t, y)
            rec.add(t, y, cfg.dt)
        return rec.finish(ps0, model)

    t, k1 = 0.0, f(0.0, y)
    if step_times is not None:
        grid = np.asarray(step_times, float)
        if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
            raise AlignmentError("step grid must start at 0 and increase strictly")
        sizes = np.diff(grid) if step_sizes is None else np.asarray(step_sizes, float)
        if sizes.shape != (grid.size - 1,):
            raise AlignmentError("step_sizes must have one entry per grid interval")
        for t_next, h in zip(grid[1:], sizes):
            t, y, k1, _, _ = _dp45_segment(
                f, t, y, k1, t_next, h, cfg.tol, lambda *a: False, check, exact_first=True)
            rec.add(t, y, h)
        return rec.finish(ps0, model)

    def on_accept(t, y, h):
        rec.add(t, y, h)
        return cfg.max_steps is not None and rec.count > cfg.max_steps

    _dp45_segment(f, t, y, k1, cfg.t_end, min(cfg.dt, cfg.t_end), cfg.tol, on_accept, check)
    return rec.finish(ps0, model)


def conservation_report(traj: Trajectory, u: UnitSystem) -> ConservationReport:
    if len(traj) < 2:
        raise ValueError("conservation report needs at least two snapshots")
    H = np.array([h_total(traj.snapshot(k), traj.model, u) for k in range(len(traj))])
    P = traj.p.sum(axis=1)
    L = np.cross(traj.r, traj.p).sum(axis=1)
    scale = abs(H[0]) if H[0] != 0 else 1.0
    return ConservationReport(
        energy_drift=float(np.max(np.abs(H - H[0])) / scale),
        momentum_drift=float(np.max(np.linalg.norm(P - P[0], axis=1))),
        angular_momentum_drift=float(np.max(np.linalg.norm(L - L[0], axis=1))),
    )


def trajectory_divergence(a: Trajectory, b: Trajectory):
    """Per-snapshot max particle distance and its running maximum."""
    if a.times.shape != b.times.shape or np.any(a.times != b.times):
        raise AlignmentError("trajectories are recorded on different time grids")
    if a.r.shape != b.r.shape:
        raise AlignmentError("trajectories have different particle counts")
    div = np.max(np.linalg.norm(a.r - b.r, axis=2), axis=1)
    return div, np.maximum.accumulate(div)


def _fmt(x):
    return format(float(x), ".17g")


def write_trajectory_csv(traj: Trajectory, path):
    n = traj.r.shape[1]
    header = ["t"]
    for i in range(n):
        header += [f"{c}{i}" for c in ("rx", "ry", "rz", "px", "py", "pz")]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k, t in enumerate(traj.times):
            row = [_fmt(t)]
            for i in range(n):
                row += [_fmt(v) for v in traj.r[k, i]] + [_fmt(v) for v in traj.p[k, i]]
            w.writerow(row)


def read_trajectory_csv(path):
    """Return ``(times, r, p)`` from a file written by :func:`write_trajectory_csv`."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n = (data.shape[1] - 1) // 6
    body = data[:, 1:].reshape(-1, n, 6)
    return data[:, 0], body[:, :, :3], body[:, :, 3:]
