"""Batch front-end: ``cgauge run`` and ``cgauge compare``.

A run reads one JSON config with a ``mode`` key (``classical``, ``quantum``,
``qed`` or ``kernel``) and exactly one matching section, and writes its
artifacts to ``<out>/<name>/``.  Exit status: 0 when every check passes,
1 when a check fails, 2 on a configuration error.

Flags fall back to ``CGAUGE_CONFIG``, ``CGAUGE_OUT``, ``CGAUGE_SEED`` and
``CGAUGE_THREADS``; ``CGAUGE_C`` overrides the speed of light of the config.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import classical as cl
from . import dynamics as dyn
from . import fock
from . import qed
from .errors import CollisionError, ConfigError, StiffnessError
from .quadrature import QuadratureSettings, kernel_quadrature

MODES = ("classical", "quantum", "qed", "kernel")
ENV_PREFIX = "CGAUGE_"


def _fmt(x):
    return format(float(x), ".17g")


def _line_of(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object", line=1)
    mode = cfg.get("mode")
    if mode not in MODES:
        raise ConfigError(f"'mode' must be one of {MODES}, got {mode!r}", line=_line_of(text, "mode") or 1)
    present = [m for m in MODES if m in cfg]
    if mode not in present:
        raise ConfigError(f"mode {mode!r} needs a {mode!r} section", line=_line_of(text, "mode"))
    extra = [m for m in present if m != mode]
    if extra:
        raise ConfigError(f"config has sections for several modes: {present}", line=_line_of(text, extra[0]))
    cfg.setdefault("name", path.stem)
    cfg["_text"] = text
    return cfg


def _need(section, key, text, kind=None):
    if key not in section:
        raise ConfigError(f"missing required key {key!r}", line=_line_of(text, key) or 1)
    val = section[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"key {key!r} has the wrong type", line=_line_of(text, key))
    return val


def _units(cfg):
    u = cfg.get("units", {})
    try:
        return cl.UnitSystem(c=float(u.get("c", 137.036)), hbar=float(u.get("hbar", 1.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad units: {exc}", line=_line_of(cfg["_text"], "units")) from exc


def _check(value, threshold):
    return {"value": value, "threshold": threshold, "passed": bool(value <= threshold)}


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _echo(cfg):
    return {k: v for k, v in cfg.items() if not k.startswith("_")}


# --- classical -------------------------------------------------------------

def _particles(section, text):
    plist = _need(section, "particles", text, list)
    try:
        return cl.ParticleSet(
            m=[pt["m"] for pt in plist], e=[pt["e"] for pt in plist],
            r=[pt["r"] for pt in plist], p=[pt.get("p", [0, 0, 0]) for pt in plist])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad particle list: {exc}", line=_line_of(text, "particles")) from exc


def _integrator(section, text):
    try:
        return dyn.IntegratorConfig(**section.get("integrator", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad integrator settings: {exc}", line=_line_of(text, "integrator")) from exc


def _model(name, section, text):
    try:
        return cl.HamiltonianModel.parse(name, inner_gradient=section.get("reading", "x"))
    except ValueError as exc:
        raise ConfigError(f"unknown model {name!r}", line=_line_of(text, "model") or _line_of(text, "models")) from exc


def _drift_checks(rep, section):
    limits = section.get("checks", {})
    checks = {}
    if "max_energy_drift" in limits:
        checks["energy_drift"] = _check(rep.energy_drift, limits["max_energy_drift"])
    if "max_momentum_drift" in limits:
        checks["momentum_drift"] = _check(rep.momentum_drift, limits["max_momentum_drift"])
    return checks


def run_classical(cfg, outdir, opts):
    text, section = cfg["_text"], cfg["classical"]
    u = _units(cfg)
    ps = _particles(section, text)
    model = _model(_need(section, "model", text, str), section, text)
    icfg = _integrator(section, text)
    traj = dyn.integrate(ps, model, u, icfg)
    dyn.write_trajectory_csv(traj, outdir / "trajectory.csv")
    rep = dyn.conservation_report(traj, u)
    checks = _drift_checks(rep, section)
    outputs = {
        "model": model.name,
        "accepted_steps": len(traj.step_times) - 1,
        "t_final": float(traj.times[-1]),
        "energy_initial": cl.h_total(ps, model, u),
        "conservation": rep.as_dict(),
        "artifacts": ["trajectory.csv"],
    }
    return outputs, checks


def run_compare(cfg, outdir, opts):
    text, section = cfg["_text"], cfg["classical"]
    models = _need(section, "models", text, list)
    if len(models) != 2:
        raise ConfigError("compare needs exactly two models", line=_line_of(text, "models"))
    u = _units(cfg)
    ps = _particles(section, text)
    icfg = _integrator(section, text)
    ma, mb = (_model(name, section, text) for name in models)
    a = dyn.integrate(ps, ma, u, icfg)
    if icfg.method == "RK45":
        b = dyn.integrate(ps, mb, u, icfg, step_times=a.step_times, step_sizes=a.step_sizes)
    else:
        b = dyn.integrate(ps, mb, u, icfg)
    div, env = dyn.trajectory_divergence(a, b)
    names = [f"trajectory_{k}_{m.name}.csv" for k, m in enumerate((ma, mb))]
    dyn.write_trajectory_csv(a, outdir / names[0])
    dyn.write_trajectory_csv(b, outdir / names[1])
    with open(outdir / "divergence.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "divergence", "envelope"])
        for row in zip(a.times, div, env):
            w.writerow([_fmt(v) for v in row])
    ra, rb = dyn.conservation_report(a, u), dyn.conservation_report(b, u)
    checks = {}
    for tag, rep in (("a", ra), ("b", rb)):
        for k, v in _drift_checks(rep, section).items():
            checks[f"{tag}_{k}"] = v
    if "max_divergence" in section.get("checks", {}):
        checks["divergence"] = _check(float(env[-1]), section["checks"]["max_divergence"])
    outputs = {
        "models": [ma.name, mb.name],
        "max_divergence": float(env[-1]),
        "final_divergence": float(div[-1]),
        "conservation": {"a": ra.as_dict(), "b": rb.as_dict()},
        "artifacts": names + ["divergence.csv"],
    }
    return outputs, checks


# --- quantum ---------------------------------------------------------------

def run_quantum(cfg, outdir, opts):
    text, section = cfg["_text"], cfg["quantum"]
    u = _units(cfg)
    try:
        geom = fock.BoxGeometry(float(section.get("L", 2 * np.pi)))
        toggles = fock.CouplingToggles(c=u.c, **section.get("toggles", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad quantum settings: {exc}", line=_line_of(text, "toggles") or _line_of(text, "quantum")) from exc
    n_max = int(_need(section, "n_max", text))
    N = int(_need(section, "N", text))
    basis = fock.enumerate_sector_basis(geom, n_max, N, section.get("P_total"), section.get("Sz"),
                                        capacity=int(section.get("capacity", fock.DEFAULT_CAPACITY)))
    if len(basis) == 0:
        raise ConfigError("requested sector is empty", line=_line_of(text, "quantum"))
    H = fock.assemble_hamiltonian(basis, toggles, u, a_ext=section.get("a_ext"))
    spectrum = fock.diagonalize(H)
    fock.write_spectrum_csv(spectrum.eigenvalues, outdir / "spectrum.csv")
    asym = float(abs(H - H.T).max()) if H.nnz else 0.0
    outputs = fock.spectrum_report(basis, toggles, spectrum)
    outputs["residual"] = spectrum.residual
    outputs["artifacts"] = ["spectrum.csv"]
    checks = {"hermiticity": _check(asym, 0.0)}
    return outputs, checks


# --- qed -------------------------------------------------------------------

def run_qed(cfg, outdir, opts):
    text, section = cfg["_text"], cfg["qed"]
    u = _units(cfg)
    samples = int(_need(section, "samples", text))
    seed = opts.seed if opts.seed is not None else int(section.get("seed", 0))
    h_reading = section.get("h_reading", "2pi_hbar")
    if h_reading not in qed.H_READINGS:
        raise ConfigError(f"h_reading must be one of {qed.H_READINGS}", line=_line_of(text, "h_reading"))
    geom = fock.BoxGeometry(float(section.get("L", 2 * np.pi)))
    couplings = fock.CouplingToggles(c=u.c, e=float(section.get("e", 1.0)), m=float(section.get("m", 1.0)))
    report = qed.equivalence_report(samples, seed, geom, u, couplings, h_reading=h_reading)
    _write_json(outdir / "equivalence.json", report)
    tol = float(section.get("tolerance", 1e-10))
    return {**report, "artifacts": ["equivalence.json"]}, {"max_rel_diff": _check(report["max_rel_diff"], tol)}


# --- kernel ----------------------------------------------------------------

def _direction_list(section):
    dirs = section.get("directions")
    if dirs is None:
        return [np.array(d, float) / np.linalg.norm(d) for d in
                ([1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [1, 2, 3])]
    return [np.asarray(d, float) / np.linalg.norm(d) for d in dirs]


def run_kernel(cfg, outdir, opts):
    text, section = cfg["_text"], cfg["kernel"]
    u = _units(cfg)
    reading = section.get("reading", "x")
    if reading not in cl.INNER_GRADIENT_READINGS:
        raise ConfigError(f"reading must be one of {cl.INNER_GRADIENT_READINGS}", line=_line_of(text, "reading"))
    try:
        qs = QuadratureSettings(**section.get("quadrature", {}))
    except TypeError as exc:
        raise ConfigError(f"bad quadrature settings: {exc}", line=_line_of(text, "quadrature")) from exc
    R_grid = [float(R) for R in section.get("R", [0.5, 1.0, 2.0, 5.0, 10.0])]
    dirs = _direction_list(section)
    darwin = cl.HamiltonianModel(cl.ModelKind.DARWIN)
    literal = cl.HamiltonianModel(cl.ModelKind.TRANSVERSE_LITERAL, inner_gradient=reading)

    jobs = [(R, d) for R in R_grid for d in dirs]

    def work(job):
        R, d = job
        r = R * d
        return (kernel_quadrature(r, qs, inner_gradient="source"),
                kernel_quadrature(r, qs, inner_gradient=reading))

    with ThreadPoolExecutor(max_workers=max(1, opts.threads)) as pool:
        quads = list(pool.map(work, jobs))

    rows, points = [], []
    worst_lit, darwin_exact = 0.0, True
    for (R, d), (q_src, q_lit) in zip(jobs, quads):
        r = R * d
        kd, kl = cl.kernel_closed(darwin, r), cl.kernel_closed(literal, r)
        n_hat = r / np.linalg.norm(r)
        expected = (np.eye(3) + np.outer(n_hat, n_hat)) / (2 * np.linalg.norm(r))
        darwin_exact &= bool(np.array_equal(kd.T, expected))
        rel_d = float(np.max(np.abs(q_src.T - kd.T)) / np.max(np.abs(kd.T)))
        rel_l = float(np.max(np.abs(q_lit.T - kl.T)) / np.max(np.abs(kl.T)))
        worst_lit = max(worst_lit, rel_l)
        for name, k, q, rel in (("darwin", kd, q_src, rel_d), ("transverse_literal", kl, q_lit, rel_l)):
            rows.append([_fmt(R), *(_fmt(v) for v in d), name, _fmt(k.a), _fmt(k.b),
                         _fmt(q.a), _fmt(q.b), _fmt(q.error), _fmt(rel)])
        points.append({
            "R": R, "direction": d.tolist(),
            "delta_a": kl.a - kd.a, "delta_b": kl.b - kd.b,
            "delta_a_quadrature": q_lit.a - q_src.a, "delta_b_quadrature": q_lit.b - q_src.b,
            "quadrature_error": q_lit.error + q_src.error,
        })
    with open(outdir / "kernel.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["R", "nx", "ny", "nz", "reading", "a", "b", "quad_a", "quad_b", "quad_err", "rel_err"])
        w.writerows(rows)

    energy = discrepancy_energies(u, reading)
    report = {"reading": reading, "points": points, "two_body_energies": energy,
              "nonzero": any(abs(p["delta_a"]) > 0 or abs(p["delta_b"]) > 0 for p in points)}
    _write_json(outdir / "discrepancy.json", report)
    checks = {
        "literal_vs_quadrature": _check(worst_lit, float(section.get("tolerance", 1e-5))),
        "darwin_exact": {"value": darwin_exact, "threshold": True, "passed": darwin_exact},
    }
    outputs = {"grid_points": len(jobs), "max_literal_rel_err": worst_lit,
               "nonzero_discrepancy": report["nonzero"],
               "artifacts": ["kernel.csv", "discrepancy.json"]}
    return outputs, checks


def discrepancy_energies(u, reading="x"):
    """Two electrons at unit separation: Darwin vs literal 1/c^2 energy."""
    out = []
    for label, p in (("p_perp_n", [0.0, 1.0, 0.0]), ("p_par_n", [1.0, 0.0, 0.0])):
        ps = cl.ParticleSet([1, 1], [-1, -1], [[0.5, 0, 0], [-0.5, 0, 0]], [p, p])
        vals = {kind.value: cl.magnetic_energy(ps, cl.HamiltonianModel(kind, inner_gradient=reading), u)
                for kind in (cl.ModelKind.DARWIN, cl.ModelKind.TRANSVERSE_LITERAL)}
        vals["difference"] = vals["transverse_literal"] - vals["darwin"]
        out.append({"case": label, **vals})
    return out


RUNNERS = {"classical": run_classical, "quantum": run_quantum, "qed": run_qed, "kernel": run_kernel}


def execute(command, config_path, out_root, seed=None, threads=1):
    """Run one command; returns the exit status."""
    opts = argparse.Namespace(seed=seed, threads=threads)
    try:
        cfg = load_config(config_path)
        if os.environ.get(ENV_PREFIX + "C"):
            # applied to the config itself so the echoed inputs show the effective value
            try:
                c = float(os.environ[ENV_PREFIX + "C"])
            except ValueError as exc:
                raise ConfigError(f"{ENV_PREFIX}C is not a number: {exc}") from exc
            cfg["units"] = {**cfg.get("units", {}), "c": c}
        if command == "compare" and cfg["mode"] != "classical":
            raise ConfigError("compare needs a classical config", line=_line_of(cfg["_text"], "mode"))
        if command == "run" and cfg["mode"] == "classical" and "model" not in cfg["classical"]:
            raise ConfigError("classical run needs 'model' (use compare for 'models')",
                              line=_line_of(cfg["_text"], "classical"))
        outdir = Path(out_root) / str(cfg["name"])
        outdir.mkdir(parents=True, exist_ok=True)
        runner = run_compare if command == "compare" else RUNNERS[cfg["mode"]]
        t0 = time.perf_counter()
        outputs, checks = runner(cfg, outdir, opts)
        elapsed = time.perf_counter() - t0
    except ConfigError as exc:
        print(f"{config_path}: configuration error: {exc}", file=sys.stderr)
        return 2
    except (CollisionError, StiffnessError) as exc:
        print(f"{config_path}: integration failed: {exc}", file=sys.stderr)
        return 1
    passed = all(c["passed"] for c in checks.values())
    report = {
        "command": command,
        "name": cfg["name"],
        "mode": cfg["mode"],
        "seed": seed,
        "inputs": _echo(cfg),
        "outputs": outputs,
        "checks": checks,
        "passed": passed,
    }
    _write_json(outdir / "report.json", report)
    # wall-clock time is kept out of report.json so artifacts stay reproducible
    _write_json(outdir / "timing.json", {"seconds": elapsed, "threads": threads})
    for name, c in checks.items():
        print(f"{'PASS' if c['passed'] else 'FAIL'} {name}: {c['value']} (limit {c['threshold']})")
    print(f"artifacts in {outdir}")
    return 0 if passed else 1


def build_parser():
    env = os.environ
    parser = argparse.ArgumentParser(prog="cgauge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run one scenario"), ("compare", "compare two classical models")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=env.get(ENV_PREFIX + "CONFIG"))
        p.add_argument("--out", default=env.get(ENV_PREFIX + "OUT", "out"))
        p.add_argument("--seed", type=int, default=_env_int(ENV_PREFIX + "SEED"))
        p.add_argument("--threads", type=int, default=_env_int(ENV_PREFIX + "THREADS") or 1)
    return parser


def _env_int(key):
    val = os.environ.get(key)
    return int(val) if val not in (None, "") else None


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if not args.config:
        print("no config given (--config or CGAUGE_CONFIG)", file=sys.stderr)
        return 2
    return execute(args.command, args.config, args.out, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())
