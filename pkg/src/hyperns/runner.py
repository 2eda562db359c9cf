"""Experiment orchestration: turn a validated config into outputs on disk.

Each driver takes a :class:`~hyperns.config.RunConfig` and an output
directory and returns a process exit status.  ``simulate`` evolves the
configured scenario, writing the diagnostics CSV, snapshot files at the
configured cadence, a rolling checkpoint, and a summary JSON.  ``sweep``
runs the relaxation-time convergence study.  ``hypercheck`` samples states
and directions and reports hyperbolicity along with the compensator margin.
``audit`` rebuilds the diagnostics from stored snapshot files and compares
them with the originals.  ``ledger_report`` evaluates the blow-up
certificate ledger on the configured initial data without time stepping.

Determinism: the pipeline contains no free-running randomness.  The config
seed feeds the sampling in ``hypercheck`` only, so identical config plus
seed reproduces every output byte for byte (summaries record no wall-clock
information).

A simulation that aborts (state recovery failure or a collapsed time step)
still writes diagnostics for the completed part, keeps the checkpoint of the
last completed snapshot, records the abort reason in the summary, and
returns a nonzero status.
"""

from __future__ import annotations

import dataclasses
import json
import os
from typing import Optional

import numpy as np

from . import io
from .config import ConfigError, RunConfig, parse_config
from .diagnostics import (blowup_bound_monitor, diagnostics_records,
                          write_diagnostics_csv)
from .eigen import eigen_report, kawashima_check
from .grid import Grid
from .scenarios import (BlowupProfileSpec, blowup_initial_data,
                        relaxation_sweep, small_data, well_prepared_data)
from .solver import CFLError, StepAbortError, field_from_primitive, step
from .thermo import DomainError, PrimitiveState, check_admissible

__all__ = [
    "base_wave_profile",
    "build_initial_field",
    "simulate",
    "sweep",
    "hypercheck",
    "audit",
    "ledger_report",
]

#: Velocity phase offset of the standard wave profile.  Keeps the velocity
#: zeros away from the density extrema so the profile exercises stagnation
#: points and compression in the same run.
WAVE_PHASE = 0.7


def base_wave_profile(grid: Grid, amplitudes, phase: float = WAVE_PHASE) -> PrimitiveState:
    """Smooth periodic wave around equilibrium, varying along the first axis.

    ``amplitudes`` are the (density, velocity, temperature) deviations.  Heat
    flux and bulk stress start at zero.
    """
    a_rho, a_u, a_th = (float(a) for a in amplitudes)
    x = grid.centers(0)
    span = grid.hi[0] - grid.lo[0]
    xn = 2.0 * np.pi * (x - grid.lo[0]) / span
    shape = grid.shape
    ones = np.ones(shape)

    def along_x(profile):
        if grid.dim == 1:
            return profile
        return profile.reshape((-1,) + (1,) * (grid.dim - 1)) * ones

    rho = along_x(1.0 + a_rho * np.sin(xn))
    theta = along_x(1.0 + a_th * np.cos(xn))
    u = np.zeros((grid.dim,) + shape)
    u[0] = along_x(a_u * np.sin(xn + phase))
    return PrimitiveState(rho=rho, u=u, theta=theta,
                          q=np.zeros((grid.dim,) + shape), s2=np.zeros(shape))


def build_initial_field(config: RunConfig):
    """Initial data for the configured scenario.

    Returns ``(field, ledger)``; the ledger is only populated by the blow-up
    scenario on a three-dimensional grid.
    """
    kind = config.scenario.kind
    opts = config.scenario.options
    g, p = config.grid, config.params
    try:
        return _dispatch_initial_field(kind, opts, g, p)
    except DomainError as exc:
        raise ConfigError([("scenario", str(exc))]) from exc


def _dispatch_initial_field(kind, opts, g, p):
    if kind == "equilibrium":
        shape = g.shape
        prim = PrimitiveState(rho=np.full(shape, float(opts["rho"])),
                              u=np.zeros((g.dim,) + shape),
                              theta=np.full(shape, float(opts["theta"])),
                              q=np.zeros((g.dim,) + shape),
                              s2=np.zeros(shape))
        return field_from_primitive(g, prim, p), None
    if kind == "small-data":
        return small_data(g, p, float(opts["amplitude"])), None
    if kind == "well-prepared":
        base = base_wave_profile(g, opts["amplitudes"])
        tau = opts["tau"] if opts["tau"] is not None else p.tau1
        return well_prepared_data(g, p, float(tau), base), None
    spec = BlowupProfileSpec(m_support=float(opts["m_support"]),
                             amplitude=float(opts["amplitude"]),
                             mollifier_width=float(opts["mollifier_width"]),
                             rho_inside=float(opts["rho_inside"]),
                             theta_inside=float(opts["theta_inside"]))
    return blowup_initial_data(spec, g, p)


def _drift(final, initial):
    return abs(final - initial) / max(abs(initial), 1.0)


def _ledger_dict(ledger):
    if ledger is None:
        return None
    d = dataclasses.asdict(ledger)
    d["applicable"] = ledger.applicable
    return d


def _summarize(config, records, ledger, monitor, aborted, reason, steps,
               final_state):
    rec0, recn = records[0], records[-1]
    conservation = {
        "mass": _drift(recn.mass, rec0.mass),
        "momentum": [_drift(b, a) for a, b in zip(rec0.mom, recn.mom)],
        "energy": _drift(recn.etot, rec0.etot),
    }
    drift_max = max([conservation["mass"], conservation["energy"]]
                    + conservation["momentum"])
    eta = np.array([r.eta1_total for r in records])
    cum = np.array([r.production_cum for r in records])
    balance = np.max(np.abs(eta - eta[0] + cum)) if len(records) else 0.0
    production_steps = np.diff(cum)
    nonneg = bool(np.all(production_steps >= -1e-14 * max(1.0, cum[-1])))
    prim = final_state.primitive(config.params)
    admissible = bool(np.all(check_admissible(prim, config.params)))
    bound_ok = None
    if monitor is not None and monitor.applicable:
        bound_ok = bool(np.all(monitor.satisfied))
    return {
        "scenario": config.scenario.kind,
        "seed": config.seed,
        "notices": list(config.notices),
        "run": {
            "t_final": final_state.t,
            "steps": steps,
            "snapshots_written": len(records),
            "aborted": aborted,
            "abort_reason": reason,
        },
        "conservation": conservation,
        "entropy_audit": {
            "eta1_initial": float(eta[0]),
            "eta1_final": float(eta[-1]),
            "production_total": float(cum[-1]),
            "balance_residual_max": float(balance),
        },
        "ledger": _ledger_dict(ledger),
        "verdicts": {
            "completed": not aborted,
            "conservation_drift_max": drift_max,
            "entropy_production_nonnegative": nonneg,
            "admissible_final": admissible,
            "bound_satisfied": bound_ok,
        },
    }


def _write_config_echo(out_dir, config):
    path = os.path.join(out_dir, "config.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(config.resolved, indent=2, sort_keys=True) + "\n")


def simulate(config: RunConfig, out_dir: Optional[str] = None,
             until: Optional[float] = None,
             resume: Optional[str] = None) -> int:
    """Evolve the configured scenario and write the full output set.

    ``until`` truncates the run at that time without changing the snapshot
    cadence, so a truncated run followed by a resume reproduces the
    uninterrupted run exactly.  ``resume`` continues from a checkpoint
    written by a previous invocation of the same config.
    """
    out = os.fspath(out_dir) if out_dir is not None else config.output_dir
    os.makedirs(out, exist_ok=True)
    _write_config_echo(out, config)
    p, cfg, g = config.params, config.solver, config.grid

    f0, ledger = build_initial_field(config)
    if resume is not None:
        f = io.load_checkpoint(resume)
        if f.grid != g:
            raise ConfigError([("grid", "checkpoint grid does not match the "
                                "configured grid")])
    else:
        f = f0

    schedule = np.linspace(0.0, cfg.t_end, config.snapshots)
    eps = 1e-12 * max(1.0, cfg.t_end)
    if until is not None:
        if until <= 0.0:
            raise ConfigError([("until", "must be positive")])
        schedule = schedule[schedule <= until + eps]
    done = int(np.sum(schedule <= f.t + eps))
    targets = schedule[done:]
    first_index = max(done - 1, 0)

    def emit(index, state):
        io.write_snapshot(os.path.join(out, f"snapshot_{index:04d}"), state, p)
        io.save_checkpoint(os.path.join(out, "checkpoint_last.bin"), state)

    states = [f]
    emit(first_index, f)
    steps = 0
    aborted = False
    reason = None
    for offset, target in enumerate(targets):
        try:
            while f.t < target - eps:
                f = step(f, cfg, p, dt_max=target - f.t)
                steps += 1
        except (StepAbortError, CFLError) as exc:
            aborted = True
            reason = f"{type(exc).__name__}: {exc}"
            break
        f = dataclasses.replace(f, t=float(target))
        states.append(f)
        emit(done + offset, f)

    records = diagnostics_records(states, p, ledger=ledger,
                                  support_tol=config.support_tol)
    write_diagnostics_csv(records, os.path.join(out, "diagnostics.csv"), g.dim)
    monitor = None
    if ledger is not None and ledger.applicable:
        monitor = blowup_bound_monitor(states, p, ledger)
    if not aborted:
        io.save_checkpoint(os.path.join(out, "checkpoint_final.bin"),
                           states[-1])
    summary = _summarize(config, records, ledger, monitor, aborted, reason,
                         steps, states[-1])
    io.write_summary(os.path.join(out, "summary.json"), summary)
    return 1 if aborted else 0


def sweep(config: RunConfig, out_dir: Optional[str] = None) -> int:
    """Relaxation-time convergence study driven by the ``sweep`` section."""
    out = os.fspath(out_dir) if out_dir is not None else config.output_dir
    os.makedirs(out, exist_ok=True)
    _write_config_echo(out, config)
    sw = config.sweep
    base = base_wave_profile(config.grid, sw.amplitudes)
    t_end = sw.t_end if sw.t_end is not None else config.solver.t_end
    result = relaxation_sweep(config.grid, config.params, list(sw.taus), base,
                              t_end, cfg=config.solver, seed_mode=sw.seed_mode)
    result.to_csv(os.path.join(out, "sweep.csv"))
    rows = [{"tau": r.tau, "err_state": r.err_state, "err_flux": r.err_flux,
             "failed": r.failed} for r in result.rows]
    ok = bool(np.isfinite(result.slope_state)
              and np.isfinite(result.slope_flux))
    io.write_summary(os.path.join(out, "sweep.json"), {
        "seed_mode": sw.seed_mode,
        "t_end": t_end,
        "slope_state": result.slope_state,
        "slope_flux": result.slope_flux,
        "rows": rows,
        "ok": ok,
    })
    return 0 if ok else 1


def _sample_state(rng, p):
    b = p.box
    # Stay strictly inside the admissible box; its corners are validated at
    # model construction time, so every interior point is usable.
    frac = rng.uniform(0.1, 0.9, size=3)
    rho = b.rho_min + frac[0] * (b.rho_max - b.rho_min)
    theta = b.theta_min + frac[1] * (b.theta_max - b.theta_min)
    s2 = (2.0 * frac[2] - 1.0) * b.s2_max
    u = rng.uniform(-1.0, 1.0, size=p.dim)
    norm = np.sqrt(np.sum(u * u))
    if norm > 0:
        u = u / norm * rng.uniform(0.0, 0.9) * b.u_max
    q = rng.uniform(-1.0, 1.0, size=p.dim)
    norm = np.sqrt(np.sum(q * q))
    if norm > 0:
        q = q / norm * rng.uniform(0.0, 0.9) * b.q_max
    return PrimitiveState(rho=rho, u=u, theta=theta, q=q, s2=s2)


def hypercheck(config: RunConfig, out_dir: Optional[str] = None,
               n_states: int = 5, n_directions: int = 4) -> int:
    """Sample admissible states and directions; report wave structure.

    For each sample the frozen-flux characteristic report is evaluated (real
    speeds, full eigenvector basis, factorization consistency); the
    compensator existence check runs once per parameter set.  Deterministic
    for a fixed config seed.
    """
    out = os.fspath(out_dir) if out_dir is not None else config.output_dir
    os.makedirs(out, exist_ok=True)
    p = config.params
    rng = np.random.default_rng(config.seed)
    directions = [np.eye(p.dim)[a] for a in range(p.dim)]
    for _ in range(n_directions):
        v = rng.normal(size=p.dim)
        directions.append(v / np.sqrt(np.sum(v * v)))
    samples = []
    all_hyperbolic = True
    for _ in range(n_states):
        s = _sample_state(rng, p)
        for xi in directions:
            rep = eigen_report(s, xi, p)
            all_hyperbolic = all_hyperbolic and bool(rep.hyperbolic)
            samples.append({
                "state": {"rho": s.rho, "u": list(np.atleast_1d(s.u)),
                          "theta": s.theta,
                          "q": list(np.atleast_1d(s.q)), "s2": s.s2},
                "direction": list(xi),
                "hyperbolic": bool(rep.hyperbolic),
                "max_speed": rep.max_speed,
                "eigenvector_count": rep.eigenvector_count,
            })
    comp = kawashima_check(p)
    report = {
        "seed": config.seed,
        "all_hyperbolic": all_hyperbolic,
        "samples": samples,
        "kawashima": {
            "n_param": comp.n_param,
            "epsilon": comp.epsilon,
            "antisymmetry_defect": comp.antisymmetry_defect,
            "m_min_eigenvalue": comp.m_min_eigenvalue,
            "margin": comp.margin,
        },
    }
    io.write_summary(os.path.join(out, "hypercheck.json"), report)
    return 0 if all_hyperbolic and comp.margin > 0.0 else 1


def _load_run_snapshots(run_dir, grid, p):
    names = {}
    for name in os.listdir(run_dir):
        if name.startswith("snapshot_") and name.endswith((".csv", ".bin")):
            idx = int(name[len("snapshot_"):-4])
            names[idx] = name
    fields = []
    for idx in sorted(names):
        fields.append(io.load_snapshot(os.path.join(run_dir, names[idx]),
                                       grid, p))
    return fields


def audit(run_dir: str, out_dir: Optional[str] = None) -> int:
    """Recompute diagnostics from a run's stored snapshots and compare.

    Reads the config echo and snapshot files from ``run_dir``, rebuilds the
    diagnostics table, writes it as ``diagnostics_audit.csv``, and compares
    it column by column against the run's original ``diagnostics.csv``.
    Binary snapshots reproduce the originals exactly; CSV snapshots go back
    through the conserved variables, which can move the last bit.
    """
    run_dir = os.fspath(run_dir)
    out = os.fspath(out_dir) if out_dir is not None else run_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(run_dir, "config.json"), encoding="utf-8") as fh:
        config = parse_config(fh.read())
    p, g = config.params, config.grid
    fields = _load_run_snapshots(run_dir, g, p)
    if not fields:
        raise ConfigError([("run_dir", "no snapshot files found")])
    ledger = None
    if config.scenario.kind == "blowup":
        ledger = build_initial_field(config)[1]
    records = diagnostics_records(fields, p, ledger=ledger,
                                  support_tol=config.support_tol)
    audit_csv = os.path.join(out, "diagnostics_audit.csv")
    write_diagnostics_csv(records, audit_csv, g.dim)

    original = os.path.join(run_dir, "diagnostics.csv")
    max_rel = None
    matches = None
    if os.path.exists(original):
        a = np.loadtxt(audit_csv, delimiter=",", skiprows=1, ndmin=2)
        b = np.loadtxt(original, delimiter=",", skiprows=1, ndmin=2)
        if a.shape != b.shape:
            matches = False
        else:
            finite = np.isfinite(a) & np.isfinite(b)
            same_gaps = bool(np.all(np.isfinite(a) == np.isfinite(b)))
            diff = np.abs(a - b) / np.maximum(np.abs(b), 1.0)
            max_rel = float(np.max(diff[finite])) if finite.any() else 0.0
            matches = same_gaps and max_rel <= 1e-9
    io.write_summary(os.path.join(out, "audit.json"), {
        "run_dir": run_dir,
        "rows": len(records),
        "recomputed_csv": audit_csv,
        "compared_to": original if os.path.exists(original) else None,
        "max_rel_diff": max_rel,
        "matches": matches,
    })
    return 1 if matches is False else 0


def ledger_report(config: RunConfig, out_dir: Optional[str] = None) -> int:
    """Evaluate the blow-up certificate ledger without time stepping.

    Requires the blow-up scenario.  Exit status 0 means the ledger is
    applicable and every recorded condition holds.
    """
    if config.scenario.kind != "blowup":
        raise ConfigError([("scenario.kind",
                            "the ledger report requires the 'blowup' scenario")])
    out = os.fspath(out_dir) if out_dir is not None else config.output_dir
    os.makedirs(out, exist_ok=True)
    _, ledger = build_initial_field(config)
    if ledger is None:
        io.write_summary(os.path.join(out, "ledger.json"), {
            "applicable": False,
            "reason": "the certificate ledger requires a 3-dimensional grid",
        })
        return 1
    d = _ledger_dict(ledger)
    conditions = {k: v for k, v in d.items() if k.startswith("cond_")}
    io.write_summary(os.path.join(out, "ledger.json"), d)
    return 0 if ledger.applicable and all(conditions.values()) else 1
