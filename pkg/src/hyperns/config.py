"""Run configuration: JSON ingestion, eager validation, defaults.

A run is described by one JSON object with sections ``model`` (physical
parameters plus the admissible box), ``grid``, ``solver``, ``scenario``,
``sweep``, ``diagnostics``, and the top-level ``output_dir`` and ``seed``.
Every section is optional; missing entries are filled from :data:`DEFAULTS`.

Validation is eager and collects every problem before reporting, so a
rejected document produces a single aggregated error naming each offending
dotted path instead of a fix-one-see-the-next loop.  Unknown keys are errors
at any depth: a typo never silently falls back to a default.

Environment variables with the ``HYPERNS_`` prefix override individual
entries before validation.  Path components are joined with a double
underscore, so ``HYPERNS_MODEL__TAU1=0.02`` targets ``model.tau1`` and
``HYPERNS_OUTPUT_DIR=/tmp/x`` targets ``output_dir``.  Values are parsed as
JSON when possible and taken as plain strings otherwise.  This keeps CI
parameter sweeps out of the config files themselves.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from typing import Any, Mapping, Optional

from .grid import Grid
from .solver import SolverConfig
from .thermo import AdmissibleBox, ModelParams

__all__ = [
    "ConfigError",
    "ConfigWarning",
    "DEFAULTS",
    "ScenarioSpec",
    "SweepSpec",
    "RunConfig",
    "parse_config",
    "default_document",
]

ENV_PREFIX = "HYPERNS_"

SCENARIO_KINDS = ("equilibrium", "small-data", "well-prepared", "blowup")

#: Fully resolved default document.  ``parse_config("{}")`` yields exactly
#: these settings.  Scenario options are per kind; only the options matching
#: the selected kind are accepted.
DEFAULTS: dict = {
    "model": {
        "tau1": 1e-2,
        "tau3": 1e-2,
        "kappa": 1e-2,
        "lam": 1e-2,
        "mu": 0.0,
        "cv": 1.5,
        "r_gas": 1.0,
        "box": {
            "rho_min": 0.5,
            "rho_max": 2.0,
            "theta_min": 0.5,
            "theta_max": 2.0,
            "u_max": 2.0,
            "q_max": 0.1,
            "s2_max": 0.1,
        },
    },
    "grid": {
        "lo": [0.0],
        "hi": [1.0],
        "cells": [128],
        "bc": ["periodic"],
    },
    "solver": {
        "cfl": 0.4,
        "flux": "rusanov",
        "integrator": "ssp-rk2",
        "relaxation": "exact-split",
        "viscous": "explicit",
        "t_end": 1.0,
        "output_interval": 0.0,
    },
    "scenario": {"kind": "equilibrium"},
    "sweep": {
        "taus": [1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
        "seed_mode": "saturating",
        "amplitudes": [0.2, 0.1, 0.1],
        "t_end": None,
    },
    "diagnostics": {"snapshots": 11, "support_tol": 1e-12},
    "output_dir": "hyperns-out",
    "seed": 0,
}

_SCENARIO_OPTION_DEFAULTS = {
    "equilibrium": {"rho": 1.0, "theta": 1.0},
    "small-data": {"amplitude": 1e-2},
    "well-prepared": {"amplitudes": [0.2, 0.1, 0.1], "tau": None},
    "blowup": {
        "m_support": 5.0,
        "amplitude": 1.0,
        "mollifier_width": 0.25,
        "rho_inside": 1.2,
        "theta_inside": 1.0,
    },
}


class ConfigError(ValueError):
    """Aggregated schema report for a rejected configuration document.

    ``paths`` holds the dotted path of every offending entry; the message
    lists one line per problem.
    """

    def __init__(self, problems):
        self.problems = tuple(problems)
        self.paths = tuple(p for p, _ in self.problems)
        lines = [f"run configuration rejected ({len(self.problems)} problem"
                 f"{'s' if len(self.problems) != 1 else ''}):"]
        for path, msg in self.problems:
            lines.append(f"  {path}: {msg}" if path else f"  {msg}")
        super().__init__("\n".join(lines))


class ConfigWarning(UserWarning):
    """Non-fatal configuration notice (the run proceeds)."""


@dataclasses.dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    options: Mapping[str, Any]


@dataclasses.dataclass(frozen=True)
class SweepSpec:
    taus: tuple
    seed_mode: str
    amplitudes: tuple
    t_end: Optional[float]


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Validated run description.

    ``resolved`` is the fully populated JSON document (defaults filled,
    environment overrides applied); writing it back to disk and re-parsing
    it reproduces this object.  ``notices`` collects the warnings raised
    during parsing so they can be echoed into run summaries.
    """

    params: ModelParams
    grid: Grid
    solver: SolverConfig
    scenario: ScenarioSpec
    sweep: SweepSpec
    snapshots: int
    support_tol: float
    output_dir: str
    seed: int
    resolved: Mapping[str, Any]
    notices: tuple = ()


def default_document() -> dict:
    """Deep copy of the defaults, with scenario options filled in."""
    doc = json.loads(json.dumps(DEFAULTS))
    kind = doc["scenario"]["kind"]
    for key, val in _SCENARIO_OPTION_DEFAULTS[kind].items():
        doc["scenario"].setdefault(key, val)
    return doc


def _apply_env_overrides(doc, env, problems):
    for name in sorted(env):
        if not name.startswith(ENV_PREFIX):
            continue
        raw = env[name]
        parts = [p.lower() for p in name[len(ENV_PREFIX):].split("__") if p]
        if not parts:
            problems.append((name, "empty override path"))
            continue
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        for part in parts[:-1]:
            nxt = node.get(part)
            if not isinstance(nxt, dict):
                nxt = {}
                node[part] = nxt
            node = nxt
        node[parts[-1]] = value


def _merge_defaults(doc, defaults, prefix, problems):
    """Fill missing keys from defaults; flag keys the schema does not know."""
    out = {}
    for key, dval in defaults.items():
        if key in doc:
            uval = doc[key]
            if isinstance(dval, dict):
                if isinstance(uval, dict):
                    out[key] = _merge_defaults(uval, dval, prefix + key + ".",
                                               problems)
                else:
                    problems.append((prefix + key, "expected an object"))
                    out[key] = json.loads(json.dumps(dval))
            else:
                out[key] = uval
        else:
            out[key] = json.loads(json.dumps(dval))
    for key in doc:
        if key not in defaults:
            problems.append((prefix + key, "unknown key"))
    return out


def _number(doc, path, problems, positive=False, nonnegative=False,
            allow_none=False):
    parts = path.split(".")
    node = doc
    for part in parts:
        node = node[part]
    if node is None and allow_none:
        return None
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        problems.append((path, f"expected a number, got {node!r}"))
        return None
    val = float(node)
    if val != val or val in (float("inf"), float("-inf")):
        problems.append((path, "must be finite"))
        return None
    if positive and val <= 0.0:
        problems.append((path, f"must be positive, got {node!r}"))
        return None
    if nonnegative and val < 0.0:
        problems.append((path, f"must be nonnegative, got {node!r}"))
        return None
    return val


def _integer(node, path, problems, minimum=None):
    if isinstance(node, bool) or not isinstance(node, int):
        problems.append((path, f"expected an integer, got {node!r}"))
        return None
    if minimum is not None and node < minimum:
        problems.append((path, f"must be at least {minimum}, got {node}"))
        return None
    return node


def _validate_grid(sec, problems):
    lo, hi, cells, bc = sec["lo"], sec["hi"], sec["cells"], sec["bc"]
    if isinstance(bc, str):
        bc = [bc]
    ok = True
    for name, val in (("lo", lo), ("hi", hi), ("cells", cells), ("bc", bc)):
        if not isinstance(val, list) or not 1 <= len(val) <= 3:
            problems.append((f"grid.{name}", "expected a list of 1 to 3 entries"))
            ok = False
    if not ok:
        return None
    if isinstance(sec["bc"], str):
        bc = [sec["bc"]] * len(cells)
    try:
        return Grid(tuple(lo), tuple(hi), tuple(cells), tuple(bc))
    except (ValueError, TypeError) as exc:
        problems.append(("grid", str(exc)))
        return None


def _validate_scenario(sec, problems):
    kind = sec.get("kind", DEFAULTS["scenario"]["kind"])
    if kind not in SCENARIO_KINDS:
        problems.append(("scenario.kind",
                         f"must be one of {SCENARIO_KINDS}, got {kind!r}"))
        return None
    opts = dict(_SCENARIO_OPTION_DEFAULTS[kind])
    for key, val in sec.items():
        if key == "kind":
            continue
        if key not in opts:
            problems.append((f"scenario.{key}",
                             f"unknown key for scenario kind {kind!r}"))
            continue
        opts[key] = val
    holder = {"scenario": opts}
    if kind == "equilibrium":
        _number(holder, "scenario.rho", problems, positive=True)
        _number(holder, "scenario.theta", problems, positive=True)
    elif kind == "small-data":
        _number(holder, "scenario.amplitude", problems, nonnegative=True)
    elif kind == "well-prepared":
        amps = opts["amplitudes"]
        if not isinstance(amps, list) or len(amps) != 3 or not all(
                isinstance(a, (int, float)) and not isinstance(a, bool)
                and a >= 0 for a in amps):
            problems.append(("scenario.amplitudes",
                             "expected three nonnegative numbers"))
        else:
            opts["amplitudes"] = [float(a) for a in amps]
        _number(holder, "scenario.tau", problems, positive=True,
                allow_none=True)
    else:
        for key in ("m_support", "amplitude", "mollifier_width",
                    "rho_inside", "theta_inside"):
            _number(holder, f"scenario.{key}", problems, positive=True)
    return ScenarioSpec(kind=kind, options=opts)


def _validate_sweep(sec, problems):
    taus = sec["taus"]
    good_taus = None
    if not isinstance(taus, list) or not taus or not all(
            isinstance(t, (int, float)) and not isinstance(t, bool) and t > 0
            for t in taus):
        problems.append(("sweep.taus", "expected a nonempty list of positive "
                         "relaxation times"))
    else:
        good_taus = tuple(float(t) for t in taus)
    mode = sec["seed_mode"]
    if mode not in ("exact", "saturating"):
        problems.append(("sweep.seed_mode",
                         f"must be 'exact' or 'saturating', got {mode!r}"))
    amps = sec["amplitudes"]
    good_amps = None
    if not isinstance(amps, list) or len(amps) != 3 or not all(
            isinstance(a, (int, float)) and not isinstance(a, bool)
            and a >= 0 for a in amps):
        problems.append(("sweep.amplitudes",
                         "expected three nonnegative numbers"))
    else:
        good_amps = tuple(float(a) for a in amps)
    t_end = _number({"sweep": sec}, "sweep.t_end", problems, positive=True,
                    allow_none=True)
    if good_taus is None or good_amps is None:
        return None
    return SweepSpec(taus=good_taus, seed_mode=mode, amplitudes=good_amps,
                     t_end=t_end)


def parse_config(text: str, env: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Parse and validate a JSON run configuration.

    Raises :class:`ConfigError` listing every offending path at once.  A
    configuration that is valid but questionable (currently: a blow-up
    scenario with an adiabatic exponent of 5/3 or more, for which the
    certificate ledger is inapplicable) emits a :class:`ConfigWarning` and
    records the notice on the returned :class:`RunConfig`.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"not valid JSON: {exc}")]) from None
    if not isinstance(raw, dict):
        raise ConfigError([("", "top level must be a JSON object")])

    problems: list = []
    if env is not None:
        _apply_env_overrides(raw, env, problems)

    scenario_sec = raw.get("scenario", {})
    if not isinstance(scenario_sec, dict):
        problems.append(("scenario", "expected an object"))
        scenario_sec = {}
    raw = dict(raw)
    raw.pop("scenario", None)
    doc = _merge_defaults(raw, {k: v for k, v in DEFAULTS.items()
                                if k != "scenario"}, "", problems)

    for path in ("model.tau1", "model.tau3", "model.kappa", "model.lam",
                 "model.cv", "model.r_gas"):
        _number(doc, path, problems, positive=True)
    _number(doc, "model.mu", problems, nonnegative=True)
    for path in ("model.box.rho_min", "model.box.rho_max",
                 "model.box.theta_min", "model.box.theta_max",
                 "model.box.u_max", "model.box.q_max"):
        _number(doc, path, problems, positive=True)
    _number(doc, "model.box.s2_max", problems, nonnegative=True)
    _number(doc, "solver.cfl", problems, positive=True)
    _number(doc, "solver.t_end", problems, positive=True)
    _number(doc, "solver.output_interval", problems, nonnegative=True)
    snapshots = _integer(doc["diagnostics"]["snapshots"],
                         "diagnostics.snapshots", problems, minimum=2)
    _number(doc, "diagnostics.support_tol", problems, positive=True)
    seed = _integer(doc["seed"], "seed", problems, minimum=0)
    if not isinstance(doc["output_dir"], str) or not doc["output_dir"]:
        problems.append(("output_dir", "expected a nonempty string"))

    grid = _validate_grid(doc["grid"], problems)
    scenario = _validate_scenario(dict(scenario_sec), problems)
    sweep = _validate_sweep(doc["sweep"], problems)

    if grid is not None and scenario is not None and scenario.kind in (
            "small-data", "blowup"):
        if not all(grid.lo[a] < 0.0 < grid.hi[a] for a in range(grid.dim)):
            problems.append(("grid", f"the {scenario.kind!r} scenario builds "
                             "origin-centered data; the domain interior must "
                             "contain the origin on every axis"))

    params = None
    if grid is not None and not any(p.startswith("model") for p, _ in problems):
        m, b = doc["model"], doc["model"]["box"]
        try:
            box = AdmissibleBox(b["rho_min"], b["rho_max"], b["theta_min"],
                                b["theta_max"], b["u_max"], b["q_max"],
                                b["s2_max"])
            params = ModelParams(tau1=m["tau1"], tau3=m["tau3"],
                                 kappa=m["kappa"], lam=m["lam"], mu=m["mu"],
                                 cv=m["cv"], r_gas=m["r_gas"], dim=grid.dim,
                                 box=box)
        except ValueError as exc:
            problems.append(("model.box", str(exc)))

    solver = None
    if not any(p.startswith("solver") for p, _ in problems):
        s = doc["solver"]
        try:
            solver = SolverConfig(cfl=s["cfl"], flux=s["flux"],
                                  integrator=s["integrator"],
                                  relaxation=s["relaxation"],
                                  viscous=s["viscous"], t_end=s["t_end"],
                                  output_interval=s["output_interval"])
        except ValueError as exc:
            problems.append(("solver", str(exc)))

    if problems:
        seen, unique = set(), []
        for item in problems:
            if item not in seen:
                seen.add(item)
                unique.append(item)
        raise ConfigError(unique)

    notices = []
    if scenario.kind == "blowup" and params.gamma >= 5.0 / 3.0:
        msg = (f"scenario 'blowup' with gamma = {params.gamma:.6g} >= 5/3: "
               "the certificate ledger will be marked inapplicable")
        warnings.warn(msg, ConfigWarning, stacklevel=2)
        notices.append(msg)

    doc["scenario"] = dict(scenario.options)
    doc["scenario"]["kind"] = scenario.kind
    doc["grid"]["lo"] = list(grid.lo)
    doc["grid"]["hi"] = list(grid.hi)
    doc["grid"]["cells"] = list(grid.cells)
    doc["grid"]["bc"] = list(grid.bc)

    return RunConfig(params=params, grid=grid, solver=solver,
                     scenario=scenario, sweep=sweep, snapshots=snapshots,
                     support_tol=float(doc["diagnostics"]["support_tol"]),
                     output_dir=doc["output_dir"], seed=seed, resolved=doc,
                     notices=tuple(notices))
