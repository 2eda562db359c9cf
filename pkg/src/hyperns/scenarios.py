"""Initial-data generators and experiment drivers.

Builds the large radial velocity profile behind the breakdown study, small
smooth perturbations for boundedness runs, well-prepared data for the stiff
relaxation limit, and the relaxation-time sweep that measures convergence
rates against the classical reference solver. Also hosts the run driver
that advances a field until the smoothness-loss criterion fires.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .diagnostics import BlowupLedger, _stack_norm_sq, blowup_ledger
from .grid import Grid, centered_divergence, centered_gradient, pad_scalar, pad_vector
from .solver import (
    CFLError,
    Field,
    SolverConfig,
    StepAbortError,
    _classical_primitive,
    classical_from_primitive,
    classical_step,
    equilibrium_wave_speed,
    field_from_primitive,
    step,
)
from .thermo import DomainError, ModelParams, PrimitiveState

__all__ = [
    "BlowupProfileSpec",
    "SteepeningResult",
    "SweepResult",
    "SweepRow",
    "blowup_initial_data",
    "drive_until_breakdown",
    "radial_speed_profile",
    "relaxation_sweep",
    "run_with_snapshots",
    "small_data",
    "well_prepared_data",
]


def _smoothstep(s: np.ndarray) -> np.ndarray:
    """Quintic blend: 0 below 0, 1 above 1, C2 joins at both ends."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


@dataclass(frozen=True)
class BlowupProfileSpec:
    """Shape parameters of the radial large-data velocity profile.

    ``m_support`` is the support radius of the disturbance (at least 5 so
    the plateau dominates the moment integral), ``amplitude`` the plateau
    speed, ``mollifier_width`` the corner-smoothing half-width, and the
    inside density and temperature are constants whose product exceeds the
    rest value 1 so the excess-energy integral is positive.
    """

    m_support: float = 5.0
    amplitude: float = 1.0
    mollifier_width: float = 0.25
    rho_inside: float = 1.2
    theta_inside: float = 1.0

    def __post_init__(self) -> None:
        if self.m_support < 5.0:
            raise DomainError("support radius must be at least 5")
        if self.amplitude <= 0.0:
            raise DomainError("profile amplitude must be positive")
        if not 0.0 < self.mollifier_width <= 0.5:
            raise DomainError("mollifier width must sit in (0, 0.5]")
        if self.rho_inside <= 0.0 or self.theta_inside <= 0.0:
            raise DomainError("interior density and temperature must be positive")
        if self.rho_inside * self.theta_inside <= 1.0:
            raise DomainError(
                "interior rho * theta must exceed 1 for a positive energy excess"
            )


def radial_speed_profile(r: np.ndarray, spec: BlowupProfileSpec) -> np.ndarray:
    """Smoothed radial speed: cosine rise, plateau, cosine fall, zero tail.

    The underlying piecewise profile rises over [0, 1], holds the plateau
    value on (1, m-1], falls over (m-1, m] and vanishes beyond. Corners at
    1 and m-1 are blended over symmetric windows of the mollifier width;
    the outer corner is blended one-sidedly inside [m-w, m] so the support
    never leaves the radius-m ball, and a factor vanishing near the origin
    keeps the radial vector field smooth there. Outside those windows the
    smoothed profile equals the piecewise one exactly, and its values stay
    inside [0, amplitude].
    """
    r = np.asarray(r, dtype=np.float64)
    amp = spec.amplitude
    m = spec.m_support
    w = spec.mollifier_width

    rise = amp * np.cos(0.5 * np.pi * (r - 1.0))
    plateau = np.full_like(r, amp)
    fall = 0.5 * amp * np.cos(np.pi * (r - m + 1.0)) + 0.5 * amp

    v = np.where(r <= 1.0, rise, np.where(r <= m - 1.0, plateau, np.where(r <= m, fall, 0.0)))

    t1 = _smoothstep((r - (1.0 - w)) / (2.0 * w))
    in1 = np.abs(r - 1.0) <= w
    v = np.where(in1, (1.0 - t1) * rise + t1 * plateau, v)

    t2 = _smoothstep((r - (m - 1.0 - w)) / (2.0 * w))
    in2 = np.abs(r - (m - 1.0)) <= w
    v = np.where(in2, (1.0 - t2) * plateau + t2 * fall, v)

    t3 = _smoothstep((r - (m - w)) / w)
    in3 = (r >= m - w) & (r <= m)
    v = np.where(in3, (1.0 - t3) * fall, v)
    v = np.where(r > m, 0.0, v)

    v = v * _smoothstep(r / w)
    return v


def _radial_unit(x: np.ndarray, r: np.ndarray) -> np.ndarray:
    return x / np.maximum(r, 1e-300)


def blowup_initial_data(
    spec: BlowupProfileSpec, grid: Grid, p: ModelParams
) -> tuple[Field, Optional[BlowupLedger]]:
    """Large radial outflow data together with its certificate ledger.

    The velocity is the smoothed radial profile times the unit radial
    direction; density and temperature take their interior constants on a
    smoothed indicator of the support ball and the rest values outside;
    the relaxing fields start at zero, so the smallness assumption on them
    holds for every tolerance. The grid must contain the support ball (the
    caller is responsible for leaving extra margin for the expected
    propagation distance). In three dimensions the ledger is evaluated
    with the speed bound frozen at 1.1 times the far-field wave speed:
    while the solution stays smooth the support border is surrounded by
    the rest state, so its motion is governed by rest-state
    characteristics rather than by the interior amplitude. Other
    dimensions return None for the ledger since the certificate constants
    are volume-based.
    """
    m = spec.m_support
    for a in range(grid.dim):
        if -grid.lo[a] < m or grid.hi[a] < m:
            raise DomainError(
                f"support ball of radius {m} exceeds domain extent on axis {a}"
            )
    x = grid.center_mesh()
    r = np.sqrt(np.sum(x * x, axis=0))
    v = radial_speed_profile(r, spec)
    u = v * _radial_unit(x, r)

    w = spec.mollifier_width
    indicator = 1.0 - _smoothstep((r - (m - 2.0 * w)) / (2.0 * w))
    rho = 1.0 + (spec.rho_inside - 1.0) * indicator
    theta = 1.0 + (spec.theta_inside - 1.0) * indicator
    shape = grid.shape
    q = np.zeros((grid.dim,) + shape)
    s2 = np.zeros(shape)

    if np.min(rho) <= 0.0 or np.min(theta) <= 0.0:
        raise DomainError("generated density or temperature lost positivity")
    if np.max(np.abs(q)) != 0.0 or np.max(np.abs(s2)) != 0.0:
        raise DomainError("relaxing fields must start at zero")

    s = PrimitiveState(rho, u, theta, q, s2)
    f = field_from_primitive(grid, s, p)
    if grid.dim == 3:
        sigma = 1.1 * equilibrium_wave_speed(p)
        ledger = blowup_ledger(f, p, sigma, m_support=m)
    else:
        ledger = None
    return f, ledger


def small_data(grid: Grid, p: ModelParams, amplitude: float) -> Field:
    """Smooth compactly supported bumps of the given size in rho, u, theta.

    The bump is the fourth power of (1 - (r / radius)^2) inside a ball
    covering forty percent of the smallest half-extent, and zero outside;
    heat flux and bulk stress start at zero. Amplitude zero reproduces the
    rest state exactly.
    """
    if amplitude < 0.0:
        raise DomainError("amplitude must be nonnegative")
    x = grid.center_mesh()
    half = min(min(-grid.lo[a], grid.hi[a]) for a in range(grid.dim))
    radius = 0.4 * half
    r2 = np.sum(x * x, axis=0) / radius**2
    bump = np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** 4, 0.0)
    shape = grid.shape
    u = np.zeros((grid.dim,) + shape)
    u[0] = amplitude * bump
    s = PrimitiveState(
        1.0 + amplitude * bump,
        u,
        1.0 + 0.5 * amplitude * bump,
        np.zeros((grid.dim,) + shape),
        np.zeros(shape),
    )
    return field_from_primitive(grid, s, p)


def well_prepared_data(
    grid: Grid,
    p: ModelParams,
    tau: float,
    base: PrimitiveState,
    seed: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> Field:
    """Relaxed-system data sitting on the local equilibrium of a base state.

    Copies density, velocity and temperature from the base and sets the
    heat flux to minus conductivity times the discrete temperature
    gradient and the bulk stress to the bulk coefficient times the
    discrete velocity divergence, which makes the preparation residual
    exactly zero for every positive relaxation time. An optional seed pair
    (wq, ws2) displaces the fluxes by sqrt(tau) times the seed, the
    largest displacement the preparation inequality tolerates when the
    seed has unit norm.
    """
    if tau <= 0.0:
        raise DomainError("relaxation time must be positive")
    grad_th = centered_gradient(pad_scalar(base.theta, grid, const=1.0), grid)
    div_u = centered_divergence(pad_vector(base.u, grid, np.zeros(grid.dim)), grid)
    q = -p.kappa * grad_th
    s2 = p.lam * div_u
    if seed is not None:
        wq, ws2 = seed
        root = math.sqrt(tau)
        q = q + root * np.asarray(wq)
        s2 = s2 + root * np.asarray(ws2)
    s = PrimitiveState(base.rho.copy(), base.u.copy(), base.theta.copy(), q, s2)
    return field_from_primitive(grid, s, p)


# ── Relaxation-time sweep ────────────────────────────────────────────────


@dataclass(frozen=True)
class SweepRow:
    tau: float
    err_state: float
    err_flux: float
    failed: bool


@dataclass(frozen=True)
class SweepResult:
    """Convergence table of the relaxation sweep with fitted rates."""

    rows: list
    slope_state: float
    slope_flux: float

    def to_csv(self, path) -> None:
        lines = ["tau,err_state,err_flux,slope_state,slope_flux,failed"]
        for row in self.rows:
            lines.append(
                "%.17g,%.17g,%.17g,%.17g,%.17g,%d"
                % (
                    row.tau,
                    row.err_state,
                    row.err_flux,
                    self.slope_state,
                    self.slope_flux,
                    int(row.failed),
                )
            )
        text = "\n".join(lines) + "\n"
        if hasattr(path, "write"):
            path.write(text)
        else:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)


def _h3_norm(fields, g: Grid) -> float:
    return math.sqrt(_stack_norm_sq(list(fields), g, 3))


def _closure_defect_norm(f: Field, p: ModelParams) -> float:
    """Third-order surrogate norm of the algebraic-closure defect of a field."""
    g = f.grid
    s = f.primitive(p)
    grad_th = centered_gradient(pad_scalar(s.theta, g, const=1.0), g)
    div_u = centered_divergence(pad_vector(s.u, g, np.zeros(g.dim)), g)
    return _h3_norm([s.q + p.kappa * grad_th, s.s2 - p.lam * div_u], g)


def _normalized_seed(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Unit-norm smooth flux displacements for the saturating sweep mode."""
    x = grid.center_mesh()
    span = [grid.hi[a] - grid.lo[a] for a in range(grid.dim)]
    wq = np.stack(
        [np.sin(2.0 * np.pi * (x[a] - grid.lo[a]) / span[a]) for a in range(grid.dim)]
    )
    ws2 = np.cos(2.0 * np.pi * (x[0] - grid.lo[0]) / span[0])
    wq = wq / _h3_norm([wq], grid)
    ws2 = ws2 / _h3_norm([ws2], grid)
    return wq, ws2


def relaxation_sweep(
    grid: Grid,
    p: ModelParams,
    taus: Sequence[float],
    base: PrimitiveState,
    t_end: float,
    cfg: Optional[SolverConfig] = None,
    seed_mode: str = "exact",
) -> SweepResult:
    """Measure relaxed-to-classical convergence over a list of relaxation times.

    Runs the classical reference once from the base state, then for each
    relaxation time runs the relaxed solver from well-prepared data to the
    same end time. The state mismatch (rho, u, theta) against the classical
    fields is measured at the end time; the flux-closure defect
    (q + conductivity * grad theta, S2 - bulk coefficient * div u) of the
    relaxed run itself is tracked as a running maximum over the whole run,
    since its largest value sits in the initial layer. Both use third-order
    difference-surrogate norms, with log-log fitted rates over the rows
    that completed. Seed mode "exact" starts on the local equilibrium
    (state and defect target rate 1); "saturating" displaces the initial
    fluxes by the largest amount the preparation inequality allows, so the
    defect peak scales with the square root of the relaxation time. A row
    whose relaxation time the model rejects on its box, or whose run
    aborts, is marked failed and excluded from the fits.
    """
    if cfg is None:
        cfg = SolverConfig()
    if seed_mode not in ("exact", "saturating"):
        raise DomainError("seed_mode must be 'exact' or 'saturating'")
    seed = _normalized_seed(grid) if seed_mode == "saturating" else None

    cf = classical_from_primitive(grid, base.rho, base.u, base.theta, p)
    while cf.t < t_end - 1e-14:
        cf = classical_step(cf, cfg, p, dt_max=t_end - cf.t)
    rho_cl = cf.rho
    u_cl, th_cl = _classical_primitive(cf, p)

    rows = []
    for tau in taus:
        if float(tau) <= 0.0:
            raise DomainError("relaxation time must be positive")
        try:
            p_tau = dataclasses.replace(p, tau1=float(tau), tau3=float(tau))
            f = well_prepared_data(grid, p_tau, float(tau), base, seed)
            err_flux = _closure_defect_norm(f, p_tau)
            while f.t < t_end - 1e-14:
                f = step(f, cfg, p_tau, dt_max=t_end - f.t)
                err_flux = max(err_flux, _closure_defect_norm(f, p_tau))
            s = f.primitive(p_tau)
            err_state = _h3_norm(
                [s.rho - rho_cl, s.u - u_cl, s.theta - th_cl], grid
            )
            rows.append(SweepRow(float(tau), err_state, err_flux, False))
        except (StepAbortError, CFLError, ValueError):
            rows.append(SweepRow(float(tau), float("nan"), float("nan"), True))

    good = [row for row in rows if not row.failed]
    if len(good) >= 2:
        lt = np.log([row.tau for row in good])
        slope_state = float(np.polyfit(lt, np.log([row.err_state for row in good]), 1)[0])
        slope_flux = float(np.polyfit(lt, np.log([row.err_flux for row in good]), 1)[0])
    else:
        slope_state = slope_flux = float("nan")
    return SweepResult(rows=rows, slope_state=slope_state, slope_flux=slope_flux)


# ── Run drivers ──────────────────────────────────────────────────────────


def run_with_snapshots(
    f0: Field,
    cfg: SolverConfig,
    p: ModelParams,
    t_end: float,
    n_snapshots: int,
) -> list:
    """Advance to the end time, returning evenly spaced snapshot fields.

    The returned list starts at the initial field and contains one entry
    per requested snapshot time (the solver lands on each exactly through
    step clipping).
    """
    if n_snapshots < 1:
        raise ValueError("need at least one snapshot interval")
    run = [f0]
    f = f0
    marks = f0.t + (t_end - f0.t) * np.arange(1, n_snapshots + 1) / n_snapshots
    for mark in marks:
        while f.t < mark - 1e-14:
            f = step(f, cfg, p, dt_max=mark - f.t)
        run.append(f)
    return run


def _max_neighbor_jump(u: np.ndarray, dim: int) -> float:
    worst = 0.0
    for a in range(dim):
        ax = u.ndim - dim + a
        jump = np.max(np.abs(np.diff(u, axis=ax)))
        worst = max(worst, float(jump))
    return worst


@dataclass(frozen=True)
class SteepeningResult:
    """History of a run driven until the smoothness-loss criterion fires.

    ``reason`` is "jump-threshold" when the largest cell-to-cell velocity
    jump exceeded the configured multiple of its initial value,
    "state-recovery" when the temperature recovery failed inside a step,
    and "step-limit" when the budget ran out first.
    """

    times: np.ndarray
    max_jump: np.ndarray
    reason: str
    final: Field
    steps: int

    @property
    def growth_factor(self) -> float:
        return float(self.max_jump[-1] / self.max_jump[0])


def drive_until_breakdown(
    f0: Field,
    cfg: SolverConfig,
    p: ModelParams,
    jump_factor: float = 1e3,
    max_steps: int = 200000,
    record_every: int = 1,
) -> SteepeningResult:
    """Step forward until the velocity steepens past the halt criterion."""
    s = f0.primitive(p)
    j0 = _max_neighbor_jump(s.u, f0.grid.dim)
    if j0 <= 0.0:
        raise DomainError("initial data must carry a velocity variation")
    times = [f0.t]
    jumps = [j0]
    f = f0
    reason = "step-limit"
    steps = 0
    for k in range(1, max_steps + 1):
        try:
            f = step(f, cfg, p)
        except StepAbortError:
            reason = "state-recovery"
            steps = k
            break
        steps = k
        if k % record_every == 0 or k == max_steps:
            s = f.primitive(p)
            jump = _max_neighbor_jump(s.u, f.grid.dim)
            times.append(f.t)
            jumps.append(jump)
            if jump > jump_factor * j0:
                reason = "jump-threshold"
                break
    return SteepeningResult(
        times=np.array(times),
        max_jump=np.array(jumps),
        reason=reason,
        final=f,
        steps=steps,
    )
