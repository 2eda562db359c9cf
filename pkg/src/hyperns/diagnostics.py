"""Run-level functionals, breakdown certificates and CSV reporting.

Pure post-processing over immutable solver snapshots: the radial momentum
moment and the excess-energy integral, the constant ledger feeding the
large-data breakdown argument, a lower-bound monitor for the momentum
moment along a run, support radius, a finite-difference Sobolev energy
surrogate, and the residual of the temperature balance equation. All
reductions use numpy's fixed summation order so repeated evaluation of the
same snapshots reproduces every digit.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .entropy import deviatoric_shear, discrete_entropy_audit
from .eigen import max_wave_speed
from .grid import Grid, centered_divergence, centered_gradient, pad_scalar
from .solver import Field
from .thermo import DomainError, ModelParams, PrimitiveState, pressure_partials

__all__ = [
    "BlowupLedger",
    "BoundMonitor",
    "DiagnosticsRecord",
    "blowup_bound_monitor",
    "blowup_ledger",
    "csv_header",
    "diagnostics_records",
    "functional_F",
    "functional_G",
    "moment_inequality",
    "moment_lower_bound",
    "max_velocity_gradient",
    "sobolev_energy",
    "support_radius",
    "theta_equation_residual",
    "write_diagnostics_csv",
]

# Rest-state temperature; the whole library normalizes the background
# state to (rho, u, theta, q, S2) = (1, 0, 1, 0, 0).
_THETA_BAR = 1.0

_AXIS_NAMES = "xyz"


def _grad(arr: np.ndarray, g: Grid, const: float = 0.0) -> np.ndarray:
    """Centered gradient with ghost fill by the given rest value."""
    return centered_gradient(pad_scalar(arr, g, const=const), g)


def _div(vec: np.ndarray, g: Grid) -> np.ndarray:
    return centered_divergence(pad_scalar(vec, g, const=0.0), g)


def functional_F(f: Field) -> float:
    """Midpoint quadrature of the momentum moment about the origin.

    Integrates x . (rho u) over the grid. The weight grows with distance
    from the coordinate origin, so the value is meaningful only while the
    deviation from rest stays compactly supported away from the domain
    boundary; on a periodic box a wrapped or translated copy of the same
    data gives a different number.
    """
    x = f.grid.center_mesh()
    return float(np.sum(x * f.cons.mom) * f.grid.cell_volume)


def functional_G(f: Field, p: ModelParams) -> float:
    """Integral of the total-energy excess over its rest value C_v."""
    return float(np.sum(f.cons.etot - p.cv) * f.grid.cell_volume)


def support_radius(f: Field, p: ModelParams, tol: float = 1e-12) -> float:
    """Radius of the smallest origin-centered ball holding the deviation.

    A cell counts as disturbed when any primitive field differs from its
    rest value by more than ``tol`` in absolute value. The default sits at
    the round-off floor of the scheme. Returns 0.0 at exact rest.
    """
    s = f.primitive(p)
    dev = np.abs(s.rho - 1.0)
    dev = np.maximum(dev, np.abs(s.theta - 1.0))
    dev = np.maximum(dev, np.abs(s.s2))
    for a in range(f.grid.dim):
        dev = np.maximum(dev, np.abs(s.u[a]))
        dev = np.maximum(dev, np.abs(s.q[a]))
    mask = dev > tol
    if not np.any(mask):
        return 0.0
    x = f.grid.center_mesh()
    r = np.sqrt(np.sum(x * x, axis=0))
    return float(np.max(r[mask]))


def max_velocity_gradient(f: Field, p: ModelParams) -> float:
    """Largest centered-difference velocity derivative over the grid."""
    s = f.primitive(p)
    return float(np.max(np.abs(_grad(s.u, f.grid))))


# ── Breakdown ledger ─────────────────────────────────────────────────────


@dataclass(frozen=True)
class BlowupLedger:
    """Constants and admissibility checks of the breakdown argument.

    Everything is a pure function of the initial snapshot, the model
    parameters and one chosen propagation speed bound ``sigma``. The
    chain applies to three-dimensional compactly supported data with
    adiabatic exponent below 5/3; outside that window the ledger is
    marked inapplicable instead of raising.

    Condition meanings (written out since the flags are just booleans):

    * ``cond_moment_large``: F0 > 16 c2 / c3, the initial momentum moment
      clears the threshold that starts the Riccati comparison.
    * ``cond_budget_small``: c4 + c5 |u0|^2 <= c3 / (16 c2), the
      dissipation budget stays below what the comparison can absorb.
    * ``cond_moment_sq_dominates``: F0^2 >= 8 pi M^3 / c3, the moment
      dominates the support-volume forcing term.
    * ``cond_speed_large``: sigma^2 >= 3 (5 - 3 gamma) / (64 max rho0),
      free to arrange since sigma may be enlarged and then frozen.
    * ``cond_excess_energy_positive``: G0 > 0.
    * ``cond_exponent_admissible``: 1 < gamma < 5/3.
    """

    m_support: float
    sigma: float
    gamma: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    f0: float
    g0: float
    w0: float
    u0_l2_sq: float
    max_rho0: float
    cond_moment_large: bool
    cond_budget_small: bool
    cond_moment_sq_dominates: bool
    cond_speed_large: bool
    cond_excess_energy_positive: bool
    cond_exponent_admissible: bool

    @property
    def applicable(self) -> bool:
        return self.cond_exponent_admissible and math.isfinite(self.c1)

    @property
    def all_conditions_hold(self) -> bool:
        return (
            self.cond_moment_large
            and self.cond_budget_small
            and self.cond_moment_sq_dominates
            and self.cond_speed_large
            and self.cond_excess_energy_positive
            and self.cond_exponent_admissible
        )


def _w0_integral(s: PrimitiveState, p: ModelParams, vol: float) -> float:
    # Storage density without the kinetic part: the entropy-based budget
    # counts heat-flux and bulk-stress storage plus the thermodynamic
    # distance from rest, while |u|^2/2 enters the budget separately.
    w = 1.0 - 0.5 / s.theta
    q2 = np.sum(s.q * s.q, axis=0)
    dens = (
        p.cv * s.rho * (s.theta - np.log(s.theta) - 1.0)
        + p.r_gas * (s.rho * np.log(s.rho) - s.rho + 1.0)
        + w * p.tau1 * q2 / (p.kappa * s.theta)
        + p.tau3 * s.s2 * s.s2 / (2.0 * p.lam)
    )
    return float(np.sum(dens) * vol)


def blowup_ledger(
    f0: Field,
    p: ModelParams,
    sigma: float,
    m_support: Optional[float] = None,
) -> BlowupLedger:
    """Evaluate every breakdown constant and condition on initial data.

    ``m_support`` overrides the measured support radius when the data were
    constructed with a known one (the measured radius is quantized to cell
    centers). ``sigma`` is the caller's frozen propagation speed bound.
    """
    if f0.grid.dim != 3:
        raise DomainError("breakdown ledger is defined for three-dimensional data")
    if sigma <= 0.0:
        raise DomainError("propagation speed bound must be positive")
    s0 = f0.primitive(p)
    vol = f0.grid.cell_volume
    gamma = p.gamma
    admissible = 1.0 < gamma < 5.0 / 3.0
    max_rho0 = float(np.max(s0.rho))
    mm = support_radius(f0, p) if m_support is None else float(m_support)
    f0val = functional_F(f0)
    g0val = functional_G(f0, p)
    w0 = _w0_integral(s0, p, vol)
    u0_sq = float(np.sum(s0.u * s0.u) * vol)

    # An exponent one rounding step inside the open window can still make
    # 5 - 3 gamma collapse to zero, so gate the constants on the computed
    # gap rather than on the flag alone.
    gap = 5.0 - 3.0 * gamma
    if admissible and mm > 0.0 and gap > 0.0:
        c2 = sigma / mm
        c3 = 3.0 * gap / (8.0 * math.pi * max_rho0 * mm**5)
        c1 = 4.0 * c2 / c3
        bracket = _THETA_BAR * (8.0 * p.tau1 * gamma + 2.0 * p.tau3 * gamma + p.lam)
        c4 = 3.0 / c1**2 * bracket * w0
        c5 = 3.0 / c1**2 * bracket * max_rho0 / 2.0
        cond_moment = f0val > 16.0 * c2 / c3
        cond_budget = c4 + c5 * u0_sq <= c3 / (16.0 * c2)
        cond_moment_sq = f0val**2 >= 8.0 * math.pi * mm**3 / c3
    else:
        c1 = c2 = c3 = c4 = c5 = float("nan")
        cond_moment = cond_budget = cond_moment_sq = False
    cond_speed = sigma**2 >= 3.0 * (5.0 - 3.0 * gamma) / (64.0 * max_rho0)
    return BlowupLedger(
        m_support=mm,
        sigma=float(sigma),
        gamma=gamma,
        c1=c1,
        c2=c2,
        c3=c3,
        c4=c4,
        c5=c5,
        f0=f0val,
        g0=g0val,
        w0=w0,
        u0_l2_sq=u0_sq,
        max_rho0=max_rho0,
        cond_moment_large=bool(cond_moment),
        cond_budget_small=bool(cond_budget),
        cond_moment_sq_dominates=bool(cond_moment_sq),
        cond_speed_large=bool(cond_speed),
        cond_excess_energy_positive=bool(g0val > 0.0),
        cond_exponent_admissible=bool(admissible),
    )


def moment_lower_bound(ledger: BlowupLedger, t) -> np.ndarray:
    """Quartic-in-time lower bound 2 c1 (1 + c2 t)^4 for the moment."""
    t = np.asarray(t, dtype=np.float64)
    return 2.0 * ledger.c1 * (1.0 + ledger.c2 * t) ** 4


def moment_inequality(
    f: Field, p: ModelParams, containment_radius: float, max_rho0: float
) -> tuple[float, float]:
    """Squared moment against its ball-volume bound at a containment radius.

    Returns (F^2, (4 pi / 3) max_rho0 r^5 * integral of rho |u|^2). The
    first never exceeds the second as long as the disturbance really sits
    inside the ball of the given radius and the initial density maximum is
    honest; mass inside the ball cannot grow.
    """
    fval = functional_F(f)
    s = f.primitive(p)
    rho_u2 = float(np.sum(s.rho * np.sum(s.u * s.u, axis=0)) * f.grid.cell_volume)
    rhs = (4.0 * math.pi / 3.0) * max_rho0 * containment_radius**5 * rho_u2
    return fval * fval, rhs


# ── Moment monitor along a run ───────────────────────────────────────────


@dataclass(frozen=True)
class BoundMonitor:
    """Per-snapshot comparison of the moment against its growing bound.

    When ``applicable`` is false (rest data, exponent out of range) every
    ``satisfied`` entry is reported true: the monitor makes no violation
    claims outside the regime where the bound means anything. The budget
    arrays track the weighted cumulative dissipation of heat flux and bulk
    stress against the fixed allowance c4 + c5 |u0|^2.
    """

    applicable: bool
    times: np.ndarray
    f_values: np.ndarray
    bounds: np.ndarray
    satisfied: np.ndarray
    budget_lhs: np.ndarray
    budget_rhs: float
    budget_ok: np.ndarray


def blowup_bound_monitor(
    run: Sequence[Field], p: ModelParams, ledger: BlowupLedger
) -> BoundMonitor:
    """Check the moment lower bound and the dissipation budget along a run."""
    times = np.array([f.t for f in run], dtype=np.float64)
    f_values = np.array([functional_F(f) for f in run])
    applicable = ledger.applicable and ledger.f0 > 0.0
    if applicable:
        bounds = moment_lower_bound(ledger, times)
        satisfied = f_values >= bounds
    else:
        bounds = np.full_like(times, np.nan)
        satisfied = np.ones(times.shape, dtype=bool)

    gamma = ledger.gamma
    vol = run[0].grid.cell_volume if run else 0.0
    q_int = np.empty(times.shape)
    s2_int = np.empty(times.shape)
    for k, f in enumerate(run):
        s = f.primitive(p)
        q_int[k] = np.sum(s.q * s.q) * vol
        s2_int[k] = np.sum(s.s2 * s.s2) * vol
    wq = 6.0 * p.tau1 * gamma / (ledger.c1**2 * p.kappa * _THETA_BAR)
    ws = (6.0 * p.tau3 * gamma + 3.0 * p.lam) / (2.0 * p.lam * ledger.c1**2)
    rate = wq * q_int + ws * s2_int
    dts = np.diff(times)
    budget_lhs = np.concatenate([[0.0], np.cumsum(dts * rate[:-1])])
    budget_rhs = ledger.c4 + ledger.c5 * ledger.u0_l2_sq
    if applicable:
        budget_ok = budget_lhs <= budget_rhs
    else:
        budget_ok = np.ones(times.shape, dtype=bool)
    return BoundMonitor(
        applicable=bool(applicable),
        times=times,
        f_values=f_values,
        bounds=bounds,
        satisfied=satisfied,
        budget_lhs=budget_lhs,
        budget_rhs=float(budget_rhs),
        budget_ok=budget_ok,
    )


# ── Sobolev energy surrogate ─────────────────────────────────────────────


def _stack_norm_sq(fields, g: Grid, max_order: int) -> float:
    """Sum of squared L2 norms of derivatives up to the given order."""
    total = 0.0
    for arr in fields:
        cur = arr
        total += float(np.sum(cur * cur))
        for _ in range(max_order):
            cur = _grad(cur, g)
            total += float(np.sum(cur * cur))
    return total * g.cell_volume


def sobolev_energy(run: Sequence[Field], p: ModelParams) -> np.ndarray:
    """Discrete surrogate of the small-data energy along a run.

    At each snapshot time: the largest third-order difference norm of the
    deviation fields seen so far, plus the left-endpoint time integral of
    the dissipation norms (density and temperature gradients to second
    order, heat flux and bulk stress to third order, velocity gradient to
    third order). Zero on a rest run; quadratic under scaling of the
    deviation. Reported as a boundedness indicator, not a proved norm.
    """
    times = np.array([f.t for f in run], dtype=np.float64)
    k = times.shape[0]
    sup_part = np.empty(k)
    diss = np.empty(k)
    for j, f in enumerate(run):
        g = f.grid
        s = f.primitive(p)
        devs = [s.rho - 1.0, s.u, s.theta - 1.0, s.q, s.s2]
        sup_part[j] = _stack_norm_sq(devs, g, 3)
        diss[j] = (
            _stack_norm_sq([_grad(s.rho - 1.0, g), _grad(s.theta - 1.0, g)], g, 2)
            + _stack_norm_sq([s.q, s.s2], g, 3)
            + _stack_norm_sq([_grad(s.u, g)], g, 3)
        )
    dts = np.diff(times)
    cum = np.concatenate([[0.0], np.cumsum(dts * diss[:-1])])
    return np.maximum.accumulate(sup_part) + cum


# ── Temperature equation residual ────────────────────────────────────────


def theta_equation_residual(run: Sequence[Field], p: ModelParams) -> np.ndarray:
    """L2 norm of the temperature-balance defect between snapshot pairs.

    For each consecutive pair the time derivative is the forward
    difference and every spatial term is evaluated at the earlier
    snapshot, so the defect of pair (k, k+1) lands in entry k+1; entry 0
    is zero by convention. The balance reads

        rho e_theta d_t theta + (rho u e_theta - 2 q / theta) . grad theta
          + theta p_theta div u + div q
          = 2 |q|^2 / (kappa theta) + S2^2 / lambda
            + (mu / 2) |grad u + grad u^T - (2/n) div u I|^2

    and the viscous term drops out for mu = 0. Expected first order in
    the step and mesh sizes on smooth runs.
    """
    k = len(run)
    out = np.zeros(k)
    for j in range(k - 1):
        f0, f1 = run[j], run[j + 1]
        dt = f1.t - f0.t
        if dt <= 0.0:
            raise ValueError("snapshots must have strictly increasing times")
        g = f0.grid
        s = f0.primitive(p)
        s_next = f1.primitive(p)
        parts = pressure_partials(s, p)
        dtheta_dt = (s_next.theta - s.theta) / dt
        grad_th = _grad(s.theta, g, const=1.0)
        grad_u = _grad(s.u, g)
        div_u = _div(s.u, g)
        div_q = _div(s.q, g)
        coeff = s.rho * s.u * parts.e_theta - 2.0 * s.q / s.theta
        transport = np.sum(coeff * grad_th, axis=0)
        lhs = s.rho * parts.e_theta * dtheta_dt + transport
        lhs = lhs + s.theta * parts.p_theta * div_u + div_q
        rhs = 2.0 * np.sum(s.q * s.q, axis=0) / (p.kappa * s.theta)
        rhs = rhs + s.s2 * s.s2 / p.lam
        if p.mu > 0.0:
            dev = deviatoric_shear(grad_u, g.dim)
            rhs = rhs + 0.5 * p.mu * np.sum(dev * dev, axis=(0, 1))
        res = lhs - rhs
        out[j + 1] = math.sqrt(float(np.sum(res * res)) * g.cell_volume)
    return out


# ── CSV reporting ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One CSV row of run observables at a snapshot time."""

    t: float
    mass: float
    mom: tuple
    etot: float
    g_value: float
    f_value: float
    bound: float
    eta1_total: float
    production_cum: float
    support_radius: float
    sigma_max: float
    max_grad_u: float
    e_sobolev: float
    theta_residual: float

    def values(self) -> list:
        return (
            [self.t, self.mass]
            + list(self.mom)
            + [
                self.etot,
                self.g_value,
                self.f_value,
                self.bound,
                self.eta1_total,
                self.production_cum,
                self.support_radius,
                self.sigma_max,
                self.max_grad_u,
                self.e_sobolev,
                self.theta_residual,
            ]
        )


def csv_header(dim: int) -> str:
    moms = ",".join(f"mom_{_AXIS_NAMES[a]}" for a in range(dim))
    return (
        f"t,mass,{moms},etot,G,F,bound,eta1_total,production_cum,"
        "support_radius,sigma_max,max_grad_u,E_sobolev,theta_residual"
    )


def diagnostics_records(
    run: Sequence[Field],
    p: ModelParams,
    ledger: Optional[BlowupLedger] = None,
    support_tol: float = 1e-12,
) -> list[DiagnosticsRecord]:
    """Evaluate the full observable set on each snapshot of a run."""
    if not run:
        return []
    vol = run[0].grid.cell_volume
    times = np.array([f.t for f in run], dtype=np.float64)
    prims = [f.primitive(p) for f in run]
    grads = None
    if p.mu > 0.0:
        grads = [_grad(s.u, f.grid) for s, f in zip(prims, run)]
    audit = discrete_entropy_audit(times, prims, p, vol, grads)
    e_series = sobolev_energy(run, p)
    th_res = theta_equation_residual(run, p)
    if ledger is not None and ledger.applicable:
        bounds = moment_lower_bound(ledger, times)
    else:
        bounds = np.full_like(times, np.nan)
    records = []
    for k, (f, s) in enumerate(zip(run, prims)):
        mom_tot = tuple(float(np.sum(f.cons.mom[a]) * vol) for a in range(f.grid.dim))
        records.append(
            DiagnosticsRecord(
                t=float(f.t),
                mass=float(np.sum(f.cons.rho) * vol),
                mom=mom_tot,
                etot=float(np.sum(f.cons.etot) * vol),
                g_value=functional_G(f, p),
                f_value=functional_F(f),
                bound=float(bounds[k]),
                eta1_total=float(audit.eta1_total[k]),
                production_cum=float(audit.production_cum[k]),
                support_radius=support_radius(f, p, tol=support_tol),
                sigma_max=max_wave_speed(s, p),
                max_grad_u=float(np.max(np.abs(_grad(s.u, f.grid)))),
                e_sobolev=float(e_series[k]),
                theta_residual=float(th_res[k]),
            )
        )
    return records


def write_diagnostics_csv(records: Sequence[DiagnosticsRecord], path, dim: int) -> None:
    """Write records with a fixed column order and full-precision floats."""
    lines = [csv_header(dim)]
    for rec in records:
        lines.append(",".join("%.17g" % v for v in rec.values()))
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
