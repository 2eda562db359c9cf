"""Constitutive layer: equations of state, conversions, admissibility.

The fluid state is (rho, u, theta, q, S2): density, velocity, temperature,
relaxed heat flux, and the relaxed bulk-stress scalar. Internal energy and
pressure carry quadratic corrections in q and S2 on top of the ideal-gas
core, so temperature recovery from conserved quantities is a quadratic
solve rather than a division.

All operations accept plain scalars or numpy arrays. Vector quantities
(u, q) keep their component axis first, so a pointwise state uses shape
``(n,)`` and a mesh state uses shape ``(n, nx, ...)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "UnphysicalStateError",
    "AdmissibleBox",
    "ModelParams",
    "PrimitiveState",
    "ConservedState",
    "PressurePartials",
    "internal_energy",
    "pressure",
    "pressure_partials",
    "triplet_sound_speed",
    "primitive_to_conserved",
    "conserved_to_primitive",
    "check_admissible",
]


class DomainError(ValueError):
    """Raised when a state leaves the domain of the constitutive laws."""


class UnphysicalStateError(ValueError):
    """Raised when conserved data admit no positive temperature."""


# ── Parameters ───────────────────────────────────────────────────────────


@dataclass(frozen=True)
class AdmissibleBox:
    """Axis-aligned bounds defining the admissible state region.

    ``q_max`` and ``s2_max`` play the role of the small deviation bound
    delta for the relaxation fields.
    """

    rho_min: float = 0.5
    rho_max: float = 2.0
    theta_min: float = 0.5
    theta_max: float = 2.0
    u_max: float = 2.0
    q_max: float = 0.1
    s2_max: float = 0.1

    def __post_init__(self) -> None:
        if not (0.0 < self.rho_min < self.rho_max):
            raise ValueError(f"need 0 < rho_min < rho_max, got {self.rho_min}, {self.rho_max}")
        if not (0.0 < self.theta_min < self.theta_max):
            raise ValueError(f"need 0 < theta_min < theta_max, got {self.theta_min}, {self.theta_max}")
        for name in ("u_max", "q_max", "s2_max"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    def corners(self):
        """Iterate over the (rho, theta, |q|, |S2|) extreme combinations."""
        return itertools.product(
            (self.rho_min, self.rho_max),
            (self.theta_min, self.theta_max),
            (0.0, self.q_max),
            (0.0, self.s2_max),
        )


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the model plus the admissible box.

    Parameters
    ----------
    tau1, tau3 : float
        Relaxation times of the heat flux and of the bulk stress (> 0).
    kappa : float
        Heat conduction coefficient (> 0).
    lam : float
        Bulk viscosity (> 0). Serialized under the key ``"lambda"``.
    mu : float
        Shear viscosity (>= 0); zero selects the purely hyperbolic system.
    cv, r_gas : float
        Heat capacity and gas constant (> 0); ``gamma = 1 + r_gas/cv``.
    dim : int
        Spatial dimension, 1, 2 or 3.
    box : AdmissibleBox
        State bounds checked for constitutive sign conditions on build.

    Raises
    ------
    ValueError
        If any constant is out of range, or if the box violates one of
        the sign conditions e_theta > 0, |dp/dS2| < 1/2 at a corner.
    """

    tau1: float
    tau3: float
    kappa: float
    lam: float
    mu: float = 0.0
    cv: float = 1.0
    r_gas: float = 1.0
    dim: int = 1
    box: AdmissibleBox = field(default_factory=AdmissibleBox)

    def __post_init__(self) -> None:
        for name in ("tau1", "tau3", "kappa", "lam", "cv", "r_gas"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.mu < 0.0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        self._validate_box()

    def _validate_box(self) -> None:
        # p_rho = R*theta and p_theta = R*rho + tau1 q^2/(2 kappa theta^2)
        # are positive on any box with positive rho and theta; the binding
        # conditions are e_theta > 0 and |p_S2| < 1/2.
        bad = []
        for rho, theta, qn, s2 in self.box.corners():
            e_theta = self.cv - self.tau1 * qn * qn / (self.kappa * rho * theta * theta)
            if e_theta <= 0.0:
                bad.append(f"e_theta = {e_theta:.6g} at corner (rho={rho}, theta={theta}, |q|={qn})")
            p_s2 = self.tau3 * s2 / self.lam
            if p_s2 >= 0.5:
                bad.append(f"|dp/dS2| = {p_s2:.6g} >= 1/2 at corner (|S2|={s2})")
        if bad:
            raise ValueError("admissible box violates constitutive sign conditions: " + "; ".join(sorted(set(bad))))

    @property
    def gamma(self) -> float:
        """Adiabatic exponent 1 + R/C_v (always > 1)."""
        return 1.0 + self.r_gas / self.cv


# ── States ───────────────────────────────────────────────────────────────


@dataclass
class PrimitiveState:
    """Primitive variables (rho, u, theta, q, S2); entries may be arrays."""

    rho: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    q: np.ndarray
    s2: np.ndarray

    def __post_init__(self) -> None:
        self.rho = np.asarray(self.rho, dtype=np.float64)
        self.u = np.asarray(self.u, dtype=np.float64)
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.q = np.asarray(self.q, dtype=np.float64)
        self.s2 = np.asarray(self.s2, dtype=np.float64)

    @property
    def dim(self) -> int:
        return self.u.shape[0]


@dataclass
class ConservedState:
    """Conserved variables (rho, momentum, total energy, q, S2)."""

    rho: np.ndarray
    mom: np.ndarray
    etot: np.ndarray
    q: np.ndarray
    s2: np.ndarray

    def __post_init__(self) -> None:
        self.rho = np.asarray(self.rho, dtype=np.float64)
        self.mom = np.asarray(self.mom, dtype=np.float64)
        self.etot = np.asarray(self.etot, dtype=np.float64)
        self.q = np.asarray(self.q, dtype=np.float64)
        self.s2 = np.asarray(self.s2, dtype=np.float64)

    @property
    def dim(self) -> int:
        return self.mom.shape[0]


@dataclass(frozen=True)
class PressurePartials:
    """Closed-form partial derivatives of pressure and internal energy."""

    p_rho: np.ndarray
    p_theta: np.ndarray
    p_q: np.ndarray
    p_s2: np.ndarray
    e_theta: np.ndarray
    e_rho: np.ndarray


def _require_positive(s: PrimitiveState) -> None:
    if np.any(s.rho <= 0.0) or np.any(s.theta <= 0.0):
        raise DomainError(
            f"rho and theta must be positive (min rho {np.min(s.rho):.6g}, min theta {np.min(s.theta):.6g})"
        )


def _sq(vec: np.ndarray) -> np.ndarray:
    """Squared magnitude along the leading component axis."""
    return np.sum(vec * vec, axis=0)


# ── Operations ───────────────────────────────────────────────────────────


def internal_energy(s: PrimitiveState, p: ModelParams) -> np.ndarray:
    """Specific internal energy e(rho, theta, q, S2).

    e = C_v theta + tau1 |q|^2 / (kappa rho theta) + tau3 S2^2 / (2 lambda rho).

    Raises
    ------
    DomainError
        On non-positive rho or theta.
    """
    _require_positive(s)
    return (
        p.cv * s.theta
        + p.tau1 * _sq(s.q) / (p.kappa * s.rho * s.theta)
        + p.tau3 * s.s2 * s.s2 / (2.0 * p.lam * s.rho)
    )


def pressure(s: PrimitiveState, p: ModelParams) -> np.ndarray:
    """Pressure p(rho, theta, q, S2).

    p = R rho theta - tau1 |q|^2 / (2 kappa theta) - tau3 S2^2 / (2 lambda).
    """
    _require_positive(s)
    return (
        p.r_gas * s.rho * s.theta
        - p.tau1 * _sq(s.q) / (2.0 * p.kappa * s.theta)
        - p.tau3 * s.s2 * s.s2 / (2.0 * p.lam)
    )


def pressure_partials(s: PrimitiveState, p: ModelParams) -> PressurePartials:
    """Closed-form partials of p and e in the primitive variables.

    Returns p_rho, p_theta, p_q (vector), p_S2 together with e_theta and
    e_rho. They satisfy the thermodynamic identity
    ``rho^2 e_rho = p - theta p_theta`` to round-off by construction.
    """
    _require_positive(s)
    q2 = _sq(s.q)
    theta2 = s.theta * s.theta
    p_rho = p.r_gas * s.theta * np.ones_like(s.rho)
    p_theta = p.r_gas * s.rho + p.tau1 * q2 / (2.0 * p.kappa * theta2)
    p_q = -p.tau1 * s.q / (p.kappa * s.theta)
    p_s2 = -p.tau3 * s.s2 / p.lam
    e_theta = p.cv - p.tau1 * q2 / (p.kappa * s.rho * theta2)
    e_rho = -p.tau1 * q2 / (p.kappa * s.rho * s.rho * s.theta) - p.tau3 * s.s2 * s.s2 / (
        2.0 * p.lam * s.rho * s.rho
    )
    return PressurePartials(p_rho, p_theta, p_q, p_s2, e_theta, e_rho)


def triplet_sound_speed(s: PrimitiveState, p: ModelParams) -> np.ndarray:
    """Acoustic speed of the mass, momentum and energy subsystem.

    The heat flux and bulk stress enter as frozen coefficients, which is
    how the conservative flux stage sees them. For a general equation of
    state the speed is dp/drho at fixed specific energy plus (p/rho^2)
    dp/de at fixed density; the identity rho^2 e_rho = p - theta p_theta
    collapses that to

        c^2 = p_rho + theta p_theta^2 / (rho^2 e_theta),

    which reduces to the ideal value sqrt(gamma R theta) where the flux
    fields vanish. Positive whenever e_theta is, which the admissible box
    guarantees.
    """
    pp = pressure_partials(s, p)
    c2 = pp.p_rho + s.theta * pp.p_theta * pp.p_theta / (s.rho * s.rho * pp.e_theta)
    return np.sqrt(c2)


def primitive_to_conserved(s: PrimitiveState, p: ModelParams) -> ConservedState:
    """Map to (rho, rho u, total energy, q, S2); exact componentwise."""
    e = internal_energy(s, p)
    etot = s.rho * (e + 0.5 * _sq(s.u))
    return ConservedState(s.rho.copy(), s.rho * s.u, etot, s.q.copy(), np.array(s.s2, copy=True))


def conserved_to_primitive(c: ConservedState, p: ModelParams) -> PrimitiveState:
    """Invert the energy relation for theta; returns primitive variables.

    The temperature solves ``C_v theta^2 - a theta + b = 0`` with
    ``a = e - tau3 S2^2/(2 lambda rho)`` and ``b = tau1 |q|^2/(kappa rho)``,
    where e is the specific internal energy extracted from the total
    energy. The larger root is returned: it is the unique branch that is
    continuous with theta = e/C_v as q -> 0.

    Raises
    ------
    DomainError
        On non-positive density.
    UnphysicalStateError
        If the discriminant is negative (no positive temperature exists).
    """
    if np.any(c.rho <= 0.0):
        raise DomainError(f"density must be positive, min {np.min(c.rho):.6g}")
    u = c.mom / c.rho
    e = (c.etot - 0.5 * _sq(c.mom) / c.rho) / c.rho
    a = e - p.tau3 * c.s2 * c.s2 / (2.0 * p.lam * c.rho)
    b = p.tau1 * _sq(c.q) / (p.kappa * c.rho)
    disc = a * a - 4.0 * p.cv * b
    if np.any(disc < 0.0):
        raise UnphysicalStateError(
            f"temperature discriminant negative (min {np.min(disc):.6g}); total energy too small for |q|"
        )
    theta = (a + np.sqrt(disc)) / (2.0 * p.cv)
    if np.any(theta <= 0.0):
        raise UnphysicalStateError(f"recovered temperature not positive (min {np.min(theta):.6g})")
    return PrimitiveState(c.rho.copy(), u, theta, c.q.copy(), np.array(c.s2, copy=True))


def check_admissible(s: PrimitiveState, p: ModelParams) -> np.ndarray:
    """Boolean mask of cells lying inside the admissible box."""
    box = p.box
    ok = (s.rho >= box.rho_min) & (s.rho <= box.rho_max)
    ok &= (s.theta >= box.theta_min) & (s.theta <= box.theta_max)
    ok &= np.sqrt(_sq(s.u)) <= box.u_max
    ok &= np.sqrt(_sq(s.q)) <= box.q_max
    ok &= np.abs(s.s2) <= box.s2_max
    return ok
