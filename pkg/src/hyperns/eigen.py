"""Directional wave structure of the first-order system.

The (2n+3)x(2n+3) flux Jacobian A(xi) has the transport eigenvalue u.xi
with multiplicity 2n-1; the remaining four speeds are u.xi - z_i where the
z_i are the roots of a monic quartic g whose coefficients are closed-form
in the state. Admissible states give four distinct real roots straddling
zero, which is what the hyperbolicity verdict checks.

Also houses the compensator construction at the equilibrium state: a
skew-coupling matrix K(xi) built from two free constants (N, epsilon) such
that K(xi)A0(xi) is antisymmetric and the symmetrized dissipation matrix M
is positive definite for small epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .thermo import DomainError, ModelParams, PrimitiveState, pressure_partials

__all__ = [
    "EigenReport",
    "CompensatorReport",
    "as_direction",
    "assemble_flux_jacobian",
    "quartic_g",
    "solve_quartic",
    "quartic_roots_real",
    "characteristic_factorization_check",
    "eigenvector_completeness",
    "directional_speeds",
    "max_wave_speed",
    "eigen_report",
    "kawashima_check",
]

ROOT_GAP_RTOL = 1e-8


def as_direction(v) -> np.ndarray:
    """Validate a unit direction vector (|xi| = 1 to 1e-14)."""
    xi = np.asarray(v, dtype=np.float64)
    if xi.ndim != 1 or xi.shape[0] not in (1, 2, 3):
        raise ValueError(f"direction must be a 1/2/3-vector, got shape {xi.shape}")
    n = np.sqrt(np.dot(xi, xi))
    if abs(n - 1.0) > 1e-14:
        raise ValueError(f"direction must be unit length to 1e-14, |xi| = {n!r}")
    return xi


@dataclass(frozen=True)
class EigenReport:
    """Wave-structure verdict for one state and one direction."""

    quartic_roots: np.ndarray
    eigenvalues: np.ndarray
    eigenvector_count: int
    max_speed: float
    hyperbolic: bool
    g_at_zero: float
    g_at_mu_pm: tuple


@dataclass(frozen=True)
class CompensatorReport:
    """Outcome of the skew-compensator construction at equilibrium.

    ``margin`` is the noise floor used to accept an epsilon: the smallest
    eigenvalue must clear it, otherwise an arbitrarily tiny epsilon could
    claim definiteness below eigensolver precision.
    """

    n_param: float
    epsilon: float
    antisymmetry_defect: float
    m_min_eigenvalue: float
    margin: float = 0.0

    @property
    def success(self) -> bool:
        return self.antisymmetry_defect < 1e-12 and self.m_min_eigenvalue > self.margin


# The Jacobian layout is (rho, u_1..u_n, theta, q_1..q_n, S2). The u-row
# q-block is p_q (x) xi^T / rho and the theta-row q-block is the bare xi^T:
# this is the printed-form pair whose determinant factors exactly through
# the quartic (checked in exact arithmetic in the test suite).
def assemble_flux_jacobian(s: PrimitiveState, xi, p: ModelParams) -> np.ndarray:
    xi = as_direction(xi)
    n = xi.shape[0]
    if s.dim != n:
        raise ValueError(f"state dim {s.dim} does not match direction dim {n}")
    pp = pressure_partials(s, p)
    if np.any(pp.e_theta <= 0.0):
        raise DomainError("e_theta must be positive to assemble the Jacobian")
    shape = np.shape(s.rho)
    m = 2 * n + 3
    A = np.zeros(shape + (m, m))
    iu, ith, iq, is2 = 1, 1 + n, 2 + n, 2 + 2 * n
    uxi = np.tensordot(xi, s.u, axes=(0, 0))
    qxi = np.tensordot(xi, s.q, axes=(0, 0))
    for k in range(m):
        A[..., k, k] = uxi
    for j in range(n):
        A[..., 0, iu + j] = s.rho * xi[j]
        A[..., ith, iu + j] = s.theta * pp.p_theta * xi[j] / (s.rho * pp.e_theta)
        A[..., ith, iq + j] = xi[j]
        A[..., iq + j, ith] = p.kappa * xi[j] / p.tau1
        A[..., is2, iu + j] = -p.lam * xi[j] / p.tau3
    for i in range(n):
        A[..., iu + i, 0] = pp.p_rho * xi[i] / s.rho
        A[..., iu + i, ith] = pp.p_theta * xi[i] / s.rho
        A[..., iu + i, is2] = (pp.p_s2 - 1.0) * xi[i] / s.rho
        for mm in range(n):
            A[..., iu + i, iq + mm] = pp.p_q[i] * xi[mm] / s.rho
    A[..., ith, ith] -= 2.0 * qxi / (s.rho * s.theta * pp.e_theta)
    return A


def quartic_g(s: PrimitiveState, xi, p: ModelParams) -> np.ndarray:
    """Monic quartic coefficients (1, c3, c2, c1, c0) for the extra speeds.

    Broadcasts over array-valued states; the coefficient axis is last.
    """
    xi = as_direction(xi)
    pp = pressure_partials(s, p)
    if np.any(pp.e_theta <= 0.0):
        raise DomainError("e_theta must be positive for the quartic")
    qxi = np.tensordot(xi, s.q, axes=(0, 0))
    pqxi = np.tensordot(xi, pp.p_q, axes=(0, 0))
    re = s.rho * s.rho * pp.e_theta
    blk = p.lam * (1.0 - pp.p_s2) / (s.rho * p.tau3) + pp.p_rho
    c3 = -2.0 * qxi / (s.rho * s.theta * pp.e_theta)
    c2 = -(p.kappa / p.tau1 + s.theta * pp.p_theta**2 / re + blk)
    c1 = p.kappa * s.theta * pp.p_theta * pqxi / (p.tau1 * re) + blk * 2.0 * qxi / (
        s.rho * s.theta * pp.e_theta
    )
    c0 = blk * p.kappa / p.tau1
    one = np.ones_like(np.asarray(c0))
    return np.stack([one, c3, c2, c1, c0], axis=-1)


def _gval(z, c):
    return (((z + c[..., 1]) * z + c[..., 2]) * z + c[..., 3]) * z + c[..., 4]


def _gder(z, c):
    return ((4.0 * z + 3.0 * c[..., 1]) * z + 2.0 * c[..., 2]) * z + c[..., 3]


def solve_quartic(coeffs) -> np.ndarray:
    """Roots of a single monic quartic, sorted by real part then imag part.

    Biquadratics get the closed-form square-root formulas; the general
    case goes through companion-matrix eigenvalues polished by Newton
    iteration to residual |g(z)| < 1e-12 (1 + |z|^4).
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    if c.shape != (5,) or c[0] != 1.0:
        raise ValueError("expected monic quartic coefficients (1, c3, c2, c1, c0)")
    _, c3, c2, c1, c0 = c
    if abs(c3) < 1e-14 and abs(c1) < 1e-14:
        disc = np.sqrt(c2 * c2 - 4.0 * c0)
        w1, w2 = (-c2 + disc) / 2.0, (-c2 - disc) / 2.0
        r1, r2 = np.sqrt(w1), np.sqrt(w2)
        roots = np.array([r1, -r1, r2, -r2])
    else:
        comp = np.zeros((4, 4), dtype=np.complex128)
        comp[1:, :3] = np.eye(3)
        comp[:, 3] = [-c0, -c1, -c2, -c3]
        roots = np.linalg.eigvals(comp)
        for _ in range(40):
            g = _gval(roots, c[None, :])
            if np.all(np.abs(g) <= 1e-13 * (1.0 + np.abs(roots) ** 4)):
                break
            dg = _gder(roots, c[None, :])
            step = np.where(dg != 0.0, g / np.where(dg == 0.0, 1.0, dg), 0.0)
            roots = roots - step
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def quartic_roots_real(coeffs: np.ndarray, mu_plus: np.ndarray) -> np.ndarray:
    """All four real roots of a batch of admissible-state quartics.

    ``mu_plus`` is the positive square root of the stress-acoustic block
    (the positive interior point where g is negative on admissible
    states). Together with g(0) = c0 > 0 this gives four guaranteed sign
    brackets, refined by bisection plus a Newton polish. Input shape
    (..., 5), output shape (..., 4) sorted ascending.

    Raises
    ------
    DomainError
        If the sign pattern fails somewhere (state not admissible).
    """
    c = np.asarray(coeffs, dtype=np.float64)
    mu = np.broadcast_to(np.asarray(mu_plus, dtype=np.float64), c.shape[:-1])
    c0 = c[..., 4]
    if np.any(c0 <= 0.0):
        raise DomainError("quartic constant term not positive; state outside admissible region")
    gm, gp = _gval(-mu, c), _gval(mu, c)
    if np.any(gm >= 0.0) or np.any(gp >= 0.0):
        raise DomainError("quartic not negative at interior points; state outside admissible region")
    B = 1.0 + np.max(np.abs(c[..., 1:]), axis=-1)
    zero = np.zeros_like(B)
    lo4 = np.stack([-B, -mu, zero, mu], axis=-1)
    hi4 = np.stack([-mu, zero, mu, B], axis=-1)
    cc = c[..., None, :]
    for _ in range(50):
        mid = 0.5 * (lo4 + hi4)
        sm = _gval(mid, cc)
        slo = _gval(lo4, cc)
        same = np.sign(sm) == np.sign(slo)
        lo4 = np.where(same, mid, lo4)
        hi4 = np.where(same, hi4, mid)
    z = 0.5 * (lo4 + hi4)
    for _ in range(3):
        dg = _gder(z, cc)
        dg = np.where(dg == 0.0, 1.0, dg)
        z = z - _gval(z, cc) / dg
    return np.sort(z, axis=-1)


def _outer_speeds(c: np.ndarray) -> tuple:
    """Smallest and largest quartic roots for a coefficient batch.

    Newton from beyond the Cauchy bound converges monotonically onto the
    outer roots of a real-rooted quartic, which is all the CFL and the
    Rusanov dissipation need.
    """
    B = 1.0 + np.max(np.abs(c[..., 1:]), axis=-1)
    zhi = B.copy()
    zlo = -B
    for _ in range(60):
        g = _gval(zhi, c)
        dg = _gder(zhi, c)
        dg = np.where(dg == 0.0, 1.0, dg)
        step = g / dg
        zhi = zhi - step
        if np.all(np.abs(step) <= 1e-14 * (1.0 + np.abs(zhi))):
            break
    for _ in range(60):
        g = _gval(zlo, c)
        dg = _gder(zlo, c)
        dg = np.where(dg == 0.0, 1.0, dg)
        step = g / dg
        zlo = zlo - step
        if np.all(np.abs(step) <= 1e-14 * (1.0 + np.abs(zlo))):
            break
    return zlo, zhi


def directional_speeds(s: PrimitiveState, p: ModelParams, axis: int) -> np.ndarray:
    """Per-cell max |u.e_axis - z_i| for the coordinate direction e_axis."""
    xi = np.zeros(s.dim)
    xi[axis] = 1.0
    c = quartic_g(s, xi, p)
    zlo, zhi = _outer_speeds(c)
    ua = s.u[axis]
    return np.maximum(np.abs(ua - zlo), np.abs(ua - zhi))


def max_wave_speed(s: PrimitiveState, p: ModelParams) -> float:
    """Global max of |u.xi - z_i| over cells and coordinate directions."""
    sig = 0.0
    for axis in range(s.dim):
        sig = max(sig, float(np.max(directional_speeds(s, p, axis))))
    return sig


def characteristic_factorization_check(
    s: PrimitiveState, xi, p: ModelParams, num_samples: int = 64, seed: int = 0,
    lam_range: tuple = (-5.0, 5.0),
) -> float:
    """Max normalized defect |det(A - Lam I) - (u.xi - Lam)^(2n-1) g(u.xi - Lam)|.

    Lambda values are sampled uniformly; the defect is normalized by the
    largest |expected| over the sample (floored at 1) so that near-root
    samples are compared against the polynomial's magnitude envelope.
    """
    xi = as_direction(xi)
    n = xi.shape[0]
    A = assemble_flux_jacobian(s, xi, p)
    c = quartic_g(s, xi, p)
    uxi = float(np.tensordot(xi, s.u, axes=(0, 0)))
    rng = np.random.default_rng(seed)
    lams = rng.uniform(lam_range[0], lam_range[1], size=num_samples)
    m = 2 * n + 3
    batch = A[None, :, :] - lams[:, None, None] * np.eye(m)[None, :, :]
    dets = np.linalg.det(batch)
    zz = uxi - lams
    expected = zz ** (2 * n - 1) * _gval(zz, c[None, :])
    scale = max(1.0, float(np.max(np.abs(expected))))
    return float(np.max(np.abs(dets - expected)) / scale)


def _tangent_basis(xi: np.ndarray) -> list:
    n = xi.shape[0]
    if n == 1:
        return []
    # stable complement via QR of [xi | I]
    qmat, _ = np.linalg.qr(np.column_stack([xi, np.eye(n)]))
    return [qmat[:, k] for k in range(1, n)]


def eigenvector_completeness(s: PrimitiveState, xi, p: ModelParams) -> int:
    """Count independent eigenvectors: 2n-1 transport ones plus one per root.

    The transport kernel is built from its explicit description (zero
    temperature component, velocity and heat-flux parts tangent to xi,
    and one density/stress pair orthogonal to (p_rho, p_S2 - 1)); the four
    quartic eigenvectors come from dense null spaces. Returns the rank of
    the assembled vector set; anything below 2n+3 signals degeneracy.
    """
    xi = as_direction(xi)
    n = xi.shape[0]
    m = 2 * n + 3
    pp = pressure_partials(s, p)
    A = assemble_flux_jacobian(s, xi, p)
    uxi = float(np.tensordot(xi, s.u, axes=(0, 0)))
    vecs = []
    iu, iq, is2 = 1, 2 + n, 2 + 2 * n
    for t in _tangent_basis(xi):
        v = np.zeros(m)
        v[iu:iu + n] = t
        vecs.append(v)
    for t in _tangent_basis(xi):
        v = np.zeros(m)
        v[iq:iq + n] = t
        vecs.append(v)
    v = np.zeros(m)
    v[0] = 1.0 - float(pp.p_s2)
    v[is2] = float(pp.p_rho)
    vecs.append(v)
    blk = p.lam * (1.0 - pp.p_s2) / (s.rho * p.tau3) + pp.p_rho
    mu_p = np.atleast_1d(np.sqrt(blk))
    roots = quartic_roots_real(quartic_g(s, xi, p)[None, :], mu_p)[0]
    for z in roots:
        mat = A - (uxi - z) * np.eye(m)
        _, sv, vh = np.linalg.svd(mat)
        vecs.append(vh[-1])
    stack = np.array(vecs)
    sv = np.linalg.svd(stack, compute_uv=False)
    return int(np.sum(sv > 1e-8 * sv[0]))


def eigen_report(s: PrimitiveState, xi, p: ModelParams) -> EigenReport:
    """Full wave-structure report with the hyperbolicity verdict."""
    xi = as_direction(xi)
    n = xi.shape[0]
    c = quartic_g(s, xi, p)
    uxi = float(np.tensordot(xi, s.u, axes=(0, 0)))
    roots_c = solve_quartic(c)
    real = np.all(np.abs(roots_c.imag) <= 1e-10 * (1.0 + np.abs(roots_c.real)))
    roots = np.sort(roots_c.real)
    scale = float(np.max(np.abs(roots)))
    gaps_ok = bool(np.all(np.diff(roots) > ROOT_GAP_RTOL * max(scale, 1e-300)))
    straddle = bool(roots[1] < 0.0 < roots[2])
    eigenvalues = np.sort(np.concatenate([np.full(2 * n - 1, uxi), uxi - roots]))
    count = eigenvector_completeness(s, xi, p) if (real and gaps_ok) else 0
    pp = pressure_partials(s, p)
    blk = float(p.lam * (1.0 - pp.p_s2) / (s.rho * p.tau3) + pp.p_rho)
    mu_p = np.sqrt(blk)
    g0 = float(c[..., 4])
    g_mu = (float(_gval(-mu_p, c)), float(_gval(mu_p, c)))
    hyperbolic = bool(real and gaps_ok and straddle and count == 2 * n + 3)
    speed = float(np.max(np.abs(uxi - roots)))
    return EigenReport(
        quartic_roots=roots,
        eigenvalues=eigenvalues,
        eigenvector_count=count,
        max_speed=speed,
        hyperbolic=hyperbolic,
        g_at_zero=g0,
        g_at_mu_pm=g_mu,
    )


# ── compensator at equilibrium ──


def _sym_matrices(p: ModelParams, xi: np.ndarray, n_param: float, eps: float):
    """Symmetric-form system matrices at the equilibrium state.

    Returns (A0, A(xi), B(xi), L, K(xi)) with p_rho = R theta_bar = R,
    p_theta = R rho_bar = R, e_theta = C_v evaluated at (1, 0, 1, 0, 0).
    """
    n = xi.shape[0]
    m = 2 * n + 3
    pr = p.r_gas
    pt = p.r_gas
    et = p.cv
    iu, ith, iq, is2 = 1, 1 + n, 2 + n, 2 + 2 * n
    A0 = np.zeros((m, m))
    A0[0, 0] = pr
    A0[ith, ith] = et
    A0[is2, is2] = p.tau3 / p.lam
    for j in range(n):
        A0[iu + j, iu + j] = 1.0
        A0[iq + j, iq + j] = p.tau1 / p.kappa
    Axi = np.zeros((m, m))
    for j in range(n):
        Axi[0, iu + j] = pr * xi[j]
        Axi[iu + j, 0] = pr * xi[j]
        Axi[iu + j, ith] = pt * xi[j]
        Axi[ith, iu + j] = pt * xi[j]
        Axi[iu + j, is2] = -xi[j]
        Axi[is2, iu + j] = -xi[j]
        Axi[ith, iq + j] = xi[j]
        Axi[iq + j, ith] = xi[j]
    Bxi = np.zeros((m, m))
    for i in range(n):
        for j in range(n):
            Bxi[iu + i, iu + j] = p.mu * ((n - 2) / n) * xi[i] * xi[j]
        Bxi[iu + i, iu + i] += p.mu
    L = np.zeros((m, m))
    L[is2, is2] = 1.0 / p.lam
    for j in range(n):
        L[iq + j, iq + j] = 1.0 / p.kappa
    K = np.zeros((m, m))
    for j in range(n):
        K[0, iu + j] = pr * xi[j]
        K[iu + j, 0] = -xi[j]
        K[ith, iq + j] = p.kappa * n_param / p.tau1 * xi[j]
        K[iq + j, ith] = -n_param / et * xi[j]
        K[iq + j, is2] = p.lam / p.tau3 * xi[j]
        K[is2, iq + j] = -p.kappa / p.tau1 * xi[j]
    return A0, Axi, Bxi, L, eps * K


def _sample_directions(n: int) -> list:
    dirs = [np.eye(n)[j] for j in range(n)]
    dirs += [-d for d in dirs]
    dirs.append(np.ones(n) / np.sqrt(n))
    rng = np.random.default_rng(1234)
    for _ in range(5):
        v = rng.normal(size=n)
        dirs.append(v / np.linalg.norm(v))
    return dirs


def kawashima_check(p: ModelParams, n_param="auto", eps="bisect") -> CompensatorReport:
    """Build the compensator at equilibrium and certify M > 0.

    With ``n_param="auto"`` the coupling constant is tau1 p_theta^2/(2 kappa) + 1,
    strictly above the threshold kappa N / tau1 > p_theta^2 / 4. With
    ``eps="bisect"`` epsilon is halved from 1 until the symmetrized
    dissipation matrix M has positive smallest eigenvalue over a fixed
    direction sample; 60 fruitless halvings report failure as a
    non-positive ``m_min_eigenvalue``.
    """
    n = p.dim
    pt = p.r_gas
    if n_param == "auto":
        N = p.tau1 * pt * pt / (2.0 * p.kappa) + 1.0
    else:
        N = float(n_param)
    dirs = _sample_directions(n)

    def assemble_m(eps_val: float):
        defect = 0.0
        mmin = np.inf
        scale = 0.0
        for xi in dirs:
            A0, Axi, Bxi, L, K = _sym_matrices(p, xi, N, eps_val)
            KA0 = K @ A0
            defect = max(defect, float(np.max(np.abs(KA0 + KA0.T))))
            KA = K @ Axi
            M = 0.5 * (KA + KA.T) + Bxi + L
            scale = max(scale, float(np.max(np.abs(M))))
            mmin = min(mmin, float(np.min(np.linalg.eigvalsh(M))))
        return defect, mmin, 1e-13 * scale

    if eps == "bisect":
        eps_val = 1.0
        defect, mmin, margin = assemble_m(eps_val)
        halvings = 0
        while mmin <= margin and halvings < 60:
            eps_val *= 0.5
            defect, mmin, margin = assemble_m(eps_val)
            halvings += 1
    else:
        eps_val = float(eps)
        defect, mmin, margin = assemble_m(eps_val)
    return CompensatorReport(
        n_param=N, epsilon=eps_val, antisymmetry_defect=defect,
        m_min_eigenvalue=mmin, margin=margin,
    )
