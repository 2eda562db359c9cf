import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperns.entropy import (
    discrete_entropy_audit,
    dissipative_entropy,
    deviatoric_shear,
    entropy_production,
    physical_entropy,
)
from hyperns.thermo import DomainError, ModelParams, PrimitiveState


def unit_params(dim=3, **kw):
    defaults = dict(tau1=1.0, tau3=1.0, kappa=1.0, lam=1.0, mu=0.0, cv=1.0, r_gas=1.0, dim=dim)
    defaults.update(kw)
    return ModelParams(**defaults)


def state(rho, u, theta, q, s2):
    return PrimitiveState(rho, np.atleast_1d(np.asarray(u, dtype=float)),
                          theta, np.atleast_1d(np.asarray(q, dtype=float)), s2)


class TestPhysicalEntropy:
    def test_zero_at_unit_state(self):
        s = state(1.0, [0.3, 0, 0], 1.0, [0, 0, 0], 0.2)
        assert physical_entropy(s, unit_params()) == 0.0

    def test_density_log(self):
        s = state(np.e, [0, 0, 0], 1.0, [0, 0, 0], 0.0)
        assert physical_entropy(s, unit_params()) == pytest.approx(-1.0, rel=1e-15)

    def test_flux_correction(self):
        s = state(1.0, [0, 0, 0], 1.0, [1.0, 0, 0], 0.0)
        assert physical_entropy(s, unit_params(kappa=2.0)) == pytest.approx(0.25, rel=1e-15)

    def test_classical_reduction(self):
        p = unit_params(cv=2.5, r_gas=0.4)
        s = state(1.7, [0, 0, 0], 0.9, [0, 0, 0], 0.3)
        assert physical_entropy(s, p) == 2.5 * np.log(0.9) - 0.4 * np.log(1.7)

    def test_correction_linear_in_relaxation_time(self):
        s = state(1.3, [0, 0, 0], 1.1, [0.2, 0.1, 0.0], 0.0)
        base = physical_entropy(s, unit_params(tau1=1e-30))
        d1 = physical_entropy(s, unit_params(tau1=0.5)) - base
        d2 = physical_entropy(s, unit_params(tau1=1.0)) - base
        assert d2 == pytest.approx(2.0 * d1, rel=1e-12)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            physical_entropy(state(-1.0, [0, 0, 0], 1.0, [0, 0, 0], 0.0), unit_params())
        with pytest.raises(DomainError):
            physical_entropy(state(1.0, [0, 0, 0], -2.0, [0, 0, 0], 0.0), unit_params())


class TestProduction:
    def test_zero_at_rest(self):
        s = state(1.0, [0, 0, 0], 1.0, [0, 0, 0], 0.0)
        assert entropy_production(s, None, unit_params()) == 0.0

    def test_flux_and_stress_terms(self):
        # 1/(1*4) + 0.25/(2*1) = 0.375
        s = state(1.0, [0, 0, 0], 2.0, [1.0, 0, 0], 0.5)
        assert entropy_production(s, None, unit_params()) == pytest.approx(0.375, rel=1e-15)

    def test_isotropic_gradient_has_no_shear(self):
        s = state(1.0, [0, 0, 0], 1.0, [0, 0, 0], 0.0)
        grad = np.diag([0.7, 0.7, 0.7]).astype(float)
        p = unit_params(mu=2.0)
        assert entropy_production(s, grad, p) == pytest.approx(0.0, abs=1e-28)

    def test_pure_shear_value(self):
        # dev = [[0, g], [g, 0]], |dev|^2 = 2 g^2, term = mu g^2 / theta
        g = 0.6
        s = state(1.0, [0, 0], 1.5, [0, 0], 0.0)
        grad = np.array([[0.0, g], [0.0, 0.0]])
        p = unit_params(dim=2, mu=2.0)
        want = 2.0 * g * g / 1.5
        assert entropy_production(s, grad, p) == pytest.approx(want, rel=1e-15)

    def test_requires_gradient_when_viscous(self):
        s = state(1.0, [0, 0, 0], 1.0, [0, 0, 0], 0.0)
        with pytest.raises(DomainError):
            entropy_production(s, None, unit_params(mu=1.0))

    @given(theta=st.floats(0.55, 1.95), qx=st.floats(-0.1, 0.1),
           s2=st.floats(-0.1, 0.1), gxy=st.floats(-1.0, 1.0))
    @settings(max_examples=60, deadline=None)
    def test_nonnegative(self, theta, qx, s2, gxy):
        s = state(1.0, [0, 0], theta, [qx, 0.0], s2)
        grad = np.array([[0.1, gxy], [-0.3, 0.2]])
        assert entropy_production(s, grad, unit_params(dim=2, mu=0.7)) >= 0.0


class TestDeviatoric:
    def test_traceless(self):
        rng = np.random.default_rng(2)
        g = rng.normal(size=(3, 3))
        dev = deviatoric_shear(g, 3)
        assert abs(np.trace(dev)) < 1e-14
        assert np.allclose(dev, dev.T)

    def test_shape_check(self):
        with pytest.raises(ValueError):
            deviatoric_shear(np.zeros((2, 3)), 2)


class TestDissipativePair:
    def test_rest_state_zero(self):
        s = state(1.0, [0, 0, 0], 1.0, [0, 0, 0], 0.0)
        eta1, zeta = dissipative_entropy(s, unit_params())
        assert eta1 == 0.0
        assert np.all(zeta == 0.0)

    def test_temperature_term(self):
        s = state(1.0, [0, 0, 0], 2.0, [0, 0, 0], 0.0)
        eta1, _ = dissipative_entropy(s, unit_params())
        assert eta1 == pytest.approx(2.0 - np.log(2.0) - 1.0, rel=1e-15)

    def test_positive_off_equilibrium_bulk(self):
        rng = np.random.default_rng(9)
        n = 100_000
        rho = rng.uniform(0.55, 1.95, n)
        theta = rng.uniform(0.55, 1.95, n)
        u = rng.uniform(-1.5, 1.5, (3, n))
        q = rng.uniform(-0.05, 0.05, (3, n))
        s2 = rng.uniform(-0.09, 0.09, n)
        s = PrimitiveState(rho, u, theta, q, s2)
        eta1, _ = dissipative_entropy(s, unit_params())
        assert np.all(eta1 > 0.0)

    def test_convexity_window_error(self):
        s = state(1.0, [0, 0, 0], 0.4, [0, 0, 0], 0.0)
        with pytest.raises(DomainError, match="convexity"):
            dissipative_entropy(s, unit_params())

    def test_hessian_positive_definite_at_rest(self):
        p = unit_params()

        def f(v):
            return float(dissipative_entropy(
                state(v[0], v[1:4], v[4], v[5:8], v[8]), p)[0])

        v0 = np.array([1.0, 0, 0, 0, 1.0, 0, 0, 0, 0])
        h = 1e-4
        m = len(v0)
        H = np.zeros((m, m))
        for i in range(m):
            for j in range(m):
                vpp = v0.copy(); vpp[i] += h; vpp[j] += h
                vpm = v0.copy(); vpm[i] += h; vpm[j] -= h
                vmp = v0.copy(); vmp[i] -= h; vmp[j] += h
                vmm = v0.copy(); vmm[i] -= h; vmm[j] -= h
                H[i, j] = (f(vpp) - f(vpm) - f(vmp) + f(vmm)) / (4 * h * h)
        evals = np.linalg.eigvalsh(0.5 * (H + H.T))
        assert np.all(evals > 1e-6)

    def test_flux_at_zero_velocity(self):
        s = state(1.4, [0, 0, 0], 2.0, [0.3, -0.1, 0.2], 0.5)
        _, zeta = dissipative_entropy(s, unit_params())
        assert np.allclose(zeta, np.array([0.3, -0.1, 0.2]) * (1.0 - 0.5), rtol=1e-15)

    def test_flux_classical_frozen(self):
        # rho=2, theta=2, u=(1,0), cv=R=1, no fluxes: terms sum to 5
        s = state(2.0, [1.0, 0.0], 2.0, [0.0, 0.0], 0.0)
        _, zeta = dissipative_entropy(s, unit_params(dim=2))
        assert zeta[0] == pytest.approx(5.0, rel=1e-14)
        assert zeta[1] == 0.0

    def test_flux_rotation_equivariance(self):
        p = unit_params(dim=2)
        alpha = 0.41
        R = np.array([[np.cos(alpha), -np.sin(alpha)], [np.sin(alpha), np.cos(alpha)]])
        u = np.array([0.8, -0.3])
        q = np.array([0.04, 0.02])
        _, z1 = dissipative_entropy(state(1.3, u, 1.6, q, 0.05), p)
        _, z2 = dissipative_entropy(state(1.3, R @ u, 1.6, R @ q, 0.05), p)
        assert np.allclose(R @ z1, z2, rtol=1e-13, atol=1e-16)

    def test_viscous_flux_term(self):
        s = state(1.0, [1.0, 0.0], 1.0, [0.0, 0.0], 0.0)
        grad = np.array([[0.0, 1.0], [0.0, 0.0]])
        _, z_inviscid = dissipative_entropy(s, unit_params(dim=2))
        _, z_viscous = dissipative_entropy(s, unit_params(dim=2, mu=2.0), grad)
        # dev = [[0,1],[1,0]], dev @ u = (0, 1), term = -mu * (0, 1)
        assert np.allclose(z_viscous - z_inviscid, [0.0, -2.0], atol=1e-15)

    def test_viscous_requires_gradient(self):
        s = state(1.0, [1.0, 0.0], 1.0, [0.0, 0.0], 0.0)
        with pytest.raises(DomainError):
            dissipative_entropy(s, unit_params(dim=2, mu=1.0))


class TestAudit:
    def test_equilibrium_run_zero_residual(self):
        p = unit_params(dim=1)
        snap = PrimitiveState(np.ones(16), np.zeros((1, 16)), np.ones(16),
                              np.zeros((1, 16)), np.zeros(16))
        times = np.linspace(0.0, 1.0, 5)
        out = discrete_entropy_audit(times, [snap] * 5, p, cell_volume=0.1)
        assert np.all(out.residual == 0.0)
        assert np.all(out.eta1_total == 0.0)
        assert out.max_relative_residual == 0.0

    def test_analytic_decay_first_order(self):
        # pure heat-flux relaxation at rest: q(t) = q0 exp(-t) satisfies
        # d/dt eta1 = -production exactly, so the left-endpoint audit
        # residual is O(dt) and halves with the step
        p = unit_params(dim=1)

        def snap(t):
            q = 0.3 * np.exp(-t)
            return PrimitiveState(np.ones(1), np.zeros((1, 1)), np.ones(1),
                                  np.full((1, 1), q), np.zeros(1))

        def run(nsteps):
            times = np.linspace(0.0, 1.0, nsteps + 1)
            return discrete_entropy_audit(times, [snap(t) for t in times], p, 1.0)

        r1 = run(64).max_relative_residual
        r2 = run(128).max_relative_residual
        assert r1 > 0.0
        order = np.log2(r1 / r2)
        assert 0.8 < order < 1.2

    def test_monotone_storage_in_decay(self):
        p = unit_params(dim=1)
        times = np.linspace(0.0, 2.0, 40)
        snaps = [PrimitiveState(np.ones(1), np.zeros((1, 1)), np.ones(1),
                                np.full((1, 1), 0.3 * np.exp(-t)), np.zeros(1))
                 for t in times]
        out = discrete_entropy_audit(times, snaps, p, 1.0)
        assert np.all(np.diff(out.eta1_total) < 0.0)
        assert np.all(out.production_cum >= 0.0)

    def test_length_mismatch(self):
        p = unit_params(dim=1)
        snap = PrimitiveState(np.ones(4), np.zeros((1, 4)), np.ones(4),
                              np.zeros((1, 4)), np.zeros(4))
        with pytest.raises(ValueError):
            discrete_entropy_audit([0.0, 1.0], [snap], p, 1.0)
