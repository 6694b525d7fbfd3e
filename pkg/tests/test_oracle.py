"""Oracle tests: exact cases, product-integration convergence, growth laws."""

import math

import numpy as np
import pytest

from sheatlab import kernel as kern
from sheatlab import oracle as O
from sheatlab.solver import InitialData

PI2 = math.pi ** 2


def kernel_quadrature_d1(u0, nu, t, x, n_quad=2048):
    # independent route for D1: direct Gauss-Legendre quadrature of g * u0
    spec = kern.KernelSpec(nu=nu)
    ys, ws = kern.gauss_legendre_panels(0.0, 1.0, n_quad // 16, 16)
    return float(np.dot(ws, kern.eval_kernel(spec, t, x, ys) * u0(ys)))


class TestDeterministicLimit:
    def test_sine_mode_exact(self):
        cfg = O.OracleConfig(lam=0.0, u0=InitialData.sine(1), horizon=0.5,
                             n_time_panels=100, n_x=31)
        mf = O.second_moment_volterra(cfg, error_estimate=False)
        assert mf.log_m_at(0.5, 0.5) == pytest.approx(-2 * 0.5 * PI2 * 0.5, abs=1e-12)

    def test_matches_kernel_quadrature_squared(self):
        cfg = O.OracleConfig(lam=0.0, u0=InitialData.bump(0.2), horizon=0.25,
                             n_time_panels=50, n_x=31)
        mf = O.second_moment_volterra(cfg, error_estimate=False)
        for t in (0.1, 0.25):
            for x in (0.5 - 7 / 31 if False else 0.5, 0.5 + 5 / 31):
                x = float(mf.x[np.argmin(np.abs(mf.x - x))])
                d1 = kernel_quadrature_d1(InitialData.bump(0.2), 0.5, t, x)
                assert math.exp(mf.log_m_at(t, x)) == pytest.approx(d1 ** 2, abs=1e-10)

    def test_initial_row_is_u0_squared(self):
        cfg = O.OracleConfig(lam=3.0, u0=InitialData.bump(0.2), horizon=0.1,
                             n_time_panels=20, n_x=31)
        mf = O.second_moment_volterra(cfg, error_estimate=False)
        u0 = InitialData.bump(0.2)(mf.x)
        with np.errstate(over="ignore"):
            row = np.exp(mf.log_m[0])
        assert row == pytest.approx(u0 ** 2, abs=1e-14)


class TestVolterraSolve:
    def test_self_convergence_within_reported_error(self):
        a = O.second_moment_volterra(O.OracleConfig(
            lam=1.0, u0=InitialData.bump(0.2), horizon=0.25, n_time_panels=200, n_x=31))
        b = O.second_moment_volterra(O.OracleConfig(
            lam=1.0, u0=InitialData.bump(0.2), horizon=0.25, n_time_panels=400, n_x=31),
            error_estimate=False)
        actual = abs(a.log_m_at(0.25, 0.5) - b.log_m_at(0.25, 0.5))
        assert actual <= a.error_log_at(0.25, 0.5)

    def test_halving_contracts(self):
        vals = []
        for nt in (100, 200, 400):
            cfg = O.OracleConfig(lam=1.0, u0=InitialData.bump(0.2), horizon=0.25,
                                 n_time_panels=nt, n_x=31)
            vals.append(O._solve(cfg)[-1, 15])
        d1, d2 = abs(vals[1] - vals[0]), abs(vals[2] - vals[1])
        assert d1 / d2 >= 1.4

    def test_monotone_in_lambda(self):
        prev = None
        for lam in (0.0, 0.5, 1.0, 2.0):
            cfg = O.OracleConfig(lam=lam, u0=InitialData.bump(0.2), horizon=0.25,
                                 n_time_panels=100, n_x=31)
            cur = O._solve(cfg)
            if prev is not None:
                assert np.all(cur >= prev - 1e-12)
            prev = cur

    def test_positivity(self):
        cfg = O.OracleConfig(lam=2.0, u0=InitialData.bump(0.2), horizon=0.5,
                             n_time_panels=200, n_x=31)
        mf = O.second_moment_volterra(cfg, error_estimate=False)
        assert np.all(mf.log_m[1:] > -np.inf)

    def test_nonmonotone_grid_rejected(self):
        with pytest.raises(O.OracleDomainError):
            O.OracleConfig(lam=1.0, horizon=-0.5)

    def test_large_lambda_rate_matches_renewal_theory(self):
        # short windows kill the boundary correction; the continuum rate is
        # (lam k)^4/(8 nu), an independent closed-form prediction
        lam = 8.0
        r_pred = O.predicted_rate(lam, 1.0, 0.5)
        cfg = O.OracleConfig(lam=lam, u0=InitialData.bump(0.2), horizon=30.0 / r_pred,
                             n_time_panels=1500, n_x=31)
        mf = O.second_moment_volterra(cfg, error_estimate=False)
        le = O.log_l2_energy(mf)
        slope, _, _ = O._window_slope(mf.t, 2 * le, (0.6, 1.0))
        assert slope == pytest.approx(r_pred, rel=0.02)


class TestEnvelope:
    def test_h_attained_at_gamma_for_sine(self):
        cfg = O.OracleConfig(lam=0.0, u0=InitialData.sine(1), horizon=0.2,
                             n_time_panels=40, n_x=31)
        mf = O.second_moment_volterra(cfg, error_estimate=False)
        env = O.lower_bound_envelope(mf, 0.2)
        # minimum of sin^2 over [gamma, 1-gamma] sits at the edge node
        edge = mf.x[np.argmin(np.abs(mf.x - 0.2))]
        assert np.all(np.isclose(env.argmin_x, edge) | np.isclose(env.argmin_x, 1 - edge))

    def test_big_h_constant_for_sine(self):
        cfg = O.OracleConfig(lam=0.0, u0=InitialData.sine(1), horizon=0.5,
                             n_time_panels=50, n_x=31)
        mf = O.second_moment_volterra(cfg, error_estimate=False)
        env = O.lower_bound_envelope(mf, 0.2)
        # H(t) = exp(2 nu pi^2 t) h(t) = sin^2(pi x_edge) for all t
        assert np.max(np.abs(env.log_big_h - env.log_big_h[0])) < 1e-10

    def test_big_h_eventually_grows_for_large_lambda(self):
        cfg = O.OracleConfig(lam=4.0, u0=InitialData.bump(0.2), horizon=1.0,
                             n_time_panels=500, n_x=31)
        mf = O.second_moment_volterra(cfg, error_estimate=False)
        env = O.lower_bound_envelope(mf, 0.2)
        n = len(env.t)
        first_quarter = env.log_big_h[: n // 4].mean()
        last_quarter = env.log_big_h[3 * n // 4:].mean()
        assert last_quarter > first_quarter

    def test_empty_intersection_rejected(self):
        cfg = O.OracleConfig(lam=0.0, u0=InitialData.sine(1), horizon=0.1,
                             n_time_panels=20, n_x=4)
        mf = O.second_moment_volterra(cfg, error_estimate=False)
        with pytest.raises(O.OracleDomainError):
            O.lower_bound_envelope(mf, 0.45)


def _envelope_series(lam, k_sigma, horizon, n_t, n_x=25):
    cfg = O.OracleConfig(lam=lam, k_sigma=k_sigma, u0=InitialData.bump(0.2),
                         horizon=horizon, n_time_panels=n_t, n_x=n_x)
    mf = O.second_moment_volterra(cfg, error_estimate=False)
    env = O.lower_bound_envelope(mf, 0.2)
    return env.t, env.log_h


class TestTheorem31Calibration:
    def test_lambda_zero_slope_is_deterministic_decay(self):
        t, log_h = _envelope_series(0.0, 1.0, 0.5, 100)
        slope, _, _ = O._window_slope(t, log_h, (0.5, 1.0))
        assert slope == pytest.approx(-2 * 0.5 * PI2, rel=0.01)

    def test_quartic_law_preferred(self):
        lams = [4.0, 4 * 2 ** 0.5, 8.0, 8 * 2 ** 0.5]
        horizon, n_t = 0.16, 2200
        series = []
        for lam in lams:
            t, log_h = _envelope_series(lam, 1.0, horizon, n_t)
            series.append((lam, t, log_h))
        cal = O.theorem31_calibration(series, k_lower=1.0, nu=0.5)
        assert cal.kappa2_hat > 0
        assert cal.r2_quartic > cal.r2_quadratic
        assert cal.r2_quartic > 0.999

    def test_coupling_lambda_k_enters_as_product(self):
        # doubling k at fixed lam equals doubling lam at fixed k, exactly,
        # since only lam*k enters the linear-sigma equation
        t1, h1 = _envelope_series(3.0, 2.0, 0.05, 400)
        t2, h2 = _envelope_series(6.0, 1.0, 0.05, 400)
        assert np.allclose(h1, h2, rtol=0, atol=1e-12)

    def test_needs_four_lambdas(self):
        t, log_h = _envelope_series(1.0, 1.0, 0.1, 50)
        with pytest.raises(O.OracleDomainError):
            O.theorem31_calibration([(1.0, t, log_h)] * 3, k_lower=1.0)

    def test_common_grid_enforced(self):
        t1, h1 = _envelope_series(1.0, 1.0, 0.1, 50)
        t2, h2 = _envelope_series(2.0, 1.0, 0.1, 60)
        with pytest.raises(O.OracleDomainError):
            O.theorem31_calibration(
                [(1.0, t1, h1), (2.0, t2, h2), (3.0, t1, h1), (4.0, t1, h1)],
                k_lower=1.0)


class TestEnergy:
    def test_direct_when_resolvable(self):
        cfg = O.OracleConfig(lam=1.0, u0=InitialData.bump(0.2), horizon=0.25,
                             n_time_panels=200, n_x=31)
        p = O.energy_at(cfg, 0.25)
        assert not p.extrapolated
        mf = O.second_moment_volterra(cfg, error_estimate=False)
        assert p.log_energy == pytest.approx(float(O.log_l2_energy(mf)[-1]), abs=1e-12)

    def test_extrapolated_matches_direct_where_both_work(self):
        # lam large enough that 2000 panels trip the extrapolation path yet
        # small enough that 4000 panels still resolve t_target directly
        lam, t_target = 8.0, 0.1
        cfg = O.OracleConfig(lam=lam, u0=InitialData.bump(0.2), horizon=t_target,
                             n_time_panels=4000, n_x=31)
        direct = O.second_moment_volterra(cfg, error_estimate=False)
        log_direct = float(O.log_l2_energy(direct)[-1])
        p = O.energy_at(O.OracleConfig(lam=lam, u0=InitialData.bump(0.2),
                                       horizon=t_target, n_time_panels=2000, n_x=31),
                        t_target, rate_budget=20.0)
        assert p.extrapolated
        assert p.log_energy == pytest.approx(log_direct, rel=0.02)
