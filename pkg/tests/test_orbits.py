import math

import numpy as np
import pytest

from proxops.orbits import (
    MU_EARTH,
    Impulse,
    OrbitalElements,
    RoeState,
    control_input_matrix,
    gamma_batch,
    mean_arg_latitude,
    mean_motion,
    orbital_period,
    propagate,
    propagate_chief,
    psi_batch,
    roe_to_rtn,
    rtn_range,
    secular_rates,
    stm,
    stm_batch,
)

import oracles

# chief used throughout: low LEO station at ~370 km altitude
CHIEF = OrbitalElements(
    a=6.73814e6,
    e=5.581e-4,
    i=math.radians(51.64),
    raan=math.radians(301.04),
    argp=math.radians(26.18),
    M=0.7,
)
CIRC = OrbitalElements(a=6.73814e6, e=0.0, i=math.radians(51.64), raan=1.0, argp=0.0, M=0.3)


def kep_tuple(oe):
    return (oe.a, oe.e, oe.i, oe.raan, oe.argp, oe.M)


class TestMeanMotion:
    def test_station_orbit_value(self):
        assert mean_motion(CHIEF) == pytest.approx(1.1414e-3, abs=2e-7)

    def test_unit_forcing(self):
        oe = OrbitalElements(a=MU_EARTH ** (1.0 / 3.0), e=0.0, i=0.0, raan=0.0, argp=0.0, M=0.0)
        assert mean_motion(oe) == pytest.approx(1.0, rel=1e-12)

    def test_nonpositive_a_rejected(self):
        with pytest.raises(ValueError):
            OrbitalElements(a=-1.0, e=0.0, i=0.0, raan=0.0, argp=0.0, M=0.0)


class TestStm:
    def test_identity_at_zero_lag(self):
        phi = stm(CHIEF, 123.0, 123.0)
        assert np.max(np.abs(phi - np.eye(6))) < 1e-12

    def test_rejects_reversed_epochs(self):
        with pytest.raises(ValueError):
            stm(CHIEF, 0.0, 10.0)

    def test_composition(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            t0, d1, d2 = rng.uniform(0.0, 20000.0, size=3)
            t1, t2 = t0 + d1, t0 + d1 + d2
            whole = stm(CHIEF, t2, t0)
            parts = stm(CHIEF, t2, t1) @ stm(CHIEF, t1, t0)
            assert np.max(np.abs(whole - parts)) < 1e-9

    def test_keplerian_limit_structure(self):
        tau = 3600.0
        phi = stm(CHIEF, tau, 0.0, j2=0.0)
        n = mean_motion(CHIEF)
        expected = np.eye(6)
        expected[1, 0] = -1.5 * n * tau
        assert np.max(np.abs(phi - expected)) < 1e-12

    def test_keplerian_limit_against_two_body_differencing(self):
        tau = 5000.0
        phi = stm(CHIEF, tau, 0.0, j2=0.0)
        rng = np.random.default_rng(3)
        for _ in range(10):
            d = rng.normal(size=6)
            d *= 10.0 / np.linalg.norm(d)
            plus = oracles.roe_after_drift(kep_tuple(CHIEF), d, tau, j2=0.0)
            minus = oracles.roe_after_drift(kep_tuple(CHIEF), -d, tau, j2=0.0)
            fd = 0.5 * (plus - minus)
            assert np.allclose(phi @ d, fd, rtol=1e-7, atol=1e-8)

    def test_j2_stm_is_jacobian_of_secular_drift(self):
        # central differences of the nonlinear secular propagation, where the
        # deputy drifts with rates evaluated at its own elements
        rng = np.random.default_rng(11)
        for tau in (900.0, 5557.0, 3.0 * orbital_period(CHIEF)):
            phi = stm(CHIEF, tau, 0.0)
            for _ in range(6):
                d = rng.normal(size=6)
                d *= 5.0 / np.linalg.norm(d)
                plus = oracles.roe_after_drift(kep_tuple(CHIEF), d, tau)
                minus = oracles.roe_after_drift(kep_tuple(CHIEF), -d, tau)
                fd = 0.5 * (plus - minus)
                assert np.allclose(phi @ d, fd, rtol=1e-6, atol=1e-7)

    def test_departure_epoch_matters_only_through_argp(self):
        # same lag from two departure epochs differs once J2 rotates perigee
        a = stm(CHIEF, 900.0, 0.0)
        b = stm_batch(CHIEF, 40000.0, 900.0)
        assert np.max(np.abs(a - b)) > 0.0

    def test_batch_matches_scalar(self):
        t0 = np.array([0.0, 1000.0])
        tau = np.array([900.0, 1800.0])
        batch = stm_batch(CHIEF, t0[:, None], tau[None, :])
        for i, s in enumerate(t0):
            for j, d in enumerate(tau):
                assert np.allclose(batch[i, j], stm(CHIEF, s + d, s), atol=1e-15)


class TestControlInputMatrix:
    def test_zero_impulse(self):
        g = control_input_matrix(CIRC, 250.0)
        assert np.allclose(g @ np.zeros(3), 0.0)

    def test_tangential_da_response(self):
        n = mean_motion(CIRC)
        g = control_input_matrix(CIRC, 0.0)
        dv = 0.1
        assert g[0, 1] * dv == pytest.approx(2.0 * dv / n, rel=1e-12)
        # against osculating-element differencing on a circular chief
        r, v = oracles.kep_to_cart(*kep_tuple(CIRC))
        qc = oracles.cart_to_qns(r, v)
        eps = 1e-4
        dv_eci = oracles.rtn_impulse_to_eci(r, v, [0.0, eps, 0.0])
        plus = oracles.roe_from_qns(qc, oracles.cart_to_qns(r, v + dv_eci))
        minus = oracles.roe_from_qns(qc, oracles.cart_to_qns(r, v - dv_eci))
        fd_da = 0.5 * (plus[0] - minus[0])
        assert fd_da == pytest.approx(2.0 * eps / mean_motion(CIRC), rel=1e-6)

    def test_radial_impulse_leaves_da(self):
        g = control_input_matrix(CIRC, 777.0)
        assert g[0, 0] == 0.0
        r, v = oracles.kep_to_cart(*kep_tuple(CIRC))
        qc = oracles.cart_to_qns(r, v)
        eps = 1e-4
        dv_eci = oracles.rtn_impulse_to_eci(r, v, [eps, 0.0, 0.0])
        plus = oracles.roe_from_qns(qc, oracles.cart_to_qns(r, v + dv_eci))
        minus = oracles.roe_from_qns(qc, oracles.cart_to_qns(r, v - dv_eci))
        # first-order response would be ~0.2 m here; only round-off remains
        assert abs(0.5 * (plus[0] - minus[0])) < 1e-6

    def test_all_columns_against_gve_differencing(self):
        # circular chief: the near-circular form is exact to first order
        for t in (0.0, 1300.0, 4100.0):
            chief_t = propagate_chief(CIRC, t, j2=0.0)
            r, v = oracles.kep_to_cart(*kep_tuple(chief_t))
            qc = oracles.cart_to_qns(r, v)
            g = control_input_matrix(CIRC, t, j2=0.0)
            eps = 1e-4
            for axis in range(3):
                dv = np.zeros(3)
                dv[axis] = eps
                dv_eci = oracles.rtn_impulse_to_eci(r, v, dv)
                plus = oracles.roe_from_qns(qc, oracles.cart_to_qns(r, v + dv_eci))
                minus = oracles.roe_from_qns(qc, oracles.cart_to_qns(r, v - dv_eci))
                fd = 0.5 * (plus - minus)
                assert np.allclose(g[:, axis] * eps, fd, rtol=1e-6, atol=5e-9)

    def test_station_chief_close_to_gve(self):
        # small but nonzero eccentricity: agreement to O(e)
        r, v = oracles.kep_to_cart(*kep_tuple(CHIEF))
        qc = oracles.cart_to_qns(r, v)
        g = control_input_matrix(CHIEF, 0.0)
        eps = 1e-4
        for axis in range(3):
            dv = np.zeros(3)
            dv[axis] = eps
            dv_eci = oracles.rtn_impulse_to_eci(r, v, dv)
            plus = oracles.roe_from_qns(qc, oracles.cart_to_qns(r, v + dv_eci))
            minus = oracles.roe_from_qns(qc, oracles.cart_to_qns(r, v - dv_eci))
            fd = 0.5 * (plus - minus)
            # near-circular form drops O(e) terms, e ~ 5.6e-4 here
            assert np.allclose(g[:, axis] * eps, fd, rtol=3e-3, atol=2e-4)


class TestRoeToRtn:
    def test_zero_maps_to_zero(self):
        out = roe_to_rtn(RoeState(0, 0, 0, 0, 0, 0), CHIEF, 1000.0)
        assert np.allclose(out.as_array(), 0.0)

    def test_along_track_offset(self):
        out = roe_to_rtn(RoeState(0, 100.0, 0, 0, 0, 0), CHIEF, 0.0)
        assert out.r_T == pytest.approx(100.0, abs=1e-9)
        assert abs(out.r_R) < 1e-9 and abs(out.r_N) < 1e-9

    def test_homogeneity(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=6) * 50.0
        one = psi_batch(CHIEF, 333.0) @ x
        two = psi_batch(CHIEF, 333.0) @ (2.0 * x)
        assert np.allclose(2.0 * one, two, rtol=0.0, atol=1e-12)

    def test_against_nonlinear_geometry(self):
        rng = np.random.default_rng(9)
        for oe, atol_pos in ((CIRC, 0.05), (CHIEF, 0.3)):
            n = mean_motion(oe)
            for t in (0.0, 2000.0):
                chief_t = propagate_chief(oe, t)
                psi = psi_batch(oe, t)
                for _ in range(5):
                    x = rng.normal(size=6) * np.array([30.0, 100.0, 60.0, 60.0, 60.0, 60.0])
                    dep = oracles.deputy_kep_from_roe(kep_tuple(chief_t), x)
                    truth = oracles.relative_rtn_oracle(kep_tuple(chief_t), dep)
                    model = psi @ x
                    assert np.allclose(model[:3], truth[:3], atol=atol_pos)
                    assert np.allclose(model[3:], truth[3:], atol=atol_pos * n)


class TestRange:
    def test_zero(self):
        assert rtn_range(RoeState(0, 0, 0, 0, 0, 0), CHIEF, 0.0) == 0.0

    def test_along_track(self):
        assert rtn_range(RoeState(0, 100.0, 0, 0, 0, 0), CHIEF, 0.0) == pytest.approx(100.0, abs=1e-9)

    def test_nonnegative(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            x = RoeState.from_array(rng.normal(size=6) * 200.0)
            assert rtn_range(x, CHIEF, float(rng.uniform(0, 9000))) >= 0.0


class TestPropagate:
    def test_noop(self):
        x = RoeState(10.0, -40.0, 5.0, 5.0, 1.0, -2.0)
        out = propagate(x, Impulse(0, 0, 0), CHIEF, 50.0, 50.0)
        assert np.allclose(out.as_array(), x.as_array(), atol=1e-12)

    def test_definition(self):
        x = RoeState(3.0, 20.0, -7.0, 1.0, 4.0, 4.0)
        u = Impulse(0.01, -0.02, 0.005)
        out = propagate(x, u, CHIEF, 100.0, 2000.0)
        expected = stm(CHIEF, 2000.0, 100.0) @ (
            x.as_array() + control_input_matrix(CHIEF, 100.0) @ u.as_array()
        )
        assert np.allclose(out.as_array(), expected, atol=1e-12)

    def test_two_step_composition(self):
        x = RoeState(3.0, 20.0, -7.0, 1.0, 4.0, 4.0)
        u = Impulse(0.01, -0.02, 0.005)
        direct = propagate(x, u, CHIEF, 0.0, 1800.0)
        mid = propagate(x, u, CHIEF, 0.0, 900.0)
        two = propagate(mid, Impulse(0, 0, 0), CHIEF, 900.0, 1800.0)
        assert np.allclose(direct.as_array(), two.as_array(), atol=1e-8)


class TestSecularRates:
    def test_against_independent_transcription(self):
        got = secular_rates(CHIEF)
        want = oracles.secular_rates_oracle(CHIEF.a, CHIEF.e, CHIEF.i)
        assert np.allclose(got, want, rtol=1e-12)

    def test_mean_arg_latitude_rate(self):
        u0 = mean_arg_latitude(CHIEF, 0.0)
        u1 = mean_arg_latitude(CHIEF, 100.0)
        m_dot, argp_dot, _ = secular_rates(CHIEF)
        assert (u1 - u0) / 100.0 == pytest.approx(m_dot + argp_dot, rel=1e-12)


def test_gamma_batch_shape():
    g = gamma_batch(CHIEF, np.linspace(0.0, 5000.0, 7))
    assert g.shape == (7, 6, 3)
    assert np.all(np.isfinite(g))
