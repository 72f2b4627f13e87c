import math

import numpy as np
import pytest

import ibhm
from ibhm.errors import ResonanceError

from conftest import BRIDGES, VEHICLE, rel_rms


class TestModeShapeSine:
    def test_fundamental_midspan(self):
        assert ibhm.mode_shape_sine(1, 12.5, 25.0) == pytest.approx(1.0)

    def test_pinned_end(self):
        assert ibhm.mode_shape_sine(1, 0.0, 25.0) == 0.0

    def test_second_mode_quarter(self):
        assert ibhm.mode_shape_sine(2, 6.25, 25.0) == pytest.approx(1.0)

    def test_derivatives_match_finite_differences(self):
        mode = ibhm.SineMode(2, 25.0)
        x = np.linspace(0.5, 24.5, 41)
        h = 1e-5
        d1_num = (mode.value(x + h) - mode.value(x - h)) / (2 * h)
        d2_num = (mode.value(x + h) - 2 * mode.value(x) + mode.value(x - h)) / h**2
        assert np.allclose(mode.slope(x), d1_num, atol=1e-6)
        assert np.allclose(mode.curvature(x), d2_num, atol=1e-4)


class TestModalParams:
    def test_undamaged_fundamental(self):
        bridge = BRIDGES["B1"]
        params = ibhm.modal_params(bridge, ibhm.DamageSpec.undamaged(),
                                   ibhm.SineMode(1, bridge.L), 1, speed=3.0)
        assert params.omega_tilde == pytest.approx(2 * math.pi * 2.0, rel=1e-3)
        assert params.m_tilde == pytest.approx(bridge.rhoA * bridge.L / 2, rel=1e-6)
        assert params.k_tilde == pytest.approx(params.omega_tilde**2 * params.m_tilde, rel=1e-9)
        assert params.omega_d == pytest.approx(math.pi * 3.0 / 25.0)

    def test_zero_reduction_equals_undamaged(self):
        bridge = BRIDGES["B1"]
        shape = ibhm.SineMode(1, bridge.L)
        base = ibhm.modal_params(bridge, ibhm.DamageSpec.undamaged(), shape, 1)
        zero = ibhm.modal_params(bridge, ibhm.DamageSpec(x_s=12.5, l_s=0.6, R_s=0.0),
                                 shape, 1)
        assert zero.k_tilde == pytest.approx(base.k_tilde, rel=1e-10)

    def test_damage_reduces_stiffness(self):
        bridge = BRIDGES["B1"]
        shape = ibhm.SineMode(1, bridge.L)
        base = ibhm.modal_params(bridge, ibhm.DamageSpec.undamaged(), shape, 1)
        hit = ibhm.modal_params(bridge, ibhm.DamageSpec(12.5, 0.6, 0.5), shape, 1)
        assert hit.k_tilde < base.k_tilde
        # integrand reduced by R_s on an l_s window where sin^2 ~ 1
        drop = 1 - hit.k_tilde / base.k_tilde
        est = 0.5 * 2 * (0.6 / 25.0)
        assert drop == pytest.approx(est, rel=0.05)


class TestC51:
    def test_bridge1_golden(self):
        # frozen from a 40-digit evaluation of the gain formula
        assert ibhm.c51_factor(BRIDGES["B1"], VEHICLE) == pytest.approx(
            1.232016280123522e-05, rel=1e-12)

    def test_linear_in_mass(self):
        heavy = ibhm.VehicleSpec.from_frequency(200.0, 6.5, 3.0)
        ratio = ibhm.c51_factor(BRIDGES["B1"], heavy) / ibhm.c51_factor(BRIDGES["B1"], VEHICLE)
        assert ratio == pytest.approx(2.0, rel=1e-12)

    def test_same_length_bridges_distinct(self):
        vals = [ibhm.c51_factor(BRIDGES[b], VEHICLE) for b in ("B1", "B2", "B3")]
        assert len({round(v, 18) for v in vals}) == 3
        for a, b in [(0, 1), (0, 2), (1, 2)]:
            assert abs(vals[a] - vals[b]) > 1e-9 * vals[a]

    def test_resonance_guard(self):
        # vehicle frequency driven onto the second driving harmonic
        slow = ibhm.VehicleSpec.from_frequency(100.0, 3.0 / 25.0, 3.0)
        with pytest.raises(ResonanceError):
            ibhm.c51_factor(BRIDGES["B1"], slow)


class TestIdealFeature:
    def test_sine_reduces_to_cosine(self):
        bridge = BRIDGES["B1"]
        mode = ibhm.SineMode(1, bridge.L)
        t = np.linspace(0, 25.0 / 3.0, 400)
        got = ibhm.ideal_feature(mode, 3.0, t)
        omega_d = math.pi * 3.0 / bridge.L
        expected = omega_d**2 * np.cos(2 * omega_d * t)
        assert np.allclose(got, expected, atol=1e-12)

    def test_matches_numerical_differentiation(self):
        bridge = BRIDGES["B1"]
        mode = ibhm.SineMode(1, bridge.L)
        v = 3.0
        t = np.linspace(0.5, 7.5, 200)
        h = 1e-5
        phi = lambda tt: mode.value(v * tt)
        d1 = (phi(t + h) - phi(t - h)) / (2 * h)
        d2 = (phi(t + h) - 2 * phi(t) + phi(t - h)) / h**2
        assert np.allclose(ibhm.ideal_feature(mode, v, t), phi(t) * d2 + d1**2, atol=1e-4)

    def test_start_value(self):
        mode = ibhm.SineMode(1, 25.0)
        val = ibhm.ideal_feature(mode, 3.0, np.array([0.0]))[0]
        assert val > 0  # slope term only; displacement term vanishes at the pin

    def test_damaged_fem_mode_deviates_locally(self):
        bridge = BRIDGES["B1"]
        damage = ibhm.DamageSpec(x_s=7.5, l_s=0.6, R_s=0.6)
        mesh = ibhm.build_mesh(bridge, damage)
        modal = ibhm.modal_analysis(ibhm.assemble(mesh, bridge.rhoA), 1)
        mode = ibhm.SplineMode.from_modal(modal)
        t = np.linspace(0.2, 25.0 / 3.0 - 0.2, 800)
        y_damaged = ibhm.ideal_feature(mode, 3.0, t)
        y_sine = ibhm.ideal_feature(ibhm.SineMode(1, bridge.L), 3.0, t)
        peak_pos = 3.0 * t[np.argmax(np.abs(y_damaged - y_sine))]
        assert abs(peak_pos - 7.5) < 0.1 * bridge.L


class TestVehicleAccelerationOracle:
    def test_component_frequencies(self):
        coeffs = ibhm.solution_coeffs(BRIDGES["B1"], VEHICLE, 3)
        freqs = sorted({round(om / (2 * math.pi), 6) for _, om in coeffs.components})
        expected = set()
        for n in (1, 2, 3):
            f_dn = n * 3.0 / (2 * 25.0)
            f_tn = 2.0 * n * n
            expected |= {round(2 * f_dn, 6), round(f_tn - f_dn, 6), round(f_tn + f_dn, 6)}
        expected.add(6.5)
        assert set(freqs) == expected

    def test_c5_sign_positive_below_vehicle_resonance(self):
        coeffs = ibhm.solution_coeffs(BRIDGES["B1"], VEHICLE, 3)
        assert np.all(coeffs.c5 > 0)

    def test_linear_in_vehicle_mass(self):
        t = np.linspace(0, 8.0, 500)
        light = ibhm.analytic_vehicle_acceleration(BRIDGES["B1"], VEHICLE, 3, t)
        heavy_vehicle = ibhm.VehicleSpec.from_frequency(200.0, 6.5, 3.0)
        heavy = ibhm.analytic_vehicle_acceleration(BRIDGES["B1"], heavy_vehicle, 3, t)
        assert np.allclose(heavy, 2.0 * light, rtol=1e-9, atol=1e-18)

    def test_fem_cross_validation(self, b1_record):
        ya = ibhm.analytic_vehicle_acceleration(BRIDGES["B1"], VEHICLE, 3, b1_record.t)
        n = len(b1_record.t)
        sl = slice(int(0.1 * n), int(0.9 * n))
        assert rel_rms(b1_record.a[sl], ya[sl]) <= 0.05

    def test_band_content_over_gain_matches_scaled_ideal(self):
        # single-mode band content divided by the gain reproduces the ideal
        # feature scaled by 2*w_d1^2 (the gain's built-in normalisation)
        bridge, vehicle = BRIDGES["B1"], VEHICLE
        t = np.linspace(0, 25.0 / 3.0, 300)
        coeffs = ibhm.solution_coeffs(bridge, vehicle, 1)
        f_d1 = 3.0 / (2 * bridge.L)
        in_band = [(amp, om) for amp, om in coeffs.components
                   if f_d1 <= om / (2 * math.pi) <= 1.0]
        band = sum(amp * np.cos(om * t) for amp, om in in_band)
        normalized = band / ibhm.c51_factor(bridge, vehicle)
        target = ibhm.normalized_ideal_feature(ibhm.SineMode(1, bridge.L), 3.0, bridge.L, t)
        assert rel_rms(normalized, target) <= 0.10

    def test_multi_mode_band_feature_has_harmonics(self):
        amps = ibhm.analytic.band_component_amplitudes(BRIDGES["B1"], VEHICLE, 0.06, 1.0)
        freqs = sorted(f for _, f in amps)
        assert freqs[0] == pytest.approx(0.12, abs=1e-9)
        assert freqs[1] == pytest.approx(0.24, abs=1e-9)
        ratio = abs(amps[1][0]) / abs(amps[0][0])
        assert ratio == pytest.approx(0.25, rel=0.05)


class TestMovingLoadSeries:
    def test_static_limit(self):
        # crawl speed: peak deflection approaches P L^3 / (48 EI)
        bridge = BRIDGES["B1"]
        P = 1e4
        t = np.linspace(0, bridge.L / 0.05, 4000)
        u = ibhm.moving_load_deflection(bridge, P, 0.05, bridge.L / 2, t, n_modes=10)
        expected = P * bridge.L**3 / (48 * bridge.EI0)
        assert u.max() == pytest.approx(expected, rel=0.02)
