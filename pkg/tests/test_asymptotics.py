"""Unit tests for the bubble integrals, power-law fits and extrapolation."""

import math

import numpy as np
import pytest
from scipy import integrate

from bosefluct.asymptotics import (
    PhaseTag,
    bose_bubble_integral,
    delta_exponent,
    dynamical_rate_fit,
    fit_power_law,
    lifetime_exponent,
    richardson,
    richardson_powers,
    wibg_pair_bubble,
)
from bosefluct.model import ModelParams, gaussian_potential


def thermal_params(beta=1.0, mass=1.0, rho0=1.0):
    return ModelParams(mass=mass, beta=beta, total_density=max(rho0, 1.0),
                       condensate_density=rho0)


def wibg_params():
    return ModelParams(mass=1.0, beta=math.inf, total_density=1.0,
                       condensate_density=1.0, condensate_amplitude=1.0,
                       potential=gaussian_potential(1.0, 2.0))


def brute_force_bubble(q_norm, params, mu_shift=0.0, rho=None):
    """Independent 2-D quadrature oracle: no analytic angular step."""
    beta, m = params.beta, params.mass
    rho = params.condensate_density if rho is None else rho

    def occ(eps):
        return 1.0 / math.expm1(beta * (eps - mu_shift))

    def inner(u, r):
        p_sq = r * r + q_norm * q_norm + 2.0 * r * q_norm * u
        return occ(p_sq / (2.0 * m)) * (occ(r * r / (2.0 * m)) + 1.0)

    def radial(r):
        if r == 0.0:
            return 0.0
        val, _ = integrate.quad(inner, -1.0, 1.0, args=(r,), epsrel=1e-10,
                                epsabs=1e-14, limit=200)
        return r * r * val

    k_max = q_norm + math.sqrt(60.0 * m / beta) + 1.0
    value, _ = integrate.quad(radial, 0.0, k_max, points=[q_norm],
                              epsrel=1e-10, epsabs=0.0, limit=400)
    return value / (2.0 * rho) / (4.0 * math.pi**2)


class TestBoseBubble:
    def test_ground_state_zero(self):
        res = bose_bubble_integral(1.0, thermal_params(beta=math.inf))
        assert res.value == 0.0

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_against_nested_quadrature(self):
        rng = np.random.default_rng(61)
        for _ in range(4):
            q = rng.uniform(0.2, 2.0)
            beta = rng.uniform(0.5, 2.0)
            params = thermal_params(beta=beta, mass=rng.uniform(0.5, 1.5))
            fast = bose_bubble_integral(q, params, rtol=1e-10)
            slow = brute_force_bubble(q, params)
            assert fast.value == pytest.approx(slow, rel=1e-6)

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_normal_phase_oracle(self):
        params = thermal_params()
        fast = bose_bubble_integral(0.7, params, mu_shift=-0.4,
                                    norm_density=1.0, rtol=1e-10)
        slow = brute_force_bubble(0.7, params, mu_shift=-0.4, rho=1.0)
        assert fast.value == pytest.approx(slow, rel=1e-6)

    def test_even_in_q(self):
        params = thermal_params()
        plus = bose_bubble_integral((0.0, 0.0, 0.8), params).value
        minus = bose_bubble_integral((0.0, 0.0, -0.8), params).value
        assert plus == pytest.approx(minus, rel=1e-9)

    def test_monotone_decreasing_in_q(self):
        params = thermal_params()
        values = [bose_bubble_integral(q, params).value for q in (0.2, 0.5, 1.0, 2.0)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_condensed_small_q_scaling(self):
        # value * q tends to a constant: the 1/|q| divergence of the bubble
        params = thermal_params()
        products = [q * bose_bubble_integral(q, params).value
                    for q in (0.02, 0.01, 0.005)]
        spread = (max(products) - min(products)) / products[-1]
        assert spread < 0.02

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            bose_bubble_integral(0.0, thermal_params())
        with pytest.raises(ValueError):
            bose_bubble_integral(1.0, thermal_params(), mu_shift=0.5)
        with pytest.raises(ValueError):
            bose_bubble_integral(1.0, thermal_params(rho0=0.0))

    def test_error_estimate_reported(self):
        res = bose_bubble_integral(1.0, thermal_params())
        assert 0.0 < res.error < 1e-5 * abs(res.value)
        assert res.tail_bound < 1e-8


class TestWibgPairBubble:
    def test_positive_and_finite(self):
        res = wibg_pair_bubble(0.3, wibg_params())
        assert 0.0 < res.value < 1.0

    def test_small_q_plateau(self):
        params = wibg_params()
        values = [wibg_pair_bubble(q, params).value for q in (1e-3, 1e-4)]
        assert values[0] == pytest.approx(values[1], rel=1e-3)

    def test_thermal_unsupported(self):
        with pytest.raises(ValueError):
            wibg_pair_bubble(0.3, thermal_params(beta=1.0))


class TestFitPowerLaw:
    def test_planted_exponents(self):
        qs = np.geomspace(0.01, 0.1, 8)
        for exponent in (-2.0, -1.0, 0.5, 1.0, 2.0):
            fit = fit_power_law([(q, 3.7 * q**exponent) for q in qs])
            assert abs(fit.exponent - exponent) < 1e-3
            assert fit.amplitude == pytest.approx(3.7, rel=1e-6)
            assert fit.r_squared > 1.0 - 1e-9

    def test_window_reported(self):
        fit = fit_power_law([(q, q) for q in (0.1, 0.2, 0.4, 0.8)])
        assert fit.window == (0.1, 0.8)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            fit_power_law([(0.1, 1.0), (0.2, 2.0), (0.3, 3.0)])

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            fit_power_law([(0.1, 1.0), (0.2, -2.0), (0.3, 3.0), (0.4, 4.0)])


class TestDeltaExponent:
    def test_condensed(self):
        fit = delta_exponent(PhaseTag("condensed"), thermal_params())
        assert fit.exponent == pytest.approx(1.0 / 3.0, abs=0.01)

    def test_critical(self):
        params = ModelParams(mass=1.0, beta=1.0, total_density=1.0)
        fit = delta_exponent(PhaseTag("critical"), params)
        assert fit.exponent == pytest.approx(1.0 / 6.0, abs=0.01)

    def test_normal(self):
        params = ModelParams(mass=1.0, beta=1.0, total_density=1.0)
        fit = delta_exponent(PhaseTag("normal", mu_shift=-0.5), params)
        assert abs(fit.exponent) < 0.01

    def test_phase_tag_validation(self):
        with pytest.raises(ValueError):
            PhaseTag("superfluid")
        with pytest.raises(ValueError):
            PhaseTag("normal", mu_shift=0.0)
        with pytest.raises(ValueError):
            PhaseTag("condensed", mu_shift=-0.1)

    def test_ground_state_rejected(self):
        with pytest.raises(ValueError):
            delta_exponent(PhaseTag("condensed"), thermal_params(beta=math.inf))


class TestDynamicalRates:
    def test_lifetime_exponents(self):
        assert lifetime_exponent("imperfect") == 2
        assert lifetime_exponent("wibg") == 1
        with pytest.raises(ValueError):
            lifetime_exponent("ideal")

    def test_rate_fit_matches_lifetime(self):
        qs = np.geomspace(1e-4, 1e-3, 6)
        imper = dynamical_rate_fit("imperfect", thermal_params(beta=math.inf), qs)
        wibg = dynamical_rate_fit("wibg", wibg_params(), qs)
        assert imper.exponent == pytest.approx(2.0, abs=1e-6)
        assert wibg.exponent == pytest.approx(1.0, abs=1e-3)

    def test_coth_vs_bubble_exponent_gap(self):
        # the bubble diverges one power of |q| slower than the thermal coth
        params = thermal_params()
        qs = np.geomspace(0.01, 0.05, 6)
        coth = fit_power_law(
            [(q, 0.5 / math.tanh(q * q / 4.0)) for q in qs])
        bubble = fit_power_law(
            [(q, bose_bubble_integral(q, params).value) for q in qs])
        assert bubble.exponent - coth.exponent == pytest.approx(1.0, abs=0.1)


class TestRichardson:
    def test_polynomial_exact(self):
        xs = np.array([0.5, 0.25, 0.125, 0.0625])
        ys = 2.0 - 3.0 * xs + 7.0 * xs**2 + xs**3
        assert richardson(xs, ys) == pytest.approx(2.0, abs=1e-10)

    def test_powers_basis_exact(self):
        xs = np.array([0.25, 0.2, 0.125])
        ys = 1.5 + 0.3 * xs + 0.9 * xs**3
        assert richardson_powers(xs, ys, (1.0, 3.0)) == pytest.approx(1.5, abs=1e-12)
        # the plain quadratic basis does not reproduce an odd-power tail
        assert abs(richardson(xs, ys) - 1.5) > 1e-5

    def test_powers_sample_count(self):
        with pytest.raises(ValueError):
            richardson_powers([0.1, 0.2], [1.0, 2.0], (1.0, 2.0))

    def test_richardson_validation(self):
        with pytest.raises(ValueError):
            richardson([0.1], [1.0])
