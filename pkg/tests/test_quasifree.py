"""Unit tests for the quasi-free Wick / characteristic-function oracle."""

import math

import numpy as np
import pytest

from bosefluct.model import (
    ModelParams,
    MomentumGrid,
    bogoliubov_coefficients,
    gaussian_potential,
)
from bosefluct.quasifree import (
    MAX_WORD_LENGTH,
    OperatorWord,
    QuasiFreeState,
    characteristic_function,
    finite_volume_variance,
    two_point,
    wick_expectation,
)

LOG2 = math.log(2.0)


def imperfect_state(beta=math.inf, box=2.0 * math.pi, cutoff=1.5, mass=1.0,
                    rho0=1.0):
    params = ModelParams(mass=mass, beta=beta, total_density=1.0,
                         condensate_density=rho0, coupling=1.0)
    return QuasiFreeState("imperfect", params, MomentumGrid(box, cutoff))


def unit_occupation_state():
    """Mean-field state whose mode (0,0,1) has eps = ln 2, so n = 1 at beta = 1."""
    return imperfect_state(beta=1.0, mass=1.0 / (2.0 * LOG2))


def wibg_state(beta=math.inf, box=2.0 * math.pi, cutoff=1.5):
    params = ModelParams(mass=1.0, beta=beta, total_density=1.0,
                         condensate_density=1.0, condensate_amplitude=1.0,
                         potential=gaussian_potential(1.0, 2.0))
    return QuasiFreeState("wibg", params, MomentumGrid(box, cutoff))


Q = (0, 0, 1)
MQ = (0, 0, -1)
ZERO = (0, 0, 0)


class TestTwoPoint:
    def test_ground_state_vanishes(self):
        assert two_point(imperfect_state(), Q) == 0.0
        assert two_point(imperfect_state(), Q, normal_ordered=False) == 1.0

    def test_unit_occupation(self):
        assert two_point(unit_occupation_state(), Q) == pytest.approx(1.0)

    def test_wibg_ground_is_sinh_sq(self):
        state = wibg_state()
        kq = state.k_phys(Q)
        co = bogoliubov_coefficients(float(kq @ kq) / 2.0,
                                     state.params.c2v(float(np.linalg.norm(kq))))
        assert two_point(state, Q) == pytest.approx(co.sinh_a**2)

    def test_zero_mode_rejected(self):
        with pytest.raises(ValueError):
            two_point(imperfect_state(), ZERO)


class TestWickExpectation:
    def test_ground_number_vanishes(self):
        word = OperatorWord(((Q, True), (Q, False)))
        assert wick_expectation(imperfect_state(), word) == 0.0

    def test_fourth_moment_unit_occupation(self):
        # <(a* a)^2> = n + 3 n^2 + ... = 3 exactly at n = 1 (geometric weights)
        word = OperatorWord(((Q, True), (Q, False), (Q, True), (Q, False)))
        assert wick_expectation(unit_occupation_state(), word) == pytest.approx(3.0)

    def test_condensate_number(self):
        state = imperfect_state(rho0=0.75)
        word = OperatorWord(((ZERO, True), (ZERO, False)))
        expected = 0.75 * state.volume
        assert wick_expectation(state, word) == pytest.approx(expected)

    def test_gauge_unbalanced_vanishes(self):
        state = unit_occupation_state()
        for tokens in (((Q, True),), ((Q, True), (Q, True), (Q, False))):
            assert wick_expectation(state, OperatorWord(tokens)) == 0.0

    def test_wibg_anomalous_pair(self):
        state = wibg_state()
        word = OperatorWord(((Q, False), (MQ, False)))
        ch, sh = state.rotation(Q)
        assert wick_expectation(state, word) == pytest.approx(ch * sh)

    def test_adjoint_symmetry(self):
        state = unit_occupation_state()
        rng = np.random.default_rng(17)
        modes = [Q, MQ, ZERO, (0, 1, 0)]
        for _ in range(20):
            n = rng.integers(2, 7)
            tokens = tuple((modes[rng.integers(len(modes))], bool(rng.integers(2)))
                           for _ in range(n))
            word = OperatorWord(tokens)
            lhs = wick_expectation(state, word.reversed_dagger())
            rhs = np.conj(wick_expectation(state, word))
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_word_cap(self):
        word = OperatorWord(tuple((Q, bool(i % 2)) for i in range(MAX_WORD_LENGTH + 1)))
        with pytest.raises(ValueError):
            wick_expectation(imperfect_state(), word)


class TestCharacteristicFunction:
    def test_identity_at_zero_smearing(self):
        assert characteristic_function(imperfect_state(), {}) == pytest.approx(1.0)

    def test_ground_state_width(self):
        # f supported off the zero mode with ||f||^2 = 2 gives exp(-1/2)
        f = {Q: 1.0, MQ: 1.0}
        value = characteristic_function(imperfect_state(), f)
        assert value == pytest.approx(math.exp(-0.5))

    def test_condensate_phase(self):
        state = imperfect_state(rho0=1.0)
        value = characteristic_function(state, {ZERO: 1.0})
        expected = np.exp(-0.5 / state.volume + 2.0j)
        assert value == pytest.approx(expected)

    def _linear_field_terms(self, f):
        """Terms of the field Phi(f) whose char function the Gaussian gives."""
        terms = []
        for mode, val in f.items():
            if tuple(mode) == ZERO:
                continue
            terms.append((val / math.sqrt(2.0), ((mode, True),)))
            terms.append((np.conj(val) / math.sqrt(2.0), ((mode, False),)))
        f0 = complex(f.get(ZERO, 0.0))
        if f0 != 0.0:
            terms.append((abs(f0), ((ZERO, True),)))
            terms.append((abs(f0), ((ZERO, False),)))
        return terms

    def _wick_route(self, state, f, volume_scale=True):
        from bosefluct.quasifree import _op_expectation, _product_terms

        terms = self._linear_field_terms(f)
        if volume_scale:
            terms = [(c / (math.sqrt(state.volume) if tuple(t[0][0]) == ZERO else 1.0), t)
                     for c, t in terms]
        mean = _op_expectation(state, terms)
        second = _op_expectation(state, _product_terms(terms, terms))
        var = second - mean**2
        return np.exp(1j * mean - 0.5 * var)

    @pytest.mark.parametrize("beta", [math.inf, 2.0])
    def test_two_path_consistency_imperfect(self, beta):
        state = imperfect_state(beta=beta)
        rng = np.random.default_rng(31)
        modes = [tuple(m) for m in state.grid.lattice_points
                 if np.linalg.norm(m) <= 1.0][:6]
        for _ in range(5):
            f = {m: complex(*rng.normal(size=2)) for m in modes}
            f[ZERO] = abs(f.get(ZERO, 1.0))  # aligned phase at the condensate
            direct = characteristic_function(state, f)
            oracle = self._wick_route(state, f)
            assert direct == pytest.approx(oracle, abs=1e-10)

    def test_two_path_consistency_wibg_quasiparticle(self):
        # Smear the rotated basis: b*_k = ch a*_k - sh a_{-k}
        from bosefluct.quasifree import _op_expectation, _product_terms

        state = wibg_state(beta=2.0)
        rng = np.random.default_rng(32)
        for _ in range(5):
            f = {Q: complex(*rng.normal(size=2)), (0, 1, 0): complex(*rng.normal(size=2))}
            terms = []
            for mode, val in f.items():
                ch, sh = state.rotation(mode)
                minus = tuple(-x for x in mode)
                terms.append((val * ch / math.sqrt(2.0), ((mode, True),)))
                terms.append((-val * sh / math.sqrt(2.0), ((minus, False),)))
                terms.append((np.conj(val) * ch / math.sqrt(2.0), ((mode, False),)))
                terms.append((-np.conj(val) * sh / math.sqrt(2.0), ((minus, True),)))
            mean = _op_expectation(state, terms)
            var = _op_expectation(state, _product_terms(terms, terms)) - mean**2
            oracle = np.exp(1j * mean - 0.5 * var)
            direct = characteristic_function(state, f)
            assert direct == pytest.approx(oracle, abs=1e-10)


class TestFiniteVolumeVariance:
    def test_density_ground_state_half(self):
        assert finite_volume_variance(imperfect_state(), "rho", Q) == pytest.approx(0.5)

    def test_order_param_ground_state_half(self):
        assert finite_volume_variance(imperfect_state(), "A", Q) == pytest.approx(0.5)

    def test_wibg_bare_pair(self):
        from bosefluct.fluctuations import variance_A_wibg, variance_rho0_wibg

        state = wibg_state()
        q_phys = np.linalg.norm(state.k_phys(Q))
        # A carries no zero-mode tokens: the finite-volume value is exact.
        assert finite_volume_variance(state, "A", Q) == pytest.approx(
            variance_A_wibg(q_phys, state.params))
        # rho0 picks up O(1/(c^2 V)) condensate-depletion corrections.
        errors = []
        for scale in (1.0, 2.0):
            big = QuasiFreeState("wibg", state.params,
                                 MomentumGrid(scale * 2.0 * math.pi, 1.5 / scale))
            value = finite_volume_variance(big, "rho0", (0, 0, int(scale)))
            exact = variance_rho0_wibg(np.linalg.norm(big.k_phys((0, 0, int(scale)))),
                                       state.params)
            errors.append(abs(value - exact))
            assert value == pytest.approx(exact, rel=3.0 / big.volume)
        assert errors[1] < errors[0]

    def test_rejects_zero_q(self):
        with pytest.raises(ValueError):
            finite_volume_variance(imperfect_state(), "rho", ZERO)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            finite_volume_variance(imperfect_state(), "phi", Q)
