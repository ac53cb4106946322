"""Exact expectation values in the quasi-free equilibrium states.

The two condensed states (mean-field and superfluid) are quasi-free:
every polynomial expectation reduces to one-point amplitudes at the zero
mode plus two-point pairings, and exponentials of linear fields have a
closed Gaussian characteristic function. This module evaluates both
routes at finite volume and is the independent oracle against which the
closed-form fluctuation formulas are checked.

Modes are addressed by integer lattice triples ``n``; the physical
momentum is ``k = (2 pi / L) n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Tuple

import numpy as np

from .model import (
    ModelParams,
    MomentumGrid,
    bogoliubov_coefficients,
    bogoliubov_spectrum,
    bose_occupation,
    dispersion,
)

__all__ = [
    "QuasiFreeState",
    "OperatorWord",
    "two_point",
    "wick_expectation",
    "characteristic_function",
    "finite_volume_variance",
]

MAX_WORD_LENGTH = 12

Mode = Tuple[int, int, int]
ZERO: Mode = (0, 0, 0)


@dataclass(frozen=True)
class OperatorWord:
    """Ordered product of creation/annihilation tokens.

    ``tokens`` is a sequence of ``(mode, dagger)`` pairs, mode being an
    integer lattice triple. The empty word is the identity.
    """

    tokens: Tuple[Tuple[Mode, bool], ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "tokens",
            tuple((tuple(int(x) for x in m), bool(d)) for m, d in self.tokens),
        )

    def __len__(self) -> int:
        return len(self.tokens)

    def reversed_dagger(self) -> "OperatorWord":
        """Adjoint word: reverse order and flip every dagger flag."""
        return OperatorWord(tuple((m, not d) for m, d in reversed(self.tokens)))


class QuasiFreeState:
    """Finite-volume quasi-free state of one of the three gas models.

    Parameters
    ----------
    model : {"imperfect", "wibg", "free"}
        Which equilibrium state to represent. ``imperfect`` carries a
        coherent zero mode of amplitude ``sqrt(rho0 V)`` and a diagonal
        thermal kernel in the particle basis; ``wibg`` carries amplitude
        ``c sqrt(V)`` and a diagonal kernel in the rotated
        quasi-particle (``b``) basis; ``free`` has no condensate.
    params : ModelParams
    grid : MomentumGrid
    mu_shift : float
        Optional negative chemical-potential shift for the normal-phase
        free gas.
    """

    def __init__(self, model: str, params: ModelParams, grid: MomentumGrid,
                 mu_shift: float = 0.0):
        if model not in ("imperfect", "wibg", "free"):
            raise ValueError(f"unknown model tag {model!r}")
        if model == "imperfect" and params.condensate_density < 0.0:
            raise ValueError("imperfect state needs condensate_density >= 0")
        if model == "wibg" and params.condensate_amplitude == 0.0:
            raise ValueError("wibg state needs a nonzero condensate amplitude")
        if mu_shift > 0.0:
            raise ValueError("mu_shift must be <= 0")
        self.model = model
        self.params = params
        self.grid = grid
        self.mu_shift = mu_shift
        self._coeff_cache: dict = {}

    # -- basic data ----------------------------------------------------

    @property
    def volume(self) -> float:
        return self.grid.volume

    @property
    def one_point_amplitude(self) -> float:
        """Coherent amplitude of the zero mode, ``sqrt(rho0 V)`` or ``c sqrt(V)``."""
        if self.model == "imperfect":
            return math.sqrt(self.params.condensate_density * self.volume)
        if self.model == "wibg":
            return self.params.condensate_amplitude * math.sqrt(self.volume)
        return 0.0

    def k_phys(self, mode: Sequence[int]) -> np.ndarray:
        return np.asarray(mode, dtype=float) * self.grid.spacing

    def mode_energy(self, mode: Sequence[int]) -> float:
        """Energy entering the kernel: ``eps_k`` or the collective ``E_k``."""
        eps = dispersion(self.k_phys(mode), self.params)
        if self.model == "wibg":
            knorm = float(np.linalg.norm(self.k_phys(mode)))
            return bogoliubov_spectrum(eps, self.params.c2v(knorm))
        return eps

    def kernel(self, mode: Sequence[int]) -> float:
        """Symmetric two-point weight ``(1/2) coth(beta e_k / 2)`` at ``k != 0``."""
        m = tuple(int(x) for x in mode)
        if m == ZERO and self.model != "free":
            raise ValueError("kernel is defined only away from the zero mode")
        e = self.mode_energy(m)
        if self.params.is_ground_state:
            return 0.5
        return 0.5 / math.tanh(self.params.beta * (e - self.mu_shift) / 2.0)

    def occupation(self, mode: Sequence[int]) -> float:
        """Diagonal-basis occupation ``kernel - 1/2`` at ``k != 0``."""
        return self.kernel(mode) - 0.5

    def rotation(self, mode: Mode):
        """(cosh a, sinh a) of the quasi-particle rotation at a mode."""
        if self.model != "wibg":
            return 1.0, 0.0
        key = tuple(sorted(abs(x) for x in mode))
        hit = self._coeff_cache.get(key)
        if hit is None:
            k = self.k_phys(mode)
            knorm = float(np.linalg.norm(k))
            co = bogoliubov_coefficients(dispersion(k, self.params),
                                         self.params.c2v(knorm))
            hit = (co.cosh_a, co.sinh_a)
            self._coeff_cache[key] = hit
        return hit

    # -- elementary-token expansion -------------------------------------

    def _branches(self, mode: Mode, dagger: bool):
        """Expand one particle token into diagonal-basis tokens.

        Returns a list of ``(coef, key, dagger)``; ``key is None`` marks
        a scalar (one-point) contribution.
        """
        if mode == ZERO:
            if self.model == "free":
                return [(1.0, ("a", ZERO), dagger)]  # plain thermal mode
            z = self.one_point_amplitude
            out = [(1.0, ("d", ZERO), dagger)]
            if z != 0.0:
                out.append((z, None, dagger))
            return out
        if self.model == "wibg":
            ch, sh = self.rotation(mode)
            minus = tuple(-x for x in mode)
            # a_k = ch b_k + sh b*_{-k};  a*_k = ch b*_k + sh b_{-k}
            if dagger:
                return [(ch, ("b", mode), True), (sh, ("b", minus), False)]
            return [(ch, ("b", mode), False), (sh, ("b", minus), True)]
        return [(1.0, ("a", mode), dagger)]

    def _occ(self, key) -> float:
        kind, mode = key
        if kind == "d":
            return 0.0  # displaced zero mode fluctuates at vacuum level
        return self.occupation(mode)


def two_point(state: QuasiFreeState, mode: Sequence[int], normal_ordered: bool = True) -> float:
    """Diagonal particle-basis two-point function at a nonzero mode.

    ``normal_ordered`` selects ``<a*_k a_k>``; otherwise ``<a_k a*_k>``
    (which exceeds it by exactly 1).
    """
    m = tuple(int(x) for x in mode)
    if m == ZERO:
        raise ValueError("zero mode is handled by the one-point amplitude")
    if state.model == "wibg":
        ch, sh = state.rotation(m)
        n_b = state.occupation(m)
        value = ch**2 * n_b + sh**2 * (n_b + 1.0)
    else:
        value = state.occupation(m)
    return value if normal_ordered else value + 1.0


def _pair_sum(state: QuasiFreeState, elems) -> float:
    """Sum over ordered pairings of diagonal-basis tokens."""
    if not elems:
        return 1.0
    if len(elems) % 2:
        return 0.0
    key0, dag0 = elems[0]
    total = 0.0
    for j in range(1, len(elems)):
        keyj, dagj = elems[j]
        if keyj != key0 or dagj == dag0:
            continue
        n = state._occ(key0)
        c = n if dag0 else n + 1.0
        if c == 0.0:
            continue
        total += c * _pair_sum(state, elems[1:j] + elems[j + 1:])
    return total


def wick_expectation(state: QuasiFreeState, word: OperatorWord) -> complex:
    """Exact expectation of an operator word via the pairing expansion.

    Every token is expanded into diagonal-basis tokens plus (at the zero
    mode) a scalar one-point amplitude; the remaining tokens are summed
    over all ordered two-point pairings. Words longer than
    ``MAX_WORD_LENGTH`` are refused (factorial growth).
    """
    if len(word) > MAX_WORD_LENGTH:
        raise ValueError(f"word length {len(word)} exceeds cap {MAX_WORD_LENGTH}")
    branches = [state._branches(m, d) for m, d in word.tokens]

    def expand(i: int, coef: float, elems):
        if i == len(branches):
            return coef * _pair_sum(state, elems)
        total = 0.0
        for c, key, dag in branches[i]:
            if key is None:
                total += expand(i + 1, coef * c, elems)
            else:
                total += expand(i + 1, coef * c, elems + ((key, dag),))
        return total

    return complex(expand(0, 1.0, ()))


def characteristic_function(state: QuasiFreeState, f: Mapping[Sequence[int], complex]) -> complex:
    """Gaussian characteristic function of the linear field smeared by ``f``.

    ``f`` maps grid modes (lattice triples) to complex values. Nonzero
    modes contribute the kernel quadratic form ``sum kernel(k) |f(k)|^2``;
    the zero mode contributes the condensate phase ``2 i amp |f(0)|``
    (``amp = sqrt(rho0)`` resp. ``c``) plus a finite-volume Gaussian
    width ``|f(0)|^2 / V`` that disappears in the thermodynamic limit.
    For the superfluid model ``f`` smears the quasi-particle basis.
    """
    quad = 0.0
    f0 = 0.0 + 0.0j
    for mode, value in f.items():
        m = tuple(int(x) for x in mode)
        if m == ZERO:
            f0 = complex(value)
        else:
            quad += state.kernel(m) * abs(value) ** 2
    amp = state.one_point_amplitude / math.sqrt(state.volume)
    phase = 2.0 * amp * abs(f0)
    quad += abs(f0) ** 2 / state.volume
    return complex(np.exp(-0.5 * quad + 1j * phase))


# -- finite-volume fluctuation variances (oracle route) -----------------


def _pm_word(sign_pattern, q: Mode):
    """Tokens ``a^#_{+-q}`` used by the quadrature-type operators."""
    minus_q = tuple(-x for x in q)
    return [(q if s > 0 else minus_q, d) for s, d in sign_pattern]


def _op_expectation(state: QuasiFreeState, terms) -> complex:
    """Expectation of ``sum coef * word`` given as ``[(coef, tokens), ...]``."""
    total = 0.0 + 0.0j
    for coef, tokens in terms:
        total += coef * wick_expectation(state, OperatorWord(tuple(tokens)))
    return total


def _product_terms(op1, op2):
    return [(c1 * c2, tuple(t1) + tuple(t2)) for c1, t1 in op1 for c2, t2 in op2]


def density_fluct_terms(state: QuasiFreeState, q: Mode):
    """Self-adjoint (cos-convention) density fluctuation at wavevector q.

    Returns ``[(coef, tokens), ...]`` for
    ``(1 / 2 sqrt(rho0 V)) sum_k (a*_{k+q} a_k + a*_{k-q} a_k)``
    restricted to the grid.
    """
    rho0 = state.params.condensate_density
    if state.model == "wibg":
        rho0 = state.params.condensate_amplitude**2
    if rho0 <= 0.0:
        raise ValueError("density fluctuation normalization needs a condensate")
    norm = 1.0 / (2.0 * math.sqrt(rho0 * state.volume))
    qa = np.asarray(q, dtype=int)
    terms = []
    for n in state.grid.lattice_points:
        for shift in (qa, -qa):
            target = tuple(int(x) for x in (n + shift))
            if state.grid.contains(target):
                terms.append((norm, ((target, True), (tuple(int(x) for x in n), False))))
    return terms


def order_param_fluct_terms(q: Mode):
    """Self-adjoint order-parameter fluctuation ``(i/2)(a*_q + a*_{-q} - a_q - a_{-q})``."""
    return [
        (0.5j, _pm_word([(+1, True)], q)),
        (0.5j, _pm_word([(-1, True)], q)),
        (-0.5j, _pm_word([(+1, False)], q)),
        (-0.5j, _pm_word([(-1, False)], q)),
    ]


def condensate_density_fluct_terms(state: QuasiFreeState, q: Mode):
    """Zero-mode density fluctuation ``(1/(2 c sqrt(V)))[(a*_q + a*_{-q}) a_0 + h.c.]``."""
    c = state.params.condensate_amplitude
    if c == 0.0:
        raise ValueError("condensate density fluctuation needs c != 0")
    norm = 1.0 / (2.0 * c * math.sqrt(state.volume))
    zero = ZERO
    minus_q = tuple(-x for x in q)
    return [
        (norm, ((q, True), (zero, False))),
        (norm, ((minus_q, True), (zero, False))),
        (norm, ((zero, True), (q, False))),
        (norm, ((zero, True), (minus_q, False))),
    ]


def finite_volume_variance(state: QuasiFreeState, kind: str, q: Sequence[int]) -> float:
    """Finite-L variance of a fluctuation operator, by the Wick route.

    Parameters
    ----------
    kind : {"rho", "A", "rho0"}
        Density, order-parameter or condensate-density fluctuation
        (bare normalization, no extra power of ``|q|``).
    q : lattice triple, nonzero.

    The density case is evaluated as the vectorized pairing sum
    ``(1 / 2 rho0 V) sum_k n_{k+q} (n_k + 1)`` with the coherent zero
    mode carrying ``<a*_0 a_0> = rho0 V``; the other kinds go through
    ``wick_expectation`` directly.
    """
    qt = tuple(int(x) for x in q)
    if qt == ZERO:
        raise ValueError("q must be nonzero")
    if kind == "rho":
        if state.model != "imperfect" and state.model != "free":
            raise ValueError("kind 'rho' applies to the mean-field/free gas")
        return _density_variance_lattice(state, qt)
    if kind == "A":
        op = order_param_fluct_terms(qt)
    elif kind == "rho0":
        op = condensate_density_fluct_terms(state, qt)
    else:
        raise ValueError(f"unknown variance kind {kind!r}")
    value = _op_expectation(state, _product_terms(op, op))
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise AssertionError("variance came out non-real")
    return value.real


def _density_variance_lattice(state: QuasiFreeState, q: Mode) -> float:
    params = state.params
    grid = state.grid
    rho0 = params.condensate_density
    modes = grid.modes
    lat = grid.lattice_points
    qvec = np.asarray(q, dtype=float) * grid.spacing

    nonzero = np.any(lat != 0, axis=1)
    occ = np.zeros(len(modes))
    eps = np.sum(modes[nonzero] ** 2, axis=1) / (2.0 * params.mass)
    occ[nonzero] = bose_occupation(eps, params.beta, state.mu_shift)
    occ[~nonzero] = rho0 * grid.volume

    shifted = modes + qvec
    shifted_zero = np.all(np.abs(shifted) < 0.5 * grid.spacing, axis=1)
    eps_shift = np.sum(shifted**2, axis=1) / (2.0 * params.mass)
    occ_shift = np.zeros(len(modes))
    occ_shift[~shifted_zero] = bose_occupation(eps_shift[~shifted_zero], params.beta,
                                               state.mu_shift)
    occ_shift[shifted_zero] = rho0 * grid.volume

    plus_one = occ + 1.0
    return float(np.sum(occ_shift * plus_one) / (2.0 * rho0 * grid.volume))
