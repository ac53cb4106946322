"""Named verification checks: the registry behind the CLI runner.

Each check bundles one verifiable statement about the two condensed
gases — a closed-form identity, a convergence rate, or a matrix-level
oracle comparison — into a callable returning a tabular
:class:`CheckResult`. The registry is what ``bosefluct list-checks``
enumerates and ``bosefluct run`` dispatches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from . import asymptotics, fluctuations, fock, quasifree
from .model import (
    ModelParams,
    MomentumGrid,
    bogoliubov_spectrum,
    gaussian_potential,
    omega_gap,
)

__all__ = ["CheckContext", "CheckResult", "CheckDef", "REGISTRY", "run_check"]


@dataclass(frozen=True)
class CheckContext:
    """Physical scenario shared by all checks; overridable from configs."""

    mass: float = 1.0
    beta_thermal: float = 1.0
    coupling: float = 1.0
    total_density: float = 1.0
    condensate_density: float = 1.0
    condensate_amplitude: float = 1.0
    v0: float = 1.0
    kappa: float = 2.0
    clt_density: float = 4.0
    normal_mu_shift: float = -0.5

    @property
    def imperfect_ground(self) -> ModelParams:
        return ModelParams(mass=self.mass, beta=math.inf,
                           total_density=self.total_density,
                           condensate_density=self.condensate_density,
                           coupling=self.coupling)

    @property
    def imperfect_thermal(self) -> ModelParams:
        return ModelParams(mass=self.mass, beta=self.beta_thermal,
                           total_density=self.total_density,
                           condensate_density=self.condensate_density,
                           coupling=self.coupling)

    @property
    def wibg(self) -> ModelParams:
        return ModelParams(mass=self.mass, beta=math.inf,
                           total_density=self.total_density,
                           condensate_density=self.condensate_amplitude**2,
                           condensate_amplitude=self.condensate_amplitude,
                           potential=gaussian_potential(self.v0, self.kappa))

    @property
    def wibg_thermal(self) -> ModelParams:
        return replace(self.wibg, beta=self.beta_thermal)


@dataclass
class CheckResult:
    """Outcome of one check: pass flag plus the table it emits."""

    name: str
    passed: bool
    columns: Tuple[str, ...]
    rows: List[Tuple]
    details: Dict[str, float] = field(default_factory=dict)


Runner = Callable[[CheckContext, float], CheckResult]


@dataclass(frozen=True)
class CheckDef:
    name: str
    module: str
    anchor: str
    default_tolerance: float
    runner: Runner


# ---------------------------------------------------------------------------


def _check_spectrum(ctx: CheckContext, tol: float) -> CheckResult:
    """Collective gap from dense diagonalization vs the closed form."""
    rng = np.random.default_rng(7)
    rows, worst = [], 0.0
    ws = fock.FockWorkspace(2.0 * math.pi, [(0, 0, 1), (0, 0, -1)], 20)
    n_ops = (ws.number((0, 0, 1)) + ws.number((0, 0, -1))).toarray()
    pair = (ws.creator((0, 0, 1)) @ ws.creator((0, 0, -1))).toarray()
    pair = pair + pair.conj().T
    for _ in range(50):
        eps = rng.uniform(0.3, 3.0)
        g = rng.uniform(0.0, 1.5)
        h = (eps + g) * n_ops + g * pair
        vals = np.linalg.eigvalsh(h)
        gap = float(vals[1] - vals[0])
        closed = bogoliubov_spectrum(eps, g)
        rel = abs(gap - closed) / closed
        worst = max(worst, rel)
        rows.append((eps, g, closed, gap, rel))
    params = ctx.wibg
    grid = MomentumGrid(120.0, 0.3)
    q_min = float(grid.q_norms()[0])
    eps_q = q_min**2 / (2.0 * params.mass)
    ratio = bogoliubov_spectrum(eps_q, params.c2v(q_min)) * q_min / eps_q
    gap_rel = abs(ratio - omega_gap(params)) / omega_gap(params)
    passed = worst < tol and gap_rel < 1e-3
    return CheckResult("spectrum", passed,
                       ("eps", "c2v", "E_closed", "E_dense_gap", "rel_err"),
                       rows, {"worst_rel": worst, "omega_rel": gap_rel})


def _richardson_tail(xs, ys):
    return asymptotics.richardson(list(xs), list(ys))


def _check_variance_oracle(ctx: CheckContext, tol: float) -> CheckResult:
    """Closed-form variances vs the finite-volume Wick oracle."""
    rows = []
    worst = 0.0
    q_phys = math.pi

    # ground-state mean-field gas: both variances exactly 1/2
    grid4 = MomentumGrid(4.0, 6.0)
    st = quasifree.QuasiFreeState("imperfect", ctx.imperfect_ground, grid4)
    exact_rho = quasifree.finite_volume_variance(st, "rho", (0, 0, 2))
    exact_a = quasifree.finite_volume_variance(st, "A", (0, 0, 2))
    for label, val in (("rho_ground", exact_rho), ("A_ground", exact_a)):
        err = abs(val - 0.5)
        worst = max(worst, err)
        rows.append((label, 0.5, val, err))

    boxes = (4.0, 6.0, 8.0)
    lat_q = {4.0: (0, 0, 2), 6.0: (0, 0, 3), 8.0: (0, 0, 4)}

    thermal = ctx.imperfect_thermal
    vals = []
    for box in boxes:
        grid = MomentumGrid(box, 6.5)
        st = quasifree.QuasiFreeState("imperfect", thermal, grid)
        vals.append(quasifree.finite_volume_variance(st, "rho", lat_q[box]))
    # lattice sums over an integrand with excluded 1/k^2 points carry an
    # odd-power error expansion in the spacing
    extrapolated = asymptotics.richardson_powers([1.0 / b for b in boxes],
                                                 vals, (1.0, 3.0))
    closed = fluctuations.variance_rho_imperfect(q_phys, thermal)
    rel = abs(extrapolated - closed) / abs(closed)
    worst = max(worst, rel)
    rows.append(("rho_thermal", closed, extrapolated, rel))

    st = quasifree.QuasiFreeState("imperfect", thermal, MomentumGrid(4.0, 6.5))
    val = quasifree.finite_volume_variance(st, "A", (0, 0, 2))
    closed = fluctuations.variance_A_imperfect(q_phys, thermal)
    rel = abs(val - closed) / abs(closed)
    worst = max(worst, rel)
    rows.append(("A_thermal", closed, val, rel))

    wibg = ctx.wibg_thermal
    for kind, closed_fn in (("rho0", fluctuations.variance_rho0_wibg),
                            ("A", fluctuations.variance_A_wibg)):
        vals = []
        for box in boxes:
            grid = MomentumGrid(box, 4.0)
            st = quasifree.QuasiFreeState("wibg", wibg, grid)
            vals.append(quasifree.finite_volume_variance(st, kind, lat_q[box]))
        extrapolated = _richardson_tail([b**-3 for b in boxes], vals)
        closed = closed_fn(q_phys, wibg)
        rel = abs(extrapolated - closed) / abs(closed)
        worst = max(worst, rel)
        rows.append((f"{kind}_wibg", closed, extrapolated, rel))

    return CheckResult("variance-oracle", worst < tol,
                       ("case", "closed_form", "oracle", "error"),
                       rows, {"worst": worst})


def _check_divergence(ctx: CheckContext, tol: float) -> CheckResult:
    """Small-q divergence powers of the two variance contributions."""
    params = ctx.imperfect_thermal
    qs = np.geomspace(0.005, 0.05, 10)
    coth_fit = asymptotics.fit_power_law(
        [(q, 0.5 / math.tanh(params.beta * q * q / (4.0 * params.mass)))
         for q in qs])
    bubble_fit = asymptotics.fit_power_law(
        [(q, asymptotics.bose_bubble_integral(q, params).value) for q in qs])
    err_coth = abs(coth_fit.exponent + 2.0)
    err_bubble = abs(bubble_fit.exponent + 1.0)
    passed = err_coth < tol and err_bubble < 0.05
    rows = [("coth", coth_fit.exponent, -2.0, err_coth),
            ("bubble", bubble_fit.exponent, -1.0, err_bubble)]
    return CheckResult("divergence-exponents", passed,
                       ("term", "fitted", "target", "error"), rows,
                       {"coth": coth_fit.exponent, "bubble": bubble_fit.exponent})


def _check_delta(ctx: CheckContext, tol: float) -> CheckResult:
    """Volume-scaling exponent delta across the three phases."""
    rows, passed = [], True
    thermal = ctx.imperfect_thermal
    cases = [
        (asymptotics.PhaseTag("condensed"), thermal),
        (asymptotics.PhaseTag("critical"), replace(thermal, condensate_density=0.0)),
        (asymptotics.PhaseTag("normal", mu_shift=ctx.normal_mu_shift),
         replace(thermal, condensate_density=0.0)),
    ]
    for phase, params in cases:
        fit = asymptotics.delta_exponent(phase, params)
        err = abs(fit.exponent - phase.reference_delta)
        passed = passed and err < tol
        rows.append((phase.kind, fit.exponent, phase.reference_delta, err))
    return CheckResult("delta-exponents", passed,
                       ("phase", "fitted_delta", "target", "error"), rows)


def _bch_operators(params: ModelParams, box: float, n_pair: int = 10):
    q, mq = (0, 0, 1), (0, 0, -1)
    amp = math.sqrt(params.condensate_density * box**3)
    ws = fock.FockWorkspace(box, [(0, 0, 0), q, mq],
                            {(0, 0, 0): fock.coherent_cutoff(amp),
                             q: n_pair, mq: n_pair})
    state = fock.FiniteState.coherent_vacuum(ws, amp)
    rho = fock.density_fluct_matrix(ws, params, q)
    a_op = fock.order_param_fluct_matrix(ws, q)
    return ws, state, rho, a_op


def _check_bch(ctx: CheckContext, tol: float) -> CheckResult:
    """BCH defect decreases with volume and respects the seminorm bound."""
    params = ctx.imperfect_ground
    rows, defects = [], []
    for box in (2.0, 3.0, 4.0):
        _, state, rho, a_op = _bch_operators(params, box)
        defect = fock.bch_defect(rho, a_op, state)
        bound = fock.appendix_bound(rho, a_op, state)
        rows.append((box**3, defect, bound))
        defects.append((defect, bound))
    monotone = all(defects[i][0] > defects[i + 1][0] for i in range(len(defects) - 1))
    bounded = all(d <= b * (1.0 + 1e-9) + tol for d, b in defects)
    return CheckResult("bch", monotone and bounded,
                       ("volume", "defect", "bound"), rows,
                       {"monotone": float(monotone), "bounded": float(bounded)})


def _clt_operator(ws, params, f, g):
    q, mq, zero = (0, 0, 1), (0, 0, -1), (0, 0, 0)
    smear = {(q, zero): f, (mq, zero): f,
             (zero, q): np.conj(f), (zero, mq): np.conj(f)}
    rho_f = fock.density_fluct_matrix(ws, params, q, smear=smear)
    a_g = fock.order_param_fluct_matrix(ws, q, g_q0=g)
    return (rho_f + a_g).tocsr()


def _check_clt(ctx: CheckContext, tol: float) -> CheckResult:
    """Gaussian character of the smeared fluctuation at the largest volume."""
    rho0 = ctx.clt_density
    params = replace(ctx.imperfect_ground, total_density=rho0,
                     condensate_density=rho0)
    box = 5.0
    amp = math.sqrt(rho0 * box**3)
    q, mq = (0, 0, 1), (0, 0, -1)
    ws = fock.FockWorkspace(box, [(0, 0, 0), q, mq],
                            {(0, 0, 0): fock.coherent_cutoff(amp), q: 10, mq: 10})
    state = fock.FiniteState.coherent_vacuum(ws, amp)
    rng = np.random.default_rng(11)
    rows, worst_rel, worst_imag = [], 0.0, 0.0
    for draw in range(10):
        while True:
            f = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
            g = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
            if abs(f + 1j * g) > 0.5:
                break
        s_closed = 0.5 * abs(f + 1j * g) ** 2
        t_max = 1.5 / math.sqrt(s_closed)
        t_grid = np.linspace(0.0, t_max, 7)[1:]
        f_op = _clt_operator(ws, params, f, g)
        values = fock.clt_char_function(f_op, t_grid, state)
        worst_imag = max(worst_imag, float(np.max(np.abs(np.angle(values)))))
        y = -2.0 * np.log(np.abs(values))
        coeffs = np.polyfit(t_grid**2, y, 2)
        s_fit = float(coeffs[1])
        rel = abs(s_fit - s_closed) / s_closed
        worst_rel = max(worst_rel, rel)
        rows.append((draw, f.real, f.imag, g.real, g.imag, s_closed, s_fit, rel))
    passed = worst_rel < tol and worst_imag < 1e-6
    return CheckResult("clt", passed,
                       ("draw", "f_re", "f_im", "g_re", "g_im",
                        "s_closed", "s_fit", "rel_err"),
                       rows, {"worst_rel": worst_rel, "worst_imag": worst_imag})


def _closure_result(name: str, report: fock.ClosureReport, tol: float) -> CheckResult:
    rate_ok = abs(report.remainder_rate.exponent + 0.5) < 0.1
    virial_ok = abs(report.virial_ratio - 1.0) < 1e-3
    passed = report.identity_defect < tol and rate_ok and virial_ok \
        and report.secondary_defect < 1e-8
    rows = [(v, n) for v, n in zip(report.volumes, report.remainder_norms)]
    return CheckResult(name, passed, ("volume", "remainder_seminorm"), rows, {
        "identity_defect": report.identity_defect,
        "secondary_defect": report.secondary_defect,
        "remainder_rate": report.remainder_rate.exponent,
        "virial_ratio": report.virial_ratio,
        "oscillator_energy": report.oscillator_energy,
    })


def _check_goldstone_imperfect(ctx: CheckContext, tol: float) -> CheckResult:
    report = fock.goldstone_closure_check("imperfect", ctx.imperfect_ground)
    return _closure_result("goldstone-imperfect", report, tol)


def _check_goldstone_wibg(ctx: CheckContext, tol: float) -> CheckResult:
    report = fock.goldstone_closure_check("wibg", ctx.wibg)
    return _closure_result("goldstone-wibg", report, tol)


def _virial_result(name: str, model: str, params: ModelParams, tol: float) -> CheckResult:
    scale = 1.0 if model == "imperfect" else omega_gap(params)
    ratio = fock._virial_ratio(model, params, scale)
    err = abs(ratio - 1.0)
    return CheckResult(name, err < tol, ("omega", "virial_ratio", "error"),
                       [(scale, ratio, err)], {"virial_ratio": ratio})


def _check_virial_imperfect(ctx: CheckContext, tol: float) -> CheckResult:
    return _virial_result("virial-imperfect", "imperfect", ctx.imperfect_ground, tol)


def _check_virial_wibg(ctx: CheckContext, tol: float) -> CheckResult:
    return _virial_result("virial-wibg", "wibg", ctx.wibg, tol)


def _check_structure_factor(ctx: CheckContext, tol: float) -> CheckResult:
    """Linear condensate-density law vs nonzero full-density constant."""
    params = ctx.wibg
    qs = np.geomspace(1e-4, 1e-3, 8)
    slopes = [fluctuations.structure_factor(q, params) / q for q in qs]
    spread = (max(slopes) - min(slopes)) / float(np.mean(slopes))
    fulls = [fluctuations.structure_factor(q, params, "full") for q in qs]
    full_ratio = max(fulls) / min(fulls)
    passed = spread < tol and full_ratio < 1.05 and min(fulls) > 0.0
    rows = [(q, s, f) for q, s, f in zip(qs, slopes, fulls)]
    return CheckResult("structure-factor", passed,
                       ("q", "S_condensate_over_q", "S_full"), rows,
                       {"slope_spread": spread, "full_ratio": full_ratio})


def _check_u_commutation(ctx: CheckContext, tol: float) -> CheckResult:
    report = fock.u_density_commutator_check(ctx.wibg)
    passed = (report.commutator_defect < tol and report.rewrite_defect < tol
              and report.wibg_commutator_norm > 1e-3)
    rows = [("full_interaction_commutator", report.commutator_defect),
            ("quadratic_rewrite", report.rewrite_defect),
            ("truncated_interaction_commutator", report.wibg_commutator_norm)]
    return CheckResult("u-commutation", passed, ("quantity", "norm"), rows)


def _check_truncation(ctx: CheckContext, tol: float) -> CheckResult:
    step1, step2 = fock.truncation_rederivation_check(ctx.wibg)
    passed = step1 < tol and step2 < tol
    rows = [("zero_mode_reordering_identity", step1),
            ("c_substitution_vs_hamiltonian", step2)]
    return CheckResult("truncation-rederivation", passed, ("step", "defect"), rows)


def _check_equivalence(ctx: CheckContext, tol: float) -> CheckResult:
    """(f, 0) and (0, Jf) are the same limiting field, both models."""
    rng = np.random.default_rng(23)
    rows, worst = [], 0.0
    for model, params in (("imperfect", ctx.imperfect_ground), ("wibg", ctx.wibg)):
        for _ in range(10):
            f = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
            s1 = fluctuations.FluctuationSpec(model, 0.5, f_q0=f)
            s2 = fluctuations.FluctuationSpec(model, 0.5, g_q0=fluctuations.j_map(f))
            d = fluctuations.equivalence_distance(s1, s2, params)
            worst = max(worst, d)
            rows.append((model, f.real, f.imag, d))
    return CheckResult("equivalence", worst < tol,
                       ("model", "f_re", "f_im", "distance"), rows,
                       {"worst": worst})


def _check_bubble_scaling(ctx: CheckContext, tol: float) -> CheckResult:
    """Quadrature self-consistency of the bubble integrals."""
    params = ctx.imperfect_thermal
    rng = np.random.default_rng(3)
    rows, worst = [], 0.0
    for _ in range(5):
        q = float(rng.uniform(0.05, 2.0))
        coarse = asymptotics.bose_bubble_integral(q, params, rtol=1e-6)
        fine = asymptotics.bose_bubble_integral(q, params, rtol=1e-10)
        rel = abs(coarse.value - fine.value) / abs(fine.value)
        worst = max(worst, rel)
        rows.append((q, coarse.value, fine.value, rel, fine.tail_bound))
    tails_ok = all(r[4] < 1e-8 * max(abs(r[2]), 1e-3) for r in rows)
    return CheckResult("bubble-scaling", worst < tol and tails_ok,
                       ("q", "coarse", "fine", "rel_diff", "tail_bound"), rows,
                       {"worst_rel": worst})


def _check_lifetime(ctx: CheckContext, tol: float) -> CheckResult:
    """Dynamical energy-scale exponents: 2 (mean-field) vs 1 (superfluid)."""
    qs = np.geomspace(1e-3, 1e-2, 6)
    rows, passed = [], True
    for model, params in (("imperfect", ctx.imperfect_ground), ("wibg", ctx.wibg)):
        fit = asymptotics.dynamical_rate_fit(model, params, qs)
        target = asymptotics.lifetime_exponent(model)
        err = abs(fit.exponent - target)
        passed = passed and err < tol and round(fit.exponent) == target
        rows.append((model, fit.exponent, target, err))
    return CheckResult("lifetime-exponents", passed,
                       ("model", "fitted", "target", "error"), rows)


# ---------------------------------------------------------------------------

REGISTRY: Dict[str, CheckDef] = {
    c.name: c for c in [
        CheckDef("spectrum", "model", "collective spectrum from the quadratic block",
                 1e-8, _check_spectrum),
        CheckDef("variance-oracle", "quasifree",
                 "closed-form variances vs Wick pairing oracle", 1e-3,
                 _check_variance_oracle),
        CheckDef("divergence-exponents", "asymptotics",
                 "small-q divergence of the variance terms", 0.02,
                 _check_divergence),
        CheckDef("delta-exponents", "asymptotics",
                 "abnormal-fluctuation volume exponent by phase", 0.03,
                 _check_delta),
        CheckDef("bch", "fock_oracle",
                 "Weyl composition defect in the state seminorm", 1e-9,
                 _check_bch),
        CheckDef("clt", "fock_oracle",
                 "Gaussian characteristic function of smeared fluctuations", 0.01,
                 _check_clt),
        CheckDef("goldstone-imperfect", "fock_oracle",
                 "closure of the canonical pair dynamics, mean-field gas", 1e-10,
                 _check_goldstone_imperfect),
        CheckDef("goldstone-wibg", "fock_oracle",
                 "closure of the canonical pair dynamics, superfluid gas", 1e-10,
                 _check_goldstone_wibg),
        CheckDef("virial-imperfect", "fluctuations",
                 "virial identity of the oscillator pair, mean-field gas", 1e-3,
                 _check_virial_imperfect),
        CheckDef("virial-wibg", "fluctuations",
                 "virial identity of the oscillator pair, superfluid gas", 1e-3,
                 _check_virial_wibg),
        CheckDef("structure-factor", "fluctuations",
                 "static structure function: linear law vs nonzero constant", 0.01,
                 _check_structure_factor),
        CheckDef("u-commutation", "fock_oracle",
                 "two-body interaction commutes with density fluctuations", 1e-10,
                 _check_u_commutation),
        CheckDef("truncation-rederivation", "fock_oracle",
                 "condensate substitution reproduces the superfluid interaction",
                 1e-10, _check_truncation),
        CheckDef("equivalence", "fluctuations",
                 "density and order-parameter smearings give one field", 1e-10,
                 _check_equivalence),
        CheckDef("bubble-scaling", "asymptotics",
                 "adaptive quadrature self-consistency and tail bounds", 1e-5,
                 _check_bubble_scaling),
        CheckDef("lifetime-exponents", "asymptotics",
                 "time-rescaling powers of the pair dynamics", 0.05,
                 _check_lifetime),
    ]
}


def run_check(name: str, ctx: CheckContext | None = None,
              tolerance: float | None = None) -> CheckResult:
    """Execute one registered check by name."""
    if name not in REGISTRY:
        raise KeyError(f"unknown check {name!r}")
    spec = REGISTRY[name]
    ctx = ctx or CheckContext()
    tol = spec.default_tolerance if tolerance is None else float(tolerance)
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    return spec.runner(ctx, tol)
