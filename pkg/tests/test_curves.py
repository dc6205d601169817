import math
from fractions import Fraction

from juliadim.curves import (
    Identity,
    SyntheticOmega,
    angle_check,
    dilatation_integral,
    tangent_products,
    trace_gamma,
    width_check,
)
from juliadim.modelmap import ModelMap
from juliadim.numerics import Angle, DyadicReal, LogPolar
from juliadim.params import SQRT8, build_params, omega_from_rho

M5 = ModelMap(table=build_params(5, 16))
T5 = M5.table
IDENT = Identity()
SYN = SyntheticOmega(Cprime=1.0, p=SQRT8, phase_seed=7)


# traces -------------------------------------------------------------------------

def test_identity_depth1_radii_closed_form():
    tr = trace_gamma(M5, IDENT, 1, 1, grid=256)
    n2 = T5.n(2)
    # (1/2)(1/4)^(1/n) R and (1/2)(3/4)^(1/n) R
    assert tr.inner_radii[0] == T5.R_exp(2) - 1 - Fraction(2, n2)
    want_out = T5.R_exp(2) - 1 + math.log2(0.75) / n2
    assert abs(float(tr.outer_radii[0]) - want_out) < 1e-12
    i_osc, o_osc = tr.oscillation_log2()
    assert i_osc == 0.0 and o_osc == 0.0


def test_identity_traces_are_circles_all_depths():
    for depth in range(1, 6):
        tr = trace_gamma(M5, IDENT, 1, depth, grid=256)
        i_osc, o_osc = tr.oscillation_log2()
        assert max(i_osc, o_osc) <= 2.0 ** (-M5.prec + 8)


def test_trace_nesting():
    prev = trace_gamma(M5, IDENT, 1, 1, grid=256)
    for depth in (2, 3, 4):
        cur = trace_gamma(M5, IDENT, 1, depth, grid=256)
        for a_in, a_out, b_in, b_out in zip(prev.inner_radii, prev.outer_radii,
                                            cur.inner_radii, cur.outer_radii):
            assert a_in < b_in < b_out < a_out
        prev = cur


def test_trace_radii_in_curve_zone():
    tr = trace_gamma(M5, IDENT, 1, 3, grid=256)
    lo = T5.R_exp(2) + Fraction(-132, 100)
    hi = T5.R_exp(2) + Fraction(-73, 100)
    assert all(lo < r < hi for r in tr.inner_radii + tr.outer_radii)


def test_width_bounds_depths():
    for depth in range(1, 6):
        tr = trace_gamma(M5, IDENT, 1, depth, grid=256)
        wc = width_check(M5, tr)
        assert wc.ok
    # depth-1 width also under R_{k+1}/n_{k+1}
    tr = trace_gamma(M5, IDENT, 1, 1, grid=256)
    wc = width_check(M5, tr)
    assert float(wc.measured_log2) <= T5.R_exp(2) - (5 + 2 - 1) + 1e-9
    # the bound shrinks by at least n_{k+m}/8 per extra level
    b1 = width_check(M5, trace_gamma(M5, IDENT, 1, 2, grid=256)).bound_log2
    b2 = width_check(M5, trace_gamma(M5, IDENT, 1, 3, grid=256)).bound_log2
    assert b1 - b2 >= (5 + 4 - 1) - 3


def test_synthetic_trace_oscillation_within_budget():
    tr = trace_gamma(M5, SYN, 1, 3, grid=256)
    i_osc, o_osc = tr.oscillation_log2()
    # accumulated per-step field bound, in log2 units
    budget = 0.0
    for j in range(1, 5):
        w = omega_from_rho(SQRT8, T5.R_exp(1 + j) - 1)
        budget += 2.0 * math.log2(1.0 + min(w, SyntheticOmega.CAP))
    assert 0.0 < max(i_osc, o_osc) <= budget


# field invariants ----------------------------------------------------------------

def test_synthetic_field_envelope_invariant():
    for k in (1, 3, 6, 10):
        for i in range(16):
            z = LogPolar(Fraction(T5.R_exp(k) - 1), Fraction(i, 16))
            e = SYN.eps(z)
            assert abs(e) <= SYN.envelope(z) + 1e-15


def test_synthetic_derivative_envelope():
    # |phi' - 1| stays below C' omega (10 C' omega is the Cauchy-estimate
    # allowance downstream bounds tolerate)
    for k in (1, 4, 8):
        for i in range(16):
            z = LogPolar(Fraction(T5.R_exp(k) - 1), Fraction(i, 16))
            dev = abs(SYN.phi_prime(z) - 1.0)
            assert dev <= SYN.envelope(z)
            assert dev <= 10.0 * SYN.envelope(z)


# tangent products ----------------------------------------------------------------

def test_identity_tangent_partials_are_one():
    rep = tangent_products(M5, IDENT, Angle(0), 8)
    assert all(abs(p - 1.0) < 1e-15 for p in rep.partials)
    assert rep.cauchy_diff_ok()


def test_synthetic_tangent_cauchy_and_limit():
    rep = tangent_products(M5, SYN, Angle(Fraction(1, 3)), 12)
    assert rep.cauchy_diff_ok()
    # per-pair actual log-factors sit below the 2 C' 2^(-sqrt(j+N+2)/4) budget
    assert all(a <= b for a, b in zip(rep.pair_log_actual, rep.pair_log_budget))
    assert rep.limit_modulus() >= rep.limit_lower_bound(T5.N)
    assert rep.limit_modulus() > 0.0


def test_angle_checks():
    worst, budget = angle_check(M5, IDENT, 1, 0, 2, samples=16)
    assert worst == 0.0
    worst, budget = angle_check(M5, SYN, 1, 0, 1, samples=16)
    assert worst <= budget
    assert budget <= math.atan(48.0 * SYN.Cprime * 2.0 ** (-math.sqrt(T5.N + 2) / 4.0)) + 1e-12
    # budgets accumulate telescopically over deeper windows
    w2, b2 = angle_check(M5, SYN, 1, 0, 3, samples=8)
    _, b01 = angle_check(M5, SYN, 1, 0, 1, samples=8)
    _, b13 = angle_check(M5, SYN, 1, 1, 3, samples=8)
    assert abs(b2 - (b01 + b13)) < 1e-12
    assert w2 <= b2


# dilatation integral --------------------------------------------------------------

def test_dilatation_integral_sweep():
    ratios = []
    for s in range(4, 15):
        di = dilatation_integral(T5, DyadicReal.from_pow2(-(2 ** s)))
        assert di.I_estimate > 0 and di.omega1 > 0
        ratios.append(di.ratio)
    K = max(ratios)
    assert K <= 16.0
    assert min(ratios) > 1.0  # bounded away from zero as well
    # decay: the estimate halves as the start ring advances
    d4 = dilatation_integral(T5, DyadicReal.from_pow2(-(2 ** 4)))
    d14 = dilatation_integral(T5, DyadicReal.from_pow2(-(2 ** 14)))
    assert d14.I_estimate < d4.I_estimate
    assert d14.j_start > d4.j_start


def test_dilatation_integral_summand_shape():
    # summand ~ pi (e^(2 pi / M_j) - 1) ~ 2 pi^2 / M_j once r_j is huge
    di = dilatation_integral(T5, DyadicReal.from_pow2(-(2 ** 14)))
    first = math.pi * (math.exp(2 * math.pi / (1 << di.j_start)) - 1.0)
    assert di.I_estimate >= first
    assert di.I_estimate <= 2.2 * first + di.tail_bound + 1e-9


def test_backward_point_sits_inside_traced_annulus():
    # cross-module check: a point realizing the all-V itinerary lies between
    # the traced inner/outer radii of the matching curve annulus
    from juliadim.dynamics import backward_construct

    depth = 4
    itin = [f"V({k})" for k in range(1, depth + 2)]
    anchor = LogPolar(Fraction(T5.R_exp(depth + 2) - 1), Fraction(1, 5))
    z = backward_construct(M5, itin, anchor)
    tr = trace_gamma(M5, IDENT, 0, depth + 1, grid=256)
    assert tr.inner_radii[0] < z.rho < tr.outer_radii[0]
    # and within the width bound of either boundary
    wc = width_check(M5, tr)
    assert float(tr.outer_radii[0] - z.rho) < 1.0  # same log2 window
