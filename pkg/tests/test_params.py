import math

import pytest
from hypothesis import given, settings, strategies as st

from juliadim.numerics import DomainError, DyadicReal
from juliadim.params import (
    SQRT8,
    alpha_beta_window,
    build_params,
    check_permissible,
    compute_k0,
    omega_eval,
    omega_from_rho,
    verify_inequalities,
)


# hand recurrence oracle on (e_j, eps_j): e' = eps + M(e-1), eps' = eps - M e
def exponent_oracle(jmax):
    e, eps = {1: 4}, {1: 0}
    for j in range(1, jmax):
        M = 2**j
        e[j + 1] = eps[j] + M * (e[j] - 1)
        eps[j + 1] = eps[j] - M * e[j]
    return e, eps


def test_small_table_values():
    t = build_params(5, 8)
    # M_k, c_k, r_k for k <= 4: (M, c-exponent, r-exponent)
    assert [t.M(j) for j in range(5)] == [1, 2, 4, 8, 16]
    assert t.r_exp(1) == 4 and t.c_exp(1) == 0          # r_1 = 16, c_1 = 1
    assert t.r_exp(2) == 6 and t.c_exp(2) == -8          # r_2 = 64
    assert t.r_exp(3) == 12 and t.c_exp(3) == -32        # r_3 = 2^12
    assert t.r_exp(4) == 56 and t.c_exp(4) == -128       # r_4 = 2^56
    # next rungs, frozen from the hand recurrence
    assert t.r_exp(5) == 752 and t.c_exp(5) == -1024
    assert t.r_exp(6) == 23008


def test_matches_exponent_oracle_deep():
    t = build_params(5, 40)
    e, eps = exponent_oracle(t.jmax)
    for j in range(1, t.jmax + 1):
        assert t.r_exp(j) == e[j]
        assert t.c_exp(j) == eps[j]


def test_r_values_are_exact_powers_of_two():
    t = build_params(5, 59)  # r_j for j <= 64
    for j in range(1, 65):
        assert t.r(j).is_pow2
        assert t.c(j).is_pow2


def test_shifted_indices():
    t = build_params(5, 8)
    assert t.n(1) == 2**5 and t.n(2) == 2**6
    assert t.R_exp(1) == t.r_exp(5)
    assert t.C_exp(2) == t.c_exp(6)
    assert t.C_exp(2) == -25088  # c_6


def test_build_rejects_small_N():
    with pytest.raises(DomainError):
        build_params(4, 4)


@pytest.mark.parametrize("N", [5, 10, 14])
def test_inequality_suite_passes(N):
    t = build_params(N, 64)
    rep = verify_inequalities(t)
    assert len(rep) > 400
    assert rep.all_pass, [c for c in rep.failures()][:5]


def test_specific_certificates():
    t = build_params(5, 16)
    rep = verify_inequalities(t)
    by = {(c.name, c.index): c for c in rep.certificates}
    # c_4 r_4^16 = 2^768 >= r_4^9 = 2^504
    c = by[("coef_power_lower", 4)]
    assert c.passed and c.lhs == "768" and c.rhs == "504"
    # sqrt(r_3) >= r_2 holds with equality: 12 = 2*6
    c = by[("sqrt_growth", 2)]
    assert c.passed and c.lhs == "12" and c.rhs == "12"
    # r_6 >= 2^(2^5): 23008 >= 32
    c = by[("tower_growth", 5)]
    assert c.passed and c.lhs == "23008" and c.rhs == "32"


def test_recursion_identity_is_exact():
    t = build_params(7, 32)
    for j in range(1, t.jmax):
        assert t.e[j + 1] + t.M(j) == t.eps[j] + t.M(j) * t.e[j]


def test_quotient_bracket_for_large_N():
    t = build_params(10, 8)
    rep = verify_inequalities(t)
    names = {c.name for c in rep.certificates}
    assert "critical_radius_lower" in names and "critical_radius_upper" in names
    assert rep.all_pass


def test_permissibility_fails_only_at_first_ring():
    t = build_params(5, 16)
    rep = check_permissible(t)
    bad = [c for c in rep.failures()]
    assert len(bad) == 1 and bad[0].name == "ring_gap" and bad[0].index == 1


def test_alpha_beta_monotone_toward_one():
    t = build_params(5, 64)
    for k in range(1, 64):
        assert t.alpha[k] > t.alpha[k + 1] > 1.0
        assert t.beta[k] < t.beta[k + 1] < 1.0
    rep = alpha_beta_window(t)
    assert len(rep) == 1  # reported threshold, pass/fail depends on Cprime


# omega ------------------------------------------------------------------------

def test_omega_boundary_and_first_scale():
    # omega(1/e) = 1 for every p; omega(e^-e) = 2^(-1/p)
    r1 = DyadicReal.from_float(math.exp(-1.0))
    assert abs(omega_eval(1.0, r1) - 1.0) < 1e-6
    re = DyadicReal.from_float(math.exp(-math.e))
    for p in (1.0, 2.0, SQRT8):
        assert abs(omega_eval(p, re) - 0.5 ** (1.0 / p)) < 1e-12


def test_omega_quarter():
    r = DyadicReal.from_float(math.exp(-math.exp(4)))
    assert abs(omega_eval(1.0, r) - 0.25) < 1e-12


def test_omega_huge_scale():
    # r = 2^-(2^16), p = 2 sqrt 2
    r = DyadicReal.from_pow2(-(2**16))
    want = 0.5 ** (math.sqrt(math.log(2**16 * math.log(2.0))) / SQRT8)
    assert abs(omega_eval(SQRT8, r) - want) < 1e-14
    assert abs(omega_from_rho(SQRT8, 2**16) - want) < 1e-14


def test_omega_domain_error():
    with pytest.raises(DomainError):
        omega_eval(1.0, DyadicReal.from_float(0.5))


@settings(max_examples=40)
@given(st.integers(min_value=4, max_value=10**5), st.floats(min_value=0.5, max_value=4.0))
def test_omega_monotone_decreasing_in_scale(e, p):
    a = omega_from_rho(p, e)
    b = omega_from_rho(p, 2 * e)
    assert 0.0 < b < a <= 1.0


# k0 ---------------------------------------------------------------------------

def test_k0_defining_property():
    t = build_params(5, 32)
    k0 = t.k0
    assert k0 is not None
    for k in (k0, k0 + 1):
        ek = t.r_exp(k)
        assert math.log(ek * math.log(2.0) - math.log(20.0)) >= k / 2.0
    # minimality: k0 - 1 fails somewhere at or above it
    if k0 > 1:
        assert compute_k0(t) == k0


def test_k0_log_from_exponent_field():
    t = build_params(5, 16)
    e10 = t.r_exp(10)
    direct = math.log(e10 * math.log(2.0) + math.log(1.0 / 20.0))
    assert math.isfinite(direct) and direct >= 5.0


def test_build_params_budget_error_names_index():
    from juliadim.numerics import ExponentBudgetError

    with pytest.raises(ExponentBudgetError) as ei:
        build_params(5, 3400)
    assert "j=" in str(ei.value)
