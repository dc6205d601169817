import math
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from juliadim.geometry import (
    Region,
    classify,
    level_lines,
    petal_membership,
    petal_spec,
    zeros_in_annulus,
)
from juliadim.modelmap import ModelMap
from juliadim.numerics import LogPolar
from juliadim.params import build_params

M5 = ModelMap(table=build_params(5, 12))
T5 = M5.table


def test_region_parse_roundtrip():
    for s in ("A(3)", "B(0)", "V(2)", "P(1,17)", "D", "boundary", "A(-2)", "L(4)"):
        assert str(Region.parse(s)) == s


def test_classify_basic_zones():
    assert str(classify(T5, LogPolar(Fraction(T5.R_exp(2)), 0))) == "A(2)"
    assert str(classify(T5, LogPolar(Fraction(T5.R_exp(2) + 3), 0))) == "B(2)"
    assert str(classify(T5, LogPolar(Fraction(T5.R_exp(3) - 1), 0))) == "V(3)"
    assert str(classify(T5, LogPolar(Fraction(10), 0))) == "D"
    assert str(classify(T5, LogPolar.zero_point())) == "D"


def test_classify_boundary_margin():
    z = LogPolar(Fraction(T5.R_exp(2) + 2), 0)  # exactly 4 R_2
    assert str(classify(T5, z)) == "B(2)"
    assert str(classify(T5, z, margin=0.01)) == "boundary"


@settings(max_examples=300)
@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=0, max_value=63))
def test_partition_above_central_disk(num, den_pow):
    # every point outside D lands in exactly one A_k or B_k
    lo = T5.R_exp(1) - 2
    hi = T5.R_exp(10)
    rho = lo + Fraction(num, 1 << den_pow) % (hi - lo)
    r = classify(T5, LogPolar(rho, Fraction(num % 97, 97)))
    assert r.kind in ("A", "B", "V", "D")
    if r.kind == "V":
        # V is inside A by definition of the zones
        assert Fraction(T5.R_exp(r.k) - 2) < rho < Fraction(T5.R_exp(r.k) + 2)


def test_zero_ring_layout():
    for k in (1, 2):
        nk = T5.n(k)
        zz = zeros_in_annulus(T5, k)
        assert len(zz) == nk == 2 ** (5 + k - 1)
        assert all(z.rho == zz[0].rho for z in zz)
        # all moduli in A((3/5) R_k, (5/4) R_k)
        assert T5.R_exp(k) - Fraction(74, 100) < zz[0].rho < T5.R_exp(k) + Fraction(33, 100)
        # consecutive angles differ by exactly 1/n_k of a turn
        diffs = {zz[i + 1].theta.sub(zz[i].theta).turns for i in range(nk - 1)}
        assert diffs == {Fraction(1, nk)}


def test_petal_spec_radii():
    ps = petal_spec(M5, 1, 1)
    assert ps.radius.exp == T5.R_exp(1) - T5.n(1)
    # ball inside the conformal ball once n_k 2^-n_k < lam pi
    assert T5.n(1) * 2.0 ** -T5.n(1) < M5.lam * math.pi
    assert ps.radius.cmp(ps.conformal_radius) < 0


def test_petals_disjoint_and_off_V():
    # angular gap between centers is 1/n_k turn; ball angular radius is
    # about 2^-n_k / (2 pi) turns, far smaller
    nk = T5.n(1)
    assert Fraction(1, nk) > Fraction(4, 2 ** nk)
    # petal moduli sit above the V zone
    zz = zeros_in_annulus(T5, 1)
    v_hi = T5.R_exp(1) - Fraction(74, 100)
    assert all(z.rho > v_hi for z in zz)


def test_petal_membership_center_and_boundary():
    k = 1
    z0 = M5.ring_zero(k + T5.N - 1, 5)
    assert petal_membership(M5, k, z0) == 5
    # ball relative radius is 2^rad_rel ~ 2^-32.1: nudge rho by smaller and
    # larger tiny offsets
    inside = LogPolar(z0.rho + Fraction(1, 1 << 34), z0.theta)
    outside = LogPolar(z0.rho + Fraction(1, 1 << 30), z0.theta)
    assert petal_membership(M5, k, inside) == 5
    assert petal_membership(M5, k, outside) is None


def test_classify_petal_via_model():
    z0 = M5.ring_zero(T5.N, 3)
    assert str(classify(T5, z0, model=M5)) == "P(1,3)"


def test_level_line_counts_and_expansion():
    rep = level_lines(M5, 1)
    assert rep.count == 2 ** 5
    assert rep.newton_failures == 0
    assert rep.expansion_check >= 1.0 - 1e-9
    rep2 = level_lines(M5, 2)
    assert rep2.count == 2 ** 10
    assert rep2.expansion_check >= 1.0 - 1e-9
