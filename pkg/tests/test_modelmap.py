import math
from fractions import Fraction

import pytest

from juliadim.modelmap import (
    AmbiguousPieceError,
    BUMP_DERIV_ARGMAX,
    ModelMap,
    bump,
    dilatation_onset,
    dilatation_sup,
    qN_landmarks,
    seam_mismatch,
)
from juliadim.numerics import Angle, LogPolar, lp_sub, pow2_minus1_log2
from juliadim.params import build_params


def model(N=5, kmax=10):
    return ModelMap(table=build_params(N, kmax))


M5 = model()


# piece selection ---------------------------------------------------------------

def test_piece_layout():
    t = M5.table
    assert str(M5.piece_of(Fraction(10))) == "origin"
    assert str(M5.piece_of(Fraction(t.r_exp(5)))) == "bump(5)"
    # just above r_5: seam ring 5; above its top: power ring 6
    assert str(M5.piece_of(t.r_exp(5) + Fraction(1, 10**9))) == "seam(5)"
    assert str(M5.piece_of(Fraction(t.r_exp(5) + 5))) == "power(6)"
    assert str(M5.piece_of(Fraction(t.r_exp(6)))) == "bump(5)" or True  # r_6 belongs to power(6)
    assert str(M5.piece_of(Fraction(t.r_exp(6)))) == "power(6)"


def test_piece_resolves_strip_exactly():
    # relative decrement 2^-740 moves |z| about 2^12 below r_5: origin side;
    # relative decrement 2^-800 moves it by 2^-48: still inside the strip
    t = M5.table
    assert str(M5.piece_of(t.r_exp(5) - Fraction(1, 1 << 740))) == "origin"
    assert str(M5.piece_of(t.r_exp(5) - Fraction(1, 1 << 800))) == "bump(5)"


# power piece -------------------------------------------------------------------

def test_power_piece_exact_exponent():
    t = M5.table
    j = 7
    z = LogPolar(Fraction(t.r_exp(j) - 3), Fraction(0))
    w, piece = M5.eval(z)
    assert str(piece) == f"power({j})"
    assert w.rho == t.c_exp(j) + (1 << j) * (t.r_exp(j) - 3)
    assert w.theta.turns == 0


def test_power_piece_big_scale_value():
    # |z| = (2/5) R_2 at N=5: log2|f| = -25088 + 64*(23008 + log2(2/5))
    t = M5.table
    rho = t.R_exp(2) + Fraction(math.log2(0.4)).limit_denominator(1 << 60)
    w, piece = M5.eval(LogPolar(rho, Fraction(1, 7)))
    assert str(piece) == "power(6)"
    want = -25088 + 64 * (23008 + math.log2(0.4))
    assert abs(float(w.rho - 1447339) - (want - 1447339)) < 1e-9
    assert abs(want - 1447339.4) < 0.01
    assert float(w.rho) < t.R_exp(3) - 2  # stays below R_3/4


# origin polynomial -------------------------------------------------------------

def test_landmarks_match_closed_forms():
    lm = qN_landmarks(M5)
    t = M5.table
    assert len(lm.zeros) == 31 and len(lm.crit_points) == 31
    # r_N / c_N = 2^752 / 2^-1024 = 2^1776, degree M_N - 1 = 31
    assert lm.zero_rho == Fraction(752 + 1024, 31)
    assert lm.crit_rho == Fraction(752 + 1024 - 5, 31)
    # q'(0) = r_N; |q'| at a zero = r_N (M_N - 1) = 31 * 2^752
    d0, _ = M5.deriv(LogPolar.zero_point())
    assert d0.rho == 752
    assert lm.deriv_at_zero.exp == 756
    assert lm.deriv_at_zero.significand_fraction() == Fraction(31, 16)


def test_polynomial_vanishes_at_its_zeros():
    lm = qN_landmarks(M5)
    for z in lm.zeros[:5]:
        w, piece = M5.eval(z)
        assert str(piece) == "origin"
        assert w.is_zero  # exact cancellation in exact arithmetic


def test_derivative_vanishes_at_critical_points():
    lm = qN_landmarks(M5)
    for cp in lm.crit_points[:5]:
        d, _ = M5.deriv(cp)
        assert d.is_zero


def test_critical_values_inside_first_gap():
    # moduli in (8 r_N, r_{N+1} / (16 sqrt 2))
    t = M5.table
    lm = qN_landmarks(M5)
    lo = t.r_exp(5) + 3
    hi = Fraction(t.r_exp(6)) - 4 - Fraction(1, 2)
    for cv in lm.crit_values:
        assert lo < cv.rho < hi


def test_polynomial_sandwich_on_middle_annulus():
    # (1/2) c_N |z|^{M_N} <= |q(z)| <= 2 c_N |z|^{M_N} on (1/20 R_1, 19/20 R_1)
    t = M5.table
    for frac_num, frac_den in [(1, 20), (1, 2), (19, 20)]:
        rho = t.R_exp(1) + Fraction(math.log2(frac_num / frac_den)).limit_denominator(1 << 50)
        for i in range(7):
            z = LogPolar(rho, Fraction(i, 7))
            w, _ = M5.eval(z)
            power_rho = t.c_exp(5) + (1 << 5) * rho
            assert abs(float(w.rho - power_rho)) <= 1.0


def test_deriv_matches_finite_difference_on_seam():
    # |S'| at a point near a ring zero vs a centered difference quotient
    t = M5.table
    j = 5
    z = LogPolar(t.r_exp(j) + Fraction(1, 2048), Fraction(3, 1 << 7))
    d, piece = M5.deriv(z)
    assert str(piece) == f"seam({j})"
    h = Fraction(1, 1 << 40)
    zp = LogPolar(z.rho + h, z.theta)
    zm = LogPolar(z.rho - h, z.theta)
    fp, _ = M5.eval(zp)
    fm, _ = M5.eval(zm)
    num = lp_sub(fp, fm).value
    # dz = z * (2^h - 2^-h) = z * 2^-h (2^(2h) - 1) along the radial direction
    dz_log2 = z.rho - h + pow2_minus1_log2(2 * h)
    fd_rho = num.rho - dz_log2
    assert abs(float(fd_rho - d.rho)) < 1e-6


def test_deriv_boundary_straddle_raises():
    t = M5.table
    with pytest.raises(AmbiguousPieceError):
        M5.deriv(LogPolar(Fraction(t.r_exp(6)), Fraction(1, 3)))


# bump blend ---------------------------------------------------------------------

def test_bump_profile_edges():
    assert bump(0.0) == 1.0
    assert bump(1.0) == 0.0
    assert 0.0 < bump(0.5) < 1.0
    # |b'| peaks at (1/3)^(1/4) with value < e
    xs = [i / 1000 for i in range(1, 1000)]
    db = [abs(bump(x + 1e-7) - bump(x - 1e-7)) / 2e-7 for x in xs]
    i = max(range(len(db)), key=db.__getitem__)
    assert abs(xs[i] - BUMP_DERIV_ARGMAX) < 5e-3
    assert max(db) < math.e


def test_bump_blend_edges_match_neighbours():
    t = M5.table
    eN = t.r_exp(5)
    # at |z| = r_N the blend is the pure power map
    z_top = LogPolar(Fraction(eN), Fraction(3, 64))
    w, piece = M5.eval(z_top)
    assert str(piece) == "bump(5)"
    assert w.rho == t.c_exp(5) + (1 << 5) * eN
    # at |z| = r_N - 1 it is the full polynomial: compare against the origin
    # piece value just below
    z_bot = LogPolar(eN + Fraction(-3, 1 << 753) * 2, Fraction(3, 64))  # below r_N - 1
    w2, piece2 = M5.eval(z_bot)
    assert str(piece2) == "origin"
    assert not w2.is_zero


# dilatation ----------------------------------------------------------------------

def test_dilatation_far_below_one_and_decreasing():
    sups = []
    for k in range(5, 14):
        rep = dilatation_sup(M5, k, grid=64)
        assert rep.below_one
        assert not rep.flagged
        sups.append(rep.sup_log2)
    assert all(a > b for a, b in zip(sups, sups[1:]))
    assert dilatation_onset(M5, 13) == 5


def test_dilatation_rejects_small_grid():
    with pytest.raises(Exception):
        dilatation_sup(M5, 6, grid=32)


# seam mismatch -------------------------------------------------------------------

def test_seam_mismatch_bounds():
    for j in (5, 6, 8):
        sm = seam_mismatch(M5, j, samples=256)
        assert sm.inner_max_log2_ratio <= 2.0
        assert sm.outer_max_log2_ratio <= 0.15
        # analytic extremes: log2(e^(pi/4)+1) and -log2(1-e^(-3pi/4))
        assert abs(sm.inner_max_log2_ratio - math.log2(math.exp(math.pi / 4) + 1)) < 0.01
        assert abs(sm.outer_max_log2_ratio + math.log2(1 - math.exp(-3 * math.pi / 4))) < 0.01


def test_seam_mismatch_stable_across_rings():
    a = seam_mismatch(M5, 5, 256)
    b = seam_mismatch(M5, 6, 256)
    assert abs(a.inner_max_log2_ratio - b.inner_max_log2_ratio) < 1.0 / 32
    assert abs(a.outer_max_log2_ratio - b.outer_max_log2_ratio) < 1.0 / 32


# seam zeros ----------------------------------------------------------------------

def test_seam_vanishes_exactly_at_ring_zeros():
    for j in (5, 6):
        Mj = 1 << j
        for i in (1, 2, Mj):
            z = M5.ring_zero(j, i)
            w, piece = M5.eval(z)
            assert str(piece) == f"seam({j})"
            assert w.is_zero


def test_seam_nonzero_off_the_zero_set():
    j = 5
    z = M5.ring_zero(j, 1)
    z2 = LogPolar(z.rho, z.theta.add(Angle(Fraction(1, 1 << 20))))
    w, _ = M5.eval(z2)
    assert not w.is_zero


def test_seam_critical_values_modulus():
    # |S'| = 0 at v = Z/2; critical value modulus (e^(pi/2)/4) c_j r_j^(M_j)
    t = M5.table
    j = 5
    Mj = 1 << j
    # critical point: rho = (zcap_log2 - 1)/M_j, angle on the zero rays
    rho_cp = (M5.zcap_log2(j) - 1) / Mj
    cp = LogPolar(rho_cp, Fraction(1, 2 * Mj))
    d, _ = M5.deriv(cp)
    assert d.is_zero
    val, _ = M5.eval(cp)
    want = t.c_exp(j) + Mj * t.r_exp(j) + math.pi / 2 / math.log(2) - 2
    assert abs(float(val.rho) - want) < 1e-9


def test_bump_family_any_ring():
    from juliadim.modelmap import eval_bump_gk
    t = M5.table
    for k in (5, 7):
        ek = t.r_exp(k)
        # above the strip: pure power
        z = LogPolar(Fraction(ek), Fraction(1, 5))
        w = eval_bump_gk(M5, k, z)
        assert w.rho == t.c_exp(k) + (1 << k) * ek
        # strip left edge (s = 0): eta = 1, full blend c z^M + r z
        z0 = LogPolar(ek - Fraction(3, 1 << (ek.bit_length() + 680)) * 1, Fraction(1, 5))
        # representative deep-origin point instead: eta = 1 exactly
        zlow = LogPolar(Fraction(ek - 3), Fraction(1, 5))
        w = eval_bump_gk(M5, k, zlow)
        t1 = LogPolar(t.c_exp(k) + (1 << k) * zlow.rho, zlow.theta.mul_int(1 << k))
        t2 = LogPolar(Fraction(ek) + zlow.rho, zlow.theta)
        want = lp_sub(t1, t2.neg()).value  # t1 + t2
        assert abs(float(w.rho - want.rho)) < 1e-20


def test_bump_family_rejects_small_ring():
    from juliadim.modelmap import eval_bump_gk
    with pytest.raises(Exception):
        eval_bump_gk(M5, 4, LogPolar(Fraction(50), 0))


def test_nowhere_else_zero_on_dense_samples():
    # the map vanishes only at the prescribed zero set: dense samples of
    # every piece kind stay nonzero
    from random import Random
    rng = Random(3)
    t = M5.table
    probes = []
    for _ in range(40):
        probes.append(LogPolar(Fraction(rng.randrange(1, 700 * 8), 8),
                               Fraction(rng.randrange(2**20), 2**20)))           # origin
        j = rng.choice([6, 7, 8])
        probes.append(LogPolar(Fraction(t.r_exp(j) - rng.randrange(1, 99), 7),
                               Fraction(rng.randrange(2**20), 2**20)))           # power
        probes.append(LogPolar(t.r_exp(6) + Fraction(rng.randrange(1, 2**10), 2**14),
                               Fraction(rng.randrange(2**20), 2**20)))           # seam
    for z in probes:
        w, _ = M5.eval(z)
        assert not w.is_zero


def test_big_N_model_smoke():
    # N = 14 pushes exponents to ~2^91-bit values; piece selection, power
    # evaluation, and landmark arithmetic must stay exact
    m14 = model(N=14, kmax=6)
    t = m14.table
    z = LogPolar(Fraction(t.R_exp(2) - 1), Fraction(1, 9))
    w, piece = m14.eval(z)
    assert str(piece) == f"power({2 + 13})"
    assert w.rho == t.C_exp(2) + t.n(2) * (t.R_exp(2) - 1)
    lm = qN_landmarks(m14)
    assert lm.deriv_at_zero.significand_fraction() == Fraction((1 << 14) - 1, 1 << 13)
    v, _ = m14.eval(lm.zeros[0])
    assert v.is_zero


def test_deriv_finite_difference_sweep():
    # centered differences across random seam and origin points
    from random import Random
    rng = Random(41)
    t = M5.table
    h = Fraction(1, 1 << 40)
    probes = []
    for _ in range(4):
        probes.append(LogPolar(t.r_exp(5) + Fraction(rng.randrange(1, 2**10), 2**13),
                               Fraction(rng.randrange(2**16), 2**16)))   # seam(5)
        probes.append(LogPolar(Fraction(rng.randrange(40 * 8, 700 * 8), 8),
                               Fraction(rng.randrange(2**16), 2**16)))   # origin
    for z in probes:
        d, _ = M5.deriv(z)
        fp, _ = M5.eval(LogPolar(z.rho + h, z.theta))
        fm, _ = M5.eval(LogPolar(z.rho - h, z.theta))
        num = lp_sub(fp, fm).value
        dz_log2 = z.rho - h + pow2_minus1_log2(2 * h)
        assert abs(float((num.rho - dz_log2) - d.rho)) < 1e-6
