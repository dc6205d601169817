"""Piecewise evaluation of the model map over the whole plane.

With the correction map set to the identity, the model is

* a degree-2**N polynomial  q(z) = c_N z**(2**N) + r_N z  on |z| <= r_N - 1,
* a bump blend  g(z) = c_N z**(2**N) + r_N z eta(|z|)  on r_N - 1 <= |z| <= r_N,
* pure power maps  c_j z**(2**j)  between consecutive zero rings,
* a holomorphic zero-carrying blend on each ring  r_j <= |z| <= r_j e**(pi/M_j):

      S_j(z) = c_j z**M_j (z**M_j - Z_j) / r_j**M_j,   Z_j = -r_j**M_j e**(pi/4),

  whose M_j simple zeros sit at modulus r_j e**(pi/(4 M_j)) and angles
  (2i-1) pi / M_j -- the zero set the construction prescribes.  S_j matches
  the outer power map asymptotically (relative error e**(-3pi/4)) and
  deviates from the inner one by a factor in [e**(pi/4)-1, e**(pi/4)+1],
  i.e. under 2 bits; inclusion checks downstream carry that as an explicit
  margin.

Piece selection happens on the exact rho field, so points exponentially
close to a ring (relative distance 2**-r_N) still classify correctly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import mpmath
from mpmath import mpf

from .numerics import (
    ADD_GUARD,
    DomainError,
    LogPolar,
    LpSum,
    SIG_BITS,
    DyadicReal,
    frac_to_mpf,
    lp_add,
    lp_sub,
    mpf_to_frac,
    pi_over_ln2_frac,
)
from .params import ParamTable

LOG2E = 1.0 / math.log(2.0)


class AmbiguousPieceError(DomainError):
    pass


@dataclass(frozen=True)
class PieceId:
    kind: str               # 'origin' | 'bump' | 'power' | 'seam'
    index: Optional[int]    # ring index j for power/seam, N for bump

    def __str__(self):
        return self.kind if self.index is None else f"{self.kind}({self.index})"


@dataclass(frozen=True)
class ModelMap:
    table: ParamTable
    lam: float = 0.05      # petal conformal-ball shape constant
    delta: float = 0.25    # petal image-ball shape constant
    seam_margin_bits: float = 2.0
    prec: int = SIG_BITS
    guard: int = ADD_GUARD

    # -- ring geometry -------------------------------------------------------

    def seam_top(self, j: int) -> Fraction:
        """log2 of the outer radius r_j e**(pi/M_j) of ring j."""
        return self.table.r_exp(j) + pi_over_ln2_frac(1 << j)

    def zcap_log2(self, j: int) -> Fraction:
        """log2 |Z_j| = M_j log2 |zeta_j|, i.e. M_j (log2 r_j + pi/(4 M_j ln 2)).

        Defined through the quantized ring-zero radius so that zeta_j**M_j
        reproduces Z_j exactly and the zero set is exact by construction.
        """
        return (1 << j) * self.ring_zero_rho(j)

    def zcap(self, j: int) -> LogPolar:
        return LogPolar(self.zcap_log2(j), Fraction(1, 2))

    def ring_zero_rho(self, j: int) -> Fraction:
        return self.table.r_exp(j) + pi_over_ln2_frac(4 << j)

    def ring_zero(self, j: int, i: int) -> LogPolar:
        """i-th zero on ring j, i = 1..M_j; angle (2i-1)/(2 M_j) turns."""
        Mj = 1 << j
        if not 1 <= i <= Mj:
            raise DomainError(f"zero index {i} out of range for ring {j}")
        return LogPolar(self.ring_zero_rho(j), Fraction(2 * i - 1, 2 * Mj))

    def seam_zeta(self, j: int) -> LogPolar:
        return self.ring_zero(j, 1)

    # -- piece selection ------------------------------------------------------

    def _below_origin_top(self, rho: Fraction) -> bool:
        """rho < log2(r_N - 1), decided exactly.

        The threshold sits in (-2**(1-eN), -2**-eN) below eN; a dyadic rho
        whose resolution is coarser than 2**-(eN-2) cannot land in between,
        so the comparison reduces to a sign test unless rho is ultra-fine.
        """
        eN = self.table.r_exp(self.table.N)
        d = rho - eN
        if d >= 0:
            return False
        res_bits = d.denominator.bit_length()
        if eN > res_bits + 4 or eN.bit_length() > 30:
            return True
        with mpmath.workprec(res_bits + 64):
            thr = mpmath.log(1 - mpmath.ldexp(mpf(1), -eN), 2)
            return d < mpf_to_frac(thr)

    def _cuts(self):
        """(threshold, piece) pairs above r_N, ascending; built lazily and
        stored on the instance (frozen dataclass, hence object.__setattr__)."""
        cache = getattr(self, "_piece_cuts", None)
        if cache is None:
            t = self.table
            cache = []
            for j in range(t.N, t.jmax):
                cache.append((self.seam_top(j), PieceId("seam", j)))
                cache.append((Fraction(t.r_exp(j + 1)), PieceId("power", j + 1)))
            object.__setattr__(self, "_piece_cuts", cache)
        return cache

    def piece_of(self, z_or_rho) -> PieceId:
        rho = z_or_rho.rho if isinstance(z_or_rho, LogPolar) else Fraction(z_or_rho)
        if isinstance(z_or_rho, LogPolar) and z_or_rho.is_zero:
            return PieceId("origin", None)
        t = self.table
        N = t.N
        if self._below_origin_top(rho):
            return PieceId("origin", None)
        if rho <= t.r_exp(N):
            return PieceId("bump", N)
        cuts = self._cuts()
        lo, hi = 0, len(cuts)
        while lo < hi:
            mid = (lo + hi) // 2
            if rho <= cuts[mid][0]:
                hi = mid
            else:
                lo = mid + 1
        if lo == len(cuts):
            raise DomainError(
                f"|z| beyond built table (rho ~ 2^{rho.numerator // rho.denominator})")
        return cuts[lo][1]

    # -- evaluation -----------------------------------------------------------

    def _eval_origin(self, z: LogPolar) -> LpSum:
        t = self.table
        N = t.N
        if z.is_zero:
            return LpSum(LogPolar.zero_point())
        t1 = LogPolar(t.c_exp(N) + (1 << N) * z.rho, z.theta.mul_int(1 << N))
        t2 = LogPolar(t.r_exp(N) + z.rho, z.theta)
        return lp_add(t1, t2, guard=self.guard, prec=self.prec)

    def _strip_s(self, z: LogPolar) -> mpf:
        """s = |z| - (r_N - 1) in [0, 1] for a point in the bump strip."""
        return _strip_s_for(self.table, self.table.N, z, self.prec)

    def _eval_bump(self, z: LogPolar) -> LpSum:
        t = self.table
        N = t.N
        s = self._strip_s(z)
        l2eta = bump_log2(s)
        t1 = LogPolar(t.c_exp(N) + (1 << N) * z.rho, z.theta.mul_int(1 << N))
        if l2eta is None:  # eta = 0: pure power already
            return LpSum(t1)
        t2 = LogPolar(t.r_exp(N) + z.rho + mpf_to_frac(l2eta), z.theta)
        return lp_add(t1, t2, guard=self.guard, prec=self.prec)

    def _eval_power(self, z: LogPolar, j: int) -> LogPolar:
        Mj = 1 << j
        return LogPolar(self.table.c_exp(j) + Mj * z.rho, z.theta.mul_int(Mj))

    def _eval_seam(self, z: LogPolar, j: int) -> LogPolar:
        t = self.table
        Mj = 1 << j
        v = z.pow_int(Mj)
        diff = lp_sub(v, self.zcap(j), guard=max(self.guard, Mj + 64), prec=self.prec)
        if diff.value.is_zero:
            return LogPolar.zero_point()
        num = v.mul(diff.value)
        return LogPolar(t.c_exp(j) + num.rho - Mj * t.r_exp(j), num.theta)

    def eval(self, z: LogPolar) -> Tuple[LogPolar, PieceId]:
        piece = self.piece_of(z)
        if piece.kind == "origin":
            return self._eval_origin(z).value, piece
        if piece.kind == "bump":
            return self._eval_bump(z).value, piece
        if piece.kind == "power":
            return self._eval_power(z, piece.index), piece
        return self._eval_seam(z, piece.index), piece

    # -- derivative -----------------------------------------------------------

    def boundary_distance(self, rho: Fraction) -> Fraction:
        """Distance in log2 units from rho to the nearest piece boundary."""
        t = self.table
        cuts = [Fraction(t.r_exp(t.N))]
        for j in range(t.N, t.jmax):
            cuts.append(self.seam_top(j))
            cuts.append(Fraction(t.r_exp(j + 1)))
        return min(abs(rho - c) for c in cuts)

    def deriv(self, z: LogPolar, straddle_margin: Fraction = Fraction(1, 1 << 48)
              ) -> Tuple[LogPolar, PieceId]:
        piece = self.piece_of(z)
        t = self.table
        if not z.is_zero and piece.kind != "origin":
            if self.boundary_distance(z.rho) < straddle_margin:
                below = self.piece_of(z.rho - straddle_margin)
                above = self.piece_of(z.rho + straddle_margin)
                raise AmbiguousPieceError(
                    f"point within guard of the boundary between {below} and {above}")
        if piece.kind == "power":
            Mj = 1 << piece.index
            return (LogPolar(t.c_exp(piece.index) + piece.index + (Mj - 1) * z.rho,
                             z.theta.mul_int(Mj - 1)), piece)
        if piece.kind == "origin":
            N = t.N
            if z.is_zero:
                return LogPolar(Fraction(t.r_exp(N)), 0), piece
            t1 = LogPolar(t.c_exp(N) + N + ((1 << N) - 1) * z.rho,
                          z.theta.mul_int((1 << N) - 1))
            t2 = LogPolar(Fraction(t.r_exp(N)), 0)
            return lp_add(t1, t2, guard=self.guard, prec=self.prec).value, piece
        if piece.kind == "seam":
            j = piece.index
            Mj = 1 << j
            v = z.pow_int(Mj)
            w = lp_sub(v.mul_pow2(1), self.zcap(j),
                       guard=max(self.guard, Mj + 64), prec=self.prec)
            lead = LogPolar(t.c_exp(j) + j + (Mj - 1) * z.rho - Mj * t.r_exp(j),
                            z.theta.mul_int(Mj - 1))
            return lead.mul(w.value), piece
        # bump piece: z-component of the Wirtinger derivative of the blend
        N = t.N
        s = self._strip_s(z)
        t1 = LogPolar(t.c_exp(N) + N + ((1 << N) - 1) * z.rho,
                      z.theta.mul_int((1 << N) - 1))
        terms = [t1]
        l2eta = bump_log2(s)
        if l2eta is not None:
            terms.append(LogPolar(t.r_exp(N) + mpf_to_frac(l2eta), 0))
        l2d = bump_deriv_log2(s)
        if l2d is not None:
            # r_N z eta_z = r_N |z| b'(s)/2, real and negative
            terms.append(LogPolar(t.r_exp(N) + z.rho + mpf_to_frac(l2d) - 1,
                                  Fraction(1, 2)))
        acc = terms[0]
        for term in terms[1:]:
            acc = lp_add(acc, term, guard=self.guard, prec=self.prec).value
        return acc, piece


def eval_bump_gk(m: ModelMap, k: int, z: LogPolar) -> LogPolar:
    """The blend family member g_k(z) = c_k z**M_k + r_k z eta_k(|z|) for any
    ring index k >= 5, independent of which piece the model uses at z.

    eta_k is 1 below |z| = r_k - 1 and 0 above r_k; on the strip it follows
    the bump profile in the shifted coordinate s = |z| - (r_k - 1), computed
    from the exact rho so the strip is resolvable at any scale.
    """
    if k < 5:
        raise DomainError("blend family defined for ring index >= 5")
    t = m.table
    Mk = 1 << k
    if z.is_zero:
        return LogPolar.zero_point()
    t1 = LogPolar(t.c_exp(k) + Mk * z.rho, z.theta.mul_int(Mk))
    d = z.rho - t.r_exp(k)
    if d >= 0:
        return t1
    s = _strip_s_for(t, k, z, m.prec)
    l2eta = bump_log2(s)
    if l2eta is None:
        return t1
    t2 = LogPolar(t.r_exp(k) + z.rho + mpf_to_frac(l2eta), z.theta)
    return lp_add(t1, t2, guard=m.guard, prec=m.prec).value


def _strip_s_for(t, k: int, z: LogPolar, prec: int) -> mpf:
    ek = t.r_exp(k)
    d = z.rho - ek
    with mpmath.workprec(prec + 32):
        if ek.bit_length() >= (1 << 22):
            return mpf(0 if d < 0 else 1)
        v = mpmath.expm1(frac_to_mpf(d, prec + 32) * mpmath.ln(2))
        s = 1 + mpmath.ldexp(v, ek)
        return min(max(s, mpf(0)), mpf(1))


# ---------------------------------------------------------------------------
# bump profile
# ---------------------------------------------------------------------------

def bump(s: float) -> float:
    """exp(1 + 1/(s**2 - 1)) on [0, 1), 0 from 1 on; b(0) = 1."""
    if s >= 1.0:
        return 0.0
    if s <= 0.0:
        return 1.0
    return math.exp(1.0 + 1.0 / (s * s - 1.0))


def bump_log2(s) -> Optional[mpf]:
    """log2 b(s), or None where b = 0; stays finite arbitrarily close to 1."""
    s = mpf(s)
    if s >= 1:
        return None
    if s <= 0:
        return mpf(0)
    return (1 + 1 / (s * s - 1)) / mpmath.ln(2)


def bump_deriv_log2(s) -> Optional[mpf]:
    """log2 |b'(s)| with b'(s) = -b(s) * 2s / (s**2-1)**2; None where it vanishes."""
    s = mpf(s)
    if s <= 0 or s >= 1:
        return None
    lb = bump_log2(s)
    return lb + (mpmath.log(2 * s) - 2 * mpmath.log((1 - s * s))) / mpmath.ln(2)


BUMP_DERIV_ARGMAX = (1.0 / 3.0) ** 0.25  # |b'| peaks here, value < e


# ---------------------------------------------------------------------------
# polynomial landmarks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolyLandmarks:
    zeros: List[LogPolar]
    crit_points: List[LogPolar]
    crit_values: List[LogPolar]
    deriv_at_zero: DyadicReal
    zero_rho: Fraction
    crit_rho: Fraction


def qN_landmarks(m: ModelMap) -> PolyLandmarks:
    """Nonzero zeros, critical points and values of the origin polynomial.

    zeros:        (-r_N/c_N)**(1/(M_N-1)),        M_N - 1 of them
    crit points:  (-r_N/(c_N M_N))**(1/(M_N-1))
    crit values:  modulus (r_N/(c_N M_N))**(1/(M_N-1)) r_N (1 - 1/M_N)
    q'(0) = r_N;  |q'| at each nonzero zero = r_N (M_N - 1).
    """
    t = m.table
    N = t.N
    MN = 1 << N
    d = MN - 1
    zero_rho = Fraction(t.r_exp(N) - t.c_exp(N), d)
    crit_rho = Fraction(t.r_exp(N) - t.c_exp(N) - N, d)
    zeros = [LogPolar(zero_rho, Fraction(2 * i - 1, 2 * d)) for i in range(1, d + 1)]
    crits = [LogPolar(crit_rho, Fraction(2 * i - 1, 2 * d)) for i in range(1, d + 1)]
    with mpmath.workprec(m.prec + 16):
        l2fac = mpf_to_frac(mpmath.log(1 - mpmath.ldexp(mpf(1), -N), 2))
    cv_rho = crit_rho + t.r_exp(N) + l2fac
    cvals = []
    for i in range(1, d + 1):
        cp = crits[i - 1]
        val, _ = m.eval(cp)
        cvals.append(val if not val.is_zero else LogPolar(cv_rho, cp.theta))
    dz = DyadicReal.from_int(d, m.prec).mul_pow2(t.r_exp(N))
    return PolyLandmarks(zeros, crits, cvals, dz, zero_rho, crit_rho)


# ---------------------------------------------------------------------------
# dilatation of the bump blend
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DilatationReport:
    k: int
    sup_log2: float
    sup: float
    grid: int
    flagged: List[float] = field(default_factory=list)

    @property
    def below_one(self) -> bool:
        return self.sup_log2 < 0.0


def dilatation_sup(m: ModelMap, k: int, grid: int = 64) -> DilatationReport:
    """Grid supremum of |mu| = |g_zbar / g_z| for the blend at ring k.

    Magnitude ratios run in exponent arithmetic.  On the strip the blend
    terms sit ~(M_k-3) e_k bits below the leading power term, so |mu| is
    2**-(thousands); the angular dependence perturbs the denominator only at
    that same depth and is absorbed into the reported bound.
    """
    if k < 5:
        raise DomainError("blend dilatation defined for ring index >= 5")
    if grid < 64:
        raise DomainError("grid must be >= 64")
    t = m.table
    ek, epsk, Mk = t.r_exp(k), t.c_exp(k), 1 << k
    lead_log2 = epsk + k + (Mk - 1) * ek  # |M_k c_k z^(M_k-1)| at |z| ~ r_k
    sup = -math.inf
    flagged: List[float] = []
    for i in range(1, grid):
        s = i / grid
        ld = bump_deriv_log2(s)
        if ld is None:
            continue
        ld = float(ld)
        num_log2 = 2.0 * _f(ek) + ld - 1.0                     # |r_k z eta_zbar|
        t2 = _f(ek) + float(bump_log2(s))                      # |r_k eta|
        t3 = num_log2                                          # |r_k z eta_z|
        gap2 = t2 - _f(lead_log2)
        gap3 = t3 - _f(lead_log2)
        if max(gap2, gap3) > -8.0:
            flagged.append(s)
            continue
        den_log2 = _f(lead_log2) + math.log2(max(1.0 - 2.0 ** gap2 - 2.0 ** gap3, 0.5))
        sup = max(sup, num_log2 - den_log2)
    return DilatationReport(k=k, sup_log2=sup,
                            sup=2.0 ** sup if sup > -1000 else 0.0,
                            grid=grid, flagged=flagged)


def dilatation_onset(m: ModelMap, khi: int, grid: int = 64) -> int:
    """Smallest ring index >= 5 from which every sampled |mu| stays below 1."""
    kp = None
    for k in range(min(khi, m.table.jmax - 1), 4, -1):
        if dilatation_sup(m, k, grid).below_one:
            kp = k
        else:
            break
    if kp is None:
        raise DomainError("no onset index found")
    return kp


def _f(e: int) -> float:
    """Exponent to float, guarded: float paths are only valid while the
    exponent value itself is in float range."""
    if abs(e).bit_length() > 1000:
        raise DomainError("exponent too large for the float reporting path")
    return float(e)


# ---------------------------------------------------------------------------
# seam deviation from the neighbouring power maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeamMismatch:
    j: int
    inner_max_log2_ratio: float
    outer_max_log2_ratio: float
    samples: int


def seam_mismatch(m: ModelMap, j: int, samples: int = 256) -> SeamMismatch:
    """Max over sampled angles of |log2(S_j / adjacent power map)| on both
    seam circles.  Inner bound ~log2(e**(pi/4)+1) < 2; outer
    ~log2(1+e**(-3pi/4)) < 0.15, independent of j up to 1/M_j terms."""
    if samples < 256:
        raise DomainError("samples must be >= 256")
    t = m.table
    Mj = 1 << j
    zc = m.zcap(j)
    inner_max = 0.0
    outer_max = 0.0
    outer_rho = m.seam_top(j)
    # the ratio depends on theta only through psi = M_j theta mod 1, so the
    # grid samples psi directly (a theta grid would alias once M_j >= samples)
    for i in range(samples):
        psi = Fraction(i, samples)
        v_in = LogPolar(Fraction(Mj * t.r_exp(j)), psi)
        d_in = lp_sub(v_in, zc, guard=m.guard, prec=m.prec).value
        inner_max = max(inner_max, abs(float(d_in.rho - Mj * t.r_exp(j))))
        v_out = LogPolar(Fraction(Mj) * outer_rho, psi)
        d_out = lp_sub(v_out, zc, guard=m.guard, prec=m.prec).value
        outer_max = max(outer_max, abs(float(d_out.rho - v_out.rho)))
    return SeamMismatch(j, inner_max, outer_max, samples)
