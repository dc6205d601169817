"""Annulus and petal atlas: region classification and level-line structure.

The plane splits into a central disk D = {|z| <= R_1/4}, open annuli
A_k = A(R_k/4, 4 R_k) hosting all the interesting dynamics, closed gaps
B_k = [4 R_k, R_{k+1}/4] that escape, sub-annuli V_k = A(2R_k/5, 3R_k/5)
carrying the invariant curves, and petals: balls B(w, R_k 2**-n_k) around
the n_k zeros on ring k+N-1.  Classification is decided on the exact rho
field against dyadic thresholds (quantized only where a threshold is
irrational, far below the classification margin).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

from .numerics import (
    DomainError,
    DyadicReal,
    LogPolar,
    const_log2_frac,
    expm1_lp,
    frac_ilog2,
    pi_over_ln2_frac,
)
from .modelmap import ModelMap
from .params import ParamTable


@dataclass(frozen=True)
class Region:
    kind: str                     # 'A' | 'B' | 'V' | 'P' | 'D' | 'L' | 'boundary'
    k: Optional[int] = None
    j: Optional[int] = None

    def __str__(self):
        if self.kind == "P":
            return f"P({self.k},{self.j})"
        if self.kind in ("A", "B", "V", "L"):
            return f"{self.kind}({self.k})"
        return self.kind

    @classmethod
    def parse(cls, s: str) -> "Region":
        s = s.strip()
        if s in ("D", "boundary"):
            return cls(s)
        kind, rest = s[0], s[s.index("(") + 1:-1]
        parts = [int(x) for x in rest.split(",")]
        if kind == "P":
            return cls("P", parts[0], parts[1])
        return cls(kind, parts[0])


@dataclass(frozen=True)
class PetalSpec:
    k: int
    j: int
    center: LogPolar
    radius: DyadicReal             # R_k / 2**n_k
    conformal_radius: DyadicReal   # lam (e**(pi/n_k) - 1) R_k

    @property
    def radius_rel_log2(self) -> Fraction:
        """log2 of radius / |center|."""
        return self.radius.log2_frac() - self.center.rho


def petal_spec(m: ModelMap, k: int, j: int) -> PetalSpec:
    t = m.table
    nk = t.n(k)
    if not 1 <= j <= nk:
        raise DomainError(f"petal index {j} out of range (n_k = {nk})")
    center = m.ring_zero(k + t.N - 1, j)
    radius = DyadicReal.from_pow2(t.R_exp(k) - nk)
    conf = DyadicReal.from_float(m.lam * math.expm1(math.pi / nk)).mul_pow2(t.R_exp(k))
    return PetalSpec(k, j, center, radius, conf)


def zeros_in_annulus(t: ParamTable, k: int) -> List[LogPolar]:
    """The n_k simple zeros inside A_k: modulus R_k e**(pi/(4 n_k)), angles
    (2j-1)/(2 n_k) turns."""
    if k < 1:
        raise DomainError("zeros enumerated for k >= 1 only")
    nk = t.n(k)
    rho = t.R_exp(k) + pi_over_ln2_frac(4 * nk)
    return [LogPolar(rho, Fraction(2 * j - 1, 2 * nk)) for j in range(1, nk + 1)]


LOG2_2_5 = const_log2_frac(2, 5)
LOG2_3_5 = const_log2_frac(3, 5)


def _nearest_petal_candidates(nk: int, theta: Fraction) -> List[int]:
    x = theta * nk  # zero angles at i - 1/2, i = 1..nk
    i0 = (x.numerator + x.denominator) // x.denominator  # floor(x)+1
    out = []
    for i in (i0 - 1, i0, i0 + 1):
        ii = ((i - 1) % nk) + 1
        if ii not in out:
            out.append(ii)
    return out


def petal_membership(m: ModelMap, k: int, z: LogPolar) -> Optional[int]:
    """Index j when z lies in the petal ball B(w_j, R_k 2**-n_k), else None."""
    t = m.table
    nk = t.n(k)
    rad_rel = -nk - pi_over_ln2_frac(4 * nk)  # log2(radius / |center|)
    zero_rho = t.R_exp(k) + pi_over_ln2_frac(4 * nk)
    dr = z.rho - zero_rho
    if dr != 0 and frac_ilog2(abs(dr)) > int(rad_rel) + 3:
        return None
    for j in _nearest_petal_candidates(nk, z.theta.turns):
        w = m.ring_zero(k + t.N - 1, j)
        dth = z.theta.sub(w.theta).turns
        dth = dth if dth <= Fraction(1, 2) else dth - 1
        if dth != 0 and frac_ilog2(abs(dth)) > int(rad_rel) + 3:
            continue
        delta = expm1_lp(dr, dth, m.prec)
        if delta.is_zero or delta.rho <= rad_rel:
            return j
    return None


def classify(t: ParamTable, z: LogPolar, margin: float = 0.0,
             model: Optional[ModelMap] = None) -> Region:
    """Region of z, decided on exact rho comparisons.

    `margin` (log2 units) turns a near-threshold answer into 'boundary'.
    Petal tags require a model (for its ring-zero geometry); without one the
    enclosing A tag is returned.
    """
    if margin < 0:
        raise DomainError("margin must be >= 0")
    if z.is_zero:
        return Region("D")
    rho = z.rho
    mfr = Fraction(margin).limit_denominator(1 << 30)
    d_top = Fraction(t.R_exp(1) - 2)
    if rho <= d_top:
        if margin and abs(rho - d_top) < mfr:
            return Region("boundary")
        return Region("D")
    for k in range(1, t.kmax + 1):
        e = t.R_exp(k)
        lo, hi = Fraction(e - 2), Fraction(e + 2)
        nxt = Fraction(t.R_exp(k + 1) - 2) if k < t.kmax else None
        if rho < hi:
            if margin and (abs(rho - lo) < mfr or abs(rho - hi) < mfr):
                return Region("boundary")
            if model is not None:
                pj = petal_membership(model, k, z)
                if pj is not None:
                    return Region("P", k, pj)
            v_lo, v_hi = e + LOG2_2_5, e + LOG2_3_5
            if v_lo < rho < v_hi:
                if margin and (abs(rho - v_lo) < mfr or abs(rho - v_hi) < mfr):
                    return Region("boundary")
                return Region("V", k)
            return Region("A", k)
        if nxt is None:
            break
        if rho <= nxt:
            if margin and (abs(rho - hi) < mfr or abs(rho - nxt) < mfr):
                return Region("boundary")
            return Region("B", k)
    raise DomainError("point beyond the built table")


# ---------------------------------------------------------------------------
# level lines around the origin
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelLineReport:
    n: int
    count: int
    expansion_check: float      # min sampled diam-ratio / R_1
    branches_sampled: int
    newton_failures: int


def _diam_log2(points: List[LogPolar], prec: int) -> Fraction:
    from .numerics import lp_sub
    best = None
    for i in range(len(points)):
        for jj in range(i + 1, len(points)):
            d = lp_sub(points[i], points[jj], guard=4096, prec=prec)
            if d.value.is_zero:
                continue
            if best is None or d.value.rho > best:
                best = d.value.rho
    if best is None:
        raise DomainError("degenerate sample set")
    return best


def level_lines(m: ModelMap, n: int, samples: int = 8,
                branch_sample: Optional[List[List[int]]] = None) -> LevelLineReport:
    """Component count 2**(N n) of the n-th preimage of |z| = 4 R_1, plus a
    sampled expansion certificate: each pullback step contracts diameters by
    at least R_1 (ratio/R_1 >= 1, up to the sampling resolution)."""
    from .dynamics import OriginBranch, inverse_step

    if n < 1:
        raise DomainError("level-line depth must be >= 1")
    t = m.table
    count = 1 << (t.N * n)
    deg = 1 << t.N
    if branch_sample is None:
        branch_sample = [[0], [1], [deg // 2], [1, 0], [0, 1]]
    branch_sample = [b for b in branch_sample if len(b) <= n]
    failures = 0
    min_ratio = math.inf
    e1 = t.R_exp(1)
    for branches in branch_sample:
        pts = [LogPolar(Fraction(e1 + 2), Fraction(i, samples)) for i in range(samples)]
        prev_diam: Fraction = Fraction(e1 + 3)  # diam of the base circle
        try:
            for b in branches:
                pts = [inverse_step(m, p, OriginBranch(b), tol=2.0 ** -64) for p in pts]
                diam = _diam_log2(pts, m.prec)
                ratio_over_R1 = float(prev_diam - diam - e1)
                min_ratio = min(min_ratio, 2.0 ** ratio_over_R1)
                prev_diam = diam
        except DomainError:
            failures += 1
    return LevelLineReport(n=n, count=count, expansion_check=min_ratio,
                           branches_sampled=len(branch_sample),
                           newton_failures=failures)
