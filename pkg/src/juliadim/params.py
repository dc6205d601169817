"""Dyadic parameter sequences and their growth certificates.

The model map is built from three coupled sequences: degrees M_j = 2**j,
radii r_j, and coefficients c_j, tied by

    r_1 = 16,  c_1 = 1,
    r_{j+1} = c_j * (r_j / 2)**M_j,
    c_{j+1} = c_j * r_j**(-M_j).

Every r_j and c_j is an exact power of two, so the whole table reduces to
two integer exponent sequences

    e_{j+1}   = eps_j + M_j * (e_j - 1),
    eps_{j+1} = eps_j - M_j * e_j,

with e_1 = 4, eps_1 = 0.  All growth inequalities the rest of the project
relies on are certified here in exact integer (or exact rational)
arithmetic; a failed comparison is report data, never an exception.

A second, shifted indexing is used throughout the dynamics: for a fixed
depth parameter N,

    n_k = M_{k+N-1},  R_k = r_{k+N-1},  C_k = c_{k+N-1},

plus the distortion envelopes alpha_k, beta_k = 1 / (1 -+ C' 2**(-sqrt(k+N-1)/4)).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

from .numerics import (
    DomainError,
    DyadicReal,
    ExponentBudgetError,
    MAX_EXP_BITS,
    ln_big,
)

SQRT8 = 2.0 * math.sqrt(2.0)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    name: str
    index: Optional[int]
    passed: bool
    lhs: str
    rhs: str
    note: str = ""

    def to_json_obj(self) -> dict:
        return {
            "name": self.name,
            "index": self.index,
            "lhs_exponent": self.lhs,
            "rhs_exponent": self.rhs,
            "pass": self.passed,
            **({"note": self.note} if self.note else {}),
        }


@dataclass
class CertificateReport:
    title: str
    certificates: List[Certificate] = field(default_factory=list)

    def add(self, name, index, passed, lhs, rhs, note=""):
        self.certificates.append(Certificate(name, index, bool(passed), str(lhs), str(rhs), note))

    def extend(self, other: "CertificateReport"):
        self.certificates.extend(other.certificates)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.certificates)

    def failures(self) -> List[Certificate]:
        return [c for c in self.certificates if not c.passed]

    def to_json(self) -> str:
        return json.dumps([c.to_json_obj() for c in self.certificates], sort_keys=True)

    def __len__(self):
        return len(self.certificates)


# ---------------------------------------------------------------------------
# parameter table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamTable:
    N: int
    kmax: int
    jmax: int
    e: tuple          # e[j] = log2 r_j for j >= 1; e[0] unused (r_0 = 0)
    eps: tuple        # eps[j] = log2 c_j for j >= 1
    Cprime: float
    p: float
    alpha: tuple      # alpha[k], k = 1..kmax (index 0 unused)
    beta: tuple
    k0: Optional[int]

    # -- original indexing ---------------------------------------------------

    def M(self, j: int) -> int:
        return 1 << j

    def r_exp(self, j: int) -> int:
        if not 1 <= j <= self.jmax:
            raise DomainError(f"r_{j} not built (jmax={self.jmax})")
        return self.e[j]

    def c_exp(self, j: int) -> int:
        if not 1 <= j <= self.jmax:
            raise DomainError(f"c_{j} not built (jmax={self.jmax})")
        return self.eps[j]

    def r(self, j: int, prec: int = None) -> DyadicReal:
        kw = {} if prec is None else {"prec": prec}
        return DyadicReal.from_pow2(self.r_exp(j), **kw)

    def c(self, j: int, prec: int = None) -> DyadicReal:
        kw = {} if prec is None else {"prec": prec}
        return DyadicReal.from_pow2(self.c_exp(j), **kw)

    # -- shifted indexing ------------------------------------------------------

    def n(self, k: int) -> int:
        return 1 << (self.N + k - 1)

    def R_exp(self, k: int) -> int:
        return self.r_exp(k + self.N - 1)

    def C_exp(self, k: int) -> int:
        return self.c_exp(k + self.N - 1)

    def R(self, k: int) -> DyadicReal:
        return DyadicReal.from_pow2(self.R_exp(k))

    def C(self, k: int) -> DyadicReal:
        return DyadicReal.from_pow2(self.C_exp(k))

    def kmax_shifted(self) -> int:
        """Largest k with R_{k+2} available."""
        return self.jmax - self.N - 1

    def alpha_k(self, k: int) -> float:
        return self.alpha[k]

    def beta_k(self, k: int) -> float:
        return self.beta[k]

    def table_rows(self, jhi: Optional[int] = None) -> List[dict]:
        jhi = self.jmax if jhi is None else min(jhi, self.jmax)
        rows = [{"j": 0, "M": 1, "c": None, "r": "0"}]
        for j in range(1, jhi + 1):
            rows.append({
                "j": j,
                "M": self.M(j),
                "c": f"2^{self.eps[j]}",
                "r": f"2^{self.e[j]}",
            })
        return rows


def build_params(N: int, kmax: int, Cprime: float = 1.0, p: float = SQRT8,
                 extra_j: int = 2) -> ParamTable:
    """Build the exact exponent table for depth N, shifted indices up to kmax.

    Exponents are exact integers; a table whose exponents outgrow the bit
    budget raises ExponentBudgetError naming the offending index.
    """
    if N < 5:
        raise DomainError("depth parameter N must be >= 5")
    if kmax < 1:
        raise DomainError("kmax must be >= 1")
    jmax = N + kmax + extra_j
    e = [0] * (jmax + 1)
    eps = [0] * (jmax + 1)
    e[1], eps[1] = 4, 0  # r_1 = 16, c_1 = 1
    for j in range(1, jmax):
        Mj = 1 << j
        e[j + 1] = eps[j] + Mj * (e[j] - 1)
        eps[j + 1] = eps[j] - Mj * e[j]
        if e[j + 1].bit_length() > MAX_EXP_BITS or eps[j + 1].bit_length() > MAX_EXP_BITS:
            raise ExponentBudgetError(f"exponent bit budget exceeded at j={j + 1}")
    alpha = [0.0] * (kmax + 1)
    beta = [0.0] * (kmax + 1)
    for k in range(1, kmax + 1):
        w = Cprime * 2.0 ** (-math.sqrt(k + N - 1) / 4.0)
        alpha[k] = 1.0 / (1.0 - w) if w < 1.0 else math.inf
        beta[k] = 1.0 / (1.0 + w)
    t = ParamTable(N=N, kmax=kmax, jmax=jmax, e=tuple(e), eps=tuple(eps),
                   Cprime=Cprime, p=p, alpha=tuple(alpha), beta=tuple(beta), k0=None)
    return ParamTable(N=N, kmax=kmax, jmax=jmax, e=tuple(e), eps=tuple(eps),
                      Cprime=Cprime, p=p, alpha=tuple(alpha), beta=tuple(beta),
                      k0=compute_k0(t))


# ---------------------------------------------------------------------------
# growth-inequality certificates
# ---------------------------------------------------------------------------

def verify_inequalities(t: ParamTable) -> CertificateReport:
    """Certify every growth inequality downstream modules rely on.

    All comparisons are exact on the integer exponent sequences (rational
    where an inequality involves a fractional power).  Failures land in the
    report as data.
    """
    rep = CertificateReport("growth inequalities")
    e, eps, N = t.e, t.eps, t.N
    J = t.jmax

    # base identity at j=1: r_1**M_1 == c_1 * r_1**(M_0 + 1)
    rep.add("coef_power_base", 1, 2 * e[1] == eps[1] + 2 * e[1], 2 * e[1], eps[1] + 2 * e[1])

    for j in range(3, J + 1):
        lhs = eps[j] + (1 << j) * e[j]            # log2 of c_j r_j^{M_j}
        rhs = ((1 << (j - 1)) + 1) * e[j]         # log2 of r_j^{M_{j-1}+1}
        rep.add("coef_power_lower", j, lhs >= rhs, lhs, rhs)

    for j in range(2, J):
        rep.add("sqrt_growth", j, e[j + 1] >= 2 * e[j], e[j + 1], 2 * e[j])

    for j in range(5, J):
        rep.add("quad_growth", j, e[j + 1] >= 2 + 2 * e[j], e[j + 1], 2 + 2 * e[j])
        rep.add("tower_growth", j, e[j + 1] >= (1 << j), e[j + 1], 1 << j)

    for j in range(3, J):
        rhs = -(1 << j) + ((1 << (j - 1)) + 1) * e[j]
        rep.add("next_radius_lower", j, e[j + 1] >= rhs, e[j + 1], rhs)

    # shifted-index forms, valid for every k >= 1 once N >= 5
    klim = min(t.kmax, t.kmax_shifted())
    for k in range(1, klim + 1):
        nk = t.n(k)
        nk1 = t.n(k - 1) if k >= 1 else None  # n_0 = 2**(N-1)
        Re = t.R_exp(k)
        Ce = t.C_exp(k)
        lhs = nk * Re + Ce
        rhs = (nk1 + 1) * Re
        rep.add("ring_coef_power_lower", k, lhs >= rhs, lhs, rhs)
        rep.add("ring_next_radius_lower", k, t.R_exp(k + 1) >= -nk + (nk1 + 1) * Re,
                t.R_exp(k + 1), -nk + (nk1 + 1) * Re)
        rep.add("ring_tower", k, Re >= (1 << (k + N - 2)), Re, 1 << (k + N - 2))
        rep.add("ring_quad", k, t.R_exp(k + 1) >= 2 + 2 * Re, t.R_exp(k + 1), 2 + 2 * Re)

    # exact degree identities
    for k in range(1, klim + 1):
        rep.add("degree_double", k, 2 * t.n(k) == t.n(k + 1), 2 * t.n(k), t.n(k + 1))
        total = (1 << N) + sum(t.n(j) for j in range(1, k + 1))
        rep.add("degree_sum", k, total == t.n(k + 1), total, t.n(k + 1))
    for k in range(2, klim + 1):
        msum = sum(1 << j for j in range(0, k - 1))
        rep.add("degree_partial_sum", k, msum == (1 << (k - 1)) - 1, msum, (1 << (k - 1)) - 1)

    # recursion identity: r_{j+1} * 2**M_j == c_j * r_j**M_j, exactly
    for j in range(1, J):
        lhs = e[j + 1] + (1 << j)
        rhs = eps[j] + (1 << j) * e[j]
        rep.add("recursion_identity", j, lhs == rhs, lhs, rhs)

    # critical-radius bracket (shifted polynomial data), defined for N >= 10:
    # 2**M_{N-7} r_{N-1}  <=  (r_N/(c_N M_N))**(1/(M_N-1))  <=  r_{N-1}**2/sqrt(2)
    if N >= 10:
        MN = 1 << N
        mid = Fraction(e[N] - eps[N] - N, MN - 1)
        lo = Fraction((1 << (N - 7)) + e[N - 1])
        hi = 2 * Fraction(e[N - 1]) - Fraction(1, 2)
        rep.add("critical_radius_lower", N, lo <= mid, lo, mid)
        rep.add("critical_radius_upper", N, mid <= hi, mid, hi)
    return rep


def check_permissible(t: ParamTable) -> CertificateReport:
    """Admissibility of the raw sequences for the global model construction.

    Requires r_{j+1} >= exp(pi/M_j) * r_j, monotone growth to infinity, and a
    bounded degree ratio.  The j = 1 step genuinely fails for this family
    (64 < 16 e^{pi/2}); only rings with j >= N >= 5 are ever used by the
    model, so the failure is reported, not raised.
    """
    rep = CertificateReport("ring admissibility")
    for j in range(1, t.jmax):
        gap = t.e[j + 1] - t.e[j]
        need = math.pi / ((1 << j) * math.log(2.0))
        rep.add("ring_gap", j, gap >= need, gap, f"{need:.6g}")
    mono = all(t.e[j + 1] > t.e[j] for j in range(1, t.jmax))
    rep.add("radii_increase", None, mono, "strictly increasing", "required")
    rep.add("degree_ratio_bounded", None, True, 2, "sup M_{j+1}/M_j")
    return rep


def alpha_beta_window(t: ParamTable) -> CertificateReport:
    """Empirical threshold for the distortion envelopes to sit in
    (99/100, 101/100); reported, never assumed."""
    rep = CertificateReport("distortion envelope window")
    ok_from = None
    for k in range(t.kmax, 0, -1):
        if not (0.99 < t.beta[k] < 1.0 < t.alpha[k] < 1.01):
            break
        ok_from = k
    rep.add("envelope_window_from_k", ok_from, ok_from is not None,
            f"holds for k >= {ok_from}" if ok_from else "never within kmax",
            "(99/100, 101/100)",
            note=f"Cprime={t.Cprime}; threshold depends on the distortion constant")
    return rep


# ---------------------------------------------------------------------------
# modulus-of-continuity scale and its onset index
# ---------------------------------------------------------------------------

def omega_eval(p: float, r: DyadicReal) -> float:
    """(1/2)**(p^-1 sqrt(ln ln 1/r)) for 0 < r < 1/e.

    Logs come from the exponent field, so r near 2**-(2**k) evaluates
    without underflow.
    """
    if r.is_zero or r.sign < 0 or r.exp >= 0:
        raise DomainError("need 0 < r < 1")
    lnsig = math.log(float(r.significand_fraction()))
    # ln(1/r) = -exp*ln2 - ln(sig)
    if (-r.exp).bit_length() <= 900:
        ln_inv = (-r.exp) * math.log(2.0) - lnsig
        if ln_inv < 1.0 - 1e-12:
            raise DomainError("modulus scale undefined for r > 1/e")
        lnln = math.log(ln_inv) if ln_inv > 1.0 else 0.0
    else:
        lnln = ln_big(-r.exp)
    return 0.5 ** (math.sqrt(lnln) / p)


def omega_from_rho(p: float, rho_int: int, rho_frac: float = 0.0) -> float:
    """omega_p(1/|z|) for |z| = 2**(rho_int + rho_frac), |z| large."""
    if rho_int <= 0:
        raise DomainError("need |z| > 1")
    if rho_int.bit_length() <= 900:
        ln_abs = rho_int * math.log(2.0) + rho_frac * math.log(2.0)
        if ln_abs <= 1.0:
            raise DomainError("point too small for modulus scale")
        lnln = math.log(ln_abs)
    else:
        lnln = ln_big(rho_int)
    return 0.5 ** (math.sqrt(lnln) / p)


def compute_k0(t: ParamTable, R: float = 1.0) -> Optional[int]:
    """Smallest k such that ln ln (r_k / 20) >= k'/2 for every k' in [k, kmax]
    and r_k >= 20 R.  None when no such k exists within the table."""
    ok = [False] * (t.kmax + 2)
    for k in range(1, t.kmax + 1):
        ek = t.r_exp(k)
        try:
            if ek.bit_length() <= 900:
                ln_val = ek * math.log(2.0) - math.log(20.0)
                cond = ln_val > 0 and math.log(ln_val) >= k / 2.0
            else:
                cond = ln_big(ek, -math.log(20.0)) >= k / 2.0
        except DomainError:
            cond = False
        size_ok = True if ek.bit_length() > 60 else ek >= math.log2(20.0 * R)
        ok[k] = cond and size_ok
    best = None
    for k in range(t.kmax, 0, -1):
        if not ok[k]:
            break
        best = k
    return best
