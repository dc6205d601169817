"""Invariant-curve tracing and the regularity certificates.

The nested curve families around each escape gap are traced by iterated
branch-consistent root pullback

    w_j(theta) = phi( (w_{j+1}(n theta) / C)**(1/n) ),

seeded on circles.  With the identity correction the traces are exact
circles; the synthetic correction model perturbs each pullback step by a
seeded band-limited field epsilon with |epsilon| <= C' omega_p(1/|z|),
the only property the downstream estimates use.  Its closed-form
z-derivative keeps |phi' - 1| below C' omega_p as well, so tangent
partial products are Cauchy with explicitly summable differences.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from random import Random
from typing import List, Tuple

import mpmath

from .numerics import (
    Angle,
    DomainError,
    DyadicReal,
    LogPolar,
    const_log2_frac,
    frac_mod1,
    frac_to_mpf,
    lp_perturb,
    mpf_to_frac,
    pow2_minus1_log2,
)
from .modelmap import ModelMap
from .params import ParamTable, omega_eval, omega_from_rho

TWO_PI = 2.0 * math.pi
LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# correction-map models
# ---------------------------------------------------------------------------

class Identity:
    """The exact model: phi(z) = z."""

    kind = "identity"

    def eps(self, z: LogPolar) -> complex:
        return 0.0 + 0.0j

    def phi(self, z: LogPolar) -> LogPolar:
        return z

    def phi_prime(self, z: LogPolar) -> complex:
        return 1.0 + 0.0j

    def envelope(self, z: LogPolar) -> float:
        return 0.0


class SyntheticOmega:
    """phi(z) = z (1 + eps(z)) with |eps| <= C' omega_p(1/|z|).

    eps = a(rho) u(rho, theta): the amplitude a is 0.8 min(C' omega_p, 1/64)
    and u is a three-mode unit-bounded phase field from the seed, slowly
    varying in rho and low-frequency in theta so that the closed-form
    derivative satisfies |phi' - 1| <= C' omega_p too (tests verify it
    against the looser 10 C' omega_p Cauchy-estimate allowance as well).
    """

    kind = "synthetic"
    SHAPE = 0.8
    CAP = 1.0 / 64.0
    RHO_SCALE = 64.0

    def __init__(self, Cprime: float = 1.0, p: float = 2.0 * math.sqrt(2.0),
                 phase_seed: int = 1):
        self.Cprime = Cprime
        self.p = p
        self.phase_seed = phase_seed
        rng = Random(phase_seed)
        self.weights = (0.7, 0.2, 0.1)
        self.freqs = (0, 1, 2)                     # angular frequencies
        self.rho_freqs = tuple(rng.uniform(0.3, 1.0) for _ in range(3))
        self.phases = tuple(rng.uniform(0.0, TWO_PI) for _ in range(3))

    # -- field ----------------------------------------------------------------

    def envelope(self, z: LogPolar) -> float:
        return self.Cprime * omega_from_rho(self.p, z.rho_int(),
                                            z.rho_frac_float())

    def _amplitude(self, z: LogPolar) -> float:
        return self.SHAPE * min(self.envelope(z), self.CAP)

    def _mode_args(self, z: LogPolar) -> List[float]:
        th = float(z.theta.turns)
        out = []
        for w, fq, rf, ph in zip(self.weights, self.freqs, self.rho_freqs, self.phases):
            rho_phase = float(frac_mod1(z.rho * Fraction(rf).limit_denominator(1 << 20)
                                        / int(self.RHO_SCALE)))
            out.append(TWO_PI * (fq * th + rho_phase) + ph)
        return out

    def eps(self, z: LogPolar) -> complex:
        a = self._amplitude(z)
        args = self._mode_args(z)
        u = sum(w * cmath.exp(1j * g) for w, g in zip(self.weights, args))
        return a * u

    def phi(self, z: LogPolar) -> LogPolar:
        e = self.eps(z)
        if e == 0:
            return z
        return lp_perturb(z, mpmath.mpc(e))

    def phi_prime(self, z: LogPolar) -> complex:
        """1 + eps + z eps_z with the Wirtinger derivative in closed form:
        z eps_z = eps_rho / (2 ln 2) + eps_theta / (4 pi i)."""
        a = self._amplitude(z)
        args = self._mode_args(z)
        modes = [w * cmath.exp(1j * g) for w, g in zip(self.weights, args)]
        u = sum(modes)
        du_drho = sum(1j * TWO_PI * rf / self.RHO_SCALE * mode
                      for rf, mode in zip(self.rho_freqs, modes))
        du_dth = sum(1j * TWO_PI * fq * mode
                     for fq, mode in zip(self.freqs, modes))
        # amplitude varies on the omega scale: d(log a)/d(rho) ~ 1/(rho ln rho)
        z_eps_z = a * (du_drho / (2.0 * LN2) + du_dth / (4.0 * math.pi * 1j))
        return 1.0 + a * u + z_eps_z


DistortionModel = object  # Identity | SyntheticOmega


# ---------------------------------------------------------------------------
# curve traces
# ---------------------------------------------------------------------------

@dataclass
class CurveTrace:
    k: int
    m: int
    theta_grid: List[Angle]
    inner_radii: List[Fraction]
    outer_radii: List[Fraction]
    tangent_partials: List[complex] = field(default_factory=list)

    def oscillation_log2(self) -> Tuple[float, float]:
        """(inner, outer) max radial oscillation over theta, in log2 units."""
        i_osc = float(max(self.inner_radii) - min(self.inner_radii))
        o_osc = float(max(self.outer_radii) - min(self.outer_radii))
        return i_osc, o_osc


def _pullback_point(m: ModelMap, phi, k: int, depth: int, theta: Fraction,
                    seed_rho: Fraction) -> LogPolar:
    """w_0(theta) for the depth-fold pullback of the circle log2-radius
    seed_rho sitting at level k + depth + 1."""
    t = m.table
    params = [Fraction(theta)]
    for j in range(depth):
        params.append(params[-1] * t.n(k + j + 1))
    z = LogPolar(seed_rho, Angle(frac_mod1(params[depth])))
    for j in range(depth - 1, -1, -1):
        n = t.n(k + j + 1)
        pj = frac_mod1(params[j])
        b = (pj * n).numerator // (pj * n).denominator  # floor(n frac(p_j))
        z = LogPolar(z.rho - t.C_exp(k + j + 1), z.theta).root(n, b % n)
        z = phi.phi(z)
    return z


def trace_gamma(m: ModelMap, phi, k: int, depth: int, grid: int = 256) -> CurveTrace:
    """Boundary circles of the depth-th nested curve annulus at level k.

    Seeds are the enclosing-annulus radii (1/4 and 3/4 of R_{k+depth+1});
    with the identity model the outputs are the closed-form pullback radii,
    constant in theta.  Adjacent grid cells are checked for branch
    consistency.
    """
    if grid < 256:
        raise DomainError("trace grid must be >= 256")
    if depth < 1:
        raise DomainError("depth must be >= 1")
    t = m.table
    from .numerics import ANG_BITS
    ang_cost = sum(t.N + k + j for j in range(1, depth + 1))
    if ang_cost > ANG_BITS - 64:
        raise DomainError(f"pullback depth needs {ang_cost + 64} angle bits "
                          f"(budget {ANG_BITS})")
    top = t.R_exp(k + depth + 1)
    seeds = (Fraction(top - 2), top + const_log2_frac(3, 4))
    thetas = [Fraction(i, grid) for i in range(grid)]
    inner: List[Fraction] = []
    outer: List[Fraction] = []
    for th in thetas:
        inner.append(_pullback_point(m, phi, k, depth, th, seeds[0]).rho)
        outer.append(_pullback_point(m, phi, k, depth, th, seeds[1]).rho)
    for name, arr in (("inner", inner), ("outer", outer)):
        for i in range(grid):
            gap = abs(float(arr[(i + 1) % grid] - arr[i]))
            if gap > 0.25:
                raise DomainError(
                    f"branch inconsistency on the {name} trace in theta cell "
                    f"[{i}/{grid}, {i + 1}/{grid}]")
    partials = tangent_products(m, phi, Angle(thetas[0]), depth, k).partials \
        if depth >= 2 else []
    return CurveTrace(k=k, m=depth, theta_grid=[Angle(th) for th in thetas],
                      inner_radii=inner, outer_radii=outer,
                      tangent_partials=partials)


def _dyadic_from_log2(fr: Fraction, prec: int = 64) -> DyadicReal:
    ip = fr.numerator // fr.denominator
    frac_part = fr - ip
    with mpmath.workprec(prec + 8):
        sig = mpmath.power(2, frac_to_mpf(frac_part, prec + 8))
    return DyadicReal.from_fraction(mpf_to_frac(sig), prec).mul_pow2(ip)


@dataclass(frozen=True)
class WidthCheck:
    measured: DyadicReal
    bound: DyadicReal
    measured_log2: Fraction
    bound_log2: Fraction

    @property
    def ok(self) -> bool:
        return self.measured.cmp(self.bound) <= 0


def width_check(m: ModelMap, trace: CurveTrace) -> WidthCheck:
    """Max linear width of the traced annulus against the contraction bound
    8**(m-1) R_{k+1} / (n_{k+1} ... n_{k+m})."""
    t = m.table
    k, depth = trace.k, trace.m
    measured_log2 = None
    for r_in, r_out in zip(trace.inner_radii, trace.outer_radii):
        gap = r_out - r_in
        if gap <= 0:
            raise DomainError("inverted trace radii")
        w = r_in + pow2_minus1_log2(gap, m.prec)
        if measured_log2 is None or w > measured_log2:
            measured_log2 = w
    bound_log2 = Fraction(3 * (depth - 1) + t.R_exp(k + 1)
                          - sum(t.N + k + i - 1 for i in range(1, depth + 1)))
    return WidthCheck(_dyadic_from_log2(measured_log2), _dyadic_from_log2(bound_log2),
                      measured_log2, bound_log2)


# ---------------------------------------------------------------------------
# tangent partial products
# ---------------------------------------------------------------------------

@dataclass
class TangentReport:
    k: int
    mmax: int
    theta0: Angle
    partials: List[complex]            # partial products, index m = 1..mmax
    pair_log_actual: List[float]       # per-step |log(1+eps)| + |log(1/phi')|
    pair_log_budget: List[float]       # per-step 2 C' 2**(-sqrt(j+N+2)/4)
    Cprime: float

    def cauchy_diff_ok(self) -> bool:
        """|p_m - p_m'| <= exp(sum budget over [m', m)) - 1 for all pairs."""
        for a in range(len(self.partials)):
            for b in range(a + 1, len(self.partials)):
                budget = math.expm1(sum(self.pair_log_budget[a:b + 1]))
                if abs(self.partials[b] - self.partials[a]) > budget + 1e-12:
                    return False
        return True

    def limit_modulus(self) -> float:
        return abs(self.partials[-1])

    def limit_lower_bound(self, N: int) -> float:
        """exp(-sum over all steps of 2 C' 2**(-sqrt(k+N)/4)), the infinite
        series evaluated to convergence."""
        total = 0.0
        kk = 0
        while True:
            term = 2.0 * self.Cprime * 2.0 ** (-math.sqrt(kk + N) / 4.0)
            total += term
            kk += 1
            if term < 1e-12 and kk > 64:
                break
        return math.exp(-total)


def tangent_products(m: ModelMap, phi, theta0: Angle, mmax: int,
                     k: int = 1) -> TangentReport:
    """Partial products of the two tangent factor families along the fixed
    pullback orbit through theta0.

    The orbit points w_j live in the level-(k+j+1) curve zones; factor one
    is phi(w)/w = 1 + eps(w), factor two is 1/phi'(w).  Identity gives all
    factors exactly 1.
    """
    t = m.table
    if k + mmax + 2 > t.kmax_shifted() + 1:
        raise DomainError("table too small for the requested depth")
    # orbit points: pull the mid-circle anchor back through the V chain
    seed = Fraction(t.R_exp(k + mmax + 1) - 1)
    pts: List[LogPolar] = []
    params = [Fraction(theta0.turns)]
    for j in range(mmax):
        params.append(params[-1] * t.n(k + j + 1))
    z = LogPolar(seed, Angle(frac_mod1(params[mmax])))
    chain = [z]
    for j in range(mmax - 1, -1, -1):
        n = t.n(k + j + 1)
        pj = frac_mod1(params[j])
        b = ((pj * n).numerator // (pj * n).denominator) % n
        z = LogPolar(z.rho - t.C_exp(k + j + 1), z.theta).root(n, b)
        z = phi.phi(z)
        chain.append(z)
    chain.reverse()  # chain[j] = f^j(z_0)
    Cp = getattr(phi, "Cprime", 0.0)
    partials: List[complex] = []
    pair_actual: List[float] = []
    pair_budget: List[float] = []
    prod = 1.0 / phi.phi_prime(chain[0])
    for j in range(1, mmax):
        f1 = 1.0 + phi.eps(chain[j])
        f2 = 1.0 / phi.phi_prime(chain[j])
        prod *= f1 * f2
        partials.append(prod)
        pair_actual.append(abs(cmath.log(f1)) + abs(cmath.log(f2)))
        pair_budget.append(2.0 * Cp * 2.0 ** (-math.sqrt(j + t.N + 2) / 4.0))
    return TangentReport(k=k, mmax=mmax, theta0=theta0, partials=partials,
                         pair_log_actual=pair_actual, pair_log_budget=pair_budget,
                         Cprime=Cp)


def angle_check(m: ModelMap, phi, k: int, n1: int, n2: int,
                samples: int = 64) -> Tuple[float, float]:
    """(max sampled leaf angle, budget) between the depth-n1 and depth-n2
    foliations, computed by the tangent-direction argument formula.

    The angle between the two leaves through a shared point is the argument
    of the partial product of the factor pairs over steps [n1, n2)."""
    if not 0 <= n1 < n2:
        raise DomainError("need 0 <= n1 < n2")
    t = m.table
    worst = 0.0
    for i in range(samples):
        th = Angle(Fraction(i, samples))
        chain = _orbit_chain(m, phi, th, n2 + 1, k)
        prod = 1.0 + 0.0j
        for j in range(n1, n2):
            prod *= (1.0 + phi.eps(chain[j])) / phi.phi_prime(chain[j])
        worst = max(worst, abs(cmath.phase(prod)))
    Cp = getattr(phi, "Cprime", 0.0)
    budget = sum(math.atan(48.0 * Cp * 2.0 ** (-math.sqrt(l + t.N + 2) / 4.0))
                 for l in range(n1, n2))
    return worst, budget


def _orbit_chain(m: ModelMap, phi, theta0: Angle, mmax: int, k: int) -> List[LogPolar]:
    t = m.table
    params = [Fraction(theta0.turns)]
    for j in range(mmax):
        params.append(params[-1] * t.n(k + j + 1))
    z = LogPolar(Fraction(t.R_exp(k + mmax + 1) - 1), Angle(frac_mod1(params[mmax])))
    chain = [z]
    for j in range(mmax - 1, -1, -1):
        n = t.n(k + j + 1)
        pj = frac_mod1(params[j])
        b = ((pj * n).numerator // (pj * n).denominator) % n
        z = LogPolar(z.rho - t.C_exp(k + j + 1), z.theta).root(n, b)
        z = phi.phi(z)
        chain.append(z)
    chain.reverse()
    return chain


# ---------------------------------------------------------------------------
# dilatation integral over the inversion rings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DilatationIntegral:
    r_log2: int
    j_start: int
    I_estimate: float
    omega1: float
    tail_bound: float

    @property
    def ratio(self) -> float:
        return self.I_estimate / self.omega1


def dilatation_integral(t: ParamTable, r: DyadicReal) -> DilatationIntegral:
    """Per-ring estimate of the normalized dilatation mass below radius r
    (for the inverted map), summed from the first ring crossing 1/r:

        sum_j pi ((r_j/(r_j-1))**2 e**(2 pi/M_j) - 1)  ~  (1/2)**j(r),

    compared against omega_1(r)."""
    if r.is_zero or r.sign < 0 or r.exp >= 0:
        raise DomainError("need 0 < r < 1")
    neg_log2_r = -r.log2_frac(64)
    j_start = None
    for j in range(1, t.jmax + 1):
        if neg_log2_r < t.r_exp(j) + math.pi / ((1 << j) * LN2):
            j_start = j
            break
    if j_start is None:
        raise DomainError("r below the built table's resolution")
    total = 0.0
    j = j_start
    while j <= t.jmax:
        ej, Mj = t.r_exp(j), 1 << j
        # (r_j/(r_j-1))^2 = (1 - 2^-e_j)^-2, indistinguishable from 1 once
        # e_j clears the float exponent range
        blow = (1.0 - 2.0 ** -float(min(ej, 1060))) ** -2 if ej < 1060 else 1.0
        summand = math.pi * (blow * math.exp(TWO_PI / Mj) - 1.0)
        total += summand
        if summand < 2.0 ** -70:
            break
        j += 1
    # geometric tail over the remaining rings: summand_j <= 2.2 pi^2 / M_j
    tail = 4.4 * math.pi ** 2 / (1 << min(j, 1060))
    om1 = omega_eval(1.0, r)
    return DilatationIntegral(r_log2=r.exp, j_start=j_start,
                              I_estimate=total + tail, omega1=om1, tail_bound=tail)
