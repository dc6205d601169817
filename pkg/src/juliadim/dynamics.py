"""Orbit iteration, inverse branches, and the mapping-inclusion certificates.

Orbits are iterated in exact log-polar arithmetic.  Every step through a
piece of degree d multiplies the angle by d, which amplifies the input's
angular quantization by log2(d) bits; the iterator budgets this against
the configured angle resolution and truncates rather than guessing.

Inverse branches come in three kinds:

* ``VkRoot(k, branch)``     -- exact root extraction of target / C_k,
* ``PetalInverse(k, j)``    -- the zero-ring blend is quadratic in z**n_k,
                               so the petal preimage is closed-form, then
                               Newton-polished,
* ``OriginBranch(i)``       -- Newton on the origin polynomial, seeded at
                               t/r_N (i = 0) or at zero_i + t/q'(zero_i).

The inclusion certificates sample circle extrema of log2 |f| and compare
them against the target annuli in exact exponent arithmetic, with the seam
deviation carried as an explicit bit margin.
"""

from __future__ import annotations

import math

import mpmath
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from .numerics import (
    ANG_BITS,
    DomainError,
    LogPolar,
    lp_add,
    lp_sub,
    lp_perturb,
    pi_over_ln2_frac,
)
from .geometry import Region, classify
from .modelmap import ModelMap, qN_landmarks
from .params import CertificateReport, omega_from_rho

ONE = LogPolar(Fraction(0), 0)


class BranchError(DomainError):
    pass


class ItineraryError(DomainError):
    pass


# ---------------------------------------------------------------------------
# inverse branches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VkRoot:
    k: int
    branch: int = 0


@dataclass(frozen=True)
class PetalInverse:
    k: int
    j: int


@dataclass(frozen=True)
class OriginBranch:
    index: int


InverseBranchSpec = Union[VkRoot, PetalInverse, OriginBranch]


def _residual(m: ModelMap, z: LogPolar, target: LogPolar) -> Tuple[float, float]:
    got, _ = m.eval(z)
    if got.is_zero or target.is_zero:
        return math.inf, math.inf
    return abs(float(got.rho - target.rho)), float(got.theta.dist(target.theta))


def _newton_polish(m: ModelMap, z: LogPolar, target: LogPolar, tol: float,
                   max_iter: int = 64) -> LogPolar:
    for _ in range(max_iter):
        dr, dth = _residual(m, z, target)
        if dr < tol and dth < tol:
            return z
        fz, _ = m.eval(z)
        diff = lp_sub(fz, target, guard=m.guard, prec=m.prec).value
        if diff.is_zero:
            return z
        dz, _ = m.deriv(z)
        step = diff.div(dz).div(z)  # relative correction
        if step.rho > -2:  # reject wild steps
            raise BranchError("newton step out of basin")
        wide = max(m.guard, 96 - step.rho_int())
        upd = lp_sub(ONE, step, guard=wide, prec=m.prec).value
        z = z.mul(upd)
    dr, dth = _residual(m, z, target)
    raise BranchError(f"newton stagnated: residual log2-mag {dr:.3g}, turns {dth:.3g}")


def inverse_step(m: ModelMap, target: LogPolar, branch: InverseBranchSpec,
                 tol: float = 2.0 ** -64) -> LogPolar:
    """One inverse branch applied to `target`; the result re-evaluates to the
    target within tol both in log2 magnitude and in turns."""
    t = m.table
    if isinstance(branch, VkRoot):
        k = branch.k
        nk = t.n(k)
        if not (0 <= branch.branch < nk):
            raise BranchError(f"root branch {branch.branch} out of range")
        lo, hi = t.R_exp(k + 1) - 2, t.R_exp(k + 1) + 2
        if not (lo <= target.rho <= hi):
            raise BranchError(f"V-branch target must lie in the level-{k + 1} annulus")
        z = LogPolar(target.rho - t.C_exp(k), target.theta).root(nk, branch.branch)
        return z

    if isinstance(branch, PetalInverse):
        k, j = branch.k, branch.j
        nk = t.n(k)
        if not 1 <= j <= nk:
            raise BranchError(f"petal index {j} out of range")
        if target.is_zero:
            return m.ring_zero(k + t.N - 1, j)
        if target.rho > t.R_exp(k + 1) + 2:
            raise BranchError("petal inverse defined for |target| <= 4 R_{k+1}")
        ring = k + t.N - 1
        zc = m.zcap(ring)
        # v = z**n_k solves v(v - Z) = tau, tau = target R_k**n_k / C_k;
        # the zero-side root is v = Z (1 + h/2), h = sqrt(1 + 4 tau/Z^2) - 1
        tau_rho = target.rho + nk * t.R_exp(k) - t.C_exp(k)
        rho_q = tau_rho + 2 - 2 * zc.rho
        q = LogPolar(rho_q, target.theta.sub(zc.theta).sub(zc.theta))
        # h by the binomial series in mpc: a target far below the petal's
        # full image makes q (hence the offset from the ring zero)
        # exponentially small, which mpc exponents and the exact-rational
        # perturbation both carry without underflow
        q_mpc = q.to_mpc_scaled(Fraction(0), m.prec)
        with mpmath.workprec(m.prec + 32):
            coef = mpmath.mpf(1) / 2
            powq = q_mpc
            h = coef * powq
            eps = mpmath.ldexp(mpmath.mpf(1), -(m.prec + 16))
            for n in range(1, 200):
                coef = coef * (mpmath.mpf(1) / 2 - n) / (n + 1)
                powq = powq * q_mpc
                term = coef * powq
                h += term
                if abs(term) <= abs(h) * eps:
                    break
            v = lp_perturb(zc, h / 2, m.prec)
        z = v.root(nk, j - 1)
        return _newton_polish(m, z, target, tol)

    if isinstance(branch, OriginBranch):
        N = t.N
        deg = 1 << N
        if not 0 <= branch.index < deg:
            raise BranchError(f"origin branch {branch.index} out of range")
        if target.rho > t.R_exp(1) + 2:
            raise BranchError("origin inverse defined for |target| <= 4 R_1")
        if branch.index == 0:
            if target.is_zero:
                return LogPolar.zero_point()
            z0 = LogPolar(target.rho - t.r_exp(N), target.theta)
        else:
            w = qN_landmarks(m).zeros[branch.index - 1]
            # q'(zero) = r_N (1 - M_N): real negative
            dq = LogPolar(Fraction(t.r_exp(N)) + _log2_int(deg - 1), Fraction(1, 2))
            z0 = lp_add(w, target.div(dq), guard=max(m.guard, 512), prec=m.prec).value
        return _newton_polish(m, z0, target, tol)

    raise BranchError(f"unknown branch kind {branch!r}")


def _log2_int(n: int) -> Fraction:
    from .numerics import const_log2_frac
    return const_log2_frac(n, 1)


def branch_of_point(m: ModelMap, z: LogPolar) -> Optional[InverseBranchSpec]:
    """The inverse-branch spec that recovers z from its image, when z sits in
    a V zone, a petal, or the origin disk."""
    t = m.table
    reg = classify(t, z, model=m)
    if reg.kind == "V":
        nk = t.n(reg.k)
        return VkRoot(reg.k, int(z.theta.turns * nk))
    if reg.kind == "P":
        return PetalInverse(reg.k, reg.j)
    if reg.kind == "D":
        lm = qN_landmarks(m)
        if not z.is_zero and z.rho > lm.zero_rho - 2:
            best, bd = 0, None
            for i, w in enumerate(lm.zeros, start=1):
                d = z.theta.dist(w.theta)
                if bd is None or d < bd:
                    best, bd = i, d
            return OriginBranch(best)
        return OriginBranch(0)
    return None


# ---------------------------------------------------------------------------
# orbits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Classification:
    kind: str                      # FatouEscape | ECandidate | YLike | Z1Like | Z2Like | Truncated
    value: Optional[int] = None    # escape level / backwards count / entry step
    reason: str = ""

    def __str__(self):
        if self.kind == "Truncated":
            return f"Truncated({self.reason})"
        return self.kind if self.value is None else f"{self.kind}({self.value})"


@dataclass
class OrbitRecord:
    points: List[LogPolar]
    regions: List[Region]
    orbit_seq: List[Optional[int]]
    backwards_events: List[int]
    classification: Classification

    def region_strs(self) -> List[str]:
        return [str(r) for r in self.regions]


def _backfill_negative_indices(regions: List[Region]) -> List[Region]:
    """Rewrite runs of D tags that exit into level 1 as negative-index tags."""
    out = list(regions)
    i = 0
    while i < len(out):
        if out[i].kind != "D":
            i += 1
            continue
        j = i
        while j < len(out) and out[j].kind == "D":
            j += 1
        if j < len(out) and out[j].kind in ("A", "V", "P", "B") and (out[j].k or 0) == 1:
            exit_kind = "B" if out[j].kind == "B" else "A"
            for s in range(i, j):
                out[s] = Region(exit_kind, 1 - (j - s))
        i = j
    return out


def iterate_orbit(m: ModelMap, z: LogPolar, nmax: int,
                  margin_bits: float = 0.0, phi_budget: bool = False,
                  ang_bits: int = ANG_BITS) -> OrbitRecord:
    """Forward orbit with region bookkeeping.

    Stops early on entering an escape gap (FatouEscape) or when the angular
    amplification budget runs out (Truncated).  With phi_budget=True the
    classification margin grows by the distortion budget C' omega(1/|z|) at
    each point, on top of `margin_bits`.
    """
    if nmax < 1:
        raise DomainError("nmax must be >= 1")
    t = m.table
    points = [z]
    regions: List[Region] = []
    bits_used = 0
    truncated: Optional[str] = None
    escaped = False
    for n in range(nmax + 1):
        zn = points[-1]
        mb = margin_bits
        if phi_budget and not zn.is_zero and zn.rho > 4:
            w = t.Cprime * omega_from_rho(t.p, zn.rho_int())
            mb += math.log2(1.0 + w) + m.seam_margin_bits
        try:
            reg = classify(t, zn, margin=mb, model=m)
        except DomainError:
            truncated = f"table exhausted at step {n}"
            break
        regions.append(reg)
        if reg.kind == "boundary":
            truncated = f"boundary at step {n}"
            break
        if reg.kind == "B":
            escaped = True
            break
        if n == nmax:
            break
        piece = m.piece_of(zn) if not zn.is_zero else None
        cost = t.N if piece is None or piece.kind in ("origin", "bump") else piece.index + 1
        if bits_used + cost > ang_bits - 64:
            truncated = f"angular budget: needs {bits_used + cost + 64} bits"
            break
        bits_used += cost
        w, _ = m.eval(zn)
        points.append(w)
    regions = _backfill_negative_indices(regions)
    orbit_seq: List[Optional[int]] = [
        r.k if r.kind in ("A", "V", "P") else None for r in regions
    ]
    backwards = [
        n for n in range(1, len(orbit_seq))
        if orbit_seq[n] is not None and orbit_seq[n - 1] is not None
        and orbit_seq[n] < orbit_seq[n - 1] + 1
    ]
    cls = _classify_window(regions, orbit_seq, backwards, truncated, escaped)
    return OrbitRecord(points, regions, orbit_seq, backwards, cls)


def _classify_window(regions, orbit_seq, backwards, truncated, escaped) -> Classification:
    if truncated:
        return Classification("Truncated", reason=truncated)
    if escaped:
        k = regions[-1].k
        return Classification("FatouEscape", k)
    if all(r.kind == "D" for r in regions):
        return Classification("ECandidate")
    # full window spent inside the A levels; the window labels are
    # extrapolations: a trailing V run covering at least half the window
    # reads as curve-bound, recurring petal visits as singleton-bound,
    # backwards moves as the moving-backwards set
    start = (backwards[-1] if backwards else 0)
    tail = regions[start:]
    v_from = None
    for i in range(len(regions) - 1, start - 1, -1):
        if regions[i].kind != "V":
            break
        v_from = i
    if v_from is not None and (len(regions) - v_from) * 2 >= len(regions) - start:
        return Classification("Z1Like", v_from)
    if any(r.kind == "P" for r in tail):
        return Classification("Z2Like")
    if backwards:
        return Classification("YLike", len(backwards))
    if v_from is not None:
        return Classification("Z1Like", v_from)
    return Classification("Truncated", reason="window inconclusive")


# ---------------------------------------------------------------------------
# mapping-inclusion certificates
# ---------------------------------------------------------------------------

def _circle_extrema(m: ModelMap, rho: Fraction, samples: int) -> Tuple[Fraction, Fraction]:
    lo = hi = None
    for i in range(samples):
        w, _ = m.eval(LogPolar(rho, Fraction(i, samples)))
        if w.is_zero:
            raise DomainError("circle passes through a zero")
        if lo is None or w.rho < lo:
            lo = w.rho
        if hi is None or w.rho > hi:
            hi = w.rho
    return lo, hi


def _petal_boundary_extrema(m: ModelMap, k: int, samples: int) -> Tuple[Fraction, Fraction]:
    # the blend depends on z only through z**n_k, so every petal is an exact
    # rotation of the first: sampling one boundary covers them all
    import mpmath
    t = m.table
    nk = t.n(k)
    w = m.ring_zero(k + t.N - 1, 1)
    rad_rel = -nk - pi_over_ln2_frac(4 * nk)
    lo = hi = None
    with mpmath.workprec(m.prec + 32):
        base = mpmath.power(2, mpmath.mpf(rad_rel.numerator) / rad_rel.denominator)
        for i in range(samples):
            ang = mpmath.mpf(2) * mpmath.pi * i / samples
            u = base * mpmath.mpc(mpmath.cos(ang), mpmath.sin(ang))
            z = lp_perturb(w, u, m.prec)
            fz, _ = m.eval(z)
            if fz.is_zero:
                raise DomainError("petal boundary hit a zero")
            if lo is None or fz.rho < lo:
                lo = fz.rho
            if hi is None or fz.rho > hi:
                hi = fz.rho
    return lo, hi


def verify_inclusions(m: ModelMap, k: int, samples: int = 4096,
                      margin_bits: Optional[float] = None) -> CertificateReport:
    """Sampled circle extrema of log2 |f| against the target annuli.

    Upper-bound rows pass when max + margin < target, lower-bound rows when
    min - margin > target; the margin defaults to the seam deviation budget.
    """
    if samples < 1 << 12:
        raise DomainError("inclusion sampling needs >= 4096 points per circle")
    t = m.table
    mb = Fraction(m.seam_margin_bits if margin_bits is None else margin_bits
                  ).limit_denominator(1 << 20)
    rep = CertificateReport(f"mapping inclusions k={k}")

    from .geometry import LOG2_2_5, LOG2_3_5

    def upper(name, got, target_rho):
        rep.add(name, k, got + mb < target_rho, f"{float(got):.6f}", f"{float(target_rho):.6f}")

    def lower(name, got, target_rho):
        rep.add(name, k, got - mb > target_rho, f"{float(got):.6f}", f"{float(target_rho):.6f}")

    e1, e2, e3 = t.R_exp(k), t.R_exp(k + 1), t.R_exp(k + 2)

    lo, hi = _circle_extrema(m, e1 + LOG2_2_5, samples)
    upper("inner_circle_max_below_quarter_next", hi, Fraction(e2 - 2))
    lower("inner_circle_min_above_8Rk", lo, Fraction(e1 + 3))

    lo, hi = _circle_extrema(m, e1 + LOG2_3_5, samples)
    lower("outer_circle_min_above_4Rk1", lo, Fraction(e2 + 2))
    upper("outer_circle_max_below_eighth_Rk2", hi, Fraction(e3 - 3))

    for name, rho in (
        ("gap_inner_circle", Fraction(e1 + 2)),
        ("gap_outer_circle", Fraction(e2 - 2)),
        ("ring54_circle", e1 + const_log2(5, 4)),
    ):
        lo, hi = _circle_extrema(m, rho, samples)
        lower(f"{name}_min_above_8Rk1", lo, Fraction(e2 + 3))
        upper(f"{name}_max_below_eighth_Rk2", hi, Fraction(e3 - 3))

    lo, hi = _petal_boundary_extrema(m, k, samples)
    lower("petal_boundary_min_above_4Rk1", lo, Fraction(e2 + 2))
    upper("petal_boundary_max_below_quarter_Rk2", hi, Fraction(e3 - 2))
    return rep


def const_log2(a: int, b: int) -> Fraction:
    from .numerics import const_log2_frac
    return const_log2_frac(a, b)


def check_singular_values(m: ModelMap) -> CertificateReport:
    """Every critical value of every piece lands in the asserted escape gap."""
    t = m.table
    rep = CertificateReport("singular values")
    lm = qN_landmarks(m)
    lo = Fraction(t.r_exp(t.N) + 3)
    hi = Fraction(t.r_exp(t.N + 1)) - 4 - Fraction(1, 2)
    worst_lo = min(cv.rho for cv in lm.crit_values)
    worst_hi = max(cv.rho for cv in lm.crit_values)
    rep.add("poly_crit_values_above_8rN", t.N, worst_lo > lo,
            f"{float(worst_lo):.6f}", f"{float(lo):.6f}")
    rep.add("poly_crit_values_below_rN1_16sqrt2", t.N, worst_hi < hi,
            f"{float(worst_hi):.6f}", f"{float(hi):.6f}")

    half_pi_log2e = pi_over_ln2_frac(2)
    for k in range(1, min(t.kmax_shifted(), t.kmax) + 1):
        nk = t.n(k)
        # exact exponent identity C_k R_k^{n_k} = 2^{n_k} R_{k+1}
        lhs = t.C_exp(k) + nk * t.R_exp(k)
        rhs = nk + t.R_exp(k + 1)
        rep.add("power_identity", k, lhs == rhs, lhs, rhs)
        cv = Fraction(rhs) + half_pi_log2e - 2   # modulus (e^(pi/2)/4) 2^{n_k} R_{k+1}
        rep.add("ring_crit_value_above_8Rk1", k, cv > t.R_exp(k + 1) + 3,
                f"{float(cv - t.R_exp(k + 1)):.4f}+e(R_{k + 1})", t.R_exp(k + 1) + 3)
        rep.add("ring_crit_value_below_eighth_Rk2", k, cv < t.R_exp(k + 2) - 3,
                str(cv.numerator // cv.denominator), t.R_exp(k + 2) - 3)
        # stand-in critical circle sits a 1/n_k-order factor above the ring
        shift = pi_over_ln2_frac(4 * nk) - Fraction(1, nk)
        rep.add("ring_crit_point_radius_shift", k, abs(shift) < Fraction(1, nk),
                f"2^({float(shift):.3g}) relative", "within 2^(1/n_k)",
                note="ring radius vs blend critical circle; both reported")
    return rep


# ---------------------------------------------------------------------------
# backward construction of prescribed itineraries
# ---------------------------------------------------------------------------

ItinEntry = Union[str, Region, Tuple[Union[str, Region], int]]


def _normalize_itinerary(entries: Sequence[ItinEntry]) -> List[Tuple[Region, Optional[int]]]:
    out = []
    for it in entries:
        br = None
        if isinstance(it, tuple):
            it, br = it
        if isinstance(it, str):
            if ":" in it:
                it, brs = it.split(":")
                br = int(brs)
            it = Region.parse(it)
        out.append((it, br))
    return out


def region_level(r: Region) -> Optional[int]:
    return r.k if r.kind in ("A", "V", "P", "B") else None


def itinerary_precision(m: ModelMap, entries, anchor: LogPolar) -> int:
    """Working bits needed to re-verify an itinerary by forward iteration.

    A step through a degree-n piece amplifies any earlier evaluation error
    by n; a petal step at level k targeting level j amplifies it by about
    2**(n_k + (log2 R_{k+1} - log2 R_j)) because the blend is evaluated that
    deep inside its zero.  Classifying the step-i tag then needs the
    accumulated error below the tag's own resolution.
    """
    t = m.table
    amp: List[int] = []
    tol: List[int] = []
    for i, (reg, _) in enumerate(entries):
        k = reg.k
        if reg.kind == "V":
            amp.append(t.N + k - 1)
            tol.append(16)
            continue
        if i + 1 < len(entries):
            jlvl = region_level(entries[i + 1][0])
        else:
            jlvl = k + 1
        gap = 0
        if jlvl is not None and jlvl <= k + 1:
            gap = max(0, t.R_exp(k + 1) - t.R_exp(jlvl))
        amp.append(t.n(k) + gap + 8)
        tol.append(t.n(k) + 8)
    acc = 0
    need = 192
    for i in range(len(entries)):
        need = max(need, acc + tol[i] + 128)
        acc += amp[i]
    return need


def backward_construct(m: ModelMap, itinerary: Sequence[ItinEntry],
                       anchor: LogPolar, tol: float = 2.0 ** -64,
                       verify: bool = True,
                       budget_bits: Optional[int] = None) -> LogPolar:
    """A point whose forward orbit realizes the given region tags.

    itinerary[i] prescribes the region of f^i(z); `anchor` is the point the
    orbit reaches after the last step.  Entries are regions ('V(2)',
    'P(3,17)', Region objects) with an optional branch choice 'V(2):5'.
    """
    entries = _normalize_itinerary(itinerary)
    if not entries:
        raise ItineraryError("empty itinerary")
    budget = budget_bits if budget_bits is not None else ANG_BITS
    need = itinerary_precision(m, entries, anchor)
    if need > budget:
        raise DomainError(
            f"itinerary needs about {need} working bits, budget is {budget}; "
            "deep or backwards petal visits are out of the configured resolution")
    if need > m.prec:
        import dataclasses
        m = dataclasses.replace(m, prec=need, guard=max(m.guard, need))
    for i in range(len(entries) - 1):
        cur, nxt = entries[i][0], entries[i + 1][0]
        lc, ln = region_level(cur), region_level(nxt)
        if lc is None or ln is None:
            raise ItineraryError(f"entry {i}: only V/P tags are realizable, got {cur}")
        if ln > lc + 1:
            raise ItineraryError(
                f"entry {i}: level may rise by at most one ({cur} -> {nxt})")
        if ln <= lc and cur.kind != "P":
            raise ItineraryError(
                f"entry {i}: a non-increasing step needs a petal, got {cur} -> {nxt}")
        if cur.kind == "V" and ln != lc + 1:
            raise ItineraryError(
                f"entry {i}: a V step moves up exactly one level ({cur} -> {nxt})")
    z = anchor
    for reg, br in reversed(entries):
        if reg.kind == "V":
            z = inverse_step(m, z, VkRoot(reg.k, br or 0), tol)
        elif reg.kind == "P":
            z = inverse_step(m, z, PetalInverse(reg.k, reg.j or 1), tol)
        else:
            raise ItineraryError(f"unsupported itinerary tag {reg}")
    if verify:
        got = iterate_orbit(m, z, nmax=len(entries),
                            ang_bits=max(ANG_BITS, need + 64)).regions[:len(entries)]
        for i, ((want, _), have) in enumerate(zip(entries, got)):
            ok = want.kind == have.kind and want.k == have.k and (
                want.kind != "P" or want.j is None or want.j == have.j)
            if not ok:
                raise ItineraryError(f"verification failed at step {i}: "
                                     f"wanted {want}, got {have}")
    return z
