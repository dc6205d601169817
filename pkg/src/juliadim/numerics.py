"""Exact-exponent dyadic and log-polar complex arithmetic.

The magnitudes in this project span ranges like 2**(2**60), so no fixed
floating-point format can hold them.  Numbers are therefore kept in log2
space:

* a positive real magnitude is stored as an exact rational log2
  (``Fraction``), whose integer part is an arbitrary-size integer;
* an angle is an exact rational number of turns in [0, 1);
* a ``DyadicReal`` is a signed significand in [1, 2) at a configurable
  bit width together with an arbitrary-size integer exponent.

All structural arithmetic (multiplying, powering, extracting roots,
comparing) is exact.  The only rounding happens at transcendental entry
points -- adding two complex numbers, taking a log of a sum -- and those
run through mpmath at ``SIG_BITS`` precision and are rounded back into
exact dyadic rationals, so every exponent comparison downstream stays
exact.  Everything here is immutable and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

import mpmath
from mpmath import mpc, mpf

SIG_BITS = 128          # significand / fractional-log2 working precision
ANG_BITS = 4096         # guaranteed angle resolution (turns)
ADD_GUARD = 256         # default dominance gap for lp_add, in bits
MAX_EXP_BITS = 1_000_000  # bit-length budget for exponent integers

LN2 = math.log(2.0)


class NumericsError(Exception):
    pass


class ExponentBudgetError(NumericsError):
    """An exponent integer outgrew the configured bit budget."""


class DivisionByZero(NumericsError):
    pass


class CancellationError(NumericsError):
    """A sum cancelled below representable precision."""


class DomainError(NumericsError):
    pass


def _check_budget(e: int, context: str = "") -> int:
    if abs(e).bit_length() > MAX_EXP_BITS:
        raise ExponentBudgetError(
            f"exponent needs {abs(e).bit_length()} bits (budget {MAX_EXP_BITS})"
            + (f" in {context}" if context else "")
        )
    return e


# ---------------------------------------------------------------------------
# small integer / Fraction helpers
# ---------------------------------------------------------------------------

def round_shift(x: int, s: int) -> int:
    """x / 2**s rounded to nearest, ties to even.  x >= 0."""
    if s <= 0:
        return x << (-s)
    q = x >> s
    rem = x & ((1 << s) - 1)
    half = 1 << (s - 1)
    if rem > half or (rem == half and (q & 1)):
        q += 1
    return q


def frac_mod1(fr: Fraction) -> Fraction:
    return fr - (fr.numerator // fr.denominator)


def frac_quantize(fr: Fraction, bits: int) -> Fraction:
    """Round to the nearest multiple of 2**-bits."""
    scaled = fr * (1 << bits)
    n = scaled.numerator
    d = scaled.denominator
    q = (2 * n + d) // (2 * d) if n >= 0 else -((2 * (-n) + d) // (2 * d))
    return Fraction(q, 1 << bits)


def frac_to_mpf(fr: Fraction, prec: int = SIG_BITS) -> mpf:
    """Fraction -> mpf at the given precision.

    Exact when the denominator is a power of two and the numerator fits in
    prec bits (the common case here); otherwise correctly rounded division.
    """
    num, den = fr.numerator, fr.denominator
    with mpmath.workprec(prec + 8):
        if den & (den - 1) == 0:
            return mpmath.ldexp(mpf(num), -(den.bit_length() - 1))
        return mpf(num) / mpf(den)


def mpf_to_frac(x: mpf) -> Fraction:
    """Exact conversion; every finite mpf is a dyadic rational."""
    sign, man, exp, _ = x._mpf_
    man, exp = int(man), int(exp)  # mpmath may hand back gmpy2 mpz
    if man == 0 and exp != 0:
        raise DomainError(f"non-finite mpf {x!r}")
    v = Fraction(man, 1)
    v = v * Fraction(2) ** exp if exp >= 0 else v / (1 << -exp)
    return -v if sign else v


def ln_big(e: int, add: float = 0.0) -> float:
    """ln(e * ln 2 + add) for an arbitrary-size positive exponent e.

    Used for iterated logs of magnitudes 2**e; `add` is a small scalar
    correction such as ln(significand).
    """
    if e <= 0:
        raise DomainError("ln_big needs a positive exponent")
    if e.bit_length() <= 900:
        inner = e * LN2 + add
        if inner <= 0:
            raise DomainError("iterated log out of domain")
        return math.log(inner)
    # correction add/e is far below double resolution here
    return math.log(e) + math.log(LN2)


_CONST_CACHE: dict = {}


def const_log2_frac(num: int, den: int, bits: int = 192) -> Fraction:
    """log2(num/den) as a Fraction quantized at `bits` fractional bits."""
    key = (num, den, bits)
    if key not in _CONST_CACHE:
        with mpmath.workprec(bits + 16):
            v = mpmath.log(mpf(num) / mpf(den), 2)
        _CONST_CACHE[key] = frac_quantize(mpf_to_frac(v), bits)
    return _CONST_CACHE[key]


def const_mul_log2e(scale: Fraction, bits: int = 192) -> Fraction:
    """scale * log2(e) quantized at `bits` bits; e.g. log2(exp(pi/4))."""
    key = ("log2e", scale, bits)
    if key not in _CONST_CACHE:
        with mpmath.workprec(bits + 16):
            v = frac_to_mpf(scale, bits + 16) / mpmath.ln(2)
        _CONST_CACHE[key] = frac_quantize(mpf_to_frac(v), bits)
    return _CONST_CACHE[key]


def pi_over_ln2_frac(den: int, bits: int = 192) -> Fraction:
    """pi / (den * ln 2) quantized; the log2-width of ring j is pi/(M_j ln2)."""
    key = ("pi_ln2", den, bits)
    if key not in _CONST_CACHE:
        with mpmath.workprec(bits + 16):
            v = mpmath.pi / (mpmath.ln(2) * den)
        _CONST_CACHE[key] = frac_quantize(mpf_to_frac(v), bits)
    return _CONST_CACHE[key]


# ---------------------------------------------------------------------------
# DyadicReal
# ---------------------------------------------------------------------------

class DyadicReal:
    """sign * (man / 2**(prec-1)) * 2**exp with man in [2**(prec-1), 2**prec).

    The exponent is an arbitrary-size integer; the significand
    man / 2**(prec-1) lies in [1, 2).  Values constructed from pure powers
    of two keep significand exactly 1 through mul/div/pow, so the dyadic
    parameter sequences of this project never round.
    """

    __slots__ = ("sign", "man", "exp", "prec")

    def __init__(self, sign: int, man: int, exp: int, prec: int = SIG_BITS):
        if sign == 0 or man == 0:
            self.sign, self.man, self.exp, self.prec = 0, 0, 0, prec
            return
        if man.bit_length() != prec:
            raise NumericsError("unnormalized mantissa")
        self.sign = 1 if sign > 0 else -1
        self.man = man
        self.exp = _check_budget(exp)
        self.prec = prec

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, prec: int = SIG_BITS) -> "DyadicReal":
        return cls(0, 0, 0, prec)

    @classmethod
    def from_pow2(cls, e: int, sign: int = 1, prec: int = SIG_BITS) -> "DyadicReal":
        return cls(sign, 1 << (prec - 1), e, prec)

    @classmethod
    def from_int(cls, n: int, prec: int = SIG_BITS) -> "DyadicReal":
        if n == 0:
            return cls.zero(prec)
        return cls.from_fraction(Fraction(n), prec)

    @classmethod
    def from_float(cls, x: float, prec: int = SIG_BITS) -> "DyadicReal":
        if x == 0.0:
            return cls.zero(prec)
        if not math.isfinite(x):
            raise DomainError("non-finite float")
        return cls.from_fraction(Fraction(x), prec)

    @classmethod
    def from_fraction(cls, fr: Fraction, prec: int = SIG_BITS) -> "DyadicReal":
        if fr == 0:
            return cls.zero(prec)
        sign = 1 if fr > 0 else -1
        num, den = abs(fr.numerator), fr.denominator
        e0 = num.bit_length() - den.bit_length()
        # scale so the integer quotient has prec+1 or prec+2 bits
        shift = prec + 1 - e0
        if shift >= 0:
            q, r = divmod(num << shift, den)
        else:
            q, r = divmod(num, den << (-shift))
        s = q.bit_length() - prec
        rem = q & ((1 << s) - 1)
        q >>= s
        half = 1 << (s - 1)
        if rem > half or (rem == half and (r or (q & 1))):
            q += 1
            if q.bit_length() > prec:
                q >>= 1
                s += 1
        # value ~= q * 2**(s - shift), q normalized to prec bits
        return cls(sign, q, prec - 1 + s - shift, prec)

    # -- accessors ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    @property
    def is_pow2(self) -> bool:
        return self.sign != 0 and self.man == 1 << (self.prec - 1)

    def significand_fraction(self) -> Fraction:
        if self.sign == 0:
            return Fraction(0)
        return Fraction(self.man, 1 << (self.prec - 1))

    def to_fraction(self) -> Fraction:
        if self.sign == 0:
            return Fraction(0)
        v = Fraction(self.man, 1 << (self.prec - 1))
        v = v * Fraction(2) ** self.exp if self.exp >= 0 else v / (1 << -self.exp)
        return self.sign * v

    def log2_frac(self, bits: int = SIG_BITS) -> Fraction:
        """log2 |self| as an exact-integer-part dyadic rational."""
        if self.sign == 0:
            raise DomainError("log2 of zero")
        if self.is_pow2:
            return Fraction(self.exp)
        return self.exp + const_log2_frac(self.man, 1 << (self.prec - 1), bits)

    # -- arithmetic ---------------------------------------------------------

    def mul(self, other: "DyadicReal") -> "DyadicReal":
        if self.sign == 0 or other.sign == 0:
            return DyadicReal.zero(self.prec)
        prec = self.prec
        p = self.man * other.man
        bl = p.bit_length()  # 2*prec or 2*prec - 1
        q = round_shift(p, bl - prec)
        e = self.exp + other.exp + (bl - (2 * prec - 1))
        if q.bit_length() > prec:
            q >>= 1
            e += 1
        return DyadicReal(self.sign * other.sign, q, _check_budget(e, "mul"), prec)

    def div(self, other: "DyadicReal") -> "DyadicReal":
        if other.sign == 0:
            raise DivisionByZero("dyadic division by zero")
        if self.sign == 0:
            return DyadicReal.zero(self.prec)
        prec = self.prec
        t = self.man << (prec + 1)
        q, r = divmod(t, other.man)
        bl = q.bit_length()  # prec+1 or prec+2
        s = bl - prec
        rem = q & ((1 << s) - 1)
        q >>= s
        half = 1 << (s - 1)
        if rem > half or (rem == half and (r or (q & 1))):
            q += 1
        e = self.exp - other.exp + (s - 2)
        if q.bit_length() > prec:
            q >>= 1
            e += 1
        return DyadicReal(self.sign * other.sign, q, _check_budget(e, "div"), prec)

    def pow_int(self, n: int) -> "DyadicReal":
        if n == 0:
            return DyadicReal.from_pow2(0, prec=self.prec)
        if self.sign == 0:
            if n < 0:
                raise DivisionByZero("0 to a negative power")
            return DyadicReal.zero(self.prec)
        if n < 0:
            return DyadicReal.from_pow2(0, prec=self.prec).div(self.pow_int(-n))
        if self.is_pow2:  # exact fast path
            sign = self.sign if n % 2 == 1 or self.sign > 0 else 1
            return DyadicReal(sign, self.man, _check_budget(self.exp * n, "pow_int"), self.prec)
        acc = DyadicReal.from_pow2(0, prec=self.prec)
        base = self
        m = n
        while m:
            if m & 1:
                acc = acc.mul(base)
            m >>= 1
            if m:
                base = base.mul(base)
        return acc

    def mul_pow2(self, e: int) -> "DyadicReal":
        if self.sign == 0:
            return self
        return DyadicReal(self.sign, self.man, _check_budget(self.exp + e), self.prec)

    def abs(self) -> "DyadicReal":
        if self.sign >= 0:
            return self
        return DyadicReal(1, self.man, self.exp, self.prec)

    def neg(self) -> "DyadicReal":
        if self.sign == 0:
            return self
        return DyadicReal(-self.sign, self.man, self.exp, self.prec)

    def cmp(self, other: "DyadicReal") -> int:
        """-1 / 0 / +1; exponents compared first, significands second."""
        if self.sign != other.sign:
            return 1 if self.sign > other.sign else -1
        if self.sign == 0:
            return 0
        flip = self.sign
        if self.exp != other.exp:
            return flip if self.exp > other.exp else -flip
        if self.man != other.man:
            return flip if self.man > other.man else -flip
        return 0

    # -- rendering ----------------------------------------------------------

    def str_pow2(self, digits: int = 24) -> str:
        """'m x2^e' rendering with an arbitrary-length decimal exponent."""
        if self.sign == 0:
            return "0"
        sig = self.significand_fraction()
        num = sig.numerator * 10**digits // sig.denominator
        s = str(num)
        mant = (s[0] + "." + s[1:].rstrip("0")).rstrip(".")
        return f"{'-' if self.sign < 0 else ''}{mant}x2^{self.exp}"

    def str_decimal(self, digits: int = 12) -> str:
        """'d.ddde+X' with exact arbitrary-size decimal exponent X."""
        if self.sign == 0:
            return "0"
        bits = self.exp.bit_length() + 64 if self.exp else 64
        with mpmath.workprec(bits + 64):
            log10v = (mpf(self.exp) + mpmath.log(frac_to_mpf(self.significand_fraction(), 80), 2)) * mpmath.log(2, 10)
            d10 = int(mpmath.floor(log10v))
            m10 = mpmath.power(10, log10v - d10)
            mant = mpmath.nstr(m10, digits)
        sign = "-" if self.sign < 0 else ""
        return f"{sign}{mant}e{'+' if d10 >= 0 else ''}{d10}"

    def __repr__(self) -> str:
        return f"DyadicReal({self.str_pow2()})"

    def __eq__(self, other) -> bool:
        return isinstance(other, DyadicReal) and self.cmp(other) == 0

    def __hash__(self):
        return hash((self.sign, self.man, self.exp))


def dyadic_arith(a: DyadicReal, b: Union[DyadicReal, int, None], op: str, n: Optional[int] = None):
    """Dispatch wrapper: op in {'mul', 'div', 'pow_int', 'cmp'}."""
    if op == "mul":
        return a.mul(b)
    if op == "div":
        return a.div(b)
    if op == "pow_int":
        return a.pow_int(n if n is not None else b)
    if op == "cmp":
        return a.cmp(b)
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# Angle
# ---------------------------------------------------------------------------

class Angle:
    """An angle as an exact rational number of turns in [0, 1).

    Addition and integer multiplication reduce mod 1 exactly; division by n
    with a branch choice is exact as well, so root-then-power round trips
    reproduce the angle bit for bit.  ``ANG_BITS`` is the guaranteed
    resolution for quantized I/O, not a cap on internal accuracy.
    """

    __slots__ = ("turns",)

    def __init__(self, turns: Union[Fraction, int, str]):
        self.turns = frac_mod1(Fraction(turns))

    @classmethod
    def from_float(cls, t: float) -> "Angle":
        return cls(Fraction(t).limit_denominator(1 << 60))

    @classmethod
    def from_fixed(cls, t_int: int, bits: int = ANG_BITS) -> "Angle":
        return cls(Fraction(t_int, 1 << bits))

    def add(self, other: "Angle") -> "Angle":
        return Angle(self.turns + other.turns)

    def sub(self, other: "Angle") -> "Angle":
        return Angle(self.turns - other.turns)

    def mul_int(self, n: int) -> "Angle":
        return Angle(self.turns * n)

    def div(self, n: int, branch: int = 0) -> "Angle":
        if n < 1:
            raise DomainError("division order must be >= 1")
        if not (0 <= branch < n):
            raise DomainError(f"branch {branch} out of range for order {n}")
        return Angle((self.turns + branch) / n)

    def half_turn(self) -> "Angle":
        return Angle(self.turns + Fraction(1, 2))

    def dist(self, other: "Angle") -> Fraction:
        """Circular distance in turns, in [0, 1/2]."""
        d = frac_mod1(self.turns - other.turns)
        return min(d, 1 - d)

    def quantized(self, bits: int = ANG_BITS) -> Fraction:
        return frac_mod1(frac_quantize(self.turns, bits))

    def to_float(self) -> float:
        return float(self.turns)

    def __eq__(self, other) -> bool:
        return isinstance(other, Angle) and self.turns == other.turns

    def __hash__(self):
        return hash(self.turns)

    def __repr__(self) -> str:
        return f"Angle({self.turns})"


# ---------------------------------------------------------------------------
# LogPolar
# ---------------------------------------------------------------------------

class LogPolar:
    """A nonzero complex number as (log2 |z|, arg z / 2pi), or zero.

    rho is an exact rational whose integer part never rounds; theta is an
    exact Angle.  Multiplication, powers and roots act on (rho, theta)
    exactly; additions go through :func:`lp_add`.
    """

    __slots__ = ("rho", "theta", "zero")

    def __init__(self, rho: Union[Fraction, int, None], theta: Union[Angle, Fraction, int] = 0,
                 zero: bool = False):
        if zero or rho is None:
            self.zero = True
            self.rho = Fraction(0)
            self.theta = Angle(0)
            return
        self.zero = False
        self.rho = Fraction(rho)
        _check_budget(self.rho.numerator // self.rho.denominator, "rho")
        self.theta = theta if isinstance(theta, Angle) else Angle(theta)

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero_point(cls) -> "LogPolar":
        return cls(None, zero=True)

    @classmethod
    def from_pow2(cls, e: int, theta: Union[Angle, Fraction, int] = 0) -> "LogPolar":
        return cls(Fraction(e), theta)

    @classmethod
    def from_dyadic(cls, d: DyadicReal, theta: Union[Angle, Fraction, int] = 0,
                    bits: int = SIG_BITS) -> "LogPolar":
        if d.is_zero:
            return cls.zero_point()
        th = theta if isinstance(theta, Angle) else Angle(theta)
        if d.sign < 0:
            th = th.half_turn()
        return cls(d.log2_frac(bits), th)

    @classmethod
    def from_complex(cls, z: complex, bits: int = SIG_BITS) -> "LogPolar":
        if z == 0:
            return cls.zero_point()
        r = abs(z)
        rho = frac_quantize(Fraction(math.log2(r)), bits)
        th = frac_quantize(Fraction(math.atan2(z.imag, z.real) / (2 * math.pi)), bits)
        return cls(rho, Angle(th))

    @classmethod
    def from_mpc_scaled(cls, w: mpc, rho0: Fraction = Fraction(0),
                        prec: int = SIG_BITS) -> "LogPolar":
        """LogPolar of w * 2**rho0 for an mpc w of moderate size."""
        w = mpc(w)
        if w == 0:
            return cls.zero_point()
        with mpmath.workprec(prec + 16):
            rho = mpf_to_frac(mpmath.log(abs(w), 2)) + rho0
            th = mpf_to_frac(mpmath.atan2(w.imag, w.real) / (2 * mpmath.pi))
        return cls(rho, Angle(th))

    # -- structure ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.zero

    def rho_int(self) -> int:
        return self.rho.numerator // self.rho.denominator

    def rho_frac_float(self) -> float:
        return float(self.rho - self.rho_int())

    def mul(self, other: "LogPolar") -> "LogPolar":
        if self.zero or other.zero:
            return LogPolar.zero_point()
        return LogPolar(self.rho + other.rho, self.theta.add(other.theta))

    def div(self, other: "LogPolar") -> "LogPolar":
        if other.zero:
            raise DivisionByZero("log-polar division by zero")
        if self.zero:
            return self
        return LogPolar(self.rho - other.rho, self.theta.sub(other.theta))

    def pow_int(self, n: int) -> "LogPolar":
        if self.zero:
            if n <= 0:
                raise DivisionByZero("0**n for n <= 0")
            return self
        return LogPolar(self.rho * n, self.theta.mul_int(n))

    def root(self, n: int, branch: int = 0) -> "LogPolar":
        if self.zero:
            return self
        if n < 1:
            raise DomainError("root order must be >= 1")
        return LogPolar(self.rho / n, self.theta.div(n, branch))

    def neg(self) -> "LogPolar":
        if self.zero:
            return self
        return LogPolar(self.rho, self.theta.half_turn())

    def conj(self) -> "LogPolar":
        if self.zero:
            return self
        return LogPolar(self.rho, Angle(-self.theta.turns))

    def mul_dyadic(self, d: DyadicReal, bits: int = SIG_BITS) -> "LogPolar":
        if self.zero or d.is_zero:
            return LogPolar.zero_point()
        return self.mul(LogPolar.from_dyadic(d, 0, bits))

    def mul_pow2(self, e: int) -> "LogPolar":
        if self.zero:
            return self
        return LogPolar(self.rho + e, self.theta)

    # -- conversions --------------------------------------------------------

    def to_mpc_scaled(self, rho0: Union[Fraction, int], prec: int = SIG_BITS) -> mpc:
        """self / 2**rho0 as an mpc; |rho - rho0| must be float-safe."""
        if self.zero:
            return mpc(0)
        d = self.rho - Fraction(rho0)
        if abs(d.numerator // d.denominator) > (1 << 24):
            raise DomainError("scale gap too large for complex conversion")
        with mpmath.workprec(prec + 16):
            mag = mpmath.power(2, frac_to_mpf(d, prec + 16))
            t = frac_to_mpf(self.theta.turns, prec + 16)
            return mpc(mag * mpmath.cospi(2 * t), mag * mpmath.sinpi(2 * t))

    def to_complex(self) -> complex:
        return complex(self.to_mpc_scaled(Fraction(0), 64))

    def __repr__(self) -> str:
        if self.zero:
            return "LogPolar(0)"
        ri = self.rho_int()
        return f"LogPolar(rho={ri}{float(self.rho - ri):+.6f}, theta={self.theta.to_float():.6f})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogPolar):
            return False
        if self.zero or other.zero:
            return self.zero and other.zero
        return self.rho == other.rho and self.theta == other.theta

    def __hash__(self):
        return hash((self.zero, self.rho, self.theta.turns))


def lp_mul_pow_root(z: LogPolar, op: str, w: Optional[LogPolar] = None,
                    n: Optional[int] = None, branch: int = 0) -> LogPolar:
    """Dispatch wrapper: op in {'mul', 'pow', 'root'}."""
    if op == "mul":
        return z.mul(w)
    if op == "pow":
        return z.pow_int(n)
    if op == "root":
        return z.root(n, branch)
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# log-polar addition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LpSum:
    value: LogPolar
    negligible: bool = False   # addend fell below the dominance guard
    cancelled: bool = False    # sum fell below representable precision


def _log1p_of_scaled(drho: Fraction, dtheta: Fraction, prec: int) -> Tuple[Fraction, Fraction]:
    """(log2 |1+r|, arg(1+r)/2pi) for r = 2**drho * e^(2pi i dtheta), drho <= 0.

    Exact-rational in, exact-dyadic out.  For r down to ~2**-prec the value
    is computed directly at working precision; far smaller r goes through a
    scaled series so the result stays a well-formed tiny rational instead of
    underflowing.
    """
    gap = -(drho.numerator // drho.denominator)
    wp = prec + 32
    with mpmath.workprec(wp):
        if gap <= prec + 16:
            r = mpmath.power(2, frac_to_mpf(drho, wp))
            t = frac_to_mpf(frac_mod1(dtheta), wp)
            rc = mpc(r * mpmath.cospi(2 * t), r * mpmath.sinpi(2 * t))
            s = 1 + rc
            if s == 0:
                raise CancellationError("exact cancellation")
            ls = mpmath.log(s)
            return (mpf_to_frac(ls.real / mpmath.ln(2)),
                    mpf_to_frac(ls.imag / (2 * mpmath.pi)))
        # scaled series: log(1+r) = r - r^2/2 + r^3/3 - r^4/4 + O(r^5);
        # the 2**E factor rides in exact rationals so nothing underflows
        if gap > MAX_EXP_BITS:
            raise ExponentBudgetError("lp_add gap beyond exponent budget")
        E = -gap
        m_rho = frac_to_mpf(drho - E, wp)          # in [0, 1)
        r_m = mpmath.power(2, m_rho)               # |r| = 2**E * r_m
        t = frac_to_mpf(frac_mod1(dtheta), wp)
        u = mpc(r_m * mpmath.cospi(2 * t), r_m * mpmath.sinpi(2 * t))
        scale = mpmath.ldexp(mpf(1), E)
        w2 = u * u * scale
        w3 = w2 * u * scale
        w4 = w3 * u * scale
        corr = u - w2 / 2 + w3 / 3 - w4 / 4
        shift = Fraction(1, 1 << gap)
        return (mpf_to_frac(corr.real / mpmath.ln(2)) * shift,
                mpf_to_frac(corr.imag / (2 * mpmath.pi)) * shift)


def lp_add(a: LogPolar, b: LogPolar, guard: int = ADD_GUARD,
           prec: int = SIG_BITS) -> LpSum:
    """a + b in log-polar form.

    Dominance: if log2 magnitudes differ by more than `guard` bits the
    dominant term is returned with negligible=True.  Exact cancellation
    (equal rho, opposite theta) returns zero with cancelled=True; a sum
    falling below 2**(rho_max - prec + 8) is likewise flagged cancelled.
    """
    if a.zero:
        return LpSum(b)
    if b.zero:
        return LpSum(a)
    # canonical anchor so the operation is bit-exact commutative
    if (b.rho, b.theta.turns) > (a.rho, a.theta.turns):
        a, b = b, a
    drho = b.rho - a.rho
    gap = -(drho.numerator // drho.denominator) if drho < 0 else 0
    if gap > guard:
        return LpSum(a, negligible=True)
    dtheta = b.theta.sub(a.theta).turns
    if drho == 0 and dtheta == Fraction(1, 2):
        return LpSum(LogPolar.zero_point(), cancelled=True)
    # near-cancellation: 1 + r = -(e^L' - 1) with L' the log of -r; the
    # expm1 route resolves the difference at any depth from the exact
    # rational (drho, dtheta) instead of losing it to working precision
    if abs(drho) <= Fraction(1, 4) and abs(dtheta - Fraction(1, 2)) <= Fraction(1, 16):
        d = expm1_lp(drho, dtheta - Fraction(1, 2), prec)
        if d.is_zero:
            return LpSum(LogPolar.zero_point(), cancelled=True)
        return LpSum(a.mul(d.neg()))
    try:
        lre, lim = _log1p_of_scaled(drho, dtheta, prec)
    except CancellationError:
        return LpSum(LogPolar.zero_point(), cancelled=True)
    if lre < -(prec - 8):
        return LpSum(LogPolar.zero_point(), cancelled=True)
    return LpSum(LogPolar(a.rho + lre, a.theta.add(Angle(lim))))


def lp_sub(a: LogPolar, b: LogPolar, guard: int = ADD_GUARD,
           prec: int = SIG_BITS) -> LpSum:
    return lp_add(a, b.neg(), guard, prec)


def lp_perturb(z: LogPolar, u: mpc, prec: int = SIG_BITS) -> LogPolar:
    """z * (1 + u) for an mpc u with |u| < 1, at any scale of u.

    The relative size of u may be far below 2**-prec; the result's rho then
    carries an exact tiny rational correction rather than losing it.
    """
    if z.zero:
        return z
    u = mpc(u)
    if u == 0:
        return z
    with mpmath.workprec(prec + 32):
        emag = mpmath.mag(u)  # |u| < 2**emag
        if emag > -16:
            v = mpmath.log(1 + u)
        else:
            # log(1+u) = u (1 - u/2 + u^2/3 - ...), depth set by the scale
            nterms = max(1, (prec + 48) // max(15, -int(emag)))
            series = mpc(1)
            term = mpc(1)
            for i in range(2, nterms + 2):
                term = term * (-u)
                series += term / i
            v = u * series
        lre = mpf_to_frac(v.real / mpmath.ln(2))
        lim = mpf_to_frac(v.imag / (2 * mpmath.pi))
    return LogPolar(z.rho + lre, z.theta.add(Angle(lim)))


def lp_ratio_mpc(a: LogPolar, b: LogPolar, prec: int = SIG_BITS) -> mpc:
    """a / b as an mpc; requires a moderate magnitude gap."""
    return a.div(b).to_mpc_scaled(Fraction(0), prec)


def frac_ilog2(fr: Fraction) -> int:
    """floor(log2 |fr|) for fr != 0, exact."""
    if fr == 0:
        raise DomainError("ilog2 of zero")
    num, den = abs(fr.numerator), fr.denominator
    e = num.bit_length() - den.bit_length()
    # |fr| in [2**(e-1), 2**(e+1)); settle which half
    if e >= 0:
        return e if num >= (den << e) else e - 1
    return e if (num << -e) >= den else e - 1


def expm1_lp(drho: Fraction, dtheta: Fraction, prec: int = SIG_BITS) -> LogPolar:
    """(2**drho * e^(2 pi i dtheta)) - 1 as a LogPolar, for small inputs.

    Accurate down to arbitrarily tiny (drho, dtheta): the result's rho keeps
    an exact rational value around floor(log2 |L|), L = drho ln2 + 2 pi i
    dtheta, instead of underflowing.  Used for ratios of nearby points.
    """
    dtheta = frac_mod1(dtheta + Fraction(1, 2)) - Fraction(1, 2)  # wrap to [-1/2, 1/2)
    if drho == 0 and dtheta == 0:
        return LogPolar.zero_point()
    size = max(abs(drho), abs(dtheta))
    wp = prec + 64
    with mpmath.workprec(wp):
        L = mpc(frac_to_mpf(drho, wp) * mpmath.ln(2),
                frac_to_mpf(dtheta, wp) * 2 * mpmath.pi)
        if size > Fraction(1, 64):
            v = mpmath.exp(L) - 1
            if v == 0:
                return LogPolar.zero_point()
            return LogPolar.from_mpc_scaled(v, Fraction(0), prec)
        # e^L - 1 = L * (1 + L/2 + L^2/6 + ...); term count adapted to the
        # scale of L so ultra-tiny inputs cost a couple of multiplies
        nterms = max(2, (prec + 48) // max(16, -frac_ilog2(size)) + 1)
        term = mpc(1)
        series = mpc(1)
        for i in range(2, nterms + 2):
            term = term * L / i
            series += term
        v = L * series
        return LogPolar.from_mpc_scaled(v, Fraction(0), prec)


def pow2_minus1_log2(delta: Fraction, prec: int = SIG_BITS) -> Fraction:
    """log2(2**delta - 1) for delta > 0, stable for arbitrarily tiny delta.

    mpf mantissas carry arbitrary exponents, so a single expm1 path covers
    deltas down to 2**-huge without underflow.
    """
    if delta <= 0:
        raise DomainError("needs delta > 0")
    with mpmath.workprec(prec + 32):
        v = mpmath.expm1(frac_to_mpf(delta, prec + 32) * mpmath.ln(2))
        return mpf_to_frac(mpmath.log(v, 2))
