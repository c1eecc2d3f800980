"""Certified arithmetic for positive reals tracked in log-domain.

Every quantity that can span thousands of binary orders of magnitude
(gauge values at deep dyadic levels, branching targets, premeasure costs)
is carried as an enclosure of its natural logarithm: a pair of MPFR
endpoints computed with directed rounding, so the true value always lies
inside.  Alongside the enclosure, values of the special shape

    c * 2**e        (c a positive rational, e a rational exponent)

keep an exact tag.  All decision points (threshold comparisons, integer
floors) prefer the exact tag and only fall back to endpoint comparison,
with precision escalation, when no exact form exists.

Comparisons are three-valued: certainly less, certainly greater, or
indeterminate when the enclosures overlap.  Callers that must decide
escalate precision up to a cap and then take a deterministic
"not greater" branch, recording a warning.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import gmpy2
from gmpy2 import mpfr, mpz

from .errors import InvalidParameterError, TooLargeError

DEFAULT_PRECISION = 256
COMPARISON_PRECISION_CAP = 4096
# Integer enclosures for chain targets need precision proportional to the
# bit length of the target itself; this cap bounds that, not comparisons.
INTEGER_ENCLOSURE_PRECISION_CAP = 1 << 22

# Exact comparisons of c*2**(p/q) values raise rationals to the q-th power;
# beyond these sizes the enclosure path is cheaper and is used instead.
_EXACT_ROOT_CAP = 64
_EXACT_SHIFT_CAP = 1 << 24

_CTX_CACHE: dict[tuple[int, object], gmpy2.context] = {}


def _ctx(prec: int, rounding) -> gmpy2.context:
    key = (prec, rounding)
    ctx = _CTX_CACHE.get(key)
    if ctx is None:
        ctx = gmpy2.context(precision=prec, round=rounding,
                            trap_overflow=False, trap_underflow=False,
                            trap_inexact=False, trap_invalid=False)
        _CTX_CACHE[key] = ctx
    return ctx


def _down(prec: int) -> gmpy2.context:
    return _ctx(prec, gmpy2.RoundDown)


def _up(prec: int) -> gmpy2.context:
    return _ctx(prec, gmpy2.RoundUp)


# ---------------------------------------------------------------------------
# interval kernel: pairs (lo, hi) of mpfr with lo <= true <= hi
# ---------------------------------------------------------------------------

Iv = tuple  # (mpfr, mpfr)


def iv_from_int(n: int, prec: int) -> Iv:
    return (_down(prec).div(n, 1), _up(prec).div(n, 1))


def iv_from_fraction(fr: Fraction, prec: int) -> Iv:
    return (_down(prec).div(fr.numerator, fr.denominator),
            _up(prec).div(fr.numerator, fr.denominator))


def iv_ln2(prec: int) -> Iv:
    return (_down(prec).const_log2(), _up(prec).const_log2())


def iv_add(a: Iv, b: Iv, prec: int) -> Iv:
    return (_down(prec).add(a[0], b[0]), _up(prec).add(a[1], b[1]))


def iv_neg(a: Iv) -> Iv:
    return (-a[1], -a[0])


def iv_sub(a: Iv, b: Iv, prec: int) -> Iv:
    return (_down(prec).sub(a[0], b[1]), _up(prec).sub(a[1], b[0]))


def iv_mul_pos_fraction(a: Iv, fr: Fraction, prec: int) -> Iv:
    """Multiply by an exact rational fr > 0; the interval may span zero."""
    if fr <= 0:
        raise InvalidParameterError("scalar must be positive")
    f = iv_from_fraction(fr, prec)
    lo = _down(prec).mul(a[0], f[1] if a[0] < 0 else f[0])
    hi = _up(prec).mul(a[1], f[1] if a[1] > 0 else f[0])
    return (lo, hi)


def iv_exp(a: Iv, prec: int) -> Iv:
    return (_down(prec).exp(a[0]), _up(prec).exp(a[1]))


def iv_log(a: Iv, prec: int) -> Iv:
    if not a[0] > 0:
        raise InvalidParameterError("log of a non-positive enclosure")
    return (_down(prec).log(a[0]), _up(prec).log(a[1]))


def iv_log_plus(a: Iv, prec: int) -> Iv:
    """log_+(x) = log(x) for x > 1, else 0, extended to enclosures."""
    if a[1] <= 1:
        z = mpfr(0)
        return (z, z)
    hi = _up(prec).log(a[1])
    if a[0] > 1:
        return (_down(prec).log(a[0]), hi)
    return (mpfr(0), hi if hi > 0 else mpfr(0))


def iv_log_int(n, prec: int) -> Iv:
    return (_down(prec).log(n), _up(prec).log(n))


# ---------------------------------------------------------------------------
# exact values c * 2**e
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Pow2:
    """An exact positive real c * 2**e with rational c > 0 and rational e."""

    coeff: Fraction
    exp2: Fraction

    def __post_init__(self):
        if self.coeff <= 0:
            raise InvalidParameterError("Pow2 coefficient must be positive")

    def mul(self, other: "Pow2") -> "Pow2":
        return Pow2(self.coeff * other.coeff, self.exp2 + other.exp2)

    def div(self, other: "Pow2") -> "Pow2":
        return Pow2(self.coeff / other.coeff, self.exp2 - other.exp2)

    def recip(self) -> "Pow2":
        return Pow2(1 / self.coeff, -self.exp2)

    def mul_int(self, n: int) -> "Pow2":
        return Pow2(self.coeff * n, self.exp2)

    def to_fraction(self) -> Optional[Fraction]:
        e = self.exp2
        if e.denominator != 1 or abs(e.numerator) > _EXACT_SHIFT_CAP:
            return None
        n = e.numerator
        if n >= 0:
            return self.coeff * (1 << n)
        return self.coeff / (1 << -n)

    def compare(self, other: "Pow2") -> Optional[int]:
        """Exact three-way comparison; None when sizes defeat exactness."""
        if self.coeff == other.coeff and self.exp2 == other.exp2:
            return 0
        d = self.exp2 - other.exp2
        r = self.coeff / other.coeff
        # decide r * 2**d vs 1
        q = d.denominator
        p = d.numerator
        if q > _EXACT_ROOT_CAP or abs(p) > _EXACT_SHIFT_CAP:
            return None
        if (r.numerator.bit_length() + r.denominator.bit_length()) * q > _EXACT_SHIFT_CAP:
            return None
        lhs = r.numerator ** q
        rhs = r.denominator ** q
        if p >= 0:
            lhs <<= p
        else:
            rhs <<= -p
        if lhs == rhs:
            return 0
        return 1 if lhs > rhs else -1

    def floor_int(self) -> Optional[mpz]:
        """Exact floor of the value, or None when sizes defeat exactness."""
        e = self.exp2
        n = e.numerator // e.denominator
        frac = e - n
        q = frac.denominator
        u = frac.numerator  # 0 <= u < q
        a, b = self.coeff.numerator, self.coeff.denominator
        if q > _EXACT_ROOT_CAP:
            return None
        total_shift = abs(n) * q + u
        if total_shift > _EXACT_SHIFT_CAP or (a.bit_length() + b.bit_length()) * q > _EXACT_SHIFT_CAP:
            return None
        if q == 1:
            if n >= 0:
                return mpz((a << n) // b)
            return mpz(a // (b << -n))
        # value**q = (a**q * 2**(n*q + u)) / b**q; take the exact q-th root floor
        A = mpz(a) ** q
        B = mpz(b) ** q
        E = n * q + u
        if E >= 0:
            A <<= E
        else:
            B <<= -E
        r = gmpy2.iroot(A // B, q)[0]
        while (r + 1) ** q * B <= A:
            r += 1
        while r > 0 and r ** q * B > A:
            r -= 1
        return mpz(r)

    def log_iv(self, prec: int) -> Iv:
        c, e = self.coeff, self.exp2
        lo = _down(prec).sub(_down(prec).log(c.numerator), _up(prec).log(c.denominator))
        hi = _up(prec).sub(_up(prec).log(c.numerator), _down(prec).log(c.denominator))
        if e != 0:
            l2 = iv_ln2(prec)
            m = iv_mul_pos_fraction(l2, abs(e), prec)
            if e > 0:
                lo = _down(prec).add(lo, m[0])
                hi = _up(prec).add(hi, m[1])
            else:
                lo = _down(prec).sub(lo, m[1])
                hi = _up(prec).sub(hi, m[0])
        return (lo, hi)


# ---------------------------------------------------------------------------
# positive reals in log-domain
# ---------------------------------------------------------------------------


class LogReal:
    """A positive real x held as a certified enclosure of ln(x).

    ``exact`` carries a :class:`Pow2` tag when x has the exact form
    c * 2**e; the enclosure endpoints always bracket ln(x) regardless.
    """

    __slots__ = ("log_lo", "log_hi", "precision_bits", "exact")

    def __init__(self, log_lo: mpfr, log_hi: mpfr, precision_bits: int,
                 exact: Optional[Pow2] = None):
        if gmpy2.is_nan(log_lo) or gmpy2.is_nan(log_hi) or log_lo > log_hi:
            raise InvalidParameterError("malformed log enclosure")
        self.log_lo = log_lo
        self.log_hi = log_hi
        self.precision_bits = precision_bits
        self.exact = exact

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_pow2(p2: Pow2, prec: int = DEFAULT_PRECISION) -> "LogReal":
        lo, hi = p2.log_iv(prec)
        return LogReal(lo, hi, prec, exact=p2)

    @staticmethod
    def from_int(n: int, prec: int = DEFAULT_PRECISION) -> "LogReal":
        if n <= 0:
            raise InvalidParameterError("positive integer required")
        return LogReal.from_pow2(Pow2(Fraction(n), Fraction(0)), prec)

    @staticmethod
    def from_fraction(fr: Fraction, prec: int = DEFAULT_PRECISION) -> "LogReal":
        if fr <= 0:
            raise InvalidParameterError("positive rational required")
        return LogReal.from_pow2(Pow2(Fraction(fr), Fraction(0)), prec)

    @staticmethod
    def from_log_iv(iv: Iv, prec: int, exact: Optional[Pow2] = None) -> "LogReal":
        return LogReal(iv[0], iv[1], prec, exact=exact)

    @staticmethod
    def one(prec: int = DEFAULT_PRECISION) -> "LogReal":
        z = mpfr(0)
        return LogReal(z, z, prec, exact=Pow2(Fraction(1), Fraction(0)))

    # -- spec'd scalar views ------------------------------------------

    @property
    def value(self) -> mpfr:
        """Midpoint of the log enclosure (ln x)."""
        return _up(self.precision_bits).div(
            _up(self.precision_bits).add(self.log_lo, self.log_hi), 2)

    @property
    def error_bound(self) -> mpfr:
        return _up(self.precision_bits).div(
            _up(self.precision_bits).sub(self.log_hi, self.log_lo), 2)

    def radius_ok(self) -> bool:
        """Enclosure-quality invariant: radius below 2**(-precision/2)."""
        bound = _down(64).exp2(mpfr(-self.precision_bits) / 2)
        return self.error_bound < bound

    # -- arithmetic on the underlying positive reals -------------------

    def _prec_with(self, other: "LogReal") -> int:
        return max(self.precision_bits, other.precision_bits)

    def mul(self, other: "LogReal") -> "LogReal":
        prec = self._prec_with(other)
        iv = iv_add((self.log_lo, self.log_hi), (other.log_lo, other.log_hi), prec)
        ex = self.exact.mul(other.exact) if self.exact and other.exact else None
        return LogReal(iv[0], iv[1], prec, exact=ex)

    def div(self, other: "LogReal") -> "LogReal":
        prec = self._prec_with(other)
        iv = iv_sub((self.log_lo, self.log_hi), (other.log_lo, other.log_hi), prec)
        ex = self.exact.div(other.exact) if self.exact and other.exact else None
        return LogReal(iv[0], iv[1], prec, exact=ex)

    def recip(self) -> "LogReal":
        ex = self.exact.recip() if self.exact else None
        return LogReal(-self.log_hi, -self.log_lo, self.precision_bits, exact=ex)

    def mul_int(self, n: int) -> "LogReal":
        return self.mul(LogReal.from_int(n, self.precision_bits))

    # -- comparisons ----------------------------------------------------

    def compare(self, other: "LogReal") -> Optional[int]:
        """-1, 0, +1, or None when indeterminate."""
        if self.exact is not None and other.exact is not None:
            c = self.exact.compare(other.exact)
            if c is not None:
                return c
        if self.log_hi < other.log_lo:
            return -1
        if self.log_lo > other.log_hi:
            return 1
        return None

    def definitely_le(self, other: "LogReal") -> bool:
        c = self.compare(other)
        return c is not None and c <= 0

    # -- conversions ----------------------------------------------------

    def log_float(self) -> float:
        return float(self.value)

    def float(self) -> float:
        """exp of the midpoint as a double; inf/0.0 on overflow/underflow."""
        import math
        try:
            return math.exp(float(self.value))
        except OverflowError:
            return float("inf")

    def __repr__(self) -> str:  # pragma: no cover
        return f"LogReal(ln in [{self.log_lo}, {self.log_hi}], exact={self.exact})"


# ---------------------------------------------------------------------------
# decision helpers
# ---------------------------------------------------------------------------


def resolve_greater(make_a: Callable[[int], LogReal],
                    make_b: Callable[[int], LogReal],
                    prec: int = DEFAULT_PRECISION,
                    cap: int = COMPARISON_PRECISION_CAP) -> tuple[bool, bool]:
    """Decide a > b, escalating precision while the enclosures overlap.

    Returns (is_greater, resolved).  When the cap is reached without a
    decision the deterministic answer is "not greater" and resolved is
    False so the caller can record a warning.
    """
    p = prec
    while True:
        c = make_a(p).compare(make_b(p))
        if c is not None:
            return (c > 0, True)
        if p >= cap:
            return (False, False)
        p = min(2 * p, cap)


def exp_floor_enclosure(make_log: Callable[[int], LogReal],
                        prec_hint: int,
                        cap: int = INTEGER_ENCLOSURE_PRECISION_CAP
                        ) -> tuple[mpz, bool]:
    """Floor of exp(L) where make_log(prec) re-evaluates the log enclosure.

    Returns (floor_value, certified).  ``certified`` is False when the
    enclosure still straddles an integer at the precision cap; the value
    returned is then the floor of the midpoint, which is deterministic.
    Raises TooLargeError when even the first magnitude estimate exceeds
    the cap.
    """
    rough = make_log(64)
    if gmpy2.is_infinite(rough.log_hi):
        raise TooLargeError("value overflows the representable range")
    # bits of exp(L) ~ L / ln 2
    mag_bits = max(64, int(float(rough.log_hi) / 0.693147) + 2)
    if mag_bits > cap:
        raise TooLargeError(
            f"integer enclosure would need about {mag_bits} bits, cap is {cap}")
    p = max(prec_hint, mag_bits + 64)
    while True:
        if p > cap:
            # widest certified attempt failed; deterministic fallback
            lr = make_log(cap)
            mid = _up(cap).div(_up(cap).add(lr.log_lo, lr.log_hi), 2)
            val = _down(cap).exp(mid)
            return (mpz(gmpy2.floor(val)), False)
        lr = make_log(p)
        if lr.exact is not None:
            fl = lr.exact.floor_int()
            if fl is not None:
                return (fl, True)
        lo = _down(p).exp(lr.log_lo)
        hi = _up(p).exp(lr.log_hi)
        if gmpy2.is_infinite(hi):
            raise TooLargeError("value overflows the representable range")
        flo = mpz(gmpy2.floor(lo))
        fhi = mpz(gmpy2.floor(hi))
        if flo == fhi:
            return (flo, True)
        p = min(2 * p, cap) if p < cap else cap + 1
