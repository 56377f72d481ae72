"""Directed-rounding interval scalars on MPFR floats.

Every operation rounds the lower endpoint down and the upper endpoint up,
so the result interval encloses the exact value for any inputs inside the
operand intervals.  The working precision is set once per run via
``set_precision``; the certification default is 256 bits.
"""

from __future__ import annotations

from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

DEFAULT_PRECISION = 256

_DOWN = gmpy2.context(precision=DEFAULT_PRECISION, round=gmpy2.RoundDown)
_UP = gmpy2.context(precision=DEFAULT_PRECISION, round=gmpy2.RoundUp)
_NEAREST = gmpy2.context(precision=DEFAULT_PRECISION, round=gmpy2.RoundToNearest)


def set_precision(bits: int) -> None:
    global _DOWN, _UP, _NEAREST
    if bits < 64:
        raise ValueError("precision below 64 bits is not supported")
    _DOWN = gmpy2.context(precision=bits, round=gmpy2.RoundDown)
    _UP = gmpy2.context(precision=bits, round=gmpy2.RoundUp)
    _NEAREST = gmpy2.context(precision=bits, round=gmpy2.RoundToNearest)


def get_precision() -> int:
    return _DOWN.precision


_MPFR_TYPE = type(mpfr(0))


class IntervalScalar:
    """Closed interval [lower, upper] with outward-rounded arithmetic."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        if hi is None:
            hi = lo
        self.lo = lo if isinstance(lo, _MPFR_TYPE) else _exact_mpfr(lo)
        self.hi = hi if isinstance(hi, _MPFR_TYPE) else _exact_mpfr(hi)
        if gmpy2.is_nan(self.lo) or gmpy2.is_nan(self.hi) or self.lo > self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def exact(x) -> "IntervalScalar":
        """Point interval from an int, float or mpfr (no rounding)."""
        v = x if isinstance(x, _MPFR_TYPE) else _exact_mpfr(x)
        return IntervalScalar(v, v)

    @staticmethod
    def from_fraction(q) -> "IntervalScalar":
        q = Fraction(q)
        lo = _DOWN.div(q.numerator, q.denominator)
        hi = _UP.div(q.numerator, q.denominator)
        return IntervalScalar(lo, hi)

    @staticmethod
    def from_any(x) -> "IntervalScalar":
        if isinstance(x, IntervalScalar):
            return x
        if isinstance(x, Fraction):
            return IntervalScalar.from_fraction(x)
        return IntervalScalar.exact(x)

    @staticmethod
    def pi() -> "IntervalScalar":
        return IntervalScalar(_DOWN.const_pi(), _UP.const_pi())

    @staticmethod
    def pi_power(e: int) -> "IntervalScalar":
        if e == 0:
            return IntervalScalar.exact(1)
        base = IntervalScalar.pi()
        out = base
        for _ in range(abs(e) - 1):
            out = out * base
        if e < 0:
            out = IntervalScalar.exact(1) / out
        return out

    @staticmethod
    def from_coefficient(c, pi_powers=None) -> "IntervalScalar":
        """Enclosure of a Q[pi, pi^-1] coefficient value."""
        acc = IntervalScalar.exact(0)
        for e, q in c.items():
            pw = pi_powers[e] if pi_powers is not None else IntervalScalar.pi_power(e)
            acc = acc + pw * IntervalScalar.from_fraction(q)
        return acc

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = IntervalScalar.from_any(other)
        return IntervalScalar(_DOWN.add(self.lo, other.lo), _UP.add(self.hi, other.hi))

    __radd__ = __add__

    def __neg__(self):
        return IntervalScalar(-self.hi, -self.lo)

    def __sub__(self, other):
        other = IntervalScalar.from_any(other)
        return IntervalScalar(_DOWN.sub(self.lo, other.hi), _UP.sub(self.hi, other.lo))

    def __rsub__(self, other):
        return IntervalScalar.from_any(other) - self

    def __mul__(self, other):
        other = IntervalScalar.from_any(other)
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        lo = min(_DOWN.mul(a, c), _DOWN.mul(a, d), _DOWN.mul(b, c), _DOWN.mul(b, d))
        hi = max(_UP.mul(a, c), _UP.mul(a, d), _UP.mul(b, c), _UP.mul(b, d))
        return IntervalScalar(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = IntervalScalar.from_any(other)
        if other.contains_zero():
            raise ZeroDivisionError("interval division by interval containing zero")
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        lo = min(_DOWN.div(a, c), _DOWN.div(a, d), _DOWN.div(b, c), _DOWN.div(b, d))
        hi = max(_UP.div(a, c), _UP.div(a, d), _UP.div(b, c), _UP.div(b, d))
        return IntervalScalar(lo, hi)

    def __rtruediv__(self, other):
        return IntervalScalar.from_any(other) / self

    def __pow__(self, n: int):
        if n < 0:
            return IntervalScalar.exact(1) / self ** (-n)
        if n == 0:
            return IntervalScalar.exact(1)
        if n % 2 == 0 and self.contains_zero():
            # even power of a straddling interval: [0, max|.|^n]
            m = self.mag()
            return IntervalScalar(mpfr(0), _UP.mul(m, m) if n == 2 else _pow_up(m, n))
        lo, hi = self.lo, self.hi
        if n % 2 == 0 and hi < 0:
            lo, hi = -hi, -lo
        return IntervalScalar(_pow_down(lo, n), _pow_up(hi, n))

    def sqrt(self) -> "IntervalScalar":
        if self.lo < 0:
            raise ValueError("sqrt of interval containing negatives")
        return IntervalScalar(_DOWN.sqrt(self.lo), _UP.sqrt(self.hi))

    def exp(self) -> "IntervalScalar":
        return IntervalScalar(_DOWN.exp(self.lo), _UP.exp(self.hi))

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return IntervalScalar(mpfr(0), max(-self.lo, self.hi))

    # -- queries -----------------------------------------------------------

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def strictly_negative(self) -> bool:
        return self.hi < 0

    def strictly_positive(self) -> bool:
        return self.lo > 0

    def mag(self) -> mpfr:
        """Largest absolute value over the interval."""
        return max(abs(self.lo), abs(self.hi))

    def mig(self) -> mpfr:
        """Smallest absolute value over the interval."""
        if self.contains_zero():
            return mpfr(0)
        return min(abs(self.lo), abs(self.hi))

    def width(self) -> mpfr:
        return _UP.sub(self.hi, self.lo)

    def mid(self) -> mpfr:
        return _NEAREST.div(_NEAREST.add(self.lo, self.hi), 2)

    def hull(self, other: "IntervalScalar") -> "IntervalScalar":
        return IntervalScalar(min(self.lo, other.lo), max(self.hi, other.hi))

    def __le__(self, other):
        """Certified <=: true only if the whole interval lies at or below."""
        other = IntervalScalar.from_any(other)
        return self.hi <= other.lo

    def __lt__(self, other):
        other = IntervalScalar.from_any(other)
        return self.hi < other.lo

    def __ge__(self, other):
        other = IntervalScalar.from_any(other)
        return self.lo >= other.hi

    def __gt__(self, other):
        other = IntervalScalar.from_any(other)
        return self.lo > other.hi

    def __repr__(self):
        return f"[{self.lo!r}, {self.hi!r}]"

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "lo": mpfr_to_hex(self.lo),
            "hi": mpfr_to_hex(self.hi),
            "display": f"[{self.lo}, {self.hi}]",
        }

    @staticmethod
    def from_json(d: dict) -> "IntervalScalar":
        return IntervalScalar(mpfr_from_hex(d["lo"]), mpfr_from_hex(d["hi"]))


def _pow_down(x, n):
    acc = mpfr(1)
    for _ in range(n):
        acc = _DOWN.mul(acc, x)
    return acc


def _pow_up(x, n):
    acc = mpfr(1)
    for _ in range(n):
        acc = _UP.mul(acc, x)
    return acc


def _exact_mpfr(x):
    """Lossless conversion of int/float to mpfr; raises when not exact."""
    if isinstance(x, float):
        return mpfr(x, precision=max(_NEAREST.precision, 53))
    if isinstance(x, int):
        v = _NEAREST.div(x, 1)
        if gmpy2.mpz(v) != x:
            raise ValueError(f"integer {x} not representable at working precision")
        return v
    raise TypeError(f"cannot convert {type(x).__name__} exactly")


def mpfr_to_hex(x) -> str:
    """Exact, portable text form of an mpfr value: 'mantissa * 2^exp'."""
    if gmpy2.is_zero(x):
        return "0"
    m, e = x.as_mantissa_exp()
    return f"{m}p{e}"


def mpfr_from_hex(s: str):
    if s == "0":
        return mpfr(0)
    m_str, e_str = s.split("p")
    m, e = int(m_str), int(e_str)
    ctx = gmpy2.context(precision=max(m.bit_length(), _NEAREST.precision, 2))
    v = mpfr(m, precision=ctx.precision)
    return ctx.mul_2exp(v, e) if e >= 0 else ctx.div_2exp(v, -e)


def interval_dot(a, b) -> IntervalScalar:
    acc = IntervalScalar.exact(0)
    for x, y in zip(a, b):
        acc = acc + IntervalScalar.from_any(x) * IntervalScalar.from_any(y)
    return acc


def interval_norm2(v) -> IntervalScalar:
    acc = IntervalScalar.exact(0)
    for x in v:
        xi = IntervalScalar.from_any(x)
        acc = acc + xi * xi
    return acc
