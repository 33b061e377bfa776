"""Signed log-scale real arithmetic.

Magnitudes in this package routinely reach sizes like 2**(48*48) (point
families growing superexponentially), far past what a double can hold in
linear scale.  A ``LogValue`` stores a sign and the base-2 logarithm of the
absolute value, and all arithmetic stays in log scale.  Sums and differences
of nearby magnitudes use the usual log-sum-exp style stable forms; values are
only decoded to linear doubles when the caller asks and the magnitude fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import InputError

_LN2 = math.log(2.0)

Real = Union[int, float, "LogValue"]


@dataclass(frozen=True)
class LogValue:
    """A real number stored as (sign, log2 of absolute value)."""

    sign: int  # -1, 0, +1
    log2mag: float  # meaningful only when sign != 0; canonically 0.0 for zero

    def __post_init__(self) -> None:
        if self.sign not in (-1, 0, 1):
            raise InputError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if self.sign == 0 and self.log2mag != 0.0:
            object.__setattr__(self, "log2mag", 0.0)
        if self.sign != 0 and not math.isfinite(self.log2mag):
            raise InputError(f"non-finite log2 magnitude {self.log2mag!r}")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero() -> "LogValue":
        return LogValue(0, 0.0)

    @staticmethod
    def one() -> "LogValue":
        return LogValue(1, 0.0)

    @staticmethod
    def from_float(v: float) -> "LogValue":
        if v == 0:
            return LogValue.zero()
        if not math.isfinite(v):
            raise InputError(f"cannot encode non-finite value {v!r}")
        return LogValue(1 if v > 0 else -1, math.log2(abs(v)))

    @staticmethod
    def from_int(n: int) -> "LogValue":
        # math.log2 is correctly rounded for arbitrary-precision ints.
        if n == 0:
            return LogValue.zero()
        return LogValue(1 if n > 0 else -1, math.log2(abs(n)))

    @staticmethod
    def from_log2(log2mag: float, sign: int = 1) -> "LogValue":
        return LogValue(sign, log2mag)

    @staticmethod
    def coerce(v: Real) -> "LogValue":
        if isinstance(v, LogValue):
            return v
        if isinstance(v, int):
            return LogValue.from_int(v)
        return LogValue.from_float(v)

    # -- decoding ----------------------------------------------------------

    def to_float(self) -> float:
        """Decode to a double; +/-inf when the magnitude overflows."""
        if self.sign == 0:
            return 0.0
        if self.log2mag >= 1024.0:
            return math.inf if self.sign > 0 else -math.inf
        v = 2.0 ** self.log2mag
        return v if self.sign > 0 else -v

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    @property
    def is_positive(self) -> bool:
        return self.sign > 0

    # -- arithmetic --------------------------------------------------------

    def __neg__(self) -> "LogValue":
        return LogValue(-self.sign, self.log2mag)

    def __abs__(self) -> "LogValue":
        return LogValue(abs(self.sign), self.log2mag)

    def __mul__(self, other: Real) -> "LogValue":
        o = LogValue.coerce(other)
        if self.sign == 0 or o.sign == 0:
            return LogValue.zero()
        return LogValue(self.sign * o.sign, self.log2mag + o.log2mag)

    __rmul__ = __mul__

    def __truediv__(self, other: Real) -> "LogValue":
        o = LogValue.coerce(other)
        if o.sign == 0:
            raise InputError("division by zero LogValue")
        if self.sign == 0:
            return LogValue.zero()
        return LogValue(self.sign * o.sign, self.log2mag - o.log2mag)

    def __add__(self, other: Real) -> "LogValue":
        o = LogValue.coerce(other)
        if self.sign == 0:
            return o
        if o.sign == 0:
            return self
        if self.sign == o.sign:
            big, small = (self, o) if self.log2mag >= o.log2mag else (o, self)
            d = small.log2mag - big.log2mag  # <= 0
            return LogValue(big.sign, big.log2mag + math.log1p(2.0 ** d) / _LN2)
        return self._sub_magnitudes(o)

    __radd__ = __add__

    def __sub__(self, other: Real) -> "LogValue":
        return self + (-LogValue.coerce(other))

    def __rsub__(self, other: Real) -> "LogValue":
        return LogValue.coerce(other) + (-self)

    def _sub_magnitudes(self, o: "LogValue") -> "LogValue":
        # self and o have opposite signs; result is sign-of-larger with
        # magnitude | |self| - |o| |, computed without leaving log scale:
        # big + log2(1 - 2**(small-big)).
        if self.log2mag == o.log2mag:
            return LogValue.zero()
        big, small = (self, o) if self.log2mag > o.log2mag else (o, self)
        d = small.log2mag - big.log2mag  # < 0
        delta = -math.expm1(d * _LN2)  # 1 - 2**d, stable near d == 0
        return LogValue(big.sign, big.log2mag + math.log(delta) / _LN2)

    def to_int_nearest(self) -> int:
        """Nearest integer, exact to the representation's 52-bit resolution."""
        if self.sign == 0:
            return 0
        if self.log2mag <= 52.0:
            return round(self.to_float())
        shift = int(math.floor(self.log2mag)) - 52
        mant = round(2.0 ** (self.log2mag - math.floor(self.log2mag)) * (2 ** 52))
        return self.sign * (mant << shift)

    def sqrt(self) -> "LogValue":
        if self.sign < 0:
            raise InputError("sqrt of negative LogValue")
        if self.sign == 0:
            return LogValue.zero()
        return LogValue(1, self.log2mag / 2.0)

    def powi(self, k: int) -> "LogValue":
        if self.sign == 0:
            return LogValue.one() if k == 0 else LogValue.zero()
        sign = self.sign if k % 2 else abs(self.sign)
        return LogValue(sign, self.log2mag * k)

    # -- ordering ----------------------------------------------------------

    def __lt__(self, other: Real) -> bool:
        return _cmp(self, LogValue.coerce(other)) < 0

    def __le__(self, other: Real) -> bool:
        return _cmp(self, LogValue.coerce(other)) <= 0

    def __gt__(self, other: Real) -> bool:
        return _cmp(self, LogValue.coerce(other)) > 0

    def __ge__(self, other: Real) -> bool:
        return _cmp(self, LogValue.coerce(other)) >= 0

    def __repr__(self) -> str:
        if self.sign == 0:
            return "LogValue(0)"
        s = "-" if self.sign < 0 else ""
        return f"LogValue({s}2^{self.log2mag:.6g})"


def _cmp(a: LogValue, b: LogValue) -> int:
    if a.sign != b.sign:
        return -1 if a.sign < b.sign else 1
    if a.sign == 0:
        return 0
    if a.log2mag == b.log2mag:
        return 0
    mag_cmp = -1 if a.log2mag < b.log2mag else 1
    return mag_cmp * a.sign


def logvalue_sub(a: LogValue, b: LogValue) -> LogValue:
    """Signed difference a - b, honoring the stable log-domain form."""
    return a - b


def log_abs_diff(a: LogValue, b: LogValue) -> LogValue:
    """|a - b| without leaving log scale."""
    return abs(a - b)


def close_in_log(a: LogValue, b: LogValue, tol: float = 1e-9) -> bool:
    """Same sign and log2 magnitudes within ``tol`` (zero matches only zero)."""
    if a.sign != b.sign:
        return False
    if a.sign == 0:
        return True
    return abs(a.log2mag - b.log2mag) <= tol
