"""
Log-domain positive reals.

A ``LogReal`` stores a non-negative quantity by its natural logarithm so that
tower-sized numbers such as exp(exp(60)) stay representable. Log values live
in a private mpmath context with 50 significant digits, so sums of a tiny and
a huge quantity keep the precision needed by ratio identities.
"""

import logging
import math
import sys
from dataclasses import dataclass
from functools import total_ordering
from typing import Optional, Union

from mpmath.ctx_mp import MPContext

logger = logging.getLogger(__name__)

MP = MPContext()
MP.dps = 50

# log of the largest native float
LOG_FLOAT_MAX = math.log(sys.float_info.max)

Number = Union[int, float]


# --- Exceptions ---

class CarlesonLabError(Exception):
    """Base class for every error raised by the library."""


class LogDomainOverflowError(CarlesonLabError):
    """Raised when a quantity leaves the range the log domain can represent."""


class LogDomainValueError(CarlesonLabError):
    """Raised for negative inputs or results (LogReal only holds values >= 0)."""


# --- Models ---

@total_ordering
@dataclass(frozen=True, eq=False)
class LogReal:
    """
    Non-negative real stored as its natural logarithm.

    ``log_value`` is ``None`` for the exact zero.
    """

    log_value: Optional[object] = None

    def __post_init__(self):
        if self.log_value is None:
            return
        value = MP.mpf(self.log_value)
        if not MP.isfinite(value):
            raise LogDomainOverflowError(f"log value is not finite: {self.log_value}")
        if abs(value) > sys.float_info.max:
            raise LogDomainOverflowError(
                f"log value {MP.nstr(value, 8)} exceeds the native float range"
            )
        object.__setattr__(self, "log_value", value)

    # --- Constructors ---

    @classmethod
    def zero(cls) -> "LogReal":
        return cls(None)

    @classmethod
    def one(cls) -> "LogReal":
        return cls(MP.mpf(0))

    @classmethod
    def from_log(cls, log_value) -> "LogReal":
        return cls(MP.mpf(log_value))

    @classmethod
    def from_float(cls, value) -> "LogReal":
        """
        Build from a plain (float, int or mpf) value.

        Raises:
            LogDomainValueError: if the value is negative or not a number
        """
        value = MP.mpf(value)
        if MP.isnan(value) or value < 0:
            raise LogDomainValueError(f"cannot store {value} in the log domain")
        if value == 0:
            return cls.zero()
        if MP.isinf(value):
            raise LogDomainOverflowError("cannot store an infinite value")
        return cls(MP.log(value))

    # --- Queries ---

    @property
    def is_zero(self) -> bool:
        return self.log_value is None

    def log_float(self) -> float:
        """Natural log as a float (-inf for zero)."""
        if self.is_zero:
            return -math.inf
        return float(self.log_value)

    def to_mpf(self):
        """Plain value as an mpf; only allowed while it fits a native float."""
        if self.is_zero:
            return MP.mpf(0)
        if self.log_value > LOG_FLOAT_MAX:
            raise LogDomainOverflowError(
                f"value exp({MP.nstr(self.log_value, 8)}) exceeds the native float max"
            )
        return MP.exp(self.log_value)

    def to_float(self) -> float:
        """Plain value as a float. Never returns infinity: overflow raises."""
        return float(self.to_mpf())

    # --- Arithmetic ---

    def __add__(self, other: "LogReal") -> "LogReal":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        hi, lo = (self, other) if self.log_value >= other.log_value else (other, self)
        return LogReal(hi.log_value + MP.log1p(MP.exp(lo.log_value - hi.log_value)))

    def __sub__(self, other: "LogReal") -> "LogReal":
        if other.is_zero:
            return self
        if self.is_zero or self.log_value < other.log_value:
            raise LogDomainValueError("subtraction would give a negative value")
        if self.log_value == other.log_value:
            return LogReal.zero()
        return LogReal(self.log_value + MP.log(-MP.expm1(other.log_value - self.log_value)))

    def __mul__(self, other: "LogReal") -> "LogReal":
        if self.is_zero or other.is_zero:
            return LogReal.zero()
        return LogReal(self.log_value + other.log_value)

    def __truediv__(self, other: "LogReal") -> "LogReal":
        if other.is_zero:
            raise LogDomainValueError("division by zero")
        if self.is_zero:
            return self
        return LogReal(self.log_value - other.log_value)

    def __pow__(self, exponent: Number) -> "LogReal":
        if self.is_zero:
            if exponent <= 0:
                raise LogDomainValueError("zero to a non-positive power")
            return self
        return LogReal(self.log_value * MP.mpf(exponent))

    def scale(self, factor: Number) -> "LogReal":
        """Multiply by a plain non-negative number."""
        return self * LogReal.from_float(factor)

    def sqrt(self) -> "LogReal":
        return self ** MP.mpf(0.5)

    def exp_of(self) -> "LogReal":
        """
        Return e**value as a LogReal, i.e. a LogReal whose log is this value.

        Raises:
            LogDomainOverflowError: if this value exceeds the native float max
        """
        return LogReal(self.to_mpf())

    # --- Comparison ---

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogReal):
            return NotImplemented
        if self.is_zero or other.is_zero:
            return self.is_zero and other.is_zero
        return self.log_value == other.log_value

    def __lt__(self, other: "LogReal") -> bool:
        if other.is_zero:
            return False
        if self.is_zero:
            return True
        return self.log_value < other.log_value

    def __hash__(self) -> int:
        return hash(None if self.is_zero else str(self.log_value))

    def __repr__(self) -> str:
        if self.is_zero:
            return "LogReal(zero)"
        return f"LogReal(log={MP.nstr(self.log_value, 17)})"


def logreal_arith(a: LogReal, b: Optional[LogReal], op: str, r: Optional[Number] = None) -> LogReal:
    """
    Dispatch a named log-domain operation.

    Args:
        a: First operand
        b: Second operand (ignored for ``pow`` and ``exp_of``)
        op: One of ``add``, ``sub``, ``mul``, ``div``, ``pow``, ``exp_of``
        r: Exponent for ``pow``

    Returns:
        The result as a LogReal

    Raises:
        ValueError: for an unknown operation
        LogDomainOverflowError: when the result is not representable
    """
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    if op == "pow":
        if r is None:
            raise ValueError("pow needs an exponent")
        return a ** r
    if op == "exp_of":
        return a.exp_of()
    raise ValueError(f"Unknown log-domain operation: {op}")


def log1p_of(x: LogReal):
    """log(1 + x) as a plain mpf, stable for tiny and tower-sized x."""
    if x.is_zero:
        return MP.mpf(0)
    if x.log_value > 0:
        return x.log_value + MP.log1p(MP.exp(-x.log_value))
    return MP.log1p(MP.exp(x.log_value))


def expm1_to(t) -> LogReal:
    """e**t - 1 for a plain t >= 0, returned in the log domain."""
    t = MP.mpf(t)
    if t < 0:
        raise LogDomainValueError(f"expm1_to expects t >= 0, got {t}")
    if t == 0:
        return LogReal.zero()
    if t > 1:
        return LogReal(t + MP.log1p(-MP.exp(-t)))
    return LogReal(MP.log(MP.expm1(t)))


def log_rel_close(a: LogReal, b: LogReal, rel: float) -> bool:
    """True when a and b agree to relative tolerance ``rel`` (compared in log)."""
    if a.is_zero or b.is_zero:
        return a.is_zero and b.is_zero
    return abs(a.log_value - b.log_value) <= MP.log1p(rel)


def ratio_float(a: LogReal, b: LogReal) -> float:
    """a / b as a float; underflow gives 0.0, overflow raises."""
    if a.is_zero:
        return 0.0
    q = a / b
    if q.log_value < -LOG_FLOAT_MAX - 40:
        return 0.0
    return q.to_float()
