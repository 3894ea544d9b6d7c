"""
Orlicz functions, Luxemburg norms, growth-condition probes and the recursive
piecewise-affine construction whose inverse separates the Hardy and Bergman
compactness criteria.
"""

import logging
import math
from abc import ABC, abstractmethod
from enum import Enum
from io import StringIO
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict
from scipy import optimize

from src.log_real import (
    MP,
    CarlesonLabError,
    LogDomainOverflowError,
    LogReal,
    expm1_to,
    log1p_of,
)

logger = logging.getLogger(__name__)

GridLike = Union[Sequence[float], Sequence[LogReal], np.ndarray]

# comparisons of log-ratios tolerate this much rounding
LOG_SLACK = 1e-12


# --- Exceptions ---

class OrliczParameterError(CarlesonLabError):
    """Raised when an Orlicz function is built from invalid parameters."""


class OrliczDomainError(CarlesonLabError):
    """Raised when an Orlicz function is evaluated outside [0, inf)."""


class LuxemburgError(CarlesonLabError):
    """Raised when a Luxemburg norm cannot be computed."""


# --- Orlicz functions ---

def _float_or_inf(value: LogReal) -> float:
    try:
        return value.to_float()
    except LogDomainOverflowError:
        return math.inf


def _as_logreal(x) -> LogReal:
    if isinstance(x, LogReal):
        return x
    if x < 0:
        raise OrliczDomainError(f"Orlicz functions live on [0, inf), got {x}")
    return LogReal.from_float(x)


class OrliczFunction(ABC):
    """
    Convex increasing gauge with Psi(0) = 0 and an exact inverse.

    The log-domain pair ``eval``/``eval_inv`` is authoritative; the float
    versions are vectorized conveniences that return ``inf`` on overflow.
    """

    @property
    @abstractmethod
    def spec(self) -> str:
        """Selection string understood by ``parse_psi``."""

    @abstractmethod
    def eval(self, x: LogReal) -> LogReal:
        """Psi(x)."""

    @abstractmethod
    def eval_inv(self, y: LogReal) -> LogReal:
        """Psi^{-1}(y)."""

    def eval_float(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.frompyfunc(lambda v: _float_or_inf(self.eval(_as_logreal(float(v)))), 1, 1)(x).astype(float)

    def inv_float(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.frompyfunc(lambda v: _float_or_inf(self.eval_inv(_as_logreal(float(v)))), 1, 1)(y).astype(float)

    def __call__(self, x) -> np.ndarray:
        return self.eval_float(x)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec})"


class Power(OrliczFunction):
    def __init__(self, p: float):
        """
        Psi(x) = x**p.

        Args:
            p: Exponent, at least 1
        """
        if not p >= 1:
            raise OrliczParameterError(f"Power needs p >= 1, got {p}")
        self.p = float(p)

    @property
    def spec(self) -> str:
        return f"power:{self.p:g}"

    def eval(self, x: LogReal) -> LogReal:
        return x ** self.p

    def eval_inv(self, y: LogReal) -> LogReal:
        return y ** (1.0 / self.p)

    def eval_float(self, x) -> np.ndarray:
        return np.power(np.asarray(x, dtype=float), self.p)

    def inv_float(self, y) -> np.ndarray:
        return np.power(np.asarray(y, dtype=float), 1.0 / self.p)


class ExpPower(OrliczFunction):
    def __init__(self, q: float = 1.0):
        """
        Psi(x) = exp(x**q) - 1.

        Args:
            q: Inner exponent, at least 1
        """
        if not q >= 1:
            raise OrliczParameterError(f"ExpPower needs q >= 1, got {q}")
        self.q = float(q)

    @property
    def spec(self) -> str:
        return f"exp:{self.q:g}"

    def eval(self, x: LogReal) -> LogReal:
        return expm1_to((x ** self.q).to_mpf())

    def eval_inv(self, y: LogReal) -> LogReal:
        return LogReal.from_float(log1p_of(y)) ** (1.0 / self.q)

    def eval_float(self, x) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.expm1(np.power(np.asarray(x, dtype=float), self.q))

    def inv_float(self, y) -> np.ndarray:
        return np.power(np.log1p(np.asarray(y, dtype=float)), 1.0 / self.q)


class LogSquareExp(OrliczFunction):
    """Psi(x) = exp(log(1 + x)**2) - 1."""

    @property
    def spec(self) -> str:
        return "logsq"

    def eval(self, x: LogReal) -> LogReal:
        s = log1p_of(x)
        return expm1_to(s * s)

    def eval_inv(self, y: LogReal) -> LogReal:
        s = MP.sqrt(log1p_of(y))
        return expm1_to(s)

    def eval_float(self, x) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.expm1(np.log1p(np.asarray(x, dtype=float)) ** 2)

    def inv_float(self, y) -> np.ndarray:
        return np.expm1(np.sqrt(np.log1p(np.asarray(y, dtype=float))))


class PiecewiseAffine(OrliczFunction):
    def __init__(self, breakpoints: Sequence[float], slopes: Sequence[float]):
        """
        Convex piecewise-affine Orlicz function through the origin.

        Args:
            breakpoints: Increasing positive kink positions b_1 < ... < b_m
            slopes: Increasing positive slopes s_1 < ... < s_{m+1}; s_1 on
                [0, b_1], s_{m+1} beyond b_m
        """
        b = np.asarray(breakpoints, dtype=float)
        s = np.asarray(slopes, dtype=float)
        if len(s) != len(b) + 1:
            raise OrliczParameterError("need exactly one more slope than breakpoints")
        if np.any(b <= 0) or np.any(np.diff(b) <= 0):
            raise OrliczParameterError("breakpoints must be positive and increasing")
        if np.any(s <= 0) or np.any(np.diff(s) <= 0):
            raise OrliczParameterError("slopes must be positive and increasing")
        self.breakpoints = b
        self.slopes = s
        self._knots = np.concatenate([[0.0], b])
        self._values = np.concatenate([[0.0], np.cumsum(s[:-1] * np.diff(self._knots))])

    @property
    def spec(self) -> str:
        breakpoints = ",".join(repr(float(v)) for v in self.breakpoints)
        slopes = ",".join(repr(float(v)) for v in self.slopes)
        return f"affine:{breakpoints}/{slopes}"

    def eval_float(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = np.interp(x, self._knots, self._values)
        beyond = self._values[-1] + self.slopes[-1] * (x - self._knots[-1])
        return np.where(x > self._knots[-1], beyond, inside)

    def inv_float(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        inside = np.interp(y, self._values, self._knots)
        beyond = self._knots[-1] + (y - self._values[-1]) / self.slopes[-1]
        return np.where(y > self._values[-1], beyond, inside)

    def eval(self, x: LogReal) -> LogReal:
        value = float(self.eval_float(x.to_float()))
        if not math.isfinite(value):
            raise LogDomainOverflowError(f"{self.spec} overflows at {x!r}")
        return LogReal.from_float(value)

    def eval_inv(self, y: LogReal) -> LogReal:
        return LogReal.from_float(float(self.inv_float(y.to_float())))


class SpecialPiecewise(OrliczFunction):
    def __init__(
        self,
        c1: float,
        c2: float,
        alphas: List[LogReal],
        slopes: List[LogReal],
        intercepts: List[LogReal],
    ):
        """
        Orlicz function whose inverse f is the concave piecewise-affine map
        f(t) = A_n t + B_n on [alpha_{n-1}, alpha_n].

        Use ``build_special`` to construct; this initializer only stores a
        node table (for instance one read back by ``from_key_values``).

        Args:
            c1: Hardy decay constant
            c2: Bergman decay constant
            alphas: Nodes alpha_0 .. alpha_N
            slopes: A_1 .. A_{N+1}; the last one drives the unbounded piece
            intercepts: B_1 .. B_{N+1}
        """
        if len(slopes) != len(alphas) or len(intercepts) != len(alphas):
            raise OrliczParameterError("need N+1 slopes and intercepts for N+1 nodes")
        self.c1 = float(c1)
        self.c2 = float(c2)
        self.depth = len(alphas) - 1
        self.alphas = list(alphas)
        self.slopes = list(slopes)
        self.intercepts = list(intercepts)
        # F_n = f(alpha_n)
        self.node_values = [LogReal.zero()] + [
            self.slopes[n - 1] * self.alphas[n] + self.intercepts[n - 1]
            for n in range(1, self.depth + 1)
        ]

    @property
    def spec(self) -> str:
        return f"special:{self.c1!r},{self.c2!r},{self.depth}"

    def A(self, n: int) -> LogReal:
        return self.slopes[n - 1]

    def B(self, n: int) -> LogReal:
        return self.intercepts[n - 1]

    def beta(self, n: int) -> LogReal:
        """beta_n = (exp(c2 sqrt(alpha_n)) - 3 alpha_n) / 2; beta_0 = 1/2."""
        return _beta(self.alphas[n], self.c2, n)

    def next_alpha(self) -> LogReal:
        """alpha_{N+1} = exp(c1 alpha_N)."""
        return self.alphas[-1].scale(self.c1).exp_of()

    def eval_inv(self, y: LogReal) -> LogReal:
        for n in range(1, self.depth + 1):
            if y <= self.alphas[n]:
                return self.A(n) * y + self.B(n)
        return self.A(self.depth + 1) * y + self.B(self.depth + 1)

    def eval(self, x: LogReal) -> LogReal:
        n = self.depth + 1
        for k in range(1, self.depth + 1):
            if x <= self.node_values[k]:
                n = k
                break
        floor = self.alphas[n - 1]
        if x <= self.B(n):
            return floor
        return max((x - self.B(n)) / self.A(n), floor)

    def to_key_values(self) -> str:
        """Plain-text key=value dump of the parameters and node table."""
        lines = [f"c1={self.c1!r}", f"c2={self.c2!r}", f"depth={self.depth}"]
        for n, alpha in enumerate(self.alphas):
            lines.append(f"alpha_{n}_log={_dump_log(alpha)}")
        for n in range(1, self.depth + 2):
            lines.append(f"A_{n}_log={_dump_log(self.A(n))}")
            lines.append(f"B_{n}_log={_dump_log(self.B(n))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_key_values(cls, text: str) -> "SpecialPiecewise":
        """
        Rebuild from ``to_key_values`` output.

        Raises:
            OrliczParameterError: if a key is missing or malformed
        """
        values = dotenv_values(stream=StringIO(text))
        try:
            depth = int(values["depth"])
            alphas = [_load_log(values[f"alpha_{n}_log"]) for n in range(depth + 1)]
            slopes = [_load_log(values[f"A_{n}_log"]) for n in range(1, depth + 2)]
            intercepts = [_load_log(values[f"B_{n}_log"]) for n in range(1, depth + 2)]
            return cls(float(values["c1"]), float(values["c2"]), alphas, slopes, intercepts)
        except (KeyError, TypeError, ValueError) as e:
            raise OrliczParameterError(f"malformed node table: {e}") from e


def _dump_log(value: LogReal) -> str:
    return "zero" if value.is_zero else MP.nstr(value.log_value, 45)


def _load_log(text: Optional[str]) -> LogReal:
    if text is None:
        raise ValueError("missing value")
    return LogReal.zero() if text.strip() == "zero" else LogReal.from_log(MP.mpf(text.strip()))


def _beta(alpha: LogReal, c2: float, n: int) -> LogReal:
    try:
        tower = alpha.sqrt().scale(c2).exp_of()
    except LogDomainOverflowError as e:
        raise LogDomainOverflowError(f"beta_{n} is not representable: {e}") from e
    return (tower - alpha.scale(3)).scale(0.5)


def build_special(c1: float, c2: float, depth: int) -> SpecialPiecewise:
    """
    Run the node/slope recursion and return the special Orlicz function.

    alpha_0 = 0, alpha_1 = 1, alpha_{n+1} = exp(c1 alpha_n); A_1 = 1, B_1 = 0;
    A_{n+1} = A_n (alpha_n + beta'_{n-1}) / (alpha_n + beta_n) and
    B_{n+1} = beta_n A_{n+1}, where beta'_0 = B_1 / A_1 = 0 and
    beta'_n = beta_n otherwise.

    Args:
        c1: Hardy constant, 0 < c1 <= pi/4
        c2: Bergman constant, c2 >= pi
        depth: Number of bounded segments N >= 1

    Returns:
        SpecialPiecewise with nodes alpha_0..alpha_N and slopes A_1..A_{N+1}

    Raises:
        OrliczParameterError: if the constants or depth are out of range
        LogDomainOverflowError: if a recursion index leaves the log domain;
            the message names the index
    """
    if not 0 < c1 <= math.pi / 4:
        raise OrliczParameterError(f"c1 must lie in (0, pi/4], got {c1}")
    if not c2 >= math.pi:
        raise OrliczParameterError(f"c2 must be at least pi, got {c2}")
    if depth < 1:
        raise OrliczParameterError(f"depth must be at least 1, got {depth}")

    alphas = [LogReal.zero(), LogReal.one()]
    for n in range(1, depth):
        alphas.append(alphas[n].scale(c1).exp_of())

    slopes = [LogReal.one()]
    intercepts = [LogReal.zero()]
    beta_prev = LogReal.zero()
    for n in range(1, depth + 1):
        beta_n = _beta(alphas[n], c2, n)
        a_next = slopes[-1] * (alphas[n] + beta_prev) / (alphas[n] + beta_n)
        slopes.append(a_next)
        intercepts.append(beta_n * a_next)
        beta_prev = beta_n

    logger.debug("Built special Orlicz function c1=%s c2=%s depth=%d", c1, c2, depth)
    return SpecialPiecewise(c1, c2, alphas, slopes, intercepts)


def parse_psi(spec: str) -> OrliczFunction:
    """
    Parse ``power:p``, ``exp:q``, ``logsq``, ``special:c1,c2,depth`` or
    ``affine:b1,...,bm/s1,...,sm+1`` (breakpoints, then slopes).

    Raises:
        OrliczParameterError: for unknown names or bad parameters
    """
    name, _, params = spec.strip().partition(":")
    try:
        if name == "power":
            return Power(float(params))
        if name == "exp":
            return ExpPower(float(params or 1))
        if name == "logsq":
            return LogSquareExp()
        if name == "special":
            c1, c2, depth = params.split(",")
            return build_special(float(c1), float(c2), int(depth))
        if name == "affine":
            breakpoints, slopes = params.split("/")
            return PiecewiseAffine([float(b) for b in breakpoints.split(",")], [float(s) for s in slopes.split(",")])
    except ValueError as e:
        raise OrliczParameterError(f"bad parameters in psi spec '{spec}': {e}") from e
    raise OrliczParameterError(f"Unknown psi spec: {spec}")


# --- Norms ---

def luxemburg_norm(values, weights, psi: OrliczFunction) -> float:
    """
    Luxemburg norm inf{C > 0 : sum w_i Psi(v_i / C) <= 1} of a weighted sample.

    Solved by bisection on log C inside a bracket grown geometrically from
    max(v) / Psi^{-1}(1 / total weight).

    Args:
        values: Non-negative sample values
        weights: Positive weights
        psi: Orlicz function

    Returns:
        The norm, or 0.0 when every value is 0

    Raises:
        LuxemburgError: for empty, negative or all-zero weights
    """
    v = np.abs(np.asarray(values, dtype=float)).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if v.shape != w.shape or v.size == 0:
        raise LuxemburgError("values and weights must be non-empty and aligned")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise LuxemburgError("weights must be finite and non-negative")
    total = float(w.sum())
    if total <= 0:
        raise LuxemburgError("all weights are zero")
    v, w = v[w > 0], w[w > 0]
    v_max = float(v.max())
    if v_max == 0:
        return 0.0

    def excess(log_c: float) -> float:
        with np.errstate(over="ignore", invalid="ignore"):
            return float(np.sum(w * psi.eval_float(v / math.exp(log_c)))) - 1.0

    center = math.log(v_max / float(psi.inv_float(1.0 / total)))
    lo, hi = center - math.log(1e3), center + math.log(1e3)
    for _ in range(200):
        if excess(lo) > 0:
            break
        lo -= math.log(10.0)
    for _ in range(200):
        if excess(hi) < 0:
            break
        hi += math.log(10.0)
    log_c = optimize.bisect(excess, lo, hi, xtol=1e-15, maxiter=400)
    return math.exp(log_c)


# --- Convexity ---

def second_differences(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Slope increments of sampled values, scaled by the largest slope."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    slopes = np.diff(values) / np.diff(grid)
    scale = max(float(np.max(np.abs(slopes))), 1e-300)
    return np.diff(slopes) / scale


def is_convex_on(psi: OrliczFunction, grid, rel_slack: float = 1e-12) -> bool:
    grid = np.sort(np.asarray(grid, dtype=float))
    return bool(np.all(second_differences(psi.eval_float(grid), grid) >= -rel_slack))


def is_inverse_concave_on(psi: OrliczFunction, grid, rel_slack: float = 1e-12) -> bool:
    grid = np.sort(np.asarray(grid, dtype=float))
    return bool(np.all(second_differences(psi.inv_float(grid), grid) <= rel_slack))


# --- Growth-condition probes ---

class ProbeCondition(str, Enum):
    DELTA2 = "Delta2"
    DELTA_SQUARED = "DeltaSquared"
    NABLA0 = "Nabla0"
    HDB = "HdB"


class ProbeVerdict(str, Enum):
    HOLDS_ON_GRID = "holds-on-grid"
    FAILS_WITH_WITNESS = "fails-with-witness"


class ProbeReport(BaseModel):
    """Outcome of a grid probe of a growth condition."""

    model_config = ConfigDict(frozen=True)

    condition: ProbeCondition
    verdict: ProbeVerdict
    constant: Optional[float] = None
    parameters: Dict[str, float] = {}
    witness_points: List[float] = []
    witness_values: List[float] = []
    grid_description: str
    # a grid can refute but never prove a universal inequality
    conclusive: bool

    @property
    def holds(self) -> bool:
        return self.verdict == ProbeVerdict.HOLDS_ON_GRID


DELTA2_CONSTANTS = [2.0 ** k for k in range(1, 41)]
DELTA_SQUARED_CONSTANTS = [1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 16.0]


def _log(value: LogReal) -> float:
    return value.log_float()


def _describe(points: List[LogReal]) -> str:
    lo, hi = points[0], points[-1]
    return f"{len(points)} points, log-range [{lo.log_float():.6g}, {hi.log_float():.6g}]"


def _holds(report_kwargs, constant, **parameters) -> ProbeReport:
    return ProbeReport(
        verdict=ProbeVerdict.HOLDS_ON_GRID,
        constant=constant,
        parameters=parameters,
        conclusive=False,
        **report_kwargs,
    )


def _fails(report_kwargs, points, values, **parameters) -> ProbeReport:
    return ProbeReport(
        verdict=ProbeVerdict.FAILS_WITH_WITNESS,
        witness_points=[float(p) for p in points],
        witness_values=[float(v) for v in values],
        parameters=parameters,
        conclusive=True,
        **report_kwargs,
    )


def condition_probe(
    psi: OrliczFunction,
    cond: Union[ProbeCondition, str],
    x_grid: GridLike,
    constants: Optional[Sequence[float]] = None,
    x0_grid: Optional[Sequence[float]] = None,
    A: float = 2.0,
) -> ProbeReport:
    """
    Probe a growth condition of psi on a grid.

    Delta2: Psi(2x) <= C Psi(x). DeltaSquared: Psi(t)**2 <= Psi(a t).
    Nabla0: Psi(2x)/Psi(x) <= Psi(2Cy)/Psi(y) for x0 <= x <= y.
    HdB: Psi(A Psi^{-1}(x**2)) <= Psi(B Psi^{-1}(x))**2.

    Every candidate constant is tried in increasing order and the first one
    satisfied at every grid point is reported. Failure is reported with a
    witness violating the inequality for the largest candidate, which by
    monotonicity violates it for every candidate. Witness values are natural
    logs of the two sides.

    Args:
        psi: Orlicz function
        cond: Condition to probe
        x_grid: Positive grid points (floats or LogReal)
        constants: Candidate constants (C, a, B or C for Nabla0)
        x0_grid: Candidate thresholds for Nabla0
        A: Parameter of HdB

    Returns:
        ProbeReport

    Raises:
        OrliczDomainError: for an empty or non-positive grid
    """
    cond = ProbeCondition(cond)
    points = sorted(_as_logreal(x) for x in x_grid)
    if not points or points[0].is_zero:
        raise OrliczDomainError("probe grids must be non-empty and positive")
    base = {"condition": cond, "grid_description": _describe(points)}
    floats = [_float_point(p) for p in points]

    if cond == ProbeCondition.DELTA2:
        candidates = list(constants or DELTA2_CONSTANTS)
        ratios = [_log(psi.eval(p.scale(2))) - _log(psi.eval(p)) for p in points]
        worst = int(np.argmax(ratios))
        for c in candidates:
            if ratios[worst] <= math.log(c) + LOG_SLACK:
                return _holds(base, c)
        return _fails(base, [floats[worst]], [ratios[worst]], C=candidates[-1])

    if cond == ProbeCondition.DELTA_SQUARED:
        candidates = list(constants or DELTA_SQUARED_CONSTANTS)
        lhs = [2 * _log(psi.eval(p)) for p in points]
        for a in candidates:
            rhs = [_log(psi.eval(p.scale(a))) for p in points]
            if all(l <= r + LOG_SLACK for l, r in zip(lhs, rhs)):
                return _holds(base, a)
        rhs = [_log(psi.eval(p.scale(candidates[-1]))) for p in points]
        k = int(np.argmax(np.array(lhs) - np.array(rhs)))
        return _fails(base, [floats[k]], [lhs[k], rhs[k]], alpha=candidates[-1])

    if cond == ProbeCondition.NABLA0:
        return _probe_nabla0(psi, points, floats, base, constants, x0_grid)

    candidates = list(constants or [A * 2.0 ** (k / 4) for k in range(-8, 41)])
    lhs = [_log(psi.eval(psi.eval_inv(p * p).scale(A))) for p in points]
    inverse = [psi.eval_inv(p) for p in points]
    for b in candidates:
        rhs = [2 * _log(psi.eval(q.scale(b))) for q in inverse]
        if all(l <= r + LOG_SLACK for l, r in zip(lhs, rhs)):
            return _holds(base, b, A=A)
    rhs = [2 * _log(psi.eval(q.scale(candidates[-1]))) for q in inverse]
    k = int(np.argmax(np.array(lhs) - np.array(rhs)))
    return _fails(base, [floats[k]], [lhs[k], rhs[k]], A=A, B=candidates[-1])


def _float_point(p: LogReal) -> float:
    try:
        return p.to_float()
    except LogDomainOverflowError:
        return math.inf


def _probe_nabla0(psi, points, floats, base, constants, x0_grid) -> ProbeReport:
    c_grid = sorted(constants or [1.0, 2.0, 4.0, 8.0, 16.0, 64.0])
    x0_list = sorted(x0_grid or [floats[0]])
    left = np.array([_log(psi.eval(p.scale(2))) - _log(psi.eval(p)) for p in points])
    xs = np.array(floats)

    def violations(c: float):
        right = np.array([_log(psi.eval(p.scale(2 * c))) - _log(psi.eval(p)) for p in points])
        # smallest right-hand side over y >= x
        suffix = np.minimum.accumulate(right[::-1])[::-1]
        suffix_arg = np.array([k + int(np.argmin(right[k:])) for k in range(len(right))])
        return left - suffix > LOG_SLACK, right, suffix_arg

    for c in c_grid:
        bad, _, _ = violations(c)
        for x0 in x0_list:
            if not np.any(bad & (xs >= x0)):
                return _holds(base, c, x0=x0)
    bad, right, suffix_arg = violations(c_grid[-1])
    x0 = x0_list[-1]
    k = int(np.flatnonzero(bad & (xs >= x0))[0])
    y = int(suffix_arg[k])
    return _fails(base, [floats[k], floats[y]], [left[k], right[y]], C=c_grid[-1], x0=x0)


def geometric_grid(start: float, stop: float, per_doubling: int = 8) -> np.ndarray:
    """Geometric grid with ``per_doubling`` points per factor of two."""
    n = int(math.ceil(per_doubling * math.log2(stop / start))) + 1
    return start * 2.0 ** (np.arange(n) / per_doubling)
