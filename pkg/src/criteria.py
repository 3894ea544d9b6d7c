"""
Boundedness and compactness conditions evaluated as curves in h, and the
Hardy-versus-Bergman separation experiment for the cusp symbol.
"""

import csv
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.curves import CriterionCurve, CurveSource, ExponentialFit, fit_exponential
from src.disk_geometry import (
    DiskMeasure,
    RhoCurve,
    carleson_rho,
    k_mu2,
    pullback_area,
    pullback_boundary,
    rho_curve,
)
from src.log_real import CarlesonLabError, LogDomainOverflowError, LogReal, log_rel_close, ratio_float
from src.orlicz_core import (
    OrliczFunction,
    OrliczParameterError,
    Power,
    SpecialPiecewise,
    build_special,
)
from src.symbols import AnalyticSymbol, CuspSymbol, build_cusp

logger = logging.getLogger(__name__)

MEASURED_H_RANGE = (0.25, 0.6)
MAX_RELATIVE_STDERR = 0.2
HARDY_THRESHOLD = 0.05
HARDY_BOUND = 1e3
BERGMAN_BOUND = 1e-3
ONE_THIRD_TOL = 1e-9


# --- Exceptions ---

class CriterionError(CarlesonLabError):
    """Raised when a criterion is evaluated on inconsistent inputs."""


# --- Models ---

class ExponentialRhoModel(BaseModel):
    """Closed-form Carleson function rho(h) = c exp(-gamma / h)."""

    model_config = ConfigDict(frozen=True)

    c: float = Field(gt=0)
    gamma: float = Field(gt=0)

    def inverse_at(self, x: LogReal) -> LogReal:
        """1/rho at h = 1/x, i.e. exp(gamma x)/c, in the log domain."""
        return LogReal.from_log(x.to_mpf() * self.gamma - math.log(self.c))

    def rho(self, h: float) -> float:
        return self.c * math.exp(-self.gamma / h)


RhoSource = Union[RhoCurve, ExponentialRhoModel]


def _x_points(h_grid: Optional[Sequence[float]], x_grid: Optional[Sequence]) -> List[LogReal]:
    if x_grid is not None:
        return [x if isinstance(x, LogReal) else LogReal.from_float(x) for x in x_grid]
    if h_grid is None:
        raise CriterionError("need an h grid or an x grid")
    return [LogReal.from_float(1 / h) for h in h_grid]


def _safe_ratio(num: LogReal, den: LogReal) -> float:
    if den.is_zero:
        return math.inf
    return ratio_float(num, den)


def _h_of(x: LogReal) -> float:
    return float(1 / x.to_mpf())


def _criterion_curve(
    psi: OrliczFunction,
    source: RhoSource,
    order: int,
    label: str,
    h_grid: Optional[Sequence[float]],
    x_grid: Optional[Sequence],
) -> CriterionCurve:
    """Psi^{-1}(x**order) / Psi^{-1}(1/rho(1/x)) over the grid."""
    rho_column: List[float] = []
    ratios: List[float] = []
    if isinstance(source, ExponentialRhoModel):
        xs = _x_points(h_grid, x_grid)
        for x in xs:
            num = psi.eval_inv(x ** order)
            ratios.append(_safe_ratio(num, psi.eval_inv(source.inverse_at(x))))
            rho_column.append(ratio_float(LogReal.one(), source.inverse_at(x)))
        h = [_h_of(x) for x in xs]
        kind = CurveSource.MODEL
    else:
        h = list(source.h) if h_grid is None else [float(t) for t in h_grid]
        rho_at = source.as_function()
        for t in h:
            rho = rho_at(t)
            num = psi.eval_inv(LogReal.from_float(t ** -order))
            den = psi.eval_inv(LogReal.from_float(1 / rho)) if rho > 0 else LogReal.zero()
            ratios.append(_safe_ratio(num, den))
            rho_column.append(rho)
        kind = CurveSource.MEASURED
    return CriterionCurve(label=label, source=kind, h=h, columns={"rho": rho_column, "ratio": ratios})


def hardy_compactness_ratio(
    psi: OrliczFunction,
    rho1_source: RhoSource,
    h_grid: Optional[Sequence[float]] = None,
    x_grid: Optional[Sequence] = None,
) -> CriterionCurve:
    """
    Psi^{-1}(1/h) / Psi^{-1}(1/rho_phi(h)); the operator on H^Psi is compact
    exactly when this tends to 0. Model sources accept ``x_grid`` (x = 1/h,
    LogReal allowed) so tower-sized x stay exact.
    """
    return _criterion_curve(psi, rho1_source, 1, f"hardy:{psi.spec}", h_grid, x_grid)


def bergman_compactness_ratio(
    psi: OrliczFunction,
    rho2_source: RhoSource,
    h_grid: Optional[Sequence[float]] = None,
    x_grid: Optional[Sequence] = None,
) -> CriterionCurve:
    """Psi^{-1}(1/h^2) / Psi^{-1}(1/rho_{phi,2}(h)), the Bergman-Orlicz counterpart."""
    return _criterion_curve(psi, rho2_source, 2, f"bergman:{psi.spec}", h_grid, x_grid)


def boundedness_ratios(
    psi1: OrliczFunction,
    psi2: OrliczFunction,
    mu: DiskMeasure,
    h_grid: Sequence[float],
    xi_grid_size: int = 64,
) -> CriterionCurve:
    """
    Necessary-condition ratio Psi1^{-1}(1/h^2)/Psi2^{-1}(1/rho_mu(h)) and
    sufficient-condition ratio Psi1^{-1}(1/h^2)/Psi2^{-1}(1/(h^2 K_{mu,2}(h))).
    Zero masses give the infinite-ratio sentinel.
    """
    columns: Dict[str, List[float]] = {name: [] for name in ("rho", "k_mu2", "necessary", "sufficient")}
    for h in h_grid:
        rho = carleson_rho(mu, h, xi_grid_size)
        k = k_mu2(mu, h, xi_grid_size=xi_grid_size)
        num = psi1.eval_inv(LogReal.from_float(h ** -2))
        nec = psi2.eval_inv(LogReal.from_float(1 / rho)) if rho > 0 else LogReal.zero()
        suf = psi2.eval_inv(LogReal.from_float(1 / (h * h * k))) if k > 0 else LogReal.zero()
        columns["rho"].append(rho)
        columns["k_mu2"].append(k)
        columns["necessary"].append(_safe_ratio(num, nec))
        columns["sufficient"].append(_safe_ratio(num, suf))
    return CriterionCurve(
        label=f"boundedness:{psi1.spec}->{psi2.spec}:{mu.label}",
        source=CurveSource.MEASURED,
        h=[float(h) for h in h_grid],
        columns=columns,
    )


# --- Model-domain profiles ---

def model_ratio_profiles(
    psi: OrliczFunction,
    c1: float,
    c2: float,
    x_grid: Sequence,
) -> Tuple[CriterionCurve, CriterionCurve]:
    """Hardy and Bergman ratios for rho_phi = exp(-c1/h) and rho_{phi,2} = exp(-c2/h)."""
    hardy = hardy_compactness_ratio(psi, ExponentialRhoModel(c=1.0, gamma=c1), x_grid=x_grid)
    bergman = bergman_compactness_ratio(psi, ExponentialRhoModel(c=1.0, gamma=c2), x_grid=x_grid)
    return hardy, bergman


def tower_points(psi: SpecialPiecewise) -> List[Tuple[int, LogReal]]:
    """
    (n, sqrt(alpha_n)) for every node with alpha_n > (c2/c1)^2 and
    alpha_n < exp(c2 sqrt(alpha_n)) < alpha_{n+1}, where the Bergman model
    ratio equals 1/3.
    """
    threshold = LogReal.from_float((psi.c2 / psi.c1) ** 2)
    alphas = psi.alphas + [psi.next_alpha()]
    points = []
    for n in range(1, psi.depth + 1):
        alpha = alphas[n]
        if not alpha > threshold:
            continue
        image = alpha.sqrt().scale(psi.c2).exp_of()
        if alpha < image < alphas[n + 1]:
            points.append((n, alpha.sqrt()))
    return points


def _block_grid(lo: LogReal, hi: LogReal, count: int) -> List[LogReal]:
    a, b = lo.log_value, hi.log_value
    return [LogReal.from_log(a + (b - a) * i / count) for i in range(count)]


def hardy_block_maxima(psi: SpecialPiecewise, c1: Optional[float] = None, per_block: int = 64) -> Dict[int, float]:
    """
    Largest f(x)/f(exp(c1 x)) over log-spaced x in each block
    [alpha_{n-1}, alpha_n), n >= 2.
    """
    c1 = psi.c1 if c1 is None else c1
    maxima: Dict[int, float] = {}
    for n in range(2, psi.depth + 1):
        grid = _block_grid(psi.alphas[n - 1], psi.alphas[n], per_block)
        ratios = [ratio_float(psi.eval_inv(x), psi.eval_inv(x.scale(c1).exp_of())) for x in grid]
        maxima[n] = max(ratios)
    return maxima


class ImplicationCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    hardy: List[float]
    bergman: List[float]
    hardy_vanishes: bool
    bergman_vanishes: bool

    @property
    def holds(self) -> bool:
        return self.bergman_vanishes or not self.hardy_vanishes


def _vanishes(values: Sequence[float]) -> bool:
    """Nonincreasing over the second half of the grid and ending below 5% of the peak."""
    tail = np.asarray(values[len(values) // 2:])
    return bool(np.all(np.diff(tail) <= 0) and values[-1] < HARDY_THRESHOLD * max(values))


def hardy_implies_bergman_check(
    p: float,
    c: float,
    gamma: float,
    C: float,
    x_grid: Sequence[float],
) -> ImplicationCheck:
    """
    For Psi = x**p, model rho_phi = c exp(-gamma/h) and rho_{phi,2}(h) =
    C rho_phi(Ch)**2: a vanishing Hardy ratio forces a vanishing Bergman ratio.
    """
    psi = Power(p)
    rho1 = ExponentialRhoModel(c=c, gamma=gamma)
    rho2 = ExponentialRhoModel(c=C * c * c, gamma=2 * gamma / C)
    hardy = hardy_compactness_ratio(psi, rho1, x_grid=x_grid).columns["ratio"]
    bergman = bergman_compactness_ratio(psi, rho2, x_grid=x_grid).columns["ratio"]
    return ImplicationCheck(
        hardy=hardy,
        bergman=bergman,
        hardy_vanishes=_vanishes(hardy),
        bergman_vanishes=_vanishes(bergman),
    )


def radial_quotient(psi: OrliczFunction, symbol: AnalyticSymbol, radii: Sequence[float], theta: float = math.pi) -> List[float]:
    """Psi^{-1}(1/(1-|phi(z)|)^2) / Psi^{-1}(1/(1-|z|)^2) along z = r e^{i theta}."""
    z = np.asarray(radii, dtype=float) * np.exp(1j * theta)
    image = np.abs(symbol.eval(z))
    out = []
    for r, w in zip(radii, image):
        num = psi.eval_inv(LogReal.from_float(1 / (1 - w) ** 2))
        den = psi.eval_inv(LogReal.from_float(1 / (1 - r) ** 2))
        out.append(ratio_float(num, den))
    return out


# --- Separation experiment ---

class Verdict(str, Enum):
    HARDY_COMPACT_BERGMAN_NOT = "HARDY_COMPACT_BERGMAN_NOT"
    NOT_SEPARATED = "NOT_SEPARATED"
    INCONCLUSIVE = "INCONCLUSIVE"
    PARAMETER_MISUSE = "PARAMETER_MISUSE"


class SeparationRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    h: float
    rho1: float
    rho2: float
    hardy_ratio: float
    bergman_ratio: float
    source: CurveSource


class SeparationReport(BaseModel):
    """
    Measured regime (h in [0.25, 0.6], Monte Carlo and boundary grids) and
    model regime (log-domain closed forms at tower-sized 1/h). The limits
    h -> 0 are only ever read off the model regime.
    """

    model_config = ConfigDict(frozen=True)

    c1: float
    c2: float
    depth: int
    verdict: Verdict
    checks: Dict[str, bool] = {}
    failing: List[str] = []
    notes: List[str] = []
    rows: List[SeparationRow] = []
    rho1_fit: Optional[ExponentialFit] = None
    rho2_fit: Optional[ExponentialFit] = None
    hardy_constant: Optional[float] = None
    bergman_constant: Optional[float] = None
    hardy_block_maxima: Dict[int, float] = {}
    tower_ratios: Dict[int, float] = {}

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["h", "rho1", "rho2", "hardy_ratio", "bergman_ratio", "source"])
            for row in self.rows:
                writer.writerow([
                    repr(row.h), repr(row.rho1), repr(row.rho2),
                    repr(row.hardy_ratio), repr(row.bergman_ratio), row.source.value,
                ])

    def verdict_text(self) -> str:
        lines = [self.verdict.value]
        lines += [f"{name}: {'pass' if ok else 'fail'}" for name, ok in self.checks.items()]
        lines += [f"failing: {name}" for name in self.failing]
        lines += [f"note: {note}" for note in self.notes]
        if self.hardy_constant is not None:
            lines.append(f"rho1 <= C exp(-c1/h) with C = {self.hardy_constant:.6g}")
        if self.bergman_constant is not None:
            lines.append(f"rho2 >= c exp(-c2/h) with c = {self.bergman_constant:.6g}")
        return "\n".join(lines) + "\n"

    def write(self, directory: Union[str, Path]) -> None:
        """separation.csv and verdict.txt in ``directory``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.to_csv(directory / "separation.csv")
        (directory / "verdict.txt").write_text(self.verdict_text())


def _misuse(c1: float, c2: float, depth: int, reason: str) -> SeparationReport:
    logger.warning("Separation experiment parameter misuse: %s", reason)
    return SeparationReport(c1=c1, c2=c2, depth=depth, verdict=Verdict.PARAMETER_MISUSE, failing=["parameters"], notes=[reason])


def separation_experiment(
    c1: float,
    c2: float,
    depth: int,
    h_grid: Sequence[float],
    x_grid: Optional[Sequence] = None,
    n_samples: int = 2_000_000,
    n_theta: int = 1 << 16,
    seed: int = 42,
    symbol: Optional[CuspSymbol] = None,
) -> SeparationReport:
    """
    Check on the cusp symbol that rho_phi(h) <= C exp(-c1/h) with C <= 1e3 and
    rho_{phi,2}(h) >= c exp(-c2/h) with c >= 1e-3 on the measured grid, then
    that the Hardy ratio of the special Orlicz function falls below 0.05 on
    the deepest tower block while the Bergman ratio equals 1/3 at every tower
    point.

    Returns:
        SeparationReport; the verdict is INCONCLUSIVE when a measured rho2 has a
        standard error above 20% of its value or no tower point exists
    """
    if c2 / c1 <= 1:
        return _misuse(c1, c2, depth, f"c2/c1 = {c2 / c1:.6g} must exceed 1")
    try:
        psi = build_special(c1, c2, depth)
    except (OrliczParameterError, LogDomainOverflowError) as e:
        return _misuse(c1, c2, depth, str(e))
    if any(not MEASURED_H_RANGE[0] <= h <= MEASURED_H_RANGE[1] for h in h_grid):
        raise CriterionError(f"measured h values must lie in {MEASURED_H_RANGE}")

    symbol = symbol or build_cusp()
    boundary = pullback_boundary(symbol, n_theta)
    area = pullback_area(symbol, n_samples, seed)
    rho1 = rho_curve(boundary, h_grid)
    rho2 = rho_curve(area, h_grid)

    checks: Dict[str, bool] = {}
    failing: List[str] = []
    notes = [
        "measured regime: rho from pull-back measures on the h grid",
        "model regime: rho1 = exp(-c1/h), rho2 = exp(-c2/h) at tower-sized 1/h",
    ]

    noisy = [h for h, r, s in zip(rho2.h, rho2.rho, rho2.stderr) if r == 0 or s > MAX_RELATIVE_STDERR * r]
    if noisy:
        failing.append(f"rho2 Monte Carlo resolution at h={noisy}")

    hardy_constant = max(r / math.exp(-c1 / h) for h, r in zip(rho1.h, rho1.rho))
    bergman_constant = min(r / math.exp(-c2 / h) for h, r in zip(rho2.h, rho2.rho))
    checks["rho1 upper bound"] = hardy_constant <= HARDY_BOUND
    checks["rho2 lower bound"] = bergman_constant >= BERGMAN_BOUND

    blocks = hardy_block_maxima(psi)
    deepest = blocks[max(blocks)] if blocks else math.inf
    checks["hardy model ratio"] = deepest < HARDY_THRESHOLD

    towers = tower_points(psi)
    tower_ratios: Dict[int, float] = {}
    for n, x in towers:
        ratio = bergman_compactness_ratio(psi, ExponentialRhoModel(c=1.0, gamma=c2), x_grid=[x]).columns["ratio"][0]
        tower_ratios[n] = ratio
    if not towers:
        failing.append(f"no tower point at depth {depth}")
    else:
        checks["bergman model floor"] = all(abs(r - 1 / 3) <= ONE_THIRD_TOL for r in tower_ratios.values())

    rows = _measured_rows(psi, rho1, rho2) + _model_rows(psi, c1, c2, x_grid)
    rho1_fit = _fit_or_none(rho1)
    rho2_fit = _fit_or_none(rho2)

    if failing:
        verdict = Verdict.INCONCLUSIVE
    elif all(checks.values()):
        verdict = Verdict.HARDY_COMPACT_BERGMAN_NOT
    else:
        verdict = Verdict.NOT_SEPARATED
        failing = [name for name, ok in checks.items() if not ok]
    logger.info("Separation experiment (c1=%g, c2=%g, depth=%d): %s", c1, c2, depth, verdict.value)
    return SeparationReport(
        c1=c1,
        c2=c2,
        depth=depth,
        verdict=verdict,
        checks=checks,
        failing=failing,
        notes=notes,
        rows=rows,
        rho1_fit=rho1_fit,
        rho2_fit=rho2_fit,
        hardy_constant=hardy_constant,
        bergman_constant=bergman_constant,
        hardy_block_maxima=blocks,
        tower_ratios=tower_ratios,
    )


def _fit_or_none(curve: RhoCurve) -> Optional[ExponentialFit]:
    try:
        return fit_exponential(curve.h, curve.rho)
    except CarlesonLabError as e:
        logger.warning("No exponential fit for %s: %s", curve.label, e)
        return None


def _measured_rows(psi: OrliczFunction, rho1: RhoCurve, rho2: RhoCurve) -> List[SeparationRow]:
    hardy = hardy_compactness_ratio(psi, rho1).columns["ratio"]
    bergman = bergman_compactness_ratio(psi, rho2).columns["ratio"]
    return [
        SeparationRow(h=h, rho1=r1, rho2=r2, hardy_ratio=a, bergman_ratio=b, source=CurveSource.MEASURED)
        for h, r1, r2, a, b in zip(rho1.h, rho1.rho, rho2.rho, hardy, bergman)
    ]


def default_model_grid(psi: SpecialPiecewise, per_block: int = 8) -> List[LogReal]:
    """Log-spaced x = 1/h through every block [alpha_{n-1}, alpha_n), n >= 2."""
    grid: List[LogReal] = []
    for n in range(2, psi.depth + 1):
        grid += _block_grid(psi.alphas[n - 1], psi.alphas[n], per_block)
    return grid + [psi.alphas[-1]]


def _model_rows(psi: SpecialPiecewise, c1: float, c2: float, x_grid: Optional[Sequence]) -> List[SeparationRow]:
    xs = default_model_grid(psi) if x_grid is None else x_grid
    hardy, bergman = model_ratio_profiles(psi, c1, c2, xs)
    return [
        SeparationRow(
            h=h, rho1=r1, rho2=r2, hardy_ratio=a, bergman_ratio=b, source=CurveSource.MODEL,
        )
        for h, r1, r2, a, b in zip(
            hardy.h, hardy.columns["rho"], bergman.columns["rho"], hardy.columns["ratio"], bergman.columns["ratio"],
        )
    ]


def model_matches_extended_precision(psi: OrliczFunction, model: ExponentialRhoModel, x: LogReal, order: int, rel: float = 1e-9) -> bool:
    """The model ratio at x recomputed from 50-digit values agrees with the curve entry."""
    curve = _criterion_curve(psi, model, order, "check", None, [x])
    num = psi.eval_inv(x ** order)
    den = psi.eval_inv(model.inverse_at(x))
    return log_rel_close(LogReal.from_float(curve.columns["ratio"][0]), num / den, rel)
