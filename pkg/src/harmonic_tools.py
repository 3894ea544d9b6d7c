"""
Berezin kernels, quadrature on the disk, the maximal function Lambda_f over
Hastings-Luecking cells, the dyadic Calderon-Zygmund decomposition of the
annulus 1/2 <= |z| < 1 and Monte Carlo harnesses for distribution
inequalities of analytic and harmonic functions.
"""

import csv
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import legendre
from pydantic import BaseModel, ConfigDict, Field

from src.disk_geometry import AtomMeasure, hl_area, k_mu2, sample_disk
from src.log_real import CarlesonLabError
from src.orlicz_core import OrliczFunction, luxemburg_norm

logger = logging.getLogger(__name__)

DiskFunction = Callable[[np.ndarray], np.ndarray]

CELL_SAMPLES = 8
MAX_LAMBDA_DEPTH = 12
# inflation applied wherever a sampled Lambda_f dominates |f|
DOMINATION_SLACK = 1.05
QUADRATURE_DEPTH = 24
# upper end of the stopping-cell average bracket
CZ_BRACKET = 16.0


# --- Exceptions ---

class QuadratureError(CarlesonLabError):
    """Raised when adaptive cell quadrature does not reach its tolerance."""


class DegenerateSampleError(CarlesonLabError):
    """Raised for samples that cannot support a moment inequality (all zero or negative)."""


class DecompositionThresholdError(CarlesonLabError):
    """Raised when a threshold is below the scale where stopping-cell averages stay bracketed."""


# --- Berezin kernel and quadrature ---

def berezin(a: complex, z):
    """H_a(z) = (1 - |a|^2)^2 / |1 - conj(a) z|^4."""
    z = np.asarray(z, dtype=complex)
    return (1 - abs(a) ** 2) ** 2 / np.abs(1 - np.conj(a) * z) ** 4


def disk_quadrature(n_radial: int = 128, n_angular: int = 512) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights for the normalized area measure: Gauss-Legendre in r
    (weight r dr) times the trapezoid rule in theta. Weights sum to 1.
    """
    x, wx = legendre.leggauss(n_radial)
    r = (x + 1) / 2
    wr = wx / 2 * r
    theta = 2 * math.pi * np.arange(n_angular) / n_angular
    nodes = r[:, None] * np.exp(1j * theta[None, :])
    weights = (wr[:, None] * np.full(n_angular, 2 / n_angular)[None, :])
    return nodes.ravel(), weights.ravel()


def berezin_mass(a: complex, n_radial: int = 128, n_angular: int = 512) -> float:
    """Integral of H_a against normalized area; 1 for every |a| < 1."""
    nodes, weights = disk_quadrature(n_radial, n_angular)
    return float(np.sum(weights * berezin(a, nodes)))


def bergman_orlicz_norm(f: DiskFunction, psi: OrliczFunction, n_radial: int = 64, n_angular: int = 256) -> float:
    """Luxemburg norm of |f| against normalized area, by quadrature."""
    nodes, weights = disk_quadrature(n_radial, n_angular)
    return luxemburg_norm(np.abs(f(nodes)), weights, psi)


def point_evaluation_bound(psi: OrliczFunction, z) -> np.ndarray:
    """8 Psi^{-1}(1/(1 - |z|)^2): bound on |f(z)| for f of unit Bergman-Orlicz norm."""
    r = np.abs(np.asarray(z, dtype=complex))
    return 8 * psi.inv_float(1 / (1 - r) ** 2)


# --- Maximal function ---

def _cell_samples(generation: int, j: int) -> np.ndarray:
    if generation == 0:
        radii = np.linspace(0, 0.5, CELL_SAMPLES)
        angles = 2 * math.pi * np.arange(CELL_SAMPLES) / CELL_SAMPLES
    else:
        r0, r1 = 1 - 2.0 ** -generation, 1 - 2.0 ** -(generation + 1)
        width = 2 * math.pi / 2 ** generation
        radii = np.linspace(r0, r1, CELL_SAMPLES)
        angles = np.linspace((j - 0.5) * width, (j + 0.5) * width, CELL_SAMPLES)
    return (radii[:, None] * np.exp(1j * angles[None, :])).ravel()


def hl_indices(z) -> np.ndarray:
    """Vectorized Hastings-Luecking cell index k = 2**n + j - 1 (-1 outside the disk)."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        n = np.floor(-np.log2(np.where(r < 1, 1 - r, 1.0)))
    n = np.where(r < 0.5, 0, np.maximum(n, 1)).astype(np.int64)
    width = 2 * math.pi / 2.0 ** n
    j = np.mod(np.floor((np.angle(z) + width / 2) / width).astype(np.int64), 2 ** n)
    k = np.where(n == 0, 0, 2 ** n + j - 1)
    return np.where(r >= 1, -1, k)


@dataclass(frozen=True)
class MaximalFunction:
    """
    Lambda_f = sum over cells of (sup of |f| on the cell) 1_cell, down to
    ``depth`` generations. Cell sups are taken on an 8x8 sample grid that
    includes the outer radius, so values are lower bounds of the true sups.
    """

    depth: int
    values: np.ndarray

    @property
    def n_cells(self) -> int:
        return int(self.values.size)

    @property
    def areas(self) -> np.ndarray:
        return np.array([hl_area(k) for k in range(self.n_cells)])

    def __call__(self, z) -> np.ndarray:
        """Lambda_f(z); nan beyond the last generation."""
        k = hl_indices(z)
        inside = (k >= 0) & (k < self.n_cells)
        return np.where(inside, self.values[np.clip(k, 0, self.n_cells - 1)], np.nan)

    def level_area(self, t: float, slack: float = 1.0) -> float:
        """Normalized area of {slack * Lambda_f > t} inside the resolved cells."""
        return float(np.sum(self.areas[slack * self.values > t]))

    def luxemburg_norm(self, psi: OrliczFunction) -> float:
        return luxemburg_norm(self.values, self.areas, psi)


def lambda_f(f: DiskFunction, depth: int = 8) -> MaximalFunction:
    """Sampled maximal function of f over generations 0..depth."""
    if not 0 <= depth <= MAX_LAMBDA_DEPTH:
        raise ValueError(f"depth must lie in [0, {MAX_LAMBDA_DEPTH}], got {depth}")
    values = np.empty(2 ** (depth + 1) - 1)
    for n in range(depth + 1):
        samples = np.concatenate([_cell_samples(n, j) for j in range(2 ** n)])
        sups = np.abs(f(samples)).reshape(2 ** n, -1).max(axis=1)
        values[2 ** n - 1: 2 ** (n + 1) - 1] = sups
    return MaximalFunction(depth=depth, values=values)


# --- Dyadic cells ---

LOG_HALF = math.log(0.5)


class DyadicCell(BaseModel):
    """
    Image under exp of a dyadic rectangle of [log 1/2, 0) x [0, 2 pi).

    Generation n splits both sides into 2**(n+1) intervals, so generation 0
    has four cells.
    """

    model_config = ConfigDict(frozen=True)

    generation: int = Field(ge=0)
    j: int = Field(ge=0)
    k: int = Field(ge=0)

    @property
    def splits(self) -> int:
        return 2 ** (self.generation + 1)

    @property
    def x_range(self) -> Tuple[float, float]:
        m = self.splits
        return (1 - self.j / m) * LOG_HALF, (1 - (self.j + 1) / m) * LOG_HALF

    @property
    def y_range(self) -> Tuple[float, float]:
        m = self.splits
        return 2 * math.pi * self.k / m, 2 * math.pi * (self.k + 1) / m

    @property
    def area(self) -> float:
        """Normalized area (1/pi) dy (e^{2 x1} - e^{2 x0}) / 2."""
        x0, x1 = self.x_range
        y0, y1 = self.y_range
        return (y1 - y0) * (math.exp(2 * x1) - math.exp(2 * x0)) / (2 * math.pi)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore"):
            x = np.log(np.abs(z))
        y = np.mod(np.angle(z), 2 * math.pi)
        x0, x1 = self.x_range
        y0, y1 = self.y_range
        return (x >= x0) & (x < x1) & (y >= y0) & (y < y1)

    def children(self) -> List["DyadicCell"]:
        return [
            DyadicCell(generation=self.generation + 1, j=2 * self.j + a, k=2 * self.k + b)
            for a in (0, 1)
            for b in (0, 1)
        ]


def top_cells() -> List[DyadicCell]:
    return [DyadicCell(generation=0, j=j, k=k) for j in (0, 1) for k in (0, 1)]


def _gauss_rect(g: Callable[[np.ndarray, np.ndarray], np.ndarray], x0, x1, y0, y1, n: int) -> float:
    nodes, weights = legendre.leggauss(n)
    xs = x0 + (x1 - x0) * (nodes + 1) / 2
    ys = y0 + (y1 - y0) * (nodes + 1) / 2
    values = g(xs[:, None], ys[None, :])
    return float(np.sum(weights[:, None] * weights[None, :] * values) * (x1 - x0) * (y1 - y0) / 4)


def cell_integral(f: DiskFunction, cell: DyadicCell, tol: float = 1e-3) -> float:
    """
    Integral of |f| over the cell against normalized area.

    A 16x16 Gauss-Legendre value is accepted when an 8x8 value agrees with it
    to ``tol`` times the first 16x16 estimate; otherwise the rectangle is
    split in four.

    Raises:
        QuadratureError: if splitting goes deeper than QUADRATURE_DEPTH
    """

    def g(x, y):
        return np.abs(f(np.exp(x + 1j * y))) * np.exp(2 * x) / math.pi

    x0, x1 = cell.x_range
    y0, y1 = cell.y_range
    budget = tol * abs(_gauss_rect(g, x0, x1, y0, y1, 16))

    def adapt(x0, x1, y0, y1, level):
        fine = _gauss_rect(g, x0, x1, y0, y1, 16)
        coarse = _gauss_rect(g, x0, x1, y0, y1, 8)
        if abs(fine - coarse) <= budget:
            return fine
        if level >= QUADRATURE_DEPTH:
            raise QuadratureError(f"cell quadrature did not converge on generation {cell.generation} cell ({cell.j}, {cell.k})")
        xm, ym = (x0 + x1) / 2, (y0 + y1) / 2
        return (
            adapt(x0, xm, y0, ym, level + 1)
            + adapt(xm, x1, y0, ym, level + 1)
            + adapt(x0, xm, ym, y1, level + 1)
            + adapt(xm, x1, ym, y1, level + 1)
        )

    return adapt(x0, x1, y0, y1, 0)


# --- Calderon-Zygmund decomposition ---

class StoppingCell(BaseModel):
    model_config = ConfigDict(frozen=True)

    cell: DyadicCell
    average: float


class CZDecomposition(BaseModel):
    """Stopping cells of the decomposition and the generation where the search ended."""

    model_config = ConfigDict(frozen=True)

    threshold: float
    max_generation: int
    tol: float
    cells: List[StoppingCell]
    residual_cells: int

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["generation", "j", "k", "average"])
            for stop in self.cells:
                writer.writerow([stop.cell.generation, stop.cell.j, stop.cell.k, repr(stop.average)])


def cz_decompose(f: DiskFunction, threshold: float = 1.0, max_generation: int = 8, tol: float = 1e-3) -> CZDecomposition:
    """
    Stopping-time decomposition: a cell stops at the first generation where
    the average of |f|/threshold over it exceeds 1. Below a non-stopping
    parent, a stopping child's average is at most 16 times the parent's.
    Generation-0 cells have no parent, so their averages must not exceed
    CZ_BRACKET (1 + tol) for every stopping average to lie in the bracket.

    Raises:
        DecompositionThresholdError: if a generation-0 average exceeds the bracket
        QuadratureError: if a cell integral does not converge
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")

    def scaled(z):
        return np.asarray(f(z)) / threshold

    top = [(cell, cell_integral(scaled, cell, tol) / cell.area) for cell in top_cells()]
    largest = max(average for _, average in top)
    if largest > CZ_BRACKET * (1 + tol):
        raise DecompositionThresholdError(
            f"generation-0 average {largest:.6g} exceeds {CZ_BRACKET:g}; "
            f"use a threshold of at least {threshold * largest / CZ_BRACKET:.6g}"
        )

    stops: List[StoppingCell] = []
    residual = 0
    pending: List[Tuple[DyadicCell, Optional[float]]] = list(top)
    while pending:
        cell, average = pending.pop()
        if average is None:
            average = cell_integral(scaled, cell, tol) / cell.area
        if average > 1:
            stops.append(StoppingCell(cell=cell, average=average))
        elif cell.generation < max_generation:
            pending.extend((child, None) for child in cell.children())
        else:
            residual += 1
    stops.sort(key=lambda s: (s.cell.generation, s.cell.j, s.cell.k))
    logger.debug("CZ decomposition: %d stopping cells, %d residual cells", len(stops), residual)
    return CZDecomposition(threshold=threshold, max_generation=max_generation, tol=tol, cells=stops, residual_cells=residual)


def parse_test_function(spec: str) -> DiskFunction:
    """``const:c`` for f = c, ``cauchy:c`` for f = c/(1 - z)."""
    name, _, value = spec.partition(":")
    c = float(value) if value else 1.0
    if name == "const":
        return lambda z: np.full(np.shape(z), c, dtype=complex)
    if name == "cauchy":
        return lambda z: c / (1 - np.asarray(z, dtype=complex))
    raise ValueError(f"Unknown test function: {spec}")


# --- Distribution inequalities ---

class Family(str, Enum):
    HALF_PLANE = "half-plane"
    SECTOR = "sector"


def family_function(family: Union[Family, str], f0: complex, c: float = 1.0) -> DiskFunction:
    """
    f = f0 + c (1+z)/(1-z) into the right half-plane (Re f0 >= 0), or its
    principal square root into the sector |arg| < pi/4.
    """
    family = Family(family)
    if f0.real < 0 or c <= 0:
        raise ValueError("need Re f0 >= 0 and c > 0 for a map into the half-plane")

    def half_plane(z):
        z = np.asarray(z, dtype=complex)
        return f0 + c * (1 + z) / (1 - z)

    if family == Family.HALF_PLANE:
        return half_plane
    return lambda z: np.sqrt(half_plane(z))


class DistributionCurve(BaseModel):
    """Monte Carlo estimates of A({|f| > lambda})."""

    model_config = ConfigDict(frozen=True)

    family: Family
    f_at_zero: float
    n_samples: int
    seed: int
    lambdas: List[float]
    mass: List[float]
    stderr: List[float]
    hits: List[int]
    mass_at_one: float

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["lambda", "mass", "stderr"])
            for row in zip(self.lambdas, self.mass, self.stderr):
                writer.writerow([repr(v) for v in row])

    def _resolved(self, min_hits: int) -> Tuple[np.ndarray, np.ndarray]:
        keep = np.array(self.hits) >= min_hits
        return np.array(self.lambdas)[keep], np.array(self.mass)[keep]


def distribution_ratio(
    family: Union[Family, str],
    f0: complex,
    lambda_grid: Sequence[float],
    c: float = 1.0,
    n_samples: int = 1_000_000,
    seed: int = 42,
) -> DistributionCurve:
    """Area of {|f| > lambda} for area-uniform samples, with standard errors."""
    f = family_function(family, complex(f0), c)
    modulus = np.abs(f(sample_disk(n_samples, seed)))
    f_at_zero = float(abs(f(np.array([0j]))[0]))
    hits = [int(np.count_nonzero(modulus > lam)) for lam in lambda_grid]
    mass = [h / n_samples for h in hits]
    stderr = [math.sqrt(p * (1 - p) / n_samples) for p in mass]
    return DistributionCurve(
        family=Family(family),
        f_at_zero=f_at_zero,
        n_samples=n_samples,
        seed=seed,
        lambdas=[float(lam) for lam in lambda_grid],
        mass=mass,
        stderr=stderr,
        hits=hits,
        mass_at_one=float(np.count_nonzero(modulus > 1)) / n_samples,
    )


def fit_weak_constant(curve: DistributionCurve, min_hits: int = 400) -> float:
    """Smallest K with lambda^2 A(|f| > lambda) <= K A(|f| > 1) on resolved grid points."""
    lam, mass = curve._resolved(min_hits)
    if lam.size == 0 or curve.mass_at_one == 0:
        raise DegenerateSampleError("no resolved grid point for the weak-type fit")
    return float(np.max(lam ** 2 * mass / curve.mass_at_one))


def fit_lemma_constant(curve: DistributionCurve, power: int, min_hits: int = 400) -> float:
    """Smallest C with A(|f| > lambda) <= C |f(0)|^power / lambda^power on resolved points."""
    lam, mass = curve._resolved(min_hits)
    if lam.size == 0:
        raise DegenerateSampleError("no resolved grid point for the constant fit")
    return float(np.max(lam ** power * mass / curve.f_at_zero ** power))


def fit_tail_exponent(curve: DistributionCurve, min_hits: int = 400) -> float:
    """Slope of log A(|f| > lambda) against log lambda on resolved points."""
    lam, mass = curve._resolved(min_hits)
    if lam.size < 2:
        raise DegenerateSampleError("a tail fit needs at least two resolved points")
    slope, _ = np.polyfit(np.log(lam), np.log(mass), 1)
    return float(slope)


# --- Moment inequalities ---

class PaleyZygmund(BaseModel):
    model_config = ConfigDict(frozen=True)

    lhs: float
    rhs: float
    stderr: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs - 3 * self.stderr


def paley_zygmund_check(samples, a: float) -> PaleyZygmund:
    """
    P(X > a E X) against (1 - a)^2 (E X)^2 / E X^2.

    Raises:
        DegenerateSampleError: for negative or all-zero samples
    """
    x = np.asarray(samples, dtype=float).ravel()
    if not 0 < a < 1:
        raise ValueError(f"a must lie in (0, 1), got {a}")
    if x.size == 0 or np.any(x < 0) or not np.any(x > 0):
        raise DegenerateSampleError("Paley-Zygmund needs non-negative samples that are not all zero")
    mean = float(x.mean())
    p = float(np.mean(x > a * mean))
    rhs = (1 - a) ** 2 * mean ** 2 / float(np.mean(x ** 2))
    return PaleyZygmund(lhs=p, rhs=rhs, stderr=math.sqrt(p * (1 - p) / x.size))


class HarmonicLevelReport(BaseModel):
    """Mean-value property and level-set lower bound of u = Re f on D(z0, r)."""

    model_config = ConfigDict(frozen=True)

    center_value: float
    mean_value_error: float
    level_fraction: float
    lower_bound: float
    stderr: float


def harmonic_level_check(f: DiskFunction, z0: complex, r: float, n_samples: int = 200_000, seed: int = 42) -> HarmonicLevelReport:
    """
    For positive harmonic u = Re f: the sampled mean of u over D(z0, r)
    against u(z0), and the fraction of D(z0, r) where u > u(z0)/2 against
    the Paley-Zygmund lower bound with a = 1/2.
    """
    if abs(z0) + r >= 1:
        raise ValueError("D(z0, r) must lie inside the unit disk")
    u = np.real(f(z0 + r * sample_disk(n_samples, seed)))
    if np.any(u < 0):
        raise DegenerateSampleError("u must be positive on the sampled disk")
    center = float(np.real(f(np.array([z0]))[0]))
    pz = paley_zygmund_check(u, 0.5)
    return HarmonicLevelReport(
        center_value=center,
        mean_value_error=abs(float(u.mean()) - center),
        level_fraction=pz.lhs,
        lower_bound=pz.rhs,
        stderr=pz.stderr,
    )


class EmbeddingCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    lhs: float
    rhs: float
    k_mu2: float
    level_area: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def carleson_embedding_check(
    f: DiskFunction,
    mu: AtomMeasure,
    h: float,
    t: float,
    maximal: Optional[MaximalFunction] = None,
) -> EmbeddingCheck:
    """
    mu({|z| > 1 - h, |f| > t}) against 4 K_{mu,2}(2h) A({Lambda_f > t}), the
    sampled Lambda_f being inflated by DOMINATION_SLACK.
    """
    maximal = maximal or lambda_f(f, MAX_LAMBDA_DEPTH)
    near = np.abs(mu.points) > 1 - h
    big = np.abs(f(mu.points)) > t
    lhs = float(mu.weights[near & big].sum())
    k = k_mu2(mu, 2 * h)
    area = maximal.level_area(t, DOMINATION_SLACK)
    return EmbeddingCheck(lhs=lhs, rhs=4 * k * area, k_mu2=k, level_area=area)
