"""
Carleson windows, Hastings-Luecking cells and finite measures on the closed
unit disk, with the Carleson functions rho_mu and K_{mu,2}.
"""

import csv
import logging
import math
import os
import threading
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import optimize
from scipy.spatial import cKDTree

from src.log_real import CarlesonLabError
from src.orlicz_core import (
    OrliczFunction,
    ProbeCondition,
    condition_probe,
    geometric_grid,
)
from src.symbols import AnalyticSymbol, ConstantSymbol, IdentitySymbol, PowerSymbol

logger = logging.getLogger(__name__)

SHARD_SIZE = 1 << 18
DEFAULT_XI_GRID = 64
T_GRID_PER_DECADE = 40


# --- Exceptions ---

class MeasureError(CarlesonLabError):
    """Raised when a measure is built or queried with invalid input."""


class SequenceSearchError(MeasureError):
    """Raised when the sequences behind a witness measure cannot be found."""


# --- Windows ---

class WindowKind(str, Enum):
    W = "W"
    S = "S"


class CarlesonWindow(BaseModel):
    """
    W(xi, h) = {|z| >= 1 - h, |arg(z conj xi)| <= pi h} or
    S(xi, h) = {|z - xi| < h}.
    """

    model_config = ConfigDict(frozen=True)

    xi_angle: float
    h: float = Field(gt=0)
    kind: WindowKind = WindowKind.W

    @classmethod
    def at(cls, xi: complex, h: float, kind: Union[WindowKind, str] = WindowKind.W) -> "CarlesonWindow":
        return cls(xi_angle=float(np.angle(xi)), h=h, kind=WindowKind(kind))

    @property
    def xi(self) -> complex:
        return complex(np.exp(1j * self.xi_angle))


def wrapped_angle(z, xi_angle: float) -> np.ndarray:
    """arg(z conj xi) in (-pi, pi]."""
    return np.angle(np.asarray(z, dtype=complex) * np.exp(-1j * xi_angle))


def in_window(z, w: CarlesonWindow):
    """Membership of z (scalar or array) in the window."""
    z = np.asarray(z, dtype=complex)
    if w.kind == WindowKind.S:
        inside = np.abs(z - w.xi) < w.h
    else:
        inside = (np.abs(z) >= 1 - w.h) & (np.abs(wrapped_angle(z, w.xi_angle)) <= math.pi * w.h)
    return bool(inside) if inside.ndim == 0 else inside


# --- Hastings-Luecking cells ---

class HLCell(BaseModel):
    """
    Cell k = 2**n + j - 1 of generation n: the polar rectangle
    1 - 2**-n <= |z| < 1 - 2**-(n+1), arg in [(2j-1) pi/2**n, (2j+1) pi/2**n).
    Generation 0 is the disk |z| < 1/2.
    """

    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=0)
    generation: int = Field(ge=0)
    j: int = Field(ge=0)

    @property
    def radii(self) -> Tuple[float, float]:
        n = self.generation
        if n == 0:
            return 0.0, 0.5
        return 1 - 2.0 ** -n, 1 - 2.0 ** -(n + 1)

    @property
    def angles(self) -> Tuple[float, float]:
        n = self.generation
        width = 2 * math.pi / 2 ** n
        return (self.j - 0.5) * width, (self.j + 0.5) * width


def hl_cell(k: int) -> HLCell:
    n = int(math.floor(math.log2(k + 1)))
    return HLCell(k=k, generation=n, j=k + 1 - 2 ** n)


def hl_index(z: complex) -> HLCell:
    r = abs(z)
    if r >= 1:
        raise MeasureError(f"Hastings-Luecking cells cover the open disk, got |z|={r}")
    if r < 0.5:
        return HLCell(k=0, generation=0, j=0)
    n = max(1, int(math.floor(-math.log2(1 - r))))
    while 1 - 2.0 ** -n > r:
        n -= 1
    while r >= 1 - 2.0 ** -(n + 1):
        n += 1
    width = 2 * math.pi / 2 ** n
    j = int(math.floor((math.atan2(z.imag, z.real) + width / 2) / width)) % 2 ** n
    return HLCell(k=2 ** n + j - 1, generation=n, j=j)


def hl_area(k: int) -> float:
    """Normalized area of cell k."""
    n = hl_cell(k).generation
    if n == 0:
        return 0.25
    return 2.0 ** -n * ((1 - 2.0 ** -(n + 1)) ** 2 - (1 - 2.0 ** -n) ** 2)


# --- Measures ---

class DiskMeasure(ABC):
    """Finite positive measure on the closed unit disk."""

    label: str = "measure"

    @property
    @abstractmethod
    def total_mass(self) -> float:
        """mu(closed disk)."""

    @abstractmethod
    def window_masses(self, h: float, xi_angles: np.ndarray, kind: WindowKind) -> np.ndarray:
        """mu(window) for one size h and many centers."""

    def window_mass(self, w: CarlesonWindow) -> float:
        return float(self.window_masses(w.h, np.array([w.xi_angle]), w.kind)[0])

    @property
    def rotation_invariant(self) -> bool:
        return False

    def stderr(self, mass: float) -> float:
        """Monte Carlo standard error of a window mass (0 when exact)."""
        return 0.0


class ClosedFormKind(str, Enum):
    BOUNDARY_LEBESGUE = "m"
    NORMALIZED_AREA = "A"


def _lens_area(h: float) -> float:
    """Normalized area of D(xi, h) inside the unit disk, |xi| = 1."""
    if h >= 2:
        return 1.0
    r = h
    part1 = r * r * math.acos(r / 2)
    part2 = math.acos(1 - r * r / 2)
    part3 = 0.5 * r * math.sqrt(max(4 - r * r, 0.0))
    return (part1 + part2 - part3) / math.pi


class ClosedFormMeasure(DiskMeasure):
    def __init__(self, kind: Union[ClosedFormKind, str]):
        """
        Boundary Lebesgue measure m or normalized area measure A, both of mass 1.
        """
        self.kind = ClosedFormKind(kind)
        self.label = f"closed-form:{self.kind.value}"

    @property
    def total_mass(self) -> float:
        return 1.0

    @property
    def rotation_invariant(self) -> bool:
        return True

    def window_masses(self, h: float, xi_angles: np.ndarray, kind: WindowKind) -> np.ndarray:
        kind = WindowKind(kind)
        if kind == WindowKind.W:
            arc = min(h, 1.0)
            if self.kind == ClosedFormKind.BOUNDARY_LEBESGUE:
                mass = arc
            else:
                t = min(h, 1.0)
                mass = arc * (1 - (1 - t) ** 2)
        elif self.kind == ClosedFormKind.BOUNDARY_LEBESGUE:
            mass = 1.0 if h >= 2 else 2 * math.asin(h / 2) / math.pi
        else:
            mass = _lens_area(h)
        return np.full(len(xi_angles), mass)


class PowerPullbackMeasure(DiskMeasure):
    def __init__(self, k: int, boundary: bool):
        """
        Exact pull-back of m (boundary) or A (area) by z**k, W windows only.
        """
        self.k = k
        self.boundary = boundary
        self.label = f"power:{k}:{'boundary' if boundary else 'area'}"

    @property
    def total_mass(self) -> float:
        return 1.0

    @property
    def rotation_invariant(self) -> bool:
        return True

    def window_masses(self, h: float, xi_angles: np.ndarray, kind: WindowKind) -> np.ndarray:
        if WindowKind(kind) != WindowKind.W:
            raise MeasureError("closed-form power pull-backs only answer W windows")
        t = min(h, 1.0)
        mass = t if self.boundary else t * (1 - (1 - t) ** (2 / self.k))
        return np.full(len(xi_angles), mass)


@dataclass(frozen=True)
class SampleProvenance:
    symbol: str
    n_samples: int
    seed: Optional[int]
    boundary: bool


@dataclass(frozen=True, eq=False)
class AtomMeasure(DiskMeasure):
    """
    Weighted atoms: explicit discrete measures or Monte Carlo pull-backs
    (equal weights, with the provenance needed to regenerate them).
    """

    points: np.ndarray
    weights: np.ndarray
    label: str = "atoms"
    provenance: Optional[SampleProvenance] = None
    _index: dict = field(default_factory=dict, repr=False)
    _arcs_lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=complex).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if points.shape != weights.shape:
            raise MeasureError("points and weights must be aligned")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise MeasureError("atom masses must be finite and non-negative")
        if np.any(np.abs(points) > 1 + 1e-12):
            raise MeasureError("atoms must lie in the closed unit disk")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)
        order = np.argsort(-np.abs(points), kind="stable")
        self._index["modulus"] = np.abs(points)[order]
        self._index["angle"] = np.angle(points)[order]
        self._index["weight"] = weights[order]
        if points.size:
            self._index["tree"] = cKDTree(np.column_stack([points.real, points.imag]))

    @classmethod
    def discrete(cls, atoms: Sequence[Tuple[complex, float]], label: str = "atoms") -> "AtomMeasure":
        if not atoms:
            return cls(np.zeros(0, dtype=complex), np.zeros(0), label=label)
        points, weights = zip(*atoms)
        return cls(np.array(points, dtype=complex), np.array(weights, dtype=float), label=label)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def n_atoms(self) -> int:
        return int(self.points.size)

    def stderr(self, mass: float) -> float:
        if self.provenance is None or self.provenance.boundary or self.total_mass == 0:
            return 0.0
        p = min(max(mass / self.total_mass, 0.0), 1.0)
        return self.total_mass * math.sqrt(p * (1 - p) / self.provenance.n_samples)

    def window_masses(self, h: float, xi_angles: np.ndarray, kind: WindowKind) -> np.ndarray:
        xi_angles = np.asarray(xi_angles, dtype=float)
        if WindowKind(kind) == WindowKind.S:
            return self._disk_masses(h, xi_angles)
        # prefix of atoms with |z| >= 1 - h
        count = int(np.searchsorted(-self._index["modulus"], -(1 - h), side="right"))
        if count == 0:
            return np.zeros(len(xi_angles))
        angle = self._index["angle"][:count]
        weight = self._index["weight"][:count]
        if math.pi * h >= math.pi:
            return np.full(len(xi_angles), float(weight.sum()))
        with self._arcs_lock:
            arcs = self._index.setdefault("arcs", {})
            if count not in arcs:
                order = np.argsort(angle, kind="stable")
                arcs.clear()
                arcs[count] = (angle[order], np.concatenate([[0.0], np.cumsum(weight[order])]))
            angle, cumulative = arcs[count]
        return _arc_sums(angle, cumulative, xi_angles, math.pi * h)

    def _disk_masses(self, h: float, xi_angles: np.ndarray) -> np.ndarray:
        if self.n_atoms == 0:
            return np.zeros(len(xi_angles))
        tree = self._index["tree"]
        radius = np.nextafter(h, 0)
        out = np.empty(len(xi_angles))
        for i, angle in enumerate(xi_angles):
            hits = tree.query_ball_point([math.cos(angle), math.sin(angle)], radius)
            out[i] = float(self.weights[hits].sum()) if hits else 0.0
        return out

    def to_csv(self, path: Union[str, Path]) -> None:
        atoms_to_csv(self, path)


def _arc_sums(angle: np.ndarray, cumulative: np.ndarray, centers: np.ndarray, half_width: float) -> np.ndarray:
    """Weight of sorted angles within [c - half_width, c + half_width] mod 2 pi."""
    lo = np.mod(centers - half_width + math.pi, 2 * math.pi) - math.pi
    hi = lo + 2 * half_width
    upper = np.searchsorted(angle, np.minimum(hi, math.pi), side="right")
    lower = np.searchsorted(angle, lo, side="left")
    mass = cumulative[upper] - cumulative[lower]
    wrapped = hi > math.pi
    extra = np.searchsorted(angle, hi - 2 * math.pi, side="right")
    mass = mass + np.where(wrapped, cumulative[extra], 0.0)
    return mass


def atoms_to_csv(mu: AtomMeasure, path: Union[str, Path]) -> None:
    """Write the atom list as CSV (re, im, weight)."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["re", "im", "weight"])
        for z, w in zip(mu.points, mu.weights):
            writer.writerow([repr(float(z.real)), repr(float(z.imag)), repr(float(w))])


# --- Carleson functions ---

def xi_grid(size: int) -> np.ndarray:
    return 2 * math.pi * np.arange(size) / size - math.pi


def carleson_rho_argmax(
    mu: DiskMeasure,
    h: float,
    xi_grid_size: int = DEFAULT_XI_GRID,
    kind: Union[WindowKind, str] = WindowKind.W,
) -> Tuple[float, float]:
    """
    Largest window mass over a uniform xi grid plus one bounded golden-section
    refinement around the grid argmax. A lower bound of the true supremum.

    Returns:
        (mass, xi angle)
    """
    if xi_grid_size < 8:
        raise MeasureError("xi grid needs at least 8 points")
    if h <= 0:
        raise MeasureError(f"window size must be positive, got {h}")
    kind = WindowKind(kind)
    if h >= 1 and kind == WindowKind.W:
        return mu.total_mass, 0.0
    grid = xi_grid(xi_grid_size)
    masses = mu.window_masses(h, grid, kind)
    best = int(np.argmax(masses))
    mass, angle = float(masses[best]), float(grid[best])
    if mu.rotation_invariant or mass == 0:
        return mass, angle

    step = 2 * math.pi / xi_grid_size
    result = optimize.minimize_scalar(
        lambda a: -float(mu.window_masses(h, np.array([a]), kind)[0]),
        bounds=(angle - step, angle + step),
        method="bounded",
        options={"xatol": step * 1e-3},
    )
    refined = -float(result.fun)
    if refined > mass:
        mass, angle = refined, float(np.mod(result.x + math.pi, 2 * math.pi) - math.pi)
    return mass, angle


def carleson_rho(
    mu: DiskMeasure,
    h: float,
    xi_grid_size: int = DEFAULT_XI_GRID,
    kind: Union[WindowKind, str] = WindowKind.W,
) -> float:
    """rho_mu(h) = sup over xi of mu(W(xi, h)), approximated from below."""
    return carleson_rho_argmax(mu, h, xi_grid_size, kind)[0]


def log_t_grid(h: float, decades: float = 3.0, per_decade: int = T_GRID_PER_DECADE) -> np.ndarray:
    """Log-spaced grid in (0, h] ending exactly at h."""
    n = int(round(decades * per_decade)) + 1
    return np.geomspace(h * 10.0 ** -decades, h, n)


def k_mu2(
    mu: DiskMeasure,
    h: float,
    t_grid: Optional[Sequence[float]] = None,
    xi_grid_size: int = DEFAULT_XI_GRID,
) -> float:
    """K_{mu,2}(h) = sup_{0 < t <= h} rho_mu(t) / t**2 over a log-spaced t grid."""
    grid = log_t_grid(h) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any(grid <= 0) or np.any(grid > h * (1 + 1e-12)):
        raise MeasureError("t grid must lie in (0, h]")
    return max(carleson_rho(mu, float(t), xi_grid_size) / t ** 2 for t in grid)


class RhoCurve(BaseModel):
    """rho estimates on an h grid, with argmax centers and standard errors."""

    model_config = ConfigDict(frozen=True)

    label: str
    h: List[float]
    rho: List[float]
    xi_angle: List[float]
    stderr: List[float]

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["h", "rho", "xi_argmax_re", "xi_argmax_im"])
            for h, rho, angle in zip(self.h, self.rho, self.xi_angle):
                writer.writerow([repr(h), repr(rho), repr(math.cos(angle)), repr(math.sin(angle))])

    def as_function(self) -> Callable[[float], float]:
        """Linear interpolation in h (clamped)."""
        return lambda t: float(np.interp(t, self.h, self.rho))


def rho_curve(
    mu: DiskMeasure,
    h_grid: Sequence[float],
    xi_grid_size: int = DEFAULT_XI_GRID,
    kind: Union[WindowKind, str] = WindowKind.W,
) -> RhoCurve:
    rows = [carleson_rho_argmax(mu, float(h), xi_grid_size, kind) for h in h_grid]
    return RhoCurve(
        label=mu.label,
        h=[float(h) for h in h_grid],
        rho=[r for r, _ in rows],
        xi_angle=[a for _, a in rows],
        stderr=[mu.stderr(r) for r, _ in rows],
    )


def contractivity_constant(
    mu: DiskMeasure,
    eps_grid: Sequence[float],
    h_grid: Sequence[float],
    xi_grid_size: int = DEFAULT_XI_GRID,
) -> float:
    """
    Smallest C with mu(S(xi, eps h)) <= C eps**2 mu(S(xi, h)) over the grids,
    xi being the heaviest S(., h) window for each h. Empty windows are skipped.
    """
    worst = 0.0
    for h in h_grid:
        mass_h, angle = carleson_rho_argmax(mu, float(h), xi_grid_size, WindowKind.S)
        if mass_h == 0:
            continue
        for eps in eps_grid:
            inner = mu.window_mass(CarlesonWindow(xi_angle=angle, h=eps * h, kind=WindowKind.S))
            worst = max(worst, inner / (eps ** 2 * mass_h))
    return worst


# --- Sampling and pull-backs ---

def _worker_count() -> int:
    return int(os.environ.get("CARLESON_LAB_WORKERS", min(8, os.cpu_count() or 1)))


def _sample_shard(seed_seq: np.random.SeedSequence, size: int) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    u = rng.random(size)
    theta = 2 * math.pi * rng.random(size)
    # r = sqrt(u) makes the points area-uniform
    return np.sqrt(u) * np.exp(1j * theta)


def sample_disk(n: int, seed: int) -> np.ndarray:
    """
    n area-uniform points in the disk. Shards draw from seeds spawned off
    ``seed`` and are concatenated in shard order, so the output only depends
    on (n, seed).
    """
    n_shards = max(1, math.ceil(n / SHARD_SIZE))
    seeds = np.random.SeedSequence(seed).spawn(n_shards)
    sizes = [min(SHARD_SIZE, n - i * SHARD_SIZE) for i in range(n_shards)]
    with ThreadPoolExecutor(max_workers=_worker_count()) as pool:
        shards = list(pool.map(_sample_shard, seeds, sizes))
    return np.concatenate(shards)[:n]


def pullback_area(symbol: AnalyticSymbol, n_samples: int, seed: int) -> AtomMeasure:
    """Monte Carlo pull-back of normalized area by the symbol (weights 1/n)."""
    if n_samples < 10_000:
        raise MeasureError(f"need at least 10^4 samples, got {n_samples}")
    images = symbol.eval(sample_disk(n_samples, seed))
    logger.debug("Sampled area pull-back of %s: n=%d seed=%d", symbol.describe(), n_samples, seed)
    return AtomMeasure(
        images,
        np.full(n_samples, 1.0 / n_samples),
        label=f"area-pullback:{symbol.describe()}",
        provenance=SampleProvenance(symbol.describe(), n_samples, seed, boundary=False),
    )


def pullback_boundary(symbol: AnalyticSymbol, n_theta: int, radial_fallback: bool = False) -> AtomMeasure:
    """
    Pull-back of boundary Lebesgue measure on a midpoint theta grid.

    Raises:
        BoundaryValueError: if the symbol has no boundary formula
    """
    theta = 2 * math.pi * (np.arange(n_theta) + 0.5) / n_theta
    values = symbol.boundary_value(theta, radial_fallback=radial_fallback)
    return AtomMeasure(
        np.clip(np.abs(values), 0, 1) * np.exp(1j * np.angle(values)),
        np.full(n_theta, 1.0 / n_theta),
        label=f"boundary-pullback:{symbol.describe()}",
        provenance=SampleProvenance(symbol.describe(), n_theta, None, boundary=True),
    )


def closed_form_pullback(symbol: AnalyticSymbol, boundary: bool) -> Optional[DiskMeasure]:
    """Exact pull-back measure for identity, power and constant symbols."""
    if isinstance(symbol, IdentitySymbol):
        return ClosedFormMeasure(ClosedFormKind.BOUNDARY_LEBESGUE if boundary else ClosedFormKind.NORMALIZED_AREA)
    if isinstance(symbol, PowerSymbol):
        return PowerPullbackMeasure(symbol.k, boundary)
    if isinstance(symbol, ConstantSymbol):
        return AtomMeasure.discrete([(symbol.c, 1.0)], label=f"constant:{symbol.c}")
    return None


# --- Witness measures ---

def _require_probe_failure(psi: OrliczFunction, cond: ProbeCondition, grid: np.ndarray) -> None:
    report = condition_probe(psi, cond, grid)
    if report.holds:
        raise SequenceSearchError(
            f"{psi.spec} satisfies {cond.value} on the search grid; the sequences need not exist"
        )


def delta2_witness_measure(
    psi: OrliczFunction,
    n_terms: int,
    a_grid: Optional[np.ndarray] = None,
) -> AtomMeasure:
    """
    Discrete measure sum (n/Psi(2a_n) - (n+1)/Psi(2a_{n+1})) delta_{x_n} with
    x_n = 1 - Psi(2a_n)**-1/2, where a_n is the first grid value above
    a_{n-1} with Psi(2a)/Psi(a) >= 2 n 2**n (a x2 margin) and Psi(2a)/n
    increasing. The tail beyond n_terms is lumped into a closing atom at
    x_{N+1}, so mu([x_M, 1]) = M/Psi(2a_M) exactly.

    Raises:
        SequenceSearchError: if psi satisfies Delta2 on the grid or the grid
            runs out
    """
    if not 1 <= n_terms <= 30:
        raise MeasureError(f"n_terms must lie in [1, 30], got {n_terms}")
    grid = geometric_grid(2.0 ** -4, 2.0 ** 12) if a_grid is None else np.asarray(a_grid, dtype=float)
    _require_probe_failure(psi, ProbeCondition.DELTA2, grid)

    psi_a = psi.eval_float(grid)
    psi_2a = psi.eval_float(2 * grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = psi_2a / psi_a
    a_values: List[float] = []
    psi_values: List[float] = []
    start = 0
    for n in range(1, n_terms + 2):
        previous = psi_values[-1] / (n - 1) if psi_values else 0.0
        ok = (ratio >= 2 * n * 2.0 ** n) & (psi_2a / n > previous) & np.isfinite(psi_2a)
        ok[:start] = False
        hits = np.flatnonzero(ok)
        if hits.size == 0:
            raise SequenceSearchError(f"no admissible a_{n} on the search grid")
        start = int(hits[0]) + 1
        a_values.append(float(grid[hits[0]]))
        psi_values.append(float(psi_2a[hits[0]]))

    psi2a = np.array(psi_values)
    n = np.arange(1, n_terms + 2)
    points = 1 - 1 / np.sqrt(psi2a)
    masses = n[:-1] / psi2a[:-1] - n[1:] / psi2a[1:]
    masses = np.append(masses, n[-1] / psi2a[-1])
    logger.debug("Delta2 witness measure: a_n=%s", a_values)
    return AtomMeasure(points + 0j, masses, label=f"delta2-witness:{psi.spec}")


def nabla0_witness_measure(
    psi: OrliczFunction,
    n_terms: int,
    grid: Optional[np.ndarray] = None,
    y_span: float = 2.0 ** 24,
) -> AtomMeasure:
    """
    Discrete measure sum Psi(2**n y_n)**-1 delta_{r_n}, r_n = 1 - Psi(y_n)**-1/2,
    with x_n <= y_n <= x_{n+1} found by a monotone grid search such that
    Psi(x_n) > 1 and Psi(2x_n)/Psi(x_n) >= 2 Psi(2**n y_n)/Psi(y_n).

    Raises:
        SequenceSearchError: if psi satisfies Nabla0 on the grid or no
            admissible pair is found
    """
    if not 1 <= n_terms <= 30:
        raise MeasureError(f"n_terms must lie in [1, 30], got {n_terms}")
    grid = geometric_grid(1.0, 2.0 ** 100) if grid is None else np.asarray(grid, dtype=float)
    _require_probe_failure(psi, ProbeCondition.NABLA0, grid)

    psi_x = psi.eval_float(grid)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        left = psi.eval_float(2 * grid) / psi_x
    ys: List[float] = []
    start = 0
    for n in range(1, n_terms + 1):
        found = None
        for i in range(start, len(grid)):
            if not psi_x[i] > 1 or not np.isfinite(left[i]):
                continue
            window = (grid >= grid[i]) & (grid <= grid[i] * y_span)
            candidates = np.flatnonzero(window)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                right = psi.eval_float(2.0 ** n * grid[candidates]) / psi_x[candidates]
            good = np.flatnonzero(np.isfinite(right) & (left[i] >= 2 * right))
            if good.size:
                found = int(candidates[good[0]])
                break
        if found is None:
            raise SequenceSearchError(f"no admissible (x_{n}, y_{n}) pair on the search grid")
        ys.append(float(grid[found]))
        start = found

    y = np.array(ys)
    n = np.arange(1, n_terms + 1)
    masses = 1 / psi.eval_float(2.0 ** n * y)
    points = 1 - 1 / np.sqrt(psi.eval_float(y))
    return AtomMeasure(points + 0j, masses, label=f"nabla0-witness:{psi.spec}")
