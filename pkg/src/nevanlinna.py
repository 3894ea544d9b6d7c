"""
Nevanlinna counting functions of analytic self-maps of the disk.

N_phi(w) = sum of log(1/|z|) over the preimages z of w, the partial function
N_phi(r, w) counts only |z| < r, and N_{phi,2}(w) uses squared logs. The
preimages come from closed forms, polynomial roots (Blaschke products), the
inverse chain (cusp) or a cell search with argument-principle counts.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate

from src.curves import CriterionCurve, CurveSource
from src.disk_geometry import (
    DiskMeasure,
    carleson_rho,
    closed_form_pullback,
    pullback_area,
    pullback_boundary,
)
from src.log_real import CarlesonLabError
from src.symbols import (
    AnalyticSymbol,
    BlaschkeSymbol,
    ConstantSymbol,
    CuspSymbol,
    IdentitySymbol,
    PowerSymbol,
)

logger = logging.getLogger(__name__)

GRID_RADIUS = 0.999
NU2_ANGULAR = 256
NU2_RADIAL = 64
NU2_REFINE = 16
MAX_CELL_SPLITS = 10
MERGE_RADIUS = 1e-9


# --- Exceptions ---

class CountingError(CarlesonLabError):
    """Raised when a counting function cannot be evaluated."""


class InfiniteCountError(CountingError):
    """Raised at w = phi(0), where N_phi and N_{phi,2} are infinite."""


class MissedRootsError(CountingError):
    """Raised when a grid search finds fewer preimages than the argument principle counts."""


class DegeneratePreimageError(CountingError):
    """Raised when every point of the disk is a preimage (constant symbol at its value)."""


# --- Preimages ---

class PreimageMethod(str, Enum):
    CLOSED_FORM = "closed-form"
    POLYNOMIAL_ROOTS = "polynomial-roots"
    GRID = "grid+refinement"


@dataclass(frozen=True)
class PreimageSet:
    """Preimages of ``target`` with multiplicities and a residual bound."""

    target: complex
    points: np.ndarray
    multiplicities: np.ndarray
    method: PreimageMethod
    residual: float

    @property
    def count(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def log_moduli(self) -> np.ndarray:
        """log(1/|z|) per preimage."""
        return -np.log(np.abs(self.points))


def _closed_form(symbol: AnalyticSymbol, w: complex) -> Optional[np.ndarray]:
    if isinstance(symbol, IdentitySymbol):
        return np.array([w])
    if isinstance(symbol, PowerSymbol):
        k = symbol.k
        if w == 0:
            return np.zeros(k, dtype=complex)
        return abs(w) ** (1 / k) * np.exp(1j * (np.angle(w) + 2 * math.pi * np.arange(k)) / k)
    if isinstance(symbol, ConstantSymbol):
        if w == symbol.c:
            raise DegeneratePreimageError(f"every z is a preimage of {w} under {symbol.describe()}")
        return np.zeros(0, dtype=complex)
    if isinstance(symbol, CuspSymbol):
        z = symbol.inverse(np.array([w]))
        return z[np.isfinite(z) & (np.abs(z) < 1)]
    return None


def _cluster(roots: np.ndarray, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    """Merge roots closer than ``radius``; the merged point is the mean."""
    points: List[complex] = []
    counts: List[int] = []
    members: List[List[complex]] = []
    for r in roots:
        for i, p in enumerate(points):
            if abs(r - p) < radius:
                members[i].append(r)
                points[i] = complex(np.mean(members[i]))
                counts[i] += 1
                break
        else:
            points.append(complex(r))
            counts.append(1)
            members.append([complex(r)])
    return np.array(points, dtype=complex), np.array(counts, dtype=int)


def _blaschke_roots(symbol: BlaschkeSymbol, w: complex) -> np.ndarray:
    """Roots of e^{i gamma} prod (z - a) - w prod (1 - conj(a) z)."""
    numerator = np.array([1.0 + 0j])
    denominator = np.array([1.0 + 0j])
    for a in symbol.zeros:
        numerator = P.polymul(numerator, [-a, 1.0])
        denominator = P.polymul(denominator, [1.0, -np.conj(a)])
    coefficients = np.exp(1j * symbol.rotation) * numerator - w * denominator
    return P.polyroots(coefficients)


def preimages(symbol: AnalyticSymbol, w: complex, tol: float = 1e-12, method: Optional[str] = None) -> PreimageSet:
    """
    Every z in the disk with phi(z) = w, with multiplicities.

    Args:
        symbol: Analytic self-map
        w: Target in the open disk
        tol: Residual tolerance; polynomial roots closer than sqrt(tol) are
            merged into one root of higher multiplicity
        method: Force ``grid`` to use the cell search on any symbol

    Raises:
        DegeneratePreimageError: for a constant symbol at its value
        MissedRootsError: when the grid search misses roots
    """
    w = complex(w)
    if not abs(w) < 1:
        raise CountingError(f"targets must lie in the open disk, got {w}")
    if tol < 1e-12:
        raise CountingError(f"tolerance below 1e-12 is not resolvable, got {tol}")

    if method != "grid":
        points = _closed_form(symbol, w)
        if points is not None:
            if isinstance(symbol, PowerSymbol) and w == 0:
                return PreimageSet(w, np.array([0j]), np.array([symbol.k]), PreimageMethod.CLOSED_FORM, 0.0)
            residual = float(np.max(np.abs(symbol.eval(points) - w))) if points.size else 0.0
            return PreimageSet(w, points, np.ones(points.size, dtype=int), PreimageMethod.CLOSED_FORM, residual)
        if isinstance(symbol, BlaschkeSymbol):
            roots = _blaschke_roots(symbol, w)
            roots = roots[np.abs(roots) < 1]
            points, counts = _cluster(roots, math.sqrt(tol))
            residual = float(np.max(np.abs(symbol.eval(points) - w))) if points.size else 0.0
            return PreimageSet(w, points, counts, PreimageMethod.POLYNOMIAL_ROOTS, residual)
    return grid_preimages(symbol, w, tol)


# --- Cell search ---

def winding_number(values: np.ndarray) -> int:
    """Winding number of a closed sampled curve around 0 by wrapped angle increments."""
    angles = np.angle(values)
    steps = np.diff(np.concatenate([angles, angles[:1]]))
    steps = (steps + math.pi) % (2 * math.pi) - math.pi
    return int(round(steps.sum() / (2 * math.pi)))


def _cell_boundary(r0: float, r1: float, t0: float, t1: float, m: int) -> np.ndarray:
    s = np.linspace(0, 1, m, endpoint=False)
    return np.concatenate([
        (r0 + (r1 - r0) * s) * np.exp(1j * t0),
        r1 * np.exp(1j * (t0 + (t1 - t0) * s)),
        (r1 - (r1 - r0) * s) * np.exp(1j * t1),
        r0 * np.exp(1j * (t1 - (t1 - t0) * s)),
    ])


def _newton(g: Callable[[complex], complex], z: complex, tol: float, max_iter: int = 100) -> complex:
    step = 1e-7
    for _ in range(max_iter):
        value = g(z)
        if abs(value) <= tol:
            break
        derivative = (g(z + step) - g(z - step)) / (2 * step)
        if derivative == 0:
            break
        z = z - value / derivative
        if abs(z) >= 1:
            z = z / abs(z) * GRID_RADIUS
    return z


def _in_cell(z: complex, r0: float, r1: float, t0: float, t1: float, slack: float) -> bool:
    offset = (np.angle(z) - t0) % (2 * math.pi)
    return r0 - slack <= abs(z) <= r1 + slack and (offset <= t1 - t0 + slack or offset >= 2 * math.pi - slack)


def grid_preimages(
    symbol: AnalyticSymbol,
    w: complex,
    tol: float = 1e-12,
    n_radial: int = 16,
    n_angular: int = 32,
    edge_points: int = 64,
) -> PreimageSet:
    """
    Preimages by subdividing |z| < GRID_RADIUS into polar cells and counting
    zeros of phi - w in each cell by the argument principle.

    A cell holding more than one zero is split in four until every cell holds
    one, and a Newton start from the cell center is kept only if it converges
    inside the cell (otherwise the cell is split as well). After
    MAX_CELL_SPLITS splits a cell counting k > 1 zeros is a root of
    multiplicity k. Points closer than MERGE_RADIUS are merged.

    Raises:
        MissedRootsError: if Newton leaves a cell at the split limit, or the
            merged counts disagree with the count on |z| = GRID_RADIUS
    """

    def g(z: complex) -> complex:
        return complex(symbol.eval(np.array([z]))[0]) - w

    circle = GRID_RADIUS * np.exp(2j * math.pi * np.arange(4096) / 4096)
    total = winding_number(symbol.eval(circle) - w)

    points: List[complex] = []
    counts: List[int] = []

    def search(r0: float, r1: float, t0: float, t1: float, depth: int) -> None:
        path = _cell_boundary(r0, r1, t0, t1, edge_points)
        inside = winding_number(symbol.eval(path) - w)
        if inside <= 0:
            return
        if inside == 1 or depth >= MAX_CELL_SPLITS:
            start = 0.5 * (r0 + r1) * np.exp(0.5j * (t0 + t1))
            z = _newton(g, complex(start), tol)
            slack = 1e-9 * max(r1 - r0, t1 - t0)
            if _in_cell(z, r0, r1, t0, t1, slack):
                points.append(z)
                counts.append(inside)
                return
            if depth >= MAX_CELL_SPLITS:
                raise MissedRootsError(f"Newton left the cell |z| in [{r0}, {r1}], arg in [{t0}, {t1}] while solving phi = {w}")
        rm, tm = 0.5 * (r0 + r1), 0.5 * (t0 + t1)
        for a, b in ((r0, rm), (rm, r1)):
            for c, d in ((t0, tm), (tm, t1)):
                search(a, b, c, d, depth + 1)

    radii = np.linspace(0, GRID_RADIUS, n_radial + 1)
    angles = np.linspace(0, 2 * math.pi, n_angular + 1)
    for i in range(n_radial):
        for j in range(n_angular):
            search(radii[i], radii[i + 1], angles[j], angles[j + 1], 0)

    merged: List[complex] = []
    multiplicities: List[int] = []
    for z, k in zip(points, counts):
        for m, p in enumerate(merged):
            if abs(z - p) < MERGE_RADIUS:
                multiplicities[m] = max(multiplicities[m], k)
                break
        else:
            merged.append(z)
            multiplicities.append(k)

    found = int(sum(multiplicities))
    logger.debug("Grid preimage search for w=%s: %d found in %d cells, %d expected", w, found, len(points), total)
    if found != total:
        raise MissedRootsError(f"found {found} preimages of {w} but the argument principle counts {total}")
    pts = np.array(merged, dtype=complex)
    residual = float(np.max(np.abs(symbol.eval(pts) - w))) if pts.size else 0.0
    return PreimageSet(w, pts, np.array(multiplicities, dtype=int), PreimageMethod.GRID, residual)


# --- Counting functions ---

def _check_target(symbol: AnalyticSymbol, w: complex) -> None:
    if abs(complex(w) - symbol.at_origin()) <= 1e-14:
        raise InfiniteCountError(f"N_phi is infinite at w = phi(0) = {symbol.at_origin()}")


def n_phi(symbol: AnalyticSymbol, w: complex) -> float:
    """N_phi(w); 0 when w has no preimage."""
    _check_target(symbol, w)
    pre = preimages(symbol, w)
    return float(np.sum(pre.multiplicities * pre.log_moduli))


def n_phi_r(symbol: AnalyticSymbol, r: float, w: complex) -> float:
    """Partial counting function: sum of log(r/|z|) over preimages with |z| < r."""
    if not 0 < r <= 1:
        raise CountingError(f"r must lie in (0, 1], got {r}")
    _check_target(symbol, w)
    pre = preimages(symbol, w)
    moduli = np.abs(pre.points)
    inside = moduli < r
    return float(np.sum(pre.multiplicities[inside] * np.log(r / moduli[inside])))


def schwarz_lower_limit(symbol: AnalyticSymbol, w: complex) -> float:
    """|u0(w)| with u0(w) = (w0 - w)/(1 - conj(w0) w), w0 = phi(0); no preimage is smaller."""
    w0 = symbol.at_origin()
    return abs((w0 - w) / (1 - np.conj(w0) * w))


def n_phi2(symbol: AnalyticSymbol, w: complex, mode: str = "direct") -> float:
    """
    N_{phi,2}(w) as the direct sum of squared logs, or by integrating
    2 N_phi(r, w) dr / r from the Schwarz lower limit to 1 (on s = log r,
    with the preimage radii as breakpoints).
    """
    _check_target(symbol, w)
    pre = preimages(symbol, w)
    if mode == "direct":
        return float(np.sum(pre.multiplicities * pre.log_moduli ** 2))
    if mode != "integral":
        raise CountingError(f"Unknown n_phi2 mode: {mode}")
    if pre.count == 0:
        return 0.0
    moduli = np.abs(pre.points)
    logs = np.log(moduli)

    def partial(s: float) -> float:
        inside = logs < s
        return float(np.sum(pre.multiplicities[inside] * (s - logs[inside])))

    lower = math.log(schwarz_lower_limit(symbol, w))
    breakpoints = sorted({float(x) for x in logs if lower < x < 0})
    value, _ = integrate.quad(partial, lower, 0.0, points=breakpoints or None, epsabs=1e-9, limit=200)
    return 2 * value


def counting_sums(symbol: AnalyticSymbol, w) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized (N_phi, N_{phi,2}) over an array of targets.

    Raises:
        InfiniteCountError: if some target equals phi(0)
    """
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(w - symbol.at_origin()) <= 1e-14):
        raise InfiniteCountError("targets include phi(0)")
    if isinstance(symbol, IdentitySymbol):
        log_inv = -np.log(np.abs(w))
        return log_inv, log_inv ** 2
    if isinstance(symbol, PowerSymbol):
        log_inv = -np.log(np.abs(w))
        return log_inv, log_inv ** 2 / symbol.k
    if isinstance(symbol, ConstantSymbol):
        return np.zeros(w.shape), np.zeros(w.shape)
    if isinstance(symbol, CuspSymbol):
        z = symbol.inverse(w)
        valid = np.isfinite(z) & (np.abs(z) < 1)
        log_inv = np.where(valid, -np.log(np.where(valid, np.abs(z), 1.0)), 0.0)
        return log_inv, log_inv ** 2
    n1 = np.empty(w.shape)
    n2 = np.empty(w.shape)
    for index, target in np.ndenumerate(w):
        pre = preimages(symbol, complex(target))
        n1[index] = np.sum(pre.multiplicities * pre.log_moduli)
        n2[index] = np.sum(pre.multiplicities * pre.log_moduli ** 2)
    return n1, n2


def _polar_grid(r0: float, r1: float, t0: float, t1: float, n_r: int, n_t: int) -> np.ndarray:
    radii = r0 + (r1 - r0) * np.arange(n_r) / n_r
    angles = t0 + (t1 - t0) * np.arange(n_t) / n_t
    return (radii[:, None] * np.exp(1j * angles[None, :])).ravel()


def nu2(
    symbol: AnalyticSymbol,
    h: float,
    n_angular: int = NU2_ANGULAR,
    n_radial: int = NU2_RADIAL,
) -> float:
    """
    nu_{phi,2}(h) = sup of N_{phi,2}(w) over |w| >= 1 - h, from a polar grid
    with radii 1 - h + h j / n_radial and one refinement around the argmax.
    A lower bound of the supremum.
    """
    if not 0 < h < 1:
        raise CountingError(f"h must lie in (0, 1), got {h}")
    w0 = symbol.at_origin()
    grid = _polar_grid(1 - h, 1.0, 0.0, 2 * math.pi, n_radial, n_angular)
    grid = grid[np.abs(grid - w0) > 1e-14]
    _, values = counting_sums(symbol, grid)
    best = int(np.argmax(values))
    value = float(values[best])

    dr = h / n_radial
    dt = 2 * math.pi / n_angular
    r, t = abs(grid[best]), float(np.angle(grid[best]))
    local = _polar_grid(max(1 - h, r - dr), min(r + dr, 1 - 1e-15), t - dt, t + dt, NU2_REFINE, NU2_REFINE)
    local = local[(np.abs(local) >= 1 - h) & (np.abs(local - w0) > 1e-14)]
    if local.size:
        _, refined = counting_sums(symbol, local)
        value = max(value, float(np.max(refined)))
    return value


# --- Carleson-Nevanlinna equivalence ---

def _rho_source(symbol: AnalyticSymbol, boundary: bool, n_samples: int, n_theta: int, seed: int) -> Tuple[DiskMeasure, bool]:
    """The pull-back measure and whether it was measured."""
    exact = closed_form_pullback(symbol, boundary)
    if exact is not None:
        return exact, False
    if boundary:
        return pullback_boundary(symbol, n_theta), True
    return pullback_area(symbol, n_samples, seed), True


def _ratio(num: float, den: float) -> float:
    if num == 0:
        return 0.0
    return num / den if den > 0 else math.inf


def equivalence_report(
    symbol: AnalyticSymbol,
    h_grid: Sequence[float],
    C: float = 2.0,
    n_samples: int = 1_000_000,
    n_theta: int = 1 << 16,
    seed: int = 42,
) -> CriterionCurve:
    """
    nu2(h) against rho_{phi,2}(h), and rho_{phi,2}(h) against rho_phi(Ch)**2.

    Closed-form pull-backs are used where they exist; otherwise the area
    measure is sampled and the boundary measure is taken on a theta grid.
    """
    if any(not 0.05 <= h <= 0.5 for h in h_grid):
        raise CountingError("equivalence grids must lie in [0.05, 0.5]")
    area, area_measured = _rho_source(symbol, False, n_samples, n_theta, seed)
    boundary, boundary_measured = _rho_source(symbol, True, n_samples, n_theta, seed)

    columns = {name: [] for name in ("nu2", "rho2", "rho1", "nu2_over_rho2", "rho2_over_rho1sq")}
    for h in h_grid:
        v = nu2(symbol, h)
        rho2 = carleson_rho(area, h)
        rho1 = carleson_rho(boundary, min(C * h, 1.0))
        columns["nu2"].append(v)
        columns["rho2"].append(rho2)
        columns["rho1"].append(rho1)
        columns["nu2_over_rho2"].append(_ratio(v, rho2))
        columns["rho2_over_rho1sq"].append(_ratio(rho2, rho1 ** 2))
    source = CurveSource.MEASURED if area_measured or boundary_measured else CurveSource.MODEL
    return CriterionCurve(
        label=f"equivalence:{symbol.describe()}",
        source=source,
        h=[float(h) for h in h_grid],
        columns=columns,
    )


def fit_equivalence_constant(
    nu2_values: Sequence[float],
    h_grid: Sequence[float],
    rho2: Callable[[float], float],
    candidates: Optional[Sequence[float]] = None,
) -> Optional[float]:
    """
    Smallest candidate C with rho2(h/C)/C <= nu2(h) <= C rho2(Ch) at every
    grid point, rho2 being evaluated at min(Ch, 1). None if no candidate works.
    """
    candidates = np.geomspace(1.0, 100.0, 81) if candidates is None else candidates
    for c in candidates:
        ok = all(
            rho2(h / c) / c <= v <= c * rho2(min(c * h, 1.0))
            for v, h in zip(nu2_values, h_grid)
        )
        if ok:
            return float(c)
    return None
