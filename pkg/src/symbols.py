"""
Analytic self-maps of the unit disk.

Elementary families (identity, constants, powers, finite Blaschke products)
and the cusp symbol: a conformal chain through the right half-disk whose
image touches the unit circle only at -1.
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from src.log_real import CarlesonLabError

logger = logging.getLogger(__name__)

# radius used for boundary values of symbols without a closed form
BOUNDARY_RADIUS = 0.999999


# --- Exceptions ---

class SymbolError(CarlesonLabError):
    """Raised when a symbol is built from invalid parameters."""


class BoundaryValueError(SymbolError):
    """Raised when boundary values are requested from a symbol without them."""


class CuspConstructionError(SymbolError):
    """Raised when the cusp chain fails its normalization checks."""


# --- Möbius maps ---

class MobiusMap:
    def __init__(self, a: complex, b: complex, c: complex, d: complex):
        """
        z -> (a z + b) / (c z + d).
        """
        if a * d - b * c == 0:
            raise SymbolError("degenerate Möbius map")
        self.a, self.b, self.c, self.d = complex(a), complex(b), complex(c), complex(d)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.a * z + self.b) / (self.c * z + self.d)

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """self after other."""
        return MobiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def __repr__(self) -> str:
        return f"MobiusMap({self.a}, {self.b}, {self.c}, {self.d})"


# --- Symbols ---

class AnalyticSymbol(ABC):
    """Analytic map of the open unit disk into itself."""

    name: str = "symbol"
    has_boundary_formula: bool = True

    @abstractmethod
    def eval(self, z) -> np.ndarray:
        """Interior values phi(z)."""

    def boundary_value(self, theta, radial_fallback: bool = False) -> np.ndarray:
        """
        Boundary values phi*(e^{i theta}).

        Args:
            theta: Angles in [0, 2 pi)
            radial_fallback: Allow phi(BOUNDARY_RADIUS e^{i theta}) when the
                family has no closed boundary formula

        Raises:
            BoundaryValueError: if no formula exists and no fallback is allowed
        """
        if not radial_fallback:
            raise BoundaryValueError(f"{self.describe()} has no boundary formula")
        theta = np.asarray(theta, dtype=float)
        return self.eval(BOUNDARY_RADIUS * np.exp(1j * theta))

    def at_origin(self) -> complex:
        return complex(np.asarray(self.eval(np.array([0j])))[0])

    def __call__(self, z) -> np.ndarray:
        return self.eval(z)

    def describe(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.describe()})"


class IdentitySymbol(AnalyticSymbol):
    name = "identity"

    def eval(self, z) -> np.ndarray:
        return np.asarray(z, dtype=complex)

    def boundary_value(self, theta, radial_fallback: bool = False) -> np.ndarray:
        return np.exp(1j * np.asarray(theta, dtype=float))


class ConstantSymbol(AnalyticSymbol):
    name = "constant"

    def __init__(self, c: complex):
        if not abs(c) < 1:
            raise SymbolError(f"constant symbol needs |c| < 1, got {c}")
        self.c = complex(c)

    def eval(self, z) -> np.ndarray:
        return np.full(np.shape(z), self.c, dtype=complex)

    def boundary_value(self, theta, radial_fallback: bool = False) -> np.ndarray:
        return np.full(np.shape(theta), self.c, dtype=complex)

    def describe(self) -> str:
        return f"constant:{self.c}"


class PowerSymbol(AnalyticSymbol):
    name = "power"

    def __init__(self, k: int):
        if int(k) != k or k < 1:
            raise SymbolError(f"power symbol needs an integer k >= 1, got {k}")
        self.k = int(k)

    def eval(self, z) -> np.ndarray:
        return np.asarray(z, dtype=complex) ** self.k

    def boundary_value(self, theta, radial_fallback: bool = False) -> np.ndarray:
        return np.exp(1j * self.k * np.asarray(theta, dtype=float))

    def describe(self) -> str:
        return f"power:{self.k}"


class BlaschkeSymbol(AnalyticSymbol):
    name = "blaschke"

    def __init__(self, zeros: Sequence[complex], rotation: float = 0.0):
        """
        B(z) = e^{i rotation} prod (z - a) / (1 - conj(a) z).

        Args:
            zeros: Zeros inside the disk, repeated according to multiplicity
            rotation: Angle of the unimodular factor
        """
        zeros = [complex(a) for a in zeros]
        if not zeros:
            raise SymbolError("a Blaschke product needs at least one zero")
        if any(abs(a) >= 1 for a in zeros):
            raise SymbolError("Blaschke zeros must lie in the open disk")
        self.zeros = zeros
        self.rotation = float(rotation)

    @property
    def degree(self) -> int:
        return len(self.zeros)

    def eval(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, np.exp(1j * self.rotation), dtype=complex)
        for a in self.zeros:
            out = out * (z - a) / (1 - np.conj(a) * z)
        return out

    def boundary_value(self, theta, radial_fallback: bool = False) -> np.ndarray:
        return self.eval(np.exp(1j * np.asarray(theta, dtype=float)))

    def multiplicities(self) -> Dict[complex, int]:
        counts: Dict[complex, int] = {}
        for a in self.zeros:
            counts[a] = counts.get(a, 0) + 1
        return counts

    def describe(self) -> str:
        zeros = ",".join(str(a) for a in self.zeros)
        return f"blaschke:{zeros}@{self.rotation:g}"


class CuspSymbol(AnalyticSymbol):
    """
    phi = phi3 - 1 with phi3 = 1/phi2, phi2 = 1 - (2/pi) log f and f the
    Riemann map of the disk onto the right half-disk fixing 1, i, -i and
    sending -1 to 0.

    f = Q o sqrt o C o tau with tau(z) = -i z, C(u) = i (1+u)/(1-u) onto the
    upper half-plane, the principal square root onto the first quadrant and
    Q(q) = (1 + i q)/(q + i) onto the half-disk.
    """

    name = "cusp"

    def __init__(self):
        self.tau = MobiusMap(-1j, 0, 0, 1)
        self.to_half_plane = MobiusMap(1j, 1j, -1, 1)
        self.to_half_disk = MobiusMap(1j, 1, 1, 1j)

    def riemann_map(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        x = self.to_half_plane(self.tau(z))
        q = np.sqrt(x)
        # Q(q) = i (x + 1)/(q + i)^2 and x + 1 = (1 + i)(1 + z)/(1 + i z):
        # no cancellation as z -> -1
        return 1j * (1 + 1j) * (1 + z) / ((1 + 1j * z) * (q + 1j) ** 2)

    def boundary_riemann_map(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        half = (theta - math.pi / 2) / 2
        s = np.sin(half)
        c = np.cos(half)
        # f has square-root corners at +-i; angles within 1e-15 of them snap
        pole = np.abs(s) < 1e-15
        c = np.where(np.abs(c) < 1e-15, 0.0, c)
        safe = np.where(pole, 1.0, s)
        x = -c / safe
        x_plus_one = math.sqrt(2) * np.sin((theta - math.pi) / 2) / safe
        q = np.where(x >= 0, np.sqrt(np.abs(x)) + 0j, 1j * np.sqrt(np.abs(x)))
        f = 1j * x_plus_one / (q + 1j) ** 2
        # z = i is the pole of C; the limit there is i
        return np.where(pole, 1j, f)

    @staticmethod
    def _chain(f: np.ndarray) -> np.ndarray:
        zero = f == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            phi2 = 1 - (2 / math.pi) * np.log(np.where(zero, 1.0, f))
            phi = 1 / phi2 - 1
        return np.where(zero, -1.0 + 0j, phi)

    def phi2(self, z) -> np.ndarray:
        return 1 - (2 / math.pi) * np.log(self.riemann_map(z))

    def eval(self, z) -> np.ndarray:
        return self._chain(self.riemann_map(z))

    def boundary_value(self, theta, radial_fallback: bool = False) -> np.ndarray:
        return self._chain(self.boundary_riemann_map(theta))

    def inverse(self, w) -> np.ndarray:
        """
        The unique preimage of each w, or nan where w is outside the image.
        """
        w = np.asarray(w, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            phi2 = 1 / (w + 1)
            inside = (phi2.real > 1) & (np.abs(phi2.imag) < 1)
            f = np.exp((1 - phi2) * math.pi / 2)
            q = self.to_half_disk.inverse()(f)
            u = self.to_half_plane.inverse()(q * q)
            z = self.tau.inverse()(u)
        return np.where(inside & np.isfinite(z), z, np.nan + 0j)


def build_cusp(tol: float = 1e-8) -> CuspSymbol:
    """
    Build the cusp symbol and validate its normalization.

    Checks f(-1) = 0, f(1) = 1, f(i) = i, f(-i) = -i on the boundary, that
    boundary values of f lie on the half-disk boundary and that f(0) is real
    in (0, 1).

    Raises:
        CuspConstructionError: with the failing diagnostics
    """
    cusp = CuspSymbol()
    anchors = {math.pi: 0j, 0.0: 1 + 0j, math.pi / 2: 1j, 3 * math.pi / 2: -1j}
    diagnostics: Dict[str, float] = {}
    for theta, expected in anchors.items():
        got = complex(cusp.boundary_riemann_map(np.array([theta]))[0])
        diagnostics[f"f(e^{theta:.4f}i)"] = abs(got - expected)
    theta = np.linspace(0, 2 * math.pi, 2001, endpoint=False)
    f = cusp.boundary_riemann_map(theta)
    on_edge = np.minimum(np.abs(np.abs(f) - 1), np.abs(f.real))
    diagnostics["half_disk_boundary"] = float(np.max(on_edge))
    f0 = complex(cusp.riemann_map(np.array([0j]))[0])
    diagnostics["f(0).imag"] = abs(f0.imag)

    failed = {k: v for k, v in diagnostics.items() if v > tol}
    if failed or not 0 < f0.real < 1:
        raise CuspConstructionError(f"cusp normalization failed: {failed}, f(0)={f0}")
    logger.debug("Cusp chain validated, f(0)=%.12f", f0.real)
    return cusp


def parse_symbol(spec: str) -> AnalyticSymbol:
    """
    Parse ``identity``, ``constant:c``, ``power:k``, ``blaschke:a,b,...[@angle]``
    or ``cusp``.

    Raises:
        SymbolError: for unknown names or bad parameters
    """
    name, _, params = spec.strip().partition(":")
    try:
        if name == "identity":
            return IdentitySymbol()
        if name == "constant":
            return ConstantSymbol(complex(params.replace(" ", "")))
        if name == "power":
            return PowerSymbol(int(params))
        if name == "blaschke":
            zeros, _, angle = params.partition("@")
            return BlaschkeSymbol(
                [complex(a.replace(" ", "")) for a in zeros.split(",") if a],
                float(angle or 0.0),
            )
        if name == "cusp":
            return build_cusp()
    except ValueError as e:
        raise SymbolError(f"bad parameters in symbol spec '{spec}': {e}") from e
    raise SymbolError(f"Unknown symbol spec: {spec}")


# --- Checks ---

def interior_grid(n: int = 100, radius: float = 0.999) -> np.ndarray:
    """n x n polar grid of interior points."""
    r = radius * (np.arange(1, n + 1) / n)
    theta = 2 * math.pi * np.arange(n) / n
    return (r[:, None] * np.exp(1j * theta[None, :])).ravel()


def max_modulus(symbol: AnalyticSymbol, n: int = 100) -> float:
    return float(np.max(np.abs(symbol.eval(interior_grid(n)))))


def injectivity_defects(
    symbol: AnalyticSymbol,
    n: int = 200,
    image_tol: float = 1e-12,
    separation: float = 1e-3,
) -> List[tuple]:
    """
    Pairs of grid points farther apart than ``separation`` whose images lie
    within ``image_tol`` of each other, on an n x n square grid of the disk.
    """
    axis = np.linspace(-1, 1, n)
    grid = (axis[:, None] + 1j * axis[None, :]).ravel()
    grid = grid[np.abs(grid) < 1]
    images = symbol.eval(grid)
    tree = cKDTree(np.column_stack([images.real, images.imag]))
    return [
        (grid[i], grid[j])
        for i, j in tree.query_pairs(image_tol)
        if abs(grid[i] - grid[j]) > separation
    ]
