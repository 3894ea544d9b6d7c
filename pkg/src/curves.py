"""
Criterion curves: named columns over an h grid with an optional
exponential fit of log(rho) against 1/h.
"""

import csv
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from src.log_real import CarlesonLabError

logger = logging.getLogger(__name__)


# --- Exceptions ---

class CurveError(CarlesonLabError):
    """Raised when a curve is built from inconsistent columns or fitted badly."""


# --- Models ---

class CurveSource(str, Enum):
    MEASURED = "measured"
    MODEL = "closed-form-model"


class ExponentialFit(BaseModel):
    """log(rho) ~ log_c - gamma / h, fitted by least squares on (1/h, log rho)."""

    model_config = ConfigDict(frozen=True)

    log_c: float
    gamma: float
    residual: float
    n_points: int

    @property
    def c(self) -> float:
        return math.exp(self.log_c)

    def __call__(self, h: float) -> float:
        return math.exp(self.log_c - self.gamma / h)


class CriterionCurve(BaseModel):
    """
    Columns of a criterion over an h grid.

    Ratio columns may carry ``inf`` as the infinite-ratio sentinel (for
    instance when rho(h) = 0); every other entry is finite and non-negative.
    """

    model_config = ConfigDict(frozen=True)

    label: str
    source: CurveSource
    h: List[float]
    columns: Dict[str, List[float]]
    fit: Optional[ExponentialFit] = None

    @field_validator("h")
    @classmethod
    def _positive_h(cls, h: List[float]) -> List[float]:
        if any(not t > 0 for t in h):
            raise ValueError("h values must be positive")
        return h

    @model_validator(mode="after")
    def _aligned_and_nonnegative(self) -> "CriterionCurve":
        for name, values in self.columns.items():
            if len(values) != len(self.h):
                raise ValueError(f"column {name} has {len(values)} values for {len(self.h)} h points")
            if any(math.isnan(v) or v < 0 for v in values):
                raise ValueError(f"column {name} has negative or NaN entries")
        return self

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise CurveError(f"curve {self.label} has no column {name}")
        return np.array(self.columns[name], dtype=float)

    def with_fit(self, column: str) -> "CriterionCurve":
        return self.model_copy(update={"fit": fit_exponential(self.h, self.column(column))})

    def summary(self) -> str:
        """One line: label, source, grid range and the last value of each column."""
        parts = [f"{self.label} [{self.source.value}] h={self.h[0]:.4g}..{self.h[-1]:.4g}"]
        parts += [f"{name}={values[-1]:.6g}" for name, values in self.columns.items()]
        if self.fit is not None:
            parts.append(f"fit: gamma={self.fit.gamma:.4g} c={self.fit.c:.4g} rms={self.fit.residual:.3g}")
        return " ".join(parts)

    def to_csv(self, path: Union[str, Path], extra: Optional[Dict[str, str]] = None) -> None:
        """
        Write one row per h. ``extra`` adds constant columns (e.g. source).
        """
        extra = extra or {}
        names = list(self.columns)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["h"] + names + list(extra))
            for i, h in enumerate(self.h):
                writer.writerow([repr(h)] + [repr(self.columns[n][i]) for n in names] + list(extra.values()))


def fit_exponential(h: Sequence[float], rho: Sequence[float]) -> ExponentialFit:
    """
    Least-squares line through (1/h, log rho) over the positive entries.

    Raises:
        CurveError: with fewer than two positive entries
    """
    h = np.asarray(h, dtype=float)
    rho = np.asarray(rho, dtype=float)
    keep = (rho > 0) & np.isfinite(rho)
    if keep.sum() < 2:
        raise CurveError("an exponential fit needs at least two positive values")
    x = 1 / h[keep]
    y = np.log(rho[keep])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    logger.debug("Exponential fit: gamma=%.6g log_c=%.6g rms=%.3g", -slope, intercept, residual)
    return ExponentialFit(log_c=float(intercept), gamma=float(-slope), residual=residual, n_points=int(keep.sum()))
