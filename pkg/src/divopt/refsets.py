"""Regular reference grids in the unit square / cube and their transformed images."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .features import dimension_double, plane_embed

# resolution per axis used for the driving indicators
DEFAULT_GRID_K = {2: 101, 3: 11}

TRANSFORMS = ("identity", "plane-embed", "dimension-double")


@dataclass(frozen=True)
class ReferenceSet:
    points: np.ndarray
    k: int
    space: str  # unit-square, unit-cube, plane-embedded, doubled

    def __len__(self) -> int:
        return len(self.points)


def grid(d: int, k: int) -> ReferenceSet:
    """All points of ``{0, 1/(k-1), ..., 1}^d`` in lexicographic order."""
    if k < 2:
        raise ConfigurationError(f"grid resolution k must be >= 2, got {k}")
    if d < 1:
        raise ConfigurationError(f"grid dimension must be >= 1, got {d}")
    axis = np.array([i / (k - 1) for i in range(k)])
    pts = np.array(list(itertools.product(axis, repeat=d)), dtype=float)
    space = {2: "unit-square", 3: "unit-cube"}.get(d, f"unit-{d}-cube")
    return ReferenceSet(pts, k, space)


def apply_transform(points, transform: str) -> np.ndarray:
    if transform == "identity":
        return np.asarray(points, dtype=float)
    if transform == "plane-embed":
        return plane_embed(points)
    if transform == "dimension-double":
        return dimension_double(points)
    raise ConfigurationError(f"unknown transform {transform!r}")


def transform_refset(rs: ReferenceSet, transform: str) -> ReferenceSet:
    pts = apply_transform(rs.points, transform)
    space = {
        "identity": rs.space,
        "plane-embed": "plane-embedded",
        "dimension-double": "doubled",
    }[transform]
    return ReferenceSet(pts, rs.k, space)


def write_refset_csv(rs: ReferenceSet, path) -> None:
    path = Path(path)
    d = rs.points.shape[1]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(d)])
        for row in rs.points:
            w.writerow([repr(float(v)) for v in row])
