"""Synthetic domain whose genotype is the feature vector itself."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParseError
from .ea import AT_MOST, QualityGate
from .features import FeatureBounds


def reflect_unit(x: np.ndarray) -> np.ndarray:
    """Fold values back into [0, 1] by mirroring at the borders."""
    y = np.mod(x, 2.0)
    return np.where(y > 1.0, 2.0 - y, y)


def identity_features(point) -> np.ndarray:
    return np.array(point, dtype=float)


def gaussian_mutate(point, rng: np.random.Generator, sigma: float = 0.05) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    if sigma == 0:
        return p.copy()
    return reflect_unit(p + rng.normal(0.0, sigma, size=p.shape))


@dataclass
class VectorDomain:
    """Points in ``[0, 1]^d``; quality is the distance to the cube centre.

    Pair it with :func:`spherical_gate` to restrict the population to a ball.
    """

    dim: int = 2
    sigma: float = 0.05
    bounds: FeatureBounds = field(init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError("dim must be positive")
        if self.sigma < 0:
            raise ConfigurationError("sigma must be non-negative")
        self.bounds = FeatureBounds(
            (0.0,) * self.dim, (1.0,) * self.dim, tuple(f"v{i + 1}" for i in range(self.dim))
        )

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.bounds.names

    def random_genotype(self, rng):
        return rng.random(self.dim)

    def mutate(self, genotype, rng):
        return gaussian_mutate(genotype, rng, self.sigma)

    def raw_features(self, genotype):
        return identity_features(genotype)

    def quality(self, genotype, rng=None) -> float:
        return float(np.linalg.norm(np.asarray(genotype) - 0.5))

    def load_genotype(self, path):
        pts = read_points_csv(path)
        if pts.shape != (1, self.dim):
            raise ParseError(f"{path}: expected a single {self.dim}-dimensional point")
        return pts[0]



def spherical_gate(radius: float) -> QualityGate:
    """Gate admitting points within ``radius`` of the cube centre."""
    if radius <= 0:
        raise ConfigurationError("radius must be positive")
    return QualityGate(radius, AT_MOST)


def write_points_csv(points, path) -> None:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(pts.shape[1])])
        for row in pts:
            w.writerow([repr(float(v)) for v in row])


def read_points_csv(path) -> np.ndarray:
    """Read a header + one point per row; rows must share a width and lie in [0, 1]."""
    rows = []
    width = None
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path}: empty file", line=1)
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(f"expected {width} values, got {len(row)}", line=lineno)
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise ParseError("coordinates must lie in [0, 1]", line=lineno)
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no points")
    return np.array(rows)
