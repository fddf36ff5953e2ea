"""Feature normalization and the two dominance-free embeddings.

Normalized feature vectors live in the unit cube.  Indicators borrowed from
multi-objective optimization need objective vectors that never dominate each
other, so before evaluation a feature set is mapped either onto a plane
orthogonal to (1, 1, 1) (feature pairs only) or into a doubled space
``(p, -p)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, UnsupportedDimensionError

SQRT2_4 = np.sqrt(2.0) / 4.0
DEFAULT_MARGIN = 1e-6


@dataclass(frozen=True)
class FeatureBounds:
    """Per-feature normalization range ``[lower_i, upper_i]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper) or not lower:
            raise ConfigurationError("bounds need one (min, max) pair per feature")
        for i, (lo, hi) in enumerate(zip(lower, upper)):
            if not lo < hi:
                raise ConfigurationError(f"feature {i}: f_min={lo} must be < f_max={hi}")
        if self.names is not None and len(self.names) != len(lower):
            raise ConfigurationError("one name per feature required")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @classmethod
    def unit(cls, d: int) -> "FeatureBounds":
        return cls((0.0,) * d, (1.0,) * d)


def normalize(raw: Sequence[float], bounds: FeatureBounds) -> np.ndarray:
    """Scale raw feature values into [0, 1]; values outside the bounds are clamped."""
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (bounds.dim,):
        raise ConfigurationError(
            f"expected {bounds.dim} raw feature values, got shape {raw.shape}"
        )
    lo = np.asarray(bounds.lower)
    hi = np.asarray(bounds.upper)
    return np.clip((raw - lo) / (hi - lo), 0.0, 1.0)


@dataclass(frozen=True)
class PlaneEmbedding:
    """Isometric placement of the unit square on the plane x + y + z = 3*sqrt(2)/4.

    The square's centre lands on (sqrt(2)/4,)*3, so the normal through the
    centre passes through the origin, and any two images differ by a vector
    orthogonal to (1, 1, 1): no image can dominate another.
    """

    center: np.ndarray = field(default_factory=lambda: np.full(3, SQRT2_4))
    basis_u: np.ndarray = field(
        default_factory=lambda: np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0)
    )
    basis_v: np.ndarray = field(
        default_factory=lambda: np.array([1.0, 1.0, -2.0]) / np.sqrt(6.0)
    )

    def matrix(self) -> np.ndarray:
        return np.column_stack([self.basis_u, self.basis_v])


DEFAULT_EMBEDDING = PlaneEmbedding()


def plane_embed(points, emb: PlaneEmbedding = DEFAULT_EMBEDDING) -> np.ndarray:
    """Map feature pairs (shape ``(2,)`` or ``(n, 2)``) to 3-D objective vectors."""
    p = np.asarray(points, dtype=float)
    if p.shape[-1] != 2:
        raise UnsupportedDimensionError(
            f"plane embedding is defined for 2 features, got {p.shape[-1]}"
        )
    return emb.center + (p - 0.5) @ emb.matrix().T


def dimension_double(points) -> np.ndarray:
    """``p -> (p_1..p_d, -p_1..-p_d)``; works on a vector or on rows of a matrix."""
    p = np.asarray(points, dtype=float)
    if p.ndim not in (1, 2) or p.shape[-1] < 1:
        raise ConfigurationError(f"cannot double array of shape {p.shape}")
    return np.concatenate([p, -p], axis=-1)


def derive_reference_point(refset, margin: float = DEFAULT_MARGIN) -> np.ndarray:
    """Componentwise minimum of a (transformed) reference set, pushed out by ``margin``.

    Used as the reference point of the maximization-oriented hypervolume on
    the plane-embedded square.
    """
    r = np.asarray(refset, dtype=float)
    if r.ndim != 2 or r.shape[0] == 0:
        raise ConfigurationError("reference set must be a non-empty 2-D array")
    if margin < 0:
        raise ConfigurationError("margin must be non-negative")
    return r.min(axis=0) - margin


def weakly_dominates(a, b, maximize: bool = False) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    if maximize:
        return bool(np.all(a >= b))
    return bool(np.all(a <= b))
