"""Set-diversity measures: hypervolume, IGD, additive-epsilon sequence, star discrepancy.

Each measure comes with a brute-force counterpart used by the test-suite.
``IndicatorSpec`` ties a measure to its feature transform and reference data
so the EA can treat all five drives uniformly.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np

from . import _hvkernel
from .errors import ConfigurationError, IndicatorDomainError, UnsupportedDimensionError
from .features import derive_reference_point
from .refsets import DEFAULT_GRID_K, apply_transform, grid

MAXIMIZE = "maximize"
MINIMIZE = "minimize"

KINDS = ("HYP2D", "HYP", "IGD", "EPS", "DIS")


def _as_points(points, name="points") -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p[None, :]
    if p.ndim != 2 or p.shape[0] == 0:
        raise IndicatorDomainError(f"{name} must be a non-empty set of vectors")
    return p


def _canonical(points: np.ndarray) -> np.ndarray:
    """Rows in lexicographic order, so results do not depend on input order."""
    order = np.lexsort(points.T[::-1])
    return np.ascontiguousarray(points[order])


def _to_minimization(points, ref, orientation):
    if orientation == MAXIMIZE:
        return -points, -ref
    if orientation == MINIMIZE:
        return points, ref
    raise ConfigurationError(f"unknown orientation {orientation!r}")


def _check_strictly_dominates(points, ref):
    bad = np.argwhere(points >= ref)
    if len(bad):
        i, k = bad[0]
        raise IndicatorDomainError(
            f"point {i} does not strictly dominate the reference point in "
            f"coordinate {k} (minimization view: {points[i, k]!r} >= {ref[k]!r})"
        )


# ---------------------------------------------------------------- hypervolume


def hypervolume(points, ref, orientation: str = MINIMIZE) -> float:
    """Exact Lebesgue measure of the union of boxes spanned by ``points`` and ``ref``."""
    pts = _as_points(points)
    ref = np.asarray(ref, dtype=float)
    if ref.shape != (pts.shape[1],):
        raise IndicatorDomainError("reference point dimension mismatch")
    pts, ref = _to_minimization(pts, ref, orientation)
    _check_strictly_dominates(pts, ref)
    return float(_hvkernel.wfg(_canonical(pts), np.ascontiguousarray(ref)))


def hypervolume_oracle_ie(points, ref, orientation: str = MINIMIZE) -> float:
    """Inclusion-exclusion over every non-empty subset; exponential, n <= 12."""
    pts = _as_points(points)
    ref = np.asarray(ref, dtype=float)
    if len(pts) > 12:
        raise IndicatorDomainError(f"inclusion-exclusion limited to 12 points, got {len(pts)}")
    pts, ref = _to_minimization(pts, ref, orientation)
    _check_strictly_dominates(pts, ref)
    total = 0.0
    for size in range(1, len(pts) + 1):
        sign = 1.0 if size % 2 else -1.0
        for subset in itertools.combinations(range(len(pts)), size):
            corner = pts[list(subset)].max(axis=0)
            total += sign * float(np.prod(ref - corner))
    return total


def hypervolume_oracle_mc(
    points, ref, orientation: str = MINIMIZE, samples: int = 2_000_000, seed: int = 0
) -> float:
    """Monte-Carlo estimate over the bounding box between ``ref`` and the ideal corner."""
    if samples < 100_000:
        raise IndicatorDomainError("Monte-Carlo oracle needs at least 1e5 samples")
    pts = _as_points(points)
    ref = np.asarray(ref, dtype=float)
    pts, ref = _to_minimization(pts, ref, orientation)
    _check_strictly_dominates(pts, ref)
    lo = pts.min(axis=0)
    box = float(np.prod(ref - lo))
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 100_000
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        x = lo + rng.random((m, len(ref))) * (ref - lo)
        covered = np.zeros(m, dtype=bool)
        for p in pts:
            covered |= np.all(x >= p, axis=1)
        hits += int(covered.sum())
        done += m
    return box * hits / samples


# ------------------------------------------------------------------------ IGD


def _distance_matrix(reference: np.ndarray, solutions: np.ndarray) -> np.ndarray:
    # elementwise per coordinate, so each entry is independent of the other columns
    sq = np.zeros((len(reference), len(solutions)))
    for k in range(reference.shape[1]):
        diff = reference[:, k, None] - solutions[None, :, k]
        sq += diff * diff
    return np.sqrt(sq)


def _check_pair(reference, solutions):
    r = _as_points(reference, "reference set")
    s = _as_points(solutions, "solution set")
    if r.shape[1] != s.shape[1]:
        raise IndicatorDomainError(
            f"dimension mismatch: reference {r.shape[1]} vs solutions {s.shape[1]}"
        )
    return r, s


def igd(reference, solutions) -> float:
    """Mean distance from each reference point to its closest solution."""
    r, s = _check_pair(reference, solutions)
    return float(np.mean(_distance_matrix(r, s).min(axis=1)))


# ------------------------------------------------------------------------ EPS


@functools.total_ordering
@dataclass(frozen=True, eq=False)
class EpsSequence:
    """Per-reference additive approximations, sorted non-increasingly.

    Orders lexicographically; smaller is better.
    """

    values: np.ndarray

    @property
    def first(self) -> float:
        return float(self.values[0])

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, EpsSequence):
            return NotImplemented
        return eps_compare(self, other) == 0

    def __lt__(self, other):
        return eps_compare(self, other) < 0

    __hash__ = None


def _eps_excess(reference: np.ndarray, solutions: np.ndarray) -> np.ndarray:
    # excess[r, s] = max_i (s_i - r_i)
    out = solutions[None, :, 0] - reference[:, 0, None]
    for k in range(1, reference.shape[1]):
        np.maximum(out, solutions[None, :, k] - reference[:, k, None], out=out)
    return out


def _sorted_desc(values: np.ndarray) -> np.ndarray:
    return np.sort(values)[::-1].copy()


def eps_sequence(reference, solutions) -> EpsSequence:
    r, s = _check_pair(reference, solutions)
    return EpsSequence(_sorted_desc(_eps_excess(r, s).min(axis=1)))


def eps_compare(a: EpsSequence, b: EpsSequence) -> int:
    """-1 if ``a`` is lexicographically smaller (better), 0 on tie, +1 otherwise."""
    va = np.asarray(a.values)
    vb = np.asarray(b.values)
    if va.shape != vb.shape:
        raise IndicatorDomainError(f"sequence lengths differ: {len(va)} vs {len(vb)}")
    diff = np.flatnonzero(va != vb)
    if len(diff) == 0:
        return 0
    i = diff[0]
    return -1 if va[i] < vb[i] else 1


# ----------------------------------------------------------- star discrepancy


def star_discrepancy(points) -> float:
    """Exact star discrepancy over anchored open and closed boxes.

    Candidate upper corners take, per axis, every point coordinate and 1.
    Closed counts come from a d-dimensional cumulative histogram over those
    candidates; the open count at a corner is the closed count one step
    below it on every axis.
    """
    pts = _as_points(points)
    n, d = pts.shape
    if d > 3:
        raise UnsupportedDimensionError(f"star discrepancy supported for d <= 3, got {d}")
    if np.any(pts < 0) or np.any(pts > 1):
        raise IndicatorDomainError("star discrepancy needs points in the unit cube")
    axes = [np.unique(np.append(pts[:, k], 1.0)) for k in range(d)]
    idx = tuple(np.searchsorted(axes[k], pts[:, k]) for k in range(d))
    hist = np.zeros(tuple(len(a) for a in axes), dtype=np.int64)
    np.add.at(hist, idx, 1)
    closed = hist
    for k in range(d):
        closed = np.cumsum(closed, axis=k)
    open_ = np.pad(closed, [(1, 0)] * d)[tuple(slice(0, -1) for _ in range(d))]
    vol = axes[0]
    for k in range(1, d):
        vol = np.multiply.outer(vol, axes[k])
    over = closed / n - vol
    under = vol - open_ / n
    return float(max(over.max(), under.max(), 0.0))


def star_discrepancy_scan(points, resolution: int) -> float:
    """Lower bound on the star discrepancy from a regular scan of upper corners.

    Every scan corner is evaluated directly against all points for both box
    conventions; the exact value exceeds this by at most ``d/(resolution-1)``.
    """
    pts = _as_points(points)
    n, d = pts.shape
    axis = np.linspace(0.0, 1.0, resolution)
    corners = np.array(list(itertools.product(axis, repeat=d)))
    best = 0.0
    for start in range(0, len(corners), 20_000):
        q = corners[start : start + 20_000]
        le = np.ones((len(q), n), dtype=bool)
        lt = np.ones((len(q), n), dtype=bool)
        for k in range(d):
            le &= pts[None, :, k] <= q[:, k, None]
            lt &= pts[None, :, k] < q[:, k, None]
        vol = np.prod(q, axis=1)
        best = max(
            best,
            float(np.max(le.sum(1) / n - vol)),
            float(np.max(vol - lt.sum(1) / n)),
        )
    return best


# ------------------------------------------------------------- driving specs


@dataclass(frozen=True, eq=False)
class IndicatorSpec:
    """A diversity measure wired to its transform and reference data.

    ``orientation`` is the selection direction of the measure.  The objective
    space itself is read as maximization on the embedded plane (reference
    point below the square) and as minimization in the doubled space
    (reference point (2,..,2, 1,..,1) above it).  ``reference`` is a
    reference point for HYP2D/HYP, a transformed reference set for IGD/EPS
    and ``None`` for DIS.
    """

    kind: str
    orientation: str
    transform: str
    reference: np.ndarray | None
    dim: int
    grid_k: int | None = None

    def __post_init__(self):
        expected = {
            "HYP2D": (MAXIMIZE, "plane-embed", "point"),
            "HYP": (MAXIMIZE, "dimension-double", "point"),
            "IGD": (MINIMIZE, "identity", "set"),
            "EPS": (MINIMIZE, "plane-embed", "set"),
            "DIS": (MINIMIZE, "identity", None),
        }
        if self.kind not in expected:
            raise ConfigurationError(f"unknown indicator kind {self.kind!r}")
        orient, transform, ref_kind = expected[self.kind]
        if (self.orientation, self.transform) != (orient, transform):
            raise ConfigurationError(
                f"{self.kind} requires orientation={orient} and transform={transform}"
            )
        ref = self.reference
        if ref_kind is None and ref is not None:
            raise ConfigurationError("DIS takes no reference data")
        if ref_kind == "point" and (ref is None or np.ndim(ref) != 1):
            raise ConfigurationError(f"{self.kind} needs a reference point")
        if ref_kind == "set" and (ref is None or np.ndim(ref) != 2):
            raise ConfigurationError(f"{self.kind} needs a reference set")
        if transform == "plane-embed" and self.dim != 2:
            raise UnsupportedDimensionError(f"{self.kind} is only defined for 2 features")

    @property
    def maximize(self) -> bool:
        return self.orientation == MAXIMIZE


@functools.lru_cache(maxsize=None)
def _cached_spec(kind: str, d: int, k: int) -> IndicatorSpec:
    if kind == "DIS":
        if d > 3:
            raise UnsupportedDimensionError("DIS supports at most 3 features")
        return IndicatorSpec("DIS", MINIMIZE, "identity", None, d)
    if kind == "HYP":
        ref = np.concatenate([np.full(d, 2.0), np.full(d, 1.0)])
        return IndicatorSpec("HYP", MAXIMIZE, "dimension-double", ref, d)
    if kind in ("HYP2D", "EPS") and d != 2:
        raise UnsupportedDimensionError(f"{kind} is only defined for 2 features")
    base = grid(d, k).points
    if kind == "IGD":
        return IndicatorSpec("IGD", MINIMIZE, "identity", base, d, k)
    embedded = apply_transform(base, "plane-embed")
    if kind == "HYP2D":
        return IndicatorSpec("HYP2D", MAXIMIZE, "plane-embed", derive_reference_point(embedded), d, k)
    if kind == "EPS":
        return IndicatorSpec("EPS", MINIMIZE, "plane-embed", embedded, d, k)
    raise ConfigurationError(f"unknown indicator kind {kind!r}")


def make_indicator(kind: str, d: int, grid_k: int | None = None) -> IndicatorSpec:
    """Build the standard spec for one of the five drives over ``d`` features.

    IGD and EPS use the regular grid (101 per axis in 2-D, 11 in 3-D unless
    ``grid_k`` overrides it); HYP2D takes its reference point from the
    extremes of the embedded grid; HYP uses (2,..,2, 1,..,1).
    """
    kind = kind.upper().replace("-", "").replace("_", "")
    if kind not in KINDS:
        raise ConfigurationError(f"unknown indicator kind {kind!r}; expected one of {KINDS}")
    if d not in (2, 3):
        raise UnsupportedDimensionError(f"feature dimension must be 2 or 3, got {d}")
    k = grid_k if grid_k is not None else DEFAULT_GRID_K[d]
    if k < 2:
        raise ConfigurationError("grid_k must be >= 2")
    return _cached_spec(kind, d, k if kind not in ("HYP", "DIS") else 0)


def evaluate_indicator(spec: IndicatorSpec, features):
    """Score a set of normalized feature vectors; EPS returns an ``EpsSequence``."""
    feats = _as_points(features, "population")
    if feats.shape[1] != spec.dim:
        raise ConfigurationError(f"{spec.kind} expects {spec.dim} features, got {feats.shape[1]}")
    objs = apply_transform(feats, spec.transform)
    if spec.kind == "HYP2D":
        return hypervolume(objs, spec.reference, MAXIMIZE)
    if spec.kind == "HYP":
        return hypervolume(objs, spec.reference, MINIMIZE)
    if spec.kind == "IGD":
        return igd(spec.reference, objs)
    if spec.kind == "EPS":
        return eps_sequence(spec.reference, objs)
    return star_discrepancy(objs)


def compare(spec: IndicatorSpec, a, b) -> int:
    """-1 if value ``a`` is better than ``b`` under the spec's orientation, 0 on tie."""
    if spec.kind == "EPS":
        return eps_compare(a, b)
    if a == b:
        return 0
    if spec.maximize:
        return -1 if a > b else 1
    return -1 if a < b else 1


def scalar(value) -> float:
    """Scalar summary of an indicator value (first element for EPS)."""
    return value.first if isinstance(value, EpsSequence) else float(value)


def removal_values(spec: IndicatorSpec, features) -> list:
    """Indicator value of the set with member ``j`` removed, for every ``j``.

    IGD and EPS share one reference-by-solution matrix across all removals;
    the minimum over the remaining columns is taken from the two smallest
    entries per row, which gives exactly the value a fresh evaluation of the
    reduced set would.
    """
    feats = _as_points(features, "population")
    n = len(feats)
    if n < 2:
        raise IndicatorDomainError("need at least two members to evaluate removals")
    if spec.kind not in ("IGD", "EPS"):
        return [evaluate_indicator(spec, np.delete(feats, j, axis=0)) for j in range(n)]
    objs = apply_transform(feats, spec.transform)
    if spec.kind == "IGD":
        mat = _distance_matrix(spec.reference, objs)
    else:
        mat = _eps_excess(spec.reference, objs)
    rows = np.arange(len(mat))
    first_idx = np.argmin(mat, axis=1)
    first = mat[rows, first_idx]
    masked = mat.copy()
    masked[rows, first_idx] = np.inf
    second = masked.min(axis=1)
    out = []
    for j in range(n):
        per_ref = np.where(first_idx == j, second, first)
        if spec.kind == "IGD":
            out.append(float(np.mean(per_ref)))
        else:
            out.append(EpsSequence(_sorted_desc(per_ref)))
    return out


def all_scores(features, grid_k: int | None = None) -> dict[str, float]:
    """Scalar score of every measure applicable to the feature dimension."""
    feats = _as_points(features, "population")
    d = feats.shape[1]
    kinds = KINDS if d == 2 else ("HYP", "IGD", "DIS")
    return {k: scalar(evaluate_indicator(make_indicator(k, d, grid_k), feats)) for k in kinds}
