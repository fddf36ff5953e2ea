"""Euclidean TSP instances in the unit square: features, tours, quality gate, I/O."""

from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import CapacityError, ConfigurationError, ParseError, UnsupportedFormatError
from .features import FeatureBounds
from .vector import reflect_unit

HELD_KARP_MAX_N = 15
IMPROVEMENT_EPS = 1e-10


@dataclass
class TspInstance:
    cities: np.ndarray
    name: str = "instance"
    opt_length: float | None = None
    # affine map applied on import: unit = (original - offset) / scale
    offset: tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.cities, dtype=float)
        if c.ndim != 2 or c.shape[1] != 2:
            raise ConfigurationError(f"cities must have shape (n, 2), got {c.shape}")
        if len(c) < 3:
            raise ConfigurationError("a TSP instance needs at least 3 cities")
        if np.any(c < 0) or np.any(c > 1):
            raise ConfigurationError("city coordinates must lie in [0, 1]")
        self.cities = c

    @property
    def n(self) -> int:
        return len(self.cities)

    def distances(self) -> np.ndarray:
        return distance_matrix(self.cities)


@dataclass
class Tour:
    order: np.ndarray
    length: float


def distance_matrix(cities: np.ndarray) -> np.ndarray:
    diff = cities[:, None, :] - cities[None, :, :]
    return np.sqrt((diff**2).sum(-1))


def tour_length(order, dist: np.ndarray) -> float:
    order = np.asarray(order)
    return float(dist[order, np.roll(order, -1)].sum())


def canonical_tour(order) -> np.ndarray:
    """Rotate to start at city 0 and orient so the second city has the smaller index."""
    order = np.asarray(order)
    k = int(np.flatnonzero(order == 0)[0])
    t = np.roll(order, -k)
    if len(t) > 2 and t[1] > t[-1]:
        t = np.concatenate([t[:1], t[1:][::-1]])
    return t


def _make_tour(order, dist) -> Tour:
    t = canonical_tour(order)
    return Tour(t, tour_length(t, dist))


# ------------------------------------------------------------------ features


def _nearest_two(dist: np.ndarray) -> np.ndarray:
    d = dist.copy()
    np.fill_diagonal(d, np.inf)
    # stable sort: equal distances resolved by the lower city index
    return np.argsort(d, axis=1, kind="stable")[:, :2]


def feature_angle_mean(inst: TspInstance) -> float:
    """Mean angle (radians) at each city between the rays to its two nearest neighbours."""
    c = inst.cities
    nn = _nearest_two(inst.distances())
    a = c[nn[:, 0]] - c
    b = c[nn[:, 1]] - c
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    degenerate = (na == 0) | (nb == 0)
    if degenerate.any():
        warnings.warn(
            f"{int(degenerate.sum())} cities coincide with a nearest neighbour; angle set to 0",
            RuntimeWarning,
            stacklevel=2,
        )
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.einsum("ij,ij->i", a, b) / (na * nb)
    angles = np.where(degenerate, 0.0, np.arccos(np.clip(np.nan_to_num(cos), -1.0, 1.0)))
    return float(angles.mean())


def feature_centroid_mean_dist(inst: TspInstance) -> float:
    c = inst.cities
    return float(np.linalg.norm(c - c.mean(axis=0), axis=1).mean())


def feature_nnds_mean(inst: TspInstance) -> float:
    d = inst.distances()
    np.fill_diagonal(d, np.inf)
    return float(d.min(axis=1).mean())


def mst_edges(dist: np.ndarray) -> list[tuple[int, int, float]]:
    """Dense Prim from city 0; ties go to the lowest index."""
    n = len(dist)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    key = dist[0].copy()
    parent = np.zeros(n, dtype=int)
    edges = []
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, key)
        v = int(np.argmin(cand))
        u = int(parent[v])
        edges.append((min(u, v), max(u, v), float(dist[u, v])))
        in_tree[v] = True
        closer = ~in_tree & (dist[v] < key)
        key[closer] = dist[v][closer]
        parent[closer] = v
    return edges


def feature_mst_dists_mean(inst: TspInstance) -> float:
    edges = mst_edges(inst.distances())
    return float(np.mean([w for _, _, w in edges]))


# id -> (tspmeta name, function, f_min, f_max) for 50-city instances
FEATURES: dict[str, tuple[str, Callable[[TspInstance], float], float, float]] = {
    "f1": ("angle_mean", feature_angle_mean, 0.70, 2.90),
    "f2": ("centroid_mean_distance_to_centroid", feature_centroid_mean_dist, 0.24, 0.70),
    "f3": ("nnds_mean", feature_nnds_mean, 0.10, 0.70),
    "f4": ("mst_dists_mean", feature_mst_dists_mean, 0.06, 0.15),
}


def all_features(inst: TspInstance) -> dict[str, float]:
    return {fid: fn(inst) for fid, (_, fn, _, _) in FEATURES.items()}


def default_bounds(selection) -> FeatureBounds:
    try:
        rows = [FEATURES[f] for f in selection]
    except KeyError as exc:
        raise ConfigurationError(f"unknown TSP feature {exc.args[0]!r}") from None
    return FeatureBounds(
        tuple(r[2] for r in rows), tuple(r[3] for r in rows), tuple(selection)
    )


# --------------------------------------------------------------------- tours


def two_opt(inst: TspInstance, rng: np.random.Generator, dist: np.ndarray | None = None) -> Tour:
    """2-opt local search from a uniformly random permutation.

    Edges (t[i], t[i+1]) are scanned in order of ``i``; for each the first
    improving partner ``j`` is applied and the same ``i`` is rescanned.
    Passes repeat until one completes without an improvement.
    """
    n = inst.n
    dist = inst.distances() if dist is None else dist
    t = rng.permutation(n)
    if n < 4:
        return _make_tour(t, dist)
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            while True:
                js = np.arange(i + 2, n if i > 0 else n - 1)
                if len(js) == 0:
                    break
                a, b = t[i], t[i + 1]
                c = t[js]
                d = t[(js + 1) % n]
                delta = dist[a, c] + dist[b, d] - dist[a, b] - dist[c, d]
                hits = np.flatnonzero(delta < -IMPROVEMENT_EPS)
                if len(hits) == 0:
                    break
                j = js[hits[0]]
                t[i + 1 : j + 1] = t[i + 1 : j + 1][::-1]
                improved = True
    return _make_tour(t, dist)


def exact_opt(inst: TspInstance, dist: np.ndarray | None = None) -> Tour:
    """Held-Karp dynamic program; exponential, limited to 15 cities."""
    n = inst.n
    if n > HELD_KARP_MAX_N:
        raise CapacityError(
            f"Held-Karp is limited to {HELD_KARP_MAX_N} cities (got {n}); "
            "supply the optimum tour length externally (opt_length)"
        )
    dist = inst.distances() if dist is None else dist
    if n <= 3:
        return _make_tour(np.arange(n), dist)
    m = n - 1  # city 0 is the fixed start; city j+1 is bit j
    sub = dist[1:, 1:]
    full = (1 << m) - 1
    dp = np.full((1 << m, m), np.inf)
    parent = np.full((1 << m, m), -1, dtype=np.int64)
    bits = 1 << np.arange(m)
    dp[bits, np.arange(m)] = dist[0, 1:]
    for mask in range(1, full):
        cur = dp[mask]
        ext = cur[:, None] + sub
        best_prev = np.argmin(ext, axis=0)
        cost = ext[best_prev, np.arange(m)]
        ks = np.flatnonzero((mask & bits) == 0)
        if len(ks) == 0:
            continue
        # each state (mask | k, k) has the single predecessor subset ``mask``
        dp[mask | bits[ks], ks] = cost[ks]
        parent[mask | bits[ks], ks] = best_prev[ks]
    totals = dp[full] + dist[1:, 0]
    last = int(np.argmin(totals))
    order = []
    mask = full
    while last >= 0:
        order.append(last + 1)
        prev = int(parent[mask, last])
        mask ^= 1 << last
        last = prev
    order.append(0)
    return _make_tour(np.array(order[::-1]), dist)


def quality(
    inst: TspInstance,
    rng: np.random.Generator,
    opt_length: float | None = None,
    opt_solver: Callable[[TspInstance], float] | None = None,
    repeats: int = 3,
) -> float:
    """Approximation ratio of the best of ``repeats`` 2-opt runs against the optimum.

    The optimum comes from ``opt_length``, else ``inst.opt_length``, else
    ``opt_solver``; with none of them given, Held-Karp is used (n <= 15).
    """
    dist = inst.distances()
    opt = opt_length if opt_length is not None else inst.opt_length
    if opt is None:
        if opt_solver is not None:
            opt = float(opt_solver(inst))
        elif inst.n <= HELD_KARP_MAX_N:
            opt = exact_opt(inst, dist).length
        else:
            raise ConfigurationError(
                f"no optimum available for a {inst.n}-city instance; "
                "provide opt_length or an opt_solver"
            )
    if not opt > 0:
        raise ConfigurationError(f"optimum tour length must be positive, got {opt}")
    seeds = rng.integers(0, 2**63 - 1, size=repeats)
    best = min(two_opt(inst, np.random.default_rng(s), dist).length for s in seeds)
    ratio = best / opt
    if ratio < 1.0:
        if ratio < 1.0 - 1e-9:
            raise ConfigurationError(
                f"2-opt found a tour of length {best!r} below the supplied optimum {opt!r}"
            )
        ratio = 1.0
    return ratio


def mutate(
    inst: TspInstance, rng: np.random.Generator, p_m: float = 0.1, sigma: float = 0.025
) -> TspInstance:
    """Gaussian displacement of each city with probability ``p_m`` (at least one city)."""
    c = inst.cities.copy()
    chosen = rng.random(inst.n) < p_m
    if not chosen.any():
        chosen[rng.integers(inst.n)] = True
    idx = np.flatnonzero(chosen)
    c[idx] = reflect_unit(c[idx] + rng.normal(0.0, sigma, size=(len(idx), 2)))
    return TspInstance(c, inst.name)


def random_instance(n: int, rng: np.random.Generator, name: str = "random") -> TspInstance:
    return TspInstance(rng.random((n, 2)), name)


@dataclass
class TspDomain:
    """Evolves instances of ``n_cities`` cities, described by a subset of f1..f4."""

    n_cities: int = 50
    features: tuple[str, ...] = ("f1", "f4")
    p_m: float = 0.1
    sigma: float = 0.025
    repeats: int = 3
    opt_solver: Callable[[TspInstance], float] | None = None
    bounds: FeatureBounds | None = None

    def __post_init__(self):
        self.features = tuple(self.features)
        if self.bounds is None:
            self.bounds = default_bounds(self.features)
        elif self.bounds.dim != len(self.features):
            raise ConfigurationError("bounds must match the feature selection")
        if self.n_cities < 4:
            raise ConfigurationError("TSP domain needs at least 4 cities")
        if not 0 <= self.p_m <= 1 or self.sigma < 0:
            raise ConfigurationError("invalid mutation parameters")
        self._fns = [FEATURES[f][1] for f in self.features]

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.features

    def random_genotype(self, rng):
        return random_instance(self.n_cities, rng)

    def mutate(self, genotype, rng):
        return mutate(genotype, rng, self.p_m, self.sigma)

    def raw_features(self, genotype):
        return np.array([fn(genotype) for fn in self._fns])

    def quality(self, genotype, rng) -> float:
        return quality(genotype, rng, opt_solver=self.opt_solver, repeats=self.repeats)

    def load_genotype(self, path):
        path = Path(path)
        fmt = "tsplib" if path.suffix.lower() == ".tsp" else "csv"
        return read_instance(path, fmt)



# ----------------------------------------------------------------------- I/O


def _rescale(coords: np.ndarray):
    if coords.min() >= 0 and coords.max() <= 1:
        return coords, (0.0, 0.0), 1.0
    offset = coords.min(axis=0)
    span = float((coords.max(axis=0) - offset).max())
    if span == 0:
        span = 1.0
    return (coords - offset) / span, (float(offset[0]), float(offset[1])), span


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".opt")


def write_instance(inst: TspInstance, path, fmt: str = "csv") -> None:
    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y"])
            for x, y in inst.cities:
                w.writerow([repr(float(x)), repr(float(y))])
    elif fmt == "tsplib":
        lines = [
            f"NAME : {inst.name}",
            "TYPE : TSP",
            f"DIMENSION : {inst.n}",
            "EDGE_WEIGHT_TYPE : EUC_2D",
            "NODE_COORD_SECTION",
        ]
        lines += [f"{i + 1} {float(x)!r} {float(y)!r}" for i, (x, y) in enumerate(inst.cities)]
        lines.append("EOF")
        path.write_text("\n".join(lines) + "\n")
    else:
        raise UnsupportedFormatError(f"unknown instance format {fmt!r}")
    if inst.opt_length is not None:
        _sidecar(path).write_text(f"opt_length\n{inst.opt_length!r}\n")


def _read_sidecar(path: Path) -> float | None:
    side = _sidecar(path)
    if not side.exists():
        return None
    rows = [r for r in side.read_text().split() if r]
    if len(rows) != 2 or rows[0] != "opt_length":
        raise ParseError(f"{side}: expected header 'opt_length' and one value")
    try:
        return float(rows[1])
    except ValueError:
        raise ParseError(f"{side}: invalid opt_length {rows[1]!r}", line=2) from None


def _read_csv(path: Path) -> np.ndarray:
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["x", "y"]:
            raise ParseError("expected header 'x,y'", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not v.strip() for v in row):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 coordinates, got {len(row)}", line=lineno)
            try:
                rows.append([float(row[0]), float(row[1])])
            except ValueError:
                raise ParseError(f"non-numeric coordinate in {row!r}", line=lineno) from None
    return np.array(rows, dtype=float).reshape(-1, 2)


_HEADER = re.compile(r"^\s*([A-Z_]+)\s*:?\s*(.*?)\s*$")


def _read_tsplib(path: Path) -> tuple[str, np.ndarray]:
    name = path.stem
    dimension = None
    coords = []
    in_coords = False
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if in_coords and not line[0].isalpha():
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"expected 'id x y', got {line!r}", line=lineno)
            try:
                coords.append([float(parts[1]), float(parts[2])])
            except ValueError:
                raise ParseError(f"non-numeric coordinate in {line!r}", line=lineno) from None
            continue
        in_coords = False
        if line.startswith("NODE_COORD_SECTION"):
            in_coords = True
            continue
        m = _HEADER.match(line)
        if not m:
            raise ParseError(f"unrecognized line {line!r}", line=lineno)
        key, value = m.group(1), m.group(2)
        if key == "NAME":
            name = value
        elif key == "TYPE" and value.upper() != "TSP":
            raise UnsupportedFormatError(f"TYPE {value!r} is not supported", line=lineno)
        elif key == "EDGE_WEIGHT_TYPE" and value.upper() != "EUC_2D":
            raise UnsupportedFormatError(
                f"EDGE_WEIGHT_TYPE {value!r} is not supported (EUC_2D only)", line=lineno
            )
        elif key == "DIMENSION":
            try:
                dimension = int(value)
            except ValueError:
                raise ParseError(f"invalid DIMENSION {value!r}", line=lineno) from None
    if not coords:
        raise ParseError(f"{path}: no NODE_COORD_SECTION entries")
    if dimension is not None and dimension != len(coords):
        raise ParseError(f"DIMENSION {dimension} but {len(coords)} coordinates")
    return name, np.array(coords, dtype=float)


def read_instance(path, fmt: str = "csv") -> TspInstance:
    """Load an instance; coordinates outside the unit square are rescaled into it.

    Rescaling is affine and keeps the aspect ratio; offset and scale are
    stored on the instance.  An ``<file>.opt`` sidecar supplies ``opt_length``
    in the unit-square coordinates.
    """
    path = Path(path)
    if fmt == "csv":
        name, coords = path.stem, _read_csv(path)
    elif fmt == "tsplib":
        name, coords = _read_tsplib(path)
    else:
        raise UnsupportedFormatError(f"unknown instance format {fmt!r}")
    if len(coords) < 3:
        raise ParseError(f"{path}: need at least 3 cities, got {len(coords)}")
    unit, offset, scale = _rescale(coords)
    return TspInstance(unit, name, _read_sidecar(path), offset, scale)
