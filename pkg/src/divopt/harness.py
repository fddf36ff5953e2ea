"""Experiment runner: configs, seeded repetitions, cross-evaluation and summaries."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import tsp
from .ea import AT_LEAST, AT_MOST, UNCONSTRAINED, EvolutionConfig, EvolutionResult, QualityGate, run
from .errors import ConfigurationError, ParseError
from .features import FeatureBounds
from .indicators import KINDS, all_scores, make_indicator
from .vector import VectorDomain, write_points_csv

log = logging.getLogger(__name__)

# measures where larger is better; the rest are minimized
MAXIMIZED_MEASURES = {"HYP2D", "HYP"}

_REQUIRED = (
    "domain", "feature_selection", "indicator", "mu", "lambda", "generations",
    "seed", "repetitions", "quality", "output_dir",
)
_OPTIONAL = ("bounds", "init_strategy", "init_budget", "domain_params", "warm_start")
_DOMAIN_PARAMS = {
    "tsp": {"n_cities", "p_m", "sigma", "repeats", "opt_command"},
    "vector": {"sigma"},
}


@dataclass(frozen=True)
class RunConfig:
    domain: str
    feature_selection: tuple[str, ...]
    indicator: str
    mu: int
    lam: int
    generations: int
    seed: int
    repetitions: int
    quality_threshold: float | None
    quality_direction: str
    output_dir: str
    bounds: tuple[tuple[float, float], ...] | None = None
    grid_k: int | None = None
    init_strategy: str = "random-accept"
    init_budget: int = 1_000_000
    domain_params: dict = field(default_factory=dict)
    warm_start: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return len(self.feature_selection)

    def to_json(self) -> dict[str, Any]:
        """Echo in the same shape the config file uses."""
        indicator: Any = self.indicator
        if self.grid_k is not None:
            indicator = {"kind": self.indicator, "grid_k": self.grid_k}
        out = {
            "domain": self.domain,
            "feature_selection": list(self.feature_selection),
            "indicator": indicator,
            "mu": self.mu,
            "lambda": self.lam,
            "generations": self.generations,
            "seed": self.seed,
            "repetitions": self.repetitions,
            "quality": {"threshold": self.quality_threshold, "direction": self.quality_direction},
            "output_dir": self.output_dir,
            "bounds": [list(b) for b in self.bounds] if self.bounds else None,
            "init_strategy": self.init_strategy,
            "init_budget": self.init_budget,
            "domain_params": dict(self.domain_params),
            "warm_start": list(self.warm_start),
        }
        return out


def _int_field(data, key, minimum):
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigurationError(f"field {key!r}: expected an integer >= {minimum}, got {v!r}")
    return v


def parse_run_config(data: dict) -> RunConfig:
    """Validate a config mapping; unknown or missing keys raise ``ConfigurationError``."""
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a JSON object")
    unknown = set(data) - set(_REQUIRED) - set(_OPTIONAL)
    if unknown:
        raise ConfigurationError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    missing = [k for k in _REQUIRED if k not in data]
    if missing:
        raise ConfigurationError(f"missing config field(s): {', '.join(missing)}")

    domain = data["domain"]
    if domain not in _DOMAIN_PARAMS:
        raise ConfigurationError(f"field 'domain': expected 'tsp' or 'vector', got {domain!r}")
    sel = data["feature_selection"]
    if not isinstance(sel, list) or not all(isinstance(s, str) for s in sel):
        raise ConfigurationError("field 'feature_selection': expected a list of feature ids")
    if len(sel) not in (2, 3):
        raise ConfigurationError("field 'feature_selection': must name 2 or 3 features")
    if len(set(sel)) != len(sel):
        raise ConfigurationError("field 'feature_selection': duplicate feature ids")
    if domain == "tsp":
        bad = [s for s in sel if s not in tsp.FEATURES]
        if bad:
            raise ConfigurationError(
                f"field 'feature_selection': unknown TSP features {bad}; use f1..f4"
            )
    else:
        expected = [f"v{i + 1}" for i in range(len(sel))]
        if sel != expected:
            raise ConfigurationError(f"field 'feature_selection': vector domain uses {expected}")

    ind = data["indicator"]
    grid_k = None
    if isinstance(ind, dict):
        extra = set(ind) - {"kind", "grid_k"}
        if extra or "kind" not in ind:
            raise ConfigurationError("field 'indicator': object form is {kind, grid_k}")
        grid_k = ind.get("grid_k")
        if grid_k is not None and (not isinstance(grid_k, int) or grid_k < 2):
            raise ConfigurationError("field 'indicator.grid_k': expected an integer >= 2")
        ind = ind["kind"]
    if not isinstance(ind, str):
        raise ConfigurationError("field 'indicator': expected a kind name")
    kind = ind.upper().replace("-", "").replace("_", "")
    if kind not in KINDS:
        raise ConfigurationError(f"field 'indicator': unknown kind {ind!r}; expected one of {KINDS}")
    if kind in ("HYP2D", "EPS") and len(sel) != 2:
        raise ConfigurationError(f"field 'indicator': {kind} requires exactly 2 features")

    mu = _int_field(data, "mu", 2)
    lam = _int_field(data, "lambda", 1)
    if lam > mu:
        raise ConfigurationError("field 'lambda': cannot exceed mu")
    generations = _int_field(data, "generations", 0)
    seed = _int_field(data, "seed", 0)
    repetitions = _int_field(data, "repetitions", 1)

    q = data["quality"]
    if not isinstance(q, dict) or set(q) - {"threshold", "direction"}:
        raise ConfigurationError("field 'quality': expected {threshold, direction}")
    direction = q.get("direction", UNCONSTRAINED)
    if direction not in (AT_LEAST, AT_MOST, UNCONSTRAINED):
        raise ConfigurationError(f"field 'quality.direction': unknown value {direction!r}")
    threshold = q.get("threshold")
    if direction != UNCONSTRAINED and not isinstance(threshold, (int, float)):
        raise ConfigurationError("field 'quality.threshold': numeric threshold required")

    out = data["output_dir"]
    if not isinstance(out, str) or not out:
        raise ConfigurationError("field 'output_dir': expected a path")

    bounds = data.get("bounds")
    if bounds is not None:
        ok = (
            isinstance(bounds, list)
            and len(bounds) == len(sel)
            and all(isinstance(b, list) and len(b) == 2 for b in bounds)
        )
        if not ok:
            raise ConfigurationError("field 'bounds': expected one [min, max] pair per feature")
        FeatureBounds(tuple(b[0] for b in bounds), tuple(b[1] for b in bounds))
        bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)

    params = data.get("domain_params") or {}
    if not isinstance(params, dict):
        raise ConfigurationError("field 'domain_params': expected an object")
    extra = set(params) - _DOMAIN_PARAMS[domain]
    if extra:
        raise ConfigurationError(
            f"field 'domain_params': unknown key(s) {sorted(extra)} for domain {domain!r}"
        )
    warm = data.get("warm_start") or []
    if not isinstance(warm, list) or not all(isinstance(w, str) for w in warm):
        raise ConfigurationError("field 'warm_start': expected a list of file paths")

    cfg = RunConfig(
        domain=domain,
        feature_selection=tuple(sel),
        indicator=kind,
        mu=mu,
        lam=lam,
        generations=generations,
        seed=seed,
        repetitions=repetitions,
        quality_threshold=None if threshold is None else float(threshold),
        quality_direction=direction,
        output_dir=out,
        bounds=bounds,
        grid_k=grid_k,
        init_strategy=data.get("init_strategy", "random-accept"),
        init_budget=data.get("init_budget", 1_000_000),
        domain_params=dict(params),
        warm_start=tuple(warm),
    )
    # surface remaining field errors (strategy names, budgets, parameter ranges) now
    evolution_config(cfg, cfg.seed)
    build_domain(cfg)
    return cfg


def load_run_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path}: invalid JSON ({exc})") from None
    return parse_run_config(data)


def _external_opt(command: str):
    argv = shlex.split(command)

    def solve(inst: tsp.TspInstance) -> float:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "instance.tsp"
            tsp.write_instance(inst, path, "tsplib")
            res = subprocess.run(argv + [str(path)], capture_output=True, text=True, check=True)
        return float(res.stdout.strip().split()[-1])

    return solve


def build_domain(cfg: RunConfig):
    bounds = None
    if cfg.bounds is not None:
        bounds = FeatureBounds(
            tuple(b[0] for b in cfg.bounds), tuple(b[1] for b in cfg.bounds), cfg.feature_selection
        )
    p = cfg.domain_params
    if cfg.domain == "vector":
        dom = VectorDomain(dim=cfg.dim, sigma=p.get("sigma", 0.05))
        if bounds is not None:
            dom.bounds = bounds
        return dom
    opt_solver = _external_opt(p["opt_command"]) if p.get("opt_command") else None
    dom = tsp.TspDomain(
        n_cities=p.get("n_cities", 50),
        features=cfg.feature_selection,
        p_m=p.get("p_m", 0.1),
        sigma=p.get("sigma", 0.025),
        repeats=p.get("repeats", 3),
        opt_solver=opt_solver,
        bounds=bounds,
    )
    if opt_solver is None and dom.n_cities > tsp.HELD_KARP_MAX_N:
        raise ConfigurationError(
            f"field 'domain_params.n_cities': {dom.n_cities} cities exceed the exact "
            f"solver limit ({tsp.HELD_KARP_MAX_N}); set domain_params.opt_command"
        )
    return dom


def evolution_config(cfg: RunConfig, seed: int) -> EvolutionConfig:
    return EvolutionConfig(
        indicator=make_indicator(cfg.indicator, cfg.dim, cfg.grid_k),
        mu=cfg.mu,
        lam=cfg.lam,
        generations=cfg.generations,
        seed=seed,
        gate=QualityGate(cfg.quality_threshold, cfg.quality_direction),
        init_strategy=cfg.init_strategy,
        init_budget=cfg.init_budget,
        warm_start=cfg.warm_start,
    )


# ------------------------------------------------------------------- reports


@dataclass
class RunReport:
    seed: int
    result: EvolutionResult
    scores: dict[str, float]
    wall_clock: float
    config: dict

    @property
    def trajectory(self) -> list[float]:
        return self.result.trajectory


def run_single(cfg: RunConfig, seed: int, domain=None) -> RunReport:
    domain = build_domain(cfg) if domain is None else domain
    t0 = time.perf_counter()
    result = run(evolution_config(cfg, seed), domain)
    elapsed = time.perf_counter() - t0
    return RunReport(seed, result, all_scores(result.features), elapsed, cfg.to_json())


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def population_csv(result: EvolutionResult) -> str:
    pop = result.population
    d = len(pop[0].features)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["id"] + [f"raw_f{i + 1}" for i in range(d)] + [f"norm_f{i + 1}" for i in range(d)] + ["quality"]
    )
    for i, ind in enumerate(pop):
        w.writerow(
            [i]
            + [repr(float(v)) for v in ind.raw_features]
            + [repr(float(v)) for v in ind.features]
            + [repr(float(ind.quality))]
        )
    return buf.getvalue()


def trajectory_csv(result: EvolutionResult) -> str:
    lines = ["generation,indicator_value"]
    lines += [f"{g},{v!r}" for g, v in enumerate(result.trajectory)]
    return "\n".join(lines) + "\n"


def _write_genotypes(report: RunReport, out: Path) -> None:
    pop = report.result.population
    if isinstance(pop[0].genotype, tsp.TspInstance):
        inst_dir = out / f"instances_{report.seed}"
        inst_dir.mkdir(exist_ok=True)
        for i, ind in enumerate(pop):
            tsp.write_instance(ind.genotype, inst_dir / f"{i}.csv", "csv")
    else:
        write_points_csv([ind.genotype for ind in pop], out / f"genotypes_{report.seed}.csv")


def write_report(report: RunReport, out: Path) -> None:
    _atomic_write(out / f"pop_{report.seed}.csv", population_csv(report.result))
    _atomic_write(out / f"traj_{report.seed}.csv", trajectory_csv(report.result))
    _write_genotypes(report, out)


def summarize(cfg: RunConfig, reports: list[RunReport]) -> dict:
    per_run = [
        {
            "seed": r.seed,
            "scores": r.scores,
            "driving_final": r.trajectory[-1],
            "offspring_accepted": r.result.offspring_accepted,
            "offspring_rejected": r.result.offspring_rejected,
        }
        for r in reports
    ]
    mean, std = _mean_std([r.scores for r in reports])
    return {"config": cfg.to_json(), "per_run": per_run, "mean": mean, "std": std}


def run_experiment(cfg: RunConfig, progress=None) -> tuple[list[RunReport], dict]:
    """Run ``repetitions`` seeded runs (seed, seed+1, ...) and write every artifact.

    Files in ``output_dir``: ``pop_<seed>.csv``, ``traj_<seed>.csv``, final
    genotypes, ``summary.json`` and ``timing.json`` (wall-clock only; the
    other files are reproducible byte for byte).
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    domain = build_domain(cfg)
    reports = []
    for i in range(cfg.repetitions):
        seed = cfg.seed + i
        rep = run_single(cfg, seed, domain)
        write_report(rep, out)
        reports.append(rep)
        if progress is not None:
            progress(rep)
    summary = summarize(cfg, reports)
    _atomic_write(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    timing = {str(r.seed): r.wall_clock for r in reports}
    _atomic_write(out / "timing.json", json.dumps(timing, indent=2) + "\n")
    return reports, summary


# ----------------------------------------------------------- post-processing


def read_features_csv(path, dim: int) -> np.ndarray:
    """Normalized features from a population CSV (``norm_f*`` columns) or a bare table."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file", line=1)
    header = [h.strip() for h in rows[0]]
    cols = [i for i, h in enumerate(header) if h.startswith("norm_f")]
    if not cols:
        cols = list(range(len(header)))
    if len(cols) != dim:
        raise ParseError(f"{path}: found {len(cols)} feature columns, expected {dim}", line=1)
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
        try:
            vals = [float(row[i]) for i in cols]
        except ValueError:
            raise ParseError(f"non-numeric feature value in {row!r}", line=lineno) from None
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise ParseError("normalized features must lie in [0, 1]", line=lineno)
        data.append(vals)
    if not data:
        raise ParseError(f"{path}: no feature rows")
    return np.array(data)


def cross_evaluate(features_csv, dim: int) -> dict[str, float]:
    if dim not in (2, 3):
        raise ConfigurationError("--dim must be 2 or 3")
    return all_scores(read_features_csv(features_csv, dim))


def _mean_std(score_dicts: list[dict[str, float]]):
    keys = list(score_dicts[0])
    for s in score_dicts:
        if list(s) != keys:
            raise ConfigurationError(f"score schema mismatch: {list(s)} vs {keys}")
    arr = np.array([[s[k] for k in keys] for s in score_dicts], dtype=float)
    mean = arr.mean(axis=0)
    std = arr.std(axis=0, ddof=1) if len(arr) > 1 else np.zeros(len(keys))
    return (
        {k: float(v) for k, v in zip(keys, mean)},
        {k: float(v) for k, v in zip(keys, std)},
    )


def stats_aggregate(summaries: list[dict]) -> list[dict]:
    """Mean/sample-std per (feature set, algorithm, measure) and per-measure ranks.

    Algorithms sharing a feature selection are ranked by mean (1 = best),
    higher-is-better for hypervolumes and lower-is-better otherwise.
    """
    if not summaries:
        raise ConfigurationError("no summaries to aggregate")
    groups: dict[tuple[str, str], list[dict]] = {}
    keys = None
    for s in summaries:
        try:
            cfg = s["config"]
            runs = s["per_run"]
            algo = cfg["indicator"]["kind"] if isinstance(cfg["indicator"], dict) else cfg["indicator"]
            feats = ",".join(cfg["feature_selection"])
        except (KeyError, TypeError):
            raise ConfigurationError("summary lacks config/per_run entries") from None
        for r in runs:
            if keys is None:
                keys = list(r["scores"])
            elif list(r["scores"]) != keys:
                raise ConfigurationError(
                    f"score schema mismatch: {list(r['scores'])} vs {keys}"
                )
            groups.setdefault((feats, f"EA_{algo}"), []).append(r["scores"])
    rows = []
    for (feats, algo), scores in groups.items():
        mean, std = _mean_std(scores)
        for k in keys:
            rows.append(
                {"features": feats, "algorithm": algo, "measure": k,
                 "mean": mean[k], "std": std[k], "n": len(scores)}
            )
    for feats in {r["features"] for r in rows}:
        for k in keys:
            group = [r for r in rows if r["features"] == feats and r["measure"] == k]
            group.sort(key=lambda r: -r["mean"] if k in MAXIMIZED_MEASURES else r["mean"])
            for rank, r in enumerate(group, start=1):
                r["rank"] = rank
    rows.sort(key=lambda r: (r["features"], r["measure"], r["rank"]))
    return rows
