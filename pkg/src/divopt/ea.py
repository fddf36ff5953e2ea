"""(mu + lambda) evolutionary diversity optimization.

Offspring are admitted only when they pass the quality gate; survivors are
chosen by repeatedly dropping the member whose removal leaves the best
indicator value for the rest.  The algorithm is generic over the domain
(anything implementing :class:`Domain`) and over the driving indicator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Protocol, Sequence

import numpy as np

from .errors import ConfigurationError, InitializationError
from .features import FeatureBounds, normalize
from .indicators import IndicatorSpec, compare, evaluate_indicator, removal_values, scalar

log = logging.getLogger(__name__)

AT_LEAST = "at-least"
AT_MOST = "at-most"
UNCONSTRAINED = "unconstrained"

INIT_STRATEGIES = ("random-accept", "warm-start", "quality-first")


@dataclass(frozen=True)
class QualityGate:
    threshold: float | None = None
    direction: str = UNCONSTRAINED

    def __post_init__(self):
        if self.direction not in (AT_LEAST, AT_MOST, UNCONSTRAINED):
            raise ConfigurationError(f"unknown quality direction {self.direction!r}")
        if self.direction != UNCONSTRAINED and self.threshold is None:
            raise ConfigurationError(f"direction {self.direction!r} needs a threshold")

    def passes(self, q: float) -> bool:
        if self.direction == AT_LEAST:
            return q >= self.threshold
        if self.direction == AT_MOST:
            return q <= self.threshold
        return True

    def improves(self, new: float, old: float) -> bool:
        """True when ``new`` moves towards the gate compared to ``old``."""
        if self.direction == AT_LEAST:
            return new > old
        if self.direction == AT_MOST:
            return new < old
        return False


class Domain(Protocol):
    """What the EA needs from a problem domain."""

    bounds: FeatureBounds

    def random_genotype(self, rng: np.random.Generator) -> Any: ...

    def mutate(self, genotype: Any, rng: np.random.Generator) -> Any: ...

    def raw_features(self, genotype: Any) -> np.ndarray: ...

    def quality(self, genotype: Any, rng: np.random.Generator) -> float: ...

    def load_genotype(self, path) -> Any: ...


@dataclass(eq=False)
class Individual:
    genotype: Any
    raw_features: np.ndarray
    features: np.ndarray
    quality: float
    birth_generation: int = 0


@dataclass(frozen=True)
class EvolutionConfig:
    indicator: IndicatorSpec
    mu: int = 20
    lam: int = 1
    generations: int = 0
    seed: int = 0
    gate: QualityGate = QualityGate()
    init_strategy: str = "random-accept"
    init_budget: int = 1_000_000
    warm_start: tuple = ()

    def __post_init__(self):
        if self.mu < 2:
            raise ConfigurationError("mu must be >= 2")
        if self.lam < 1:
            raise ConfigurationError("lambda must be >= 1")
        if self.lam > self.mu:
            raise ConfigurationError("lambda cannot exceed mu (parents drawn without replacement)")
        if self.generations < 0:
            raise ConfigurationError("generations must be >= 0")
        if self.init_strategy not in INIT_STRATEGIES:
            raise ConfigurationError(f"unknown init strategy {self.init_strategy!r}")
        if self.init_budget < 1:
            raise ConfigurationError("init_budget must be positive")


@dataclass
class EvolutionResult:
    initial_population: list[Individual]
    population: list[Individual]
    trajectory: list[float]
    final_value: Any
    offspring_accepted: int = 0
    offspring_rejected: int = 0
    init_samples: int = 0

    @property
    def features(self) -> np.ndarray:
        return np.array([ind.features for ind in self.population])


def make_individual(domain: Domain, genotype, quality: float, generation: int = 0) -> Individual:
    raw = np.asarray(domain.raw_features(genotype), dtype=float)
    return Individual(genotype, raw, normalize(raw, domain.bounds), float(quality), generation)


def population_features(pop: Sequence[Individual]) -> np.ndarray:
    return np.array([ind.features for ind in pop])


def initialize(
    config: EvolutionConfig, domain: Domain, rng: np.random.Generator
) -> tuple[list[Individual], int]:
    """Return ``mu`` individuals passing the gate and the number of samples drawn."""
    gate = config.gate
    if config.init_strategy == "warm-start":
        genotypes = [
            domain.load_genotype(g) if isinstance(g, (str, bytes)) or hasattr(g, "__fspath__") else g
            for g in config.warm_start
        ]
        if len(genotypes) != config.mu:
            raise InitializationError(
                f"warm start needs exactly mu={config.mu} genotypes, got {len(genotypes)}"
            )
        pop = []
        for i, g in enumerate(genotypes):
            q = domain.quality(g, rng)
            if not gate.passes(q):
                raise InitializationError(f"warm-start genotype {i} fails the quality gate (q={q})")
            pop.append(make_individual(domain, g, q))
        return pop, len(genotypes)

    pop: list[Individual] = []
    samples = 0
    if config.init_strategy == "random-accept":
        while len(pop) < config.mu:
            if samples >= config.init_budget:
                rate = len(pop) / samples
                raise InitializationError(
                    f"accepted {len(pop)}/{config.mu} after {samples} samples "
                    f"(acceptance rate {rate:.3g})",
                    acceptance_rate=rate,
                )
            g = domain.random_genotype(rng)
            q = domain.quality(g, rng)
            samples += 1
            if gate.passes(q):
                pop.append(make_individual(domain, g, q))
        return pop, samples

    # quality-first: hill-climb each random start until it passes the gate
    while len(pop) < config.mu:
        g = domain.random_genotype(rng)
        q = domain.quality(g, rng)
        samples += 1
        while not gate.passes(q):
            if samples >= config.init_budget:
                raise InitializationError(
                    f"quality-first initialization admitted {len(pop)}/{config.mu} "
                    f"within {samples} evaluations",
                    acceptance_rate=len(pop) / samples,
                )
            g2 = domain.mutate(g, rng)
            q2 = domain.quality(g2, rng)
            samples += 1
            if gate.improves(q2, q):
                g, q = g2, q2
        pop.append(make_individual(domain, g, q))
    return pop, samples


def select_survivors(pop: list[Individual], spec: IndicatorSpec, mu: int):
    """Drop minimal-loss members until ``mu`` remain; return (population, indicator value).

    Ties go to the newest member (largest birth generation, then latest position).
    """
    pop = list(pop)
    value = None
    while len(pop) > mu:
        vals = removal_values(spec, population_features(pop))
        best = 0
        for j in range(1, len(pop)):
            c = compare(spec, vals[j], vals[best])
            if c < 0 or (
                c == 0
                and (pop[j].birth_generation, j) > (pop[best].birth_generation, best)
            ):
                best = j
        value = vals[best]
        del pop[best]
    if value is None:
        value = evaluate_indicator(spec, population_features(pop))
    return pop, value


def step(
    pop: list[Individual],
    config: EvolutionConfig,
    domain: Domain,
    rng: np.random.Generator,
    generation: int = 0,
    current_value=None,
):
    """One generation; returns (population, indicator value, offspring accepted)."""
    if len(pop) != config.mu:
        raise ConfigurationError(f"population size {len(pop)} != mu={config.mu}")
    parents = rng.choice(config.mu, size=config.lam, replace=False)
    offspring = []
    for i in parents:
        child = domain.mutate(pop[i].genotype, rng)
        q = domain.quality(child, rng)
        if config.gate.passes(q):
            offspring.append(make_individual(domain, child, q, generation))
    if not offspring:
        if current_value is None:
            current_value = evaluate_indicator(config.indicator, population_features(pop))
        return pop, current_value, 0
    new_pop, value = select_survivors(pop + offspring, config.indicator, config.mu)
    return new_pop, value, len(offspring)


def run(config: EvolutionConfig, domain: Domain, progress=None) -> EvolutionResult:
    """Initialize, then evolve for ``config.generations`` generations.

    The whole run is a function of the config (including its seed) and the
    domain; a single random stream is consumed sequentially.
    """
    rng = np.random.default_rng(config.seed)
    pop, samples = initialize(config, domain, rng)
    initial = list(pop)
    value = evaluate_indicator(config.indicator, population_features(pop))
    trajectory = [scalar(value)]
    accepted = rejected = 0
    for gen in range(1, config.generations + 1):
        pop, value, n_acc = step(pop, config, domain, rng, gen, value)
        accepted += n_acc
        rejected += config.lam - n_acc
        trajectory.append(scalar(value))
        if progress is not None:
            progress(gen, trajectory[-1])
    log.debug(
        "run seed=%d: %d offspring accepted, %d rejected, final %s=%r",
        config.seed, accepted, rejected, config.indicator.kind, trajectory[-1],
    )
    return EvolutionResult(initial, pop, trajectory, value, accepted, rejected, samples)
