"""Evolutionary diversity optimization with multi-objective indicators as the drive."""

from .ea import EvolutionConfig, Individual, QualityGate, run
from .features import FeatureBounds, dimension_double, normalize, plane_embed
from .indicators import (
    EpsSequence,
    IndicatorSpec,
    eps_sequence,
    evaluate_indicator,
    hypervolume,
    igd,
    make_indicator,
    star_discrepancy,
)
from .tsp import TspDomain, TspInstance
from .vector import VectorDomain, spherical_gate

__all__ = [
    "EpsSequence", "EvolutionConfig", "FeatureBounds", "IndicatorSpec", "Individual",
    "QualityGate", "TspDomain", "TspInstance", "VectorDomain", "dimension_double",
    "eps_sequence", "evaluate_indicator", "hypervolume", "igd", "make_indicator",
    "normalize", "plane_embed", "run", "spherical_gate", "star_discrepancy",
]
