"""From-scratch oracle, comparison baselines, synthetic streams, experiments."""

from .baselines import baseline_match, baseline_peaks
from .oracle import OracleCluster, oracle_tick, reference_edges
from .synth import PlantedCluster, ScenarioScript, generate

__all__ = [
    "OracleCluster",
    "oracle_tick",
    "reference_edges",
    "baseline_peaks",
    "baseline_match",
    "PlantedCluster",
    "ScenarioScript",
    "generate",
]
