"""Throwbox-relay dissemination simulator and analytic toolkit.

A message spreads through a population of mobile agents that can only
exchange it with stationary buffers ("throwboxes") installed at places.
This package simulates that process, grows the matching bipartite
place/agent network, evaluates the closed-form coverage predictions, and
calibrates the linear bridge between the two descriptions.
"""

__version__ = "0.1.0"

from .core import (
    Constant,
    Empirical,
    PlaceState,
    SimConfig,
    denominator,
    moments,
)
from .mobility import MobilityParams, sample_distinct_places, selection_probabilities
from .dtn import (
    AgentState,
    CoverageSeries,
    TransferEvent,
    refresh,
    run_disjoint,
    run_overlapping,
    run_scripted,
    time_to_agent_coverage,
    visit,
)
from .ensemble import EnsembleResult, ensemble
from .bnw import (
    BipartiteGraph,
    ComponentSummary,
    ThresholdedProjection,
    WeightedProjection,
    components,
    gb_timeseries,
    grow_dirichlet,
    grow_preferential,
    project,
    theorem_holds,
    threshold,
)
from .formulas import (
    FormulaParams,
    cumulative_degree,
    expected_degree,
    gb_analytic,
    gd_simplified,
    weight_growth_rate,
)
from .calibration import CalibrationResult, fit, predict_coverage

__all__ = [
    "__version__",
    "Constant",
    "Empirical",
    "PlaceState",
    "SimConfig",
    "denominator",
    "moments",
    "MobilityParams",
    "sample_distinct_places",
    "selection_probabilities",
    "AgentState",
    "CoverageSeries",
    "TransferEvent",
    "refresh",
    "run_disjoint",
    "run_overlapping",
    "run_scripted",
    "time_to_agent_coverage",
    "visit",
    "EnsembleResult",
    "ensemble",
    "BipartiteGraph",
    "ComponentSummary",
    "ThresholdedProjection",
    "WeightedProjection",
    "components",
    "gb_timeseries",
    "grow_dirichlet",
    "grow_preferential",
    "project",
    "theorem_holds",
    "threshold",
    "FormulaParams",
    "cumulative_degree",
    "expected_degree",
    "gb_analytic",
    "gd_simplified",
    "weight_growth_rate",
    "CalibrationResult",
    "fit",
    "predict_coverage",
]
