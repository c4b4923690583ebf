"""Grid coverage path planning with a classic ant colony and a
Bayesian-weighted variant for multi-round irrigation cruises."""

from .bayes import (
    CruiseReport,
    CruiseSettings,
    FactorScores,
    FactorWeights,
    RiskTable,
    cruise_round,
    factor_scores,
    likelihood,
    min_risk_decision,
    posterior,
    run_cruises,
    select_next,
)
from .colony import AcoConfig, Path, PheromoneField, construct_path, optimize, transition_prior, update_pheromone
from .estimators import AntColonyPlanner, BayesianCruisePlanner, check_grid_map
from .field import FieldState, MoistureModel, advance_round, apply_maximum_risk, record_pass, window_sums
from .grid import (
    CellClass,
    GridMap,
    MapParseError,
    UnreachableGoalError,
    load_map,
    neighbors,
    obstacle_stats,
    parse_map,
    prediction_window,
    render_map,
)
from .harness import ExperimentSpec, load_spec, run_experiment, stability_generation, sweep

__version__ = "0.1.0"

__all__ = [
    "AcoConfig", "AntColonyPlanner", "BayesianCruisePlanner", "CellClass",
    "CruiseReport", "CruiseSettings", "ExperimentSpec", "FactorScores",
    "FactorWeights", "FieldState", "GridMap", "MapParseError", "MoistureModel",
    "Path", "PheromoneField", "RiskTable", "UnreachableGoalError",
    "advance_round", "apply_maximum_risk", "check_grid_map", "construct_path",
    "cruise_round", "factor_scores", "likelihood", "load_map", "load_spec",
    "min_risk_decision", "neighbors", "obstacle_stats", "optimize", "parse_map",
    "posterior", "prediction_window", "record_pass", "render_map",
    "run_cruises", "run_experiment", "select_next", "stability_generation",
    "sweep", "transition_prior", "update_pheromone", "window_sums",
]
