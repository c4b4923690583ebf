"""scikit-learn style front ends for the two planners.

``X`` is a map: a :class:`GridMap`, an ASCII map string or a path to a
``.grid`` file. ``fit`` runs the planner, ``predict`` returns the planned
cells and ``transform`` returns a per-cell intensity grid suitable for
heatmap rendering.
"""

from __future__ import annotations

import os
from pathlib import Path as FilePath

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .bayes import CruiseReport, CruiseSettings, FactorWeights, RiskTable, run_cruises
from .colony import AcoConfig, Topology, optimize, run_colony
from .field import DROUGHT_MAX, MoistureModel
from .grid import CellClass, GridMap, load_map, parse_map
from .harness import bundled_map

ALGORITHMS = ("baseline", "improved")


def check_grid_map(X) -> GridMap:
    """Coerce ``X`` to a :class:`GridMap`.

    Strings containing a newline are parsed as ASCII maps, other strings
    and path objects are read as ``.grid`` files (falling back to the
    bundled map of that name).
    """
    if isinstance(X, GridMap):
        return X
    if isinstance(X, str) and "\n" in X:
        return parse_map(X)
    if isinstance(X, (str, os.PathLike)):
        path = FilePath(X)
        if not path.is_file():
            path = bundled_map(str(X)) or path
        if not path.is_file():
            raise FileNotFoundError(f"map file not found: {path}")
        return load_map(path)
    raise TypeError(
        f"expected a GridMap, ASCII map text or a .grid path, got {type(X).__name__}"
    )


def _path_array(path) -> np.ndarray:
    return np.asarray(path.cells, dtype=np.int64).reshape(-1, 2)


class _PlannerBase(BaseEstimator):
    def _aco_config(self) -> AcoConfig:
        return AcoConfig(
            ants=self.ants,
            generations=self.generations,
            alpha=self.alpha,
            beta=self.beta,
            q=self.q,
            evaporation=self.evaporation,
            initial_pheromone=self.initial_pheromone,
            max_steps=self.max_steps,
            seed=self.seed,
        )

    def _check_same_map(self, X):
        if X is None:
            return
        if check_grid_map(X) != self.grid_:
            raise ValueError("planner was fitted on a different map")


class AntColonyPlanner(_PlannerBase):
    """Classic elitist ant colony planner.

    After ``fit``: ``path_`` (best :class:`Path`), ``length_``,
    ``convergence_`` and ``pheromone_`` (per-edge array, ``(cells, 8)``).
    """

    def __init__(
        self,
        ants=50,
        generations=100,
        alpha=1.0,
        beta=7.0,
        q=1.0,
        evaporation=0.1,
        initial_pheromone=1.0,
        max_steps=None,
        seed=0,
    ):
        self.ants = ants
        self.generations = generations
        self.alpha = alpha
        self.beta = beta
        self.q = q
        self.evaporation = evaporation
        self.initial_pheromone = initial_pheromone
        self.max_steps = max_steps
        self.seed = seed

    def fit(self, X, y=None):
        grid = check_grid_map(X)
        config = self._aco_config()
        self.grid_ = grid
        self.path_, self.convergence_ = optimize(grid, config)
        self.length_ = self.path_.length
        # rerun is deterministic; keep the final pheromone for transform()
        self.pheromone_ = run_colony(grid, config, Topology(grid)).field.tau
        return self

    def predict(self, X=None) -> np.ndarray:
        """Best path as an ``(n, 2)`` array of ``(row, col)``."""
        check_is_fitted(self, "path_")
        self._check_same_map(X)
        return _path_array(self.path_)

    def transform(self, X=None) -> np.ndarray:
        """Total pheromone on the edges leaving each cell."""
        check_is_fitted(self, "pheromone_")
        self._check_same_map(X)
        return self.pheromone_.sum(axis=1).reshape(self.grid_.height, self.grid_.width)

    def score(self, X=None, y=None) -> float:
        """Negative path length (higher is better)."""
        check_is_fitted(self, "path_")
        self._check_same_map(X)
        return -self.length_


class BayesianCruisePlanner(_PlannerBase):
    """Multi-round irrigation cruise with the Bayesian-weighted colony.

    ``algorithm="baseline"`` replays the classic colony every round, which
    is the comparison arm. After ``fit``: ``report_`` (:class:`CruiseReport`),
    ``paths_`` and ``coverage_``.
    """

    def __init__(
        self,
        rounds=3,
        algorithm="improved",
        weights=(0.2, 0.2, 0.25, 0.35),
        ants=50,
        generations=100,
        alpha=1.0,
        beta=7.0,
        q=1.0,
        evaporation=0.1,
        initial_pheromone=1.0,
        max_steps=None,
        seed=0,
        decay_per_round=0.2,
        dry_threshold=0.5,
        irrigation_refill=1.0,
        drought_max=DROUGHT_MAX,
        irrigation_radius=1,
        risk_decrement=0.1,
    ):
        self.rounds = rounds
        self.algorithm = algorithm
        self.weights = weights
        self.ants = ants
        self.generations = generations
        self.alpha = alpha
        self.beta = beta
        self.q = q
        self.evaporation = evaporation
        self.initial_pheromone = initial_pheromone
        self.max_steps = max_steps
        self.seed = seed
        self.decay_per_round = decay_per_round
        self.dry_threshold = dry_threshold
        self.irrigation_refill = irrigation_refill
        self.drought_max = drought_max
        self.irrigation_radius = irrigation_radius
        self.risk_decrement = risk_decrement

    def _settings(self) -> CruiseSettings:
        weights = self.weights
        if isinstance(weights, str):
            weights = FactorWeights.parse(weights)
        elif not isinstance(weights, FactorWeights):
            weights = FactorWeights(*weights)
        return CruiseSettings(
            weights=weights,
            risk=RiskTable(),
            risk_decrement=self.risk_decrement,
            drought_max=self.drought_max,
            irrigation_radius=self.irrigation_radius,
        )

    def fit(self, X, y=None):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if int(self.rounds) < 1:
            raise ValueError("rounds must be >= 1")
        grid = check_grid_map(X)
        model = MoistureModel(self.decay_per_round, self.dry_threshold, self.irrigation_refill)
        settings = self._settings()
        report: CruiseReport = run_cruises(
            grid, int(self.rounds), settings.weights, self._aco_config(), model,
            settings, self.algorithm,
        )
        self.grid_ = grid
        self.report_ = report
        self.paths_ = [r.path for r in report.rounds]
        self.coverage_ = np.array(report.coverage)
        return self

    def predict(self, X=None) -> list[np.ndarray]:
        """One ``(n, 2)`` array of ``(row, col)`` per round."""
        check_is_fitted(self, "report_")
        self._check_same_map(X)
        return [_path_array(p) for p in self.paths_]

    def transform(self, X=None) -> np.ndarray:
        """Per-cell irrigation counts accumulated over all rounds."""
        check_is_fitted(self, "report_")
        self._check_same_map(X)
        return self.report_.irrigation_count.copy()

    def score(self, X=None, y=None) -> float:
        """Final crop coverage fraction."""
        check_is_fitted(self, "report_")
        self._check_same_map(X)
        return float(self.coverage_[-1])


__all__ = ["AntColonyPlanner", "BayesianCruisePlanner", "CellClass", "check_grid_map"]
