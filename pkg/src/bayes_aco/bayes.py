"""Bayesian-weighted colony planner and the multi-round irrigation cruise.

The colony's transition probability is the prior over next cells. A
likelihood built from four window factors (goal proximity, obstacles,
drought, unexplored ground) reweights it into a posterior, and a two-state
risk table decides per step whether to push towards unexplored windows.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernel import walk_colony
from .colony import (
    AcoConfig,
    ColonyResult,
    Convergence,
    DeadEndError,
    Path,
    PheromoneField,
    Topology,
    roulette,
    run_colony,
    transition_prior,
)
from .field import (
    DROUGHT_MAX,
    FieldState,
    MoistureModel,
    advance_round,
    apply_maximum_risk,
    coverage_fraction,
    record_pass,
    window_sums,
)
from .grid import (
    DIRECTIONS,
    Coord,
    GridMap,
    check_reachable,
    euclidean,
    obstacle_stats,
    prediction_window,
)

EXPLORE, EXPLOIT = 0, 1


@dataclass(frozen=True)
class FactorWeights:
    """Non-negative factor weights, normalised to sum to one."""

    goal: float = 0.2
    obstacle: float = 0.2
    drought: float = 0.25
    unexplored: float = 0.35

    def __post_init__(self):
        raw = (self.goal, self.obstacle, self.drought, self.unexplored)
        if any(w < 0 or not math.isfinite(w) for w in raw):
            raise ValueError("weights must be finite and non-negative")
        total = sum(raw)
        if total <= 0:
            raise ValueError("at least one weight must be positive")
        for name, w in zip(("goal", "obstacle", "drought", "unexplored"), raw):
            object.__setattr__(self, name, w / total)

    @classmethod
    def parse(cls, text: str) -> "FactorWeights":
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected four comma-separated weights, got {text!r}")
        return cls(*parts)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.goal, self.obstacle, self.drought, self.unexplored)


FIRST_ROUND_WEIGHTS = FactorWeights(0.5, 0.5, 0.0, 0.0)


@dataclass(frozen=True)
class FactorScores:
    f1: float  # inverse goal distance
    f2: float  # obstacle factor
    f3: float  # drought fraction
    f4: float  # unexplored fraction

    def as_tuple(self):
        return (self.f1, self.f2, self.f3, self.f4)


@dataclass(frozen=True, eq=False)
class RiskTable:
    """Loss ``table[i, j]`` of decision ``i`` when the state is ``j``.

    The default is 0/1 loss over decisions (explore, exploit) and states
    (unexplored region, explored region).
    """

    table: np.ndarray = field(default_factory=lambda: np.array([[0.0, 1.0], [1.0, 0.0]]))

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.ndim != 2 or t.shape[0] < 1 or t.shape[1] < 1:
            raise ValueError("risk table must be a non-empty matrix")
        if (t < 0).any():
            raise ValueError("risk entries must be non-negative")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def check_diagonal(self) -> None:
        """Correct decisions must be strictly cheaper than wrong ones in
        each row (checked for user-supplied tables)."""
        t = self.table
        for i in range(min(t.shape)):
            others = np.delete(t[i], i)
            if others.size and not (t[i, i] < others).all():
                raise ValueError(f"row {i}: diagonal entry must be smallest")

    def lowered(self, decision: int, amount: float) -> "RiskTable":
        """Cheaper ``decision``: reduce its off-diagonal losses, floored at 0."""
        t = self.table.copy()
        for j in range(t.shape[1]):
            if j != decision:
                t[decision, j] = max(0.0, t[decision, j] - amount)
        return RiskTable(t)

    def __eq__(self, other):
        return isinstance(other, RiskTable) and np.array_equal(self.table, other.table)

    __hash__ = None


class DegenerateEvidenceError(ValueError):
    """Every prior x likelihood product is zero."""


@dataclass(frozen=True)
class CruiseSettings:
    weights: FactorWeights = field(default_factory=FactorWeights)
    risk: RiskTable = field(default_factory=RiskTable)
    risk_decrement: float = 0.1
    drought_max: int = DROUGHT_MAX
    # f3 = min(1, GHdx / (mS * drought_norm))
    drought_norm: float = 1.0
    irrigation_radius: int = 1
    # ant cost = length / mean_step_likelihood ** (info_exponent / explore_loss)
    info_exponent: float = 1.0
    min_explore_loss: float = 0.05

    def __post_init__(self):
        if self.drought_max < 1:
            raise ValueError("drought_max must be >= 1")
        if self.drought_norm <= 0:
            raise ValueError("drought_norm must be positive")
        if self.irrigation_radius < 0:
            raise ValueError("irrigation_radius must be >= 0")
        if self.risk_decrement < 0:
            raise ValueError("risk_decrement must be >= 0")
        if self.info_exponent < 0:
            raise ValueError("info_exponent must be >= 0")
        if not 0 < self.min_explore_loss <= 1:
            raise ValueError("min_explore_loss must lie in (0, 1]")
        if self.risk.table.shape != (2, 2):
            raise ValueError("the cruise planner uses a 2x2 explore/exploit risk table")


# ---------------------------------------------------------------- scoring


def factor_scores(
    grid: GridMap,
    state: FieldState,
    frm: Coord,
    candidate: Coord,
    drought_norm: float = 1.0,
) -> FactorScores:
    window = prediction_window(grid, frm, candidate)
    znum, zdx = obstacle_stats(grid, window)
    wdx, ghdx, ms = window_sums(state, window)
    f1 = 1.0 / max(1.0, euclidean(candidate, grid.goal))
    f2 = 1.0 if znum == 0 else 1.0 / (znum + zdx)
    f3 = min(1.0, ghdx / (ms * drought_norm))
    f4 = wdx / ms
    return FactorScores(f1, f2, f3, f4)


def likelihood(scores: FactorScores, weights: FactorWeights) -> float:
    return (
        weights.goal * scores.f1
        + weights.obstacle * scores.f2
        + weights.drought * scores.f3
        + weights.unexplored * scores.f4
    )


def posterior(priors, likelihoods) -> np.ndarray:
    """Bayes rule over candidates: normalised ``prior * likelihood``."""
    products = np.asarray(priors, dtype=float) * np.asarray(likelihoods, dtype=float)
    total = 0.0
    for p in products:
        total += p
    if not total > 0:
        raise DegenerateEvidenceError("all prior x likelihood products are zero")
    return products / total


def min_risk_decision(state_posterior, table: RiskTable) -> int:
    """Index of the decision with minimal conditional risk (lowest index on
    ties)."""
    post = np.asarray(state_posterior, dtype=float)
    if post.shape != (table.table.shape[1],):
        raise ValueError("posterior dimension must match the risk table's columns")
    risks = table.table @ post
    return int(np.argmin(risks))


class EdgeFactors:
    """Vectorised factor tables over every directed edge of a map.

    Window geometry and obstacle statistics are static per map; the drought
    and unexplored factors are refreshed from a ``FieldState`` with summed
    area tables.
    """

    def __init__(self, grid: GridMap, topo: Topology | None = None):
        self.grid = grid
        self.topo = topo or Topology(grid)
        shape = self.topo.nbr.shape
        self.r0 = np.zeros(shape, dtype=np.int64)
        self.r1 = np.zeros(shape, dtype=np.int64)
        self.c0 = np.zeros(shape, dtype=np.int64)
        self.c1 = np.zeros(shape, dtype=np.int64)
        self.znum = np.zeros(shape, dtype=np.int64)
        self.zdx = np.zeros(shape, dtype=np.int64)
        for i, d in zip(*np.nonzero(self.topo.valid)):
            frm = self.topo.coord(i)
            to = (frm[0] + DIRECTIONS[d][0], frm[1] + DIRECTIONS[d][1])
            win = prediction_window(grid, frm, to)
            self.r0[i, d], self.r1[i, d] = win.rows
            self.c0[i, d], self.c1[i, d] = win.cols
            self.znum[i, d], self.zdx[i, d] = obstacle_stats(grid, win)
        self.ms = np.where(self.topo.valid, (self.r1 - self.r0) * (self.c1 - self.c0), 1)
        self.f1 = self.topo.eta_edge
        self.f2 = np.where(self.znum == 0, 1.0, 1.0 / np.maximum(self.znum + self.zdx, 1))

    def _window_sum(self, values: np.ndarray) -> np.ndarray:
        sat = np.zeros((values.shape[0] + 1, values.shape[1] + 1), dtype=np.int64)
        sat[1:, 1:] = values.cumsum(0).cumsum(1)
        out = sat[self.r1, self.c1] - sat[self.r0, self.c1] - sat[self.r1, self.c0] + sat[self.r0, self.c0]
        return np.where(self.topo.valid, out, 0)

    def window_sums(self, state: FieldState) -> tuple[np.ndarray, np.ndarray]:
        return self._window_sum(state.traversal), self._window_sum(state.drought)

    def scores(self, state: FieldState, drought_norm: float = 1.0) -> tuple[np.ndarray, ...]:
        wdx, ghdx = self.window_sums(state)
        f3 = np.minimum(1.0, ghdx / (self.ms * drought_norm))
        f4 = wdx / self.ms
        return self.f1, self.f2, f3, f4

    def likelihood(self, state: FieldState, weights: FactorWeights, drought_norm: float = 1.0):
        f1, f2, f3, f4 = self.scores(state, drought_norm)
        lik = (
            weights.goal * f1
            + weights.obstacle * f2
            + weights.drought * f3
            + weights.unexplored * f4
        )
        return np.where(self.topo.valid, lik, 0.0), np.where(self.topo.valid, f4, 0.0)


# ---------------------------------------------------------------- stepping


def step_distribution(
    grid: GridMap,
    state: FieldState,
    field: PheromoneField,
    frm: Coord,
    visited,
    weights: FactorWeights,
    config: AcoConfig,
    risk: RiskTable | None = None,
    drought_norm: float = 1.0,
    topo: Topology | None = None,
) -> dict[Coord, float]:
    """Posterior over the next cell, in direction order.

    With ``risk`` the minimal-risk decision over the (unexplored, explored)
    states is taken; "explore" reweights the posterior by each candidate's
    unexplored fraction.
    """
    prior = transition_prior(field, grid, frm, visited, config, topo)
    cands = list(prior)
    scores = [factor_scores(grid, state, frm, c, drought_norm) for c in cands]
    liks = [likelihood(s, weights) for s in scores]
    try:
        post = posterior([prior[c] for c in cands], liks)
        dist = dict(zip(cands, (float(p) for p in post)))
    except DegenerateEvidenceError:
        dist = prior
    if risk is None:
        return dist
    p_unexp = 0.0
    for c, s in zip(cands, scores):
        p_unexp += dist[c] * s.f4
    decision = min_risk_decision([p_unexp, 1.0 - p_unexp], risk)
    if decision != EXPLORE:
        return dist
    total = 0.0
    for c, s in zip(cands, scores):
        total += dist[c] * s.f4
    if total > 0:
        dist = {c: dist[c] * s.f4 / total for c, s in zip(cands, scores)}
    return dist


def select_next(
    grid: GridMap,
    state: FieldState,
    field: PheromoneField,
    frm: Coord,
    visited,
    weights: FactorWeights,
    config: AcoConfig,
    rng: np.random.Generator | None = None,
    greedy: bool = False,
    risk: RiskTable | None = None,
    drought_norm: float = 1.0,
    topo: Topology | None = None,
) -> Coord:
    """Next cell: a posterior sample, or its argmax when ``greedy``.

    Raises ``DeadEndError`` when every neighbor is visited or blocked.
    """
    dist = step_distribution(
        grid, state, field, frm, visited, weights, config, risk, drought_norm, topo
    )
    if greedy:
        best = None
        for c, p in dist.items():
            if best is None or p > dist[best]:
                best = c
        return best
    if rng is None:
        raise ValueError("sampling mode needs an rng")
    return roulette(dist, rng.random())


def walk(
    grid: GridMap,
    state: FieldState,
    field: PheromoneField,
    weights: FactorWeights,
    config: AcoConfig,
    rng: np.random.Generator | None = None,
    greedy: bool = False,
    risk: RiskTable | None = None,
    drought_norm: float = 1.0,
) -> Path | None:
    """Reference (pure Python) ant walk driven by ``select_next``."""
    topo = Topology(grid)
    max_steps = config.steps_for(grid)
    cur, cells, visited = grid.start, [grid.start], {grid.start}
    while cur != grid.goal:
        if len(cells) - 1 >= max_steps:
            return None
        try:
            cur = select_next(
                grid, state, field, cur, visited, weights, config,
                rng, greedy, risk, drought_norm, topo,
            )
        except DeadEndError:
            return None
        cells.append(cur)
        visited.add(cur)
    return Path.from_cells(cells)


# ---------------------------------------------------------------- cruising


@dataclass
class StepTrace:
    """Factor scores of every candidate considered at one step of a
    reported path, as used by the planner."""

    at: Coord
    chosen: Coord
    candidates: dict  # Coord -> (f1, f2, f3, f4, znum, zdx, wdx, ghdx, ms)


@dataclass
class RoundRecord:
    round: int
    algorithm: str
    path: Path
    cost: float
    cells_irrigated: int
    newly_explored: int
    coverage: float
    mean_drought_before: float
    mean_drought_after: float
    convergence: Convergence = field(repr=False)
    trace: list = field(default_factory=list, repr=False)
    planning_state: FieldState | None = field(default=None, repr=False)  # kept with traces

    @property
    def info_per_length(self) -> float:
        return self.newly_explored / self.path.length


@dataclass
class CruiseReport:
    grid: GridMap
    rounds: list
    state: FieldState
    risk_history: list = field(default_factory=list)

    @property
    def coverage(self) -> list[float]:
        return [r.coverage for r in self.rounds]

    @property
    def irrigation_count(self) -> np.ndarray:
        return self.state.irrigation_count

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([
            "round", "path_length", "cells_irrigated", "coverage_fraction",
            "mean_drought_before", "mean_drought_after", "newly_explored",
        ])
        for r in self.rounds:
            writer.writerow([
                r.round, f"{r.path.length:.6f}", r.cells_irrigated, f"{r.coverage:.6f}",
                f"{r.mean_drought_before:.6f}", f"{r.mean_drought_after:.6f}",
                r.newly_explored,
            ])
        return buf.getvalue()

    def irrigation_grid_csv(self) -> str:
        return grid_csv(self.state.irrigation_count)


def grid_csv(values: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in values:
        writer.writerow([f"{float(v):.6f}" for v in row])
    return buf.getvalue()


def swath(grid: GridMap, path: Path, radius: int) -> set[Coord]:
    """Traversable cells within Chebyshev ``radius`` of the path."""
    out = set()
    for r, c in path.cells:
        for rr in range(max(0, r - radius), min(grid.height, r + radius + 1)):
            for cc in range(max(0, c - radius), min(grid.width, c + radius + 1)):
                if grid.traversable((rr, cc)):
                    out.add((rr, cc))
    return out


def _mean_drought(state: FieldState, grid: GridMap) -> float:
    mask = grid.crop_mask if grid.crop_mask.any() else grid.traversable_mask
    return float(state.drought[mask].mean())


def _trace(topo: Topology, tables: EdgeFactors, state: FieldState, path: Path, drought_norm: float):
    wdx, ghdx = tables.window_sums(state)
    f1, f2, f3, f4 = tables.scores(state, drought_norm)
    out = []
    visited = set()
    for a, b in path.edges():
        visited.add(a)
        i = topo.flat(a)
        cands = {}
        for d in range(8):
            nb = topo.nbr[i, d]
            if nb < 0 or topo.coord(nb) in visited:
                continue
            cands[topo.coord(nb)] = (
                float(f1[i, d]), float(f2[i, d]), float(f3[i, d]), float(f4[i, d]),
                int(tables.znum[i, d]), int(tables.zdx[i, d]),
                int(wdx[i, d]), int(ghdx[i, d]), int(tables.ms[i, d]),
            )
        out.append(StepTrace(a, b, cands))
    return out


def _greedy_walk(topo, pher, config, grid, lik, f4, use_risk, risk):
    paths, n_cells, lengths, lik_sums, ok = walk_colony(
        topo.nbr, topo.cost, pher.tau, topo.eta_edge, float(config.alpha), float(config.beta),
        lik, f4, True, use_risk, risk, topo.start, topo.goal,
        np.zeros((1, 1)), config.steps_for(grid), True,
    )
    if not ok[0]:
        return None, math.inf, 0.0
    cells = [topo.coord(i) for i in paths[0, : n_cells[0]]]
    return Path.from_cells(cells), float(lengths[0]), float(lik_sums[0]) / max(n_cells[0] - 1, 1)


def cruise_round(
    grid: GridMap,
    state: FieldState,
    weights: FactorWeights,
    config: AcoConfig,
    settings: CruiseSettings | None = None,
    round_index: int = 1,
    risk: RiskTable | None = None,
    model: MoistureModel | None = None,
    algorithm: str = "improved",
    record_trace: bool = False,
    topo: Topology | None = None,
    tables: EdgeFactors | None = None,
) -> tuple[Path, FieldState, RoundRecord]:
    """Plan one start-to-goal pass and irrigate along it.

    Round 1 of the improved planner looks only at goal distance and
    obstacles (weights 0.5/0.5, no risk rule); later rounds use ``weights``
    and the risk table. ``algorithm="baseline"`` runs the classic colony.
    Returns the reported path, the updated state and the round record.
    """
    settings = settings or CruiseSettings()
    model = model or MoistureModel()
    risk = risk or settings.risk
    topo = topo or Topology(grid)
    check_reachable(grid)

    if algorithm == "baseline":
        result = run_colony(grid, config, topo, stream=round_index - 1)
        path, cost = result.best, result.best_cost
        trace = []
    elif algorithm == "improved":
        tables = tables or EdgeFactors(grid, topo)
        first = round_index <= 1
        w = FIRST_ROUND_WEIGHTS if first else weights
        lik, f4 = tables.likelihood(state, w, settings.drought_norm)
        risk_arr = None if first else risk.table
        exponent = settings.info_exponent
        if not first:
            exponent /= max(float(risk.table[EXPLORE, 1]), settings.min_explore_loss)
        result: ColonyResult = run_colony(
            grid, config, topo, stream=round_index - 1, likelihood=lik,
            unexplored=f4, risk=risk_arr, info_exponent=exponent,
        )
        path, cost = result.best, result.best_cost
        g_path, g_len, g_mean = _greedy_walk(
            topo, result.field, config, grid, lik, f4,
            risk_arr is not None, risk_arr if risk_arr is not None else np.zeros((2, 2)),
        )
        if g_path is not None:
            g_cost = g_len / max(g_mean, 1e-12) ** exponent
            if g_cost <= cost:
                path, cost = g_path, g_cost
        trace = _trace(topo, tables, state, path, settings.drought_norm) if record_trace and path else []
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if path is None:
        raise RuntimeError(f"no ant reached the goal in round {round_index}")

    planning_state = state
    before = _mean_drought(state, grid)
    covered = swath(grid, path, settings.irrigation_radius)
    newly = sum(1 for rc in covered if state.traversal[rc] == 1)
    irrigated_crops = sum(1 for rc in covered if grid.crop_mask[rc])
    state = record_pass(state, grid, covered, model)
    record = RoundRecord(
        round=round_index,
        algorithm=algorithm,
        path=path,
        cost=cost,
        cells_irrigated=irrigated_crops,
        newly_explored=newly,
        coverage=coverage_fraction(state, grid),
        mean_drought_before=before,
        mean_drought_after=before,
        convergence=result.convergence,
        trace=trace,
        planning_state=planning_state if record_trace else None,
    )
    return path, state, record


def run_cruises(
    grid: GridMap,
    rounds: int,
    weights: FactorWeights | None = None,
    config: AcoConfig | None = None,
    model: MoistureModel | None = None,
    settings: CruiseSettings | None = None,
    algorithm: str = "improved",
    record_trace: bool = False,
) -> CruiseReport:
    """Repeated cruises: maximum-risk default before each round after the
    first, plan + irrigate, lower the explore risk while unexplored ground
    remains, then let the field dry for a round."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    settings = settings or CruiseSettings()
    weights = weights or settings.weights
    config = config or AcoConfig()
    model = model or MoistureModel()
    check_reachable(grid)
    topo = Topology(grid)
    tables = EdgeFactors(grid, topo) if algorithm == "improved" else None
    state = FieldState.fresh(grid, model)
    risk = settings.risk
    records, risks = [], []
    for r in range(1, rounds + 1):
        if r >= 2:
            state = apply_maximum_risk(state, grid, settings.drought_max)
        before = _mean_drought(state, grid)
        risks.append(risk)
        _, state, rec = cruise_round(
            grid, state, weights, config, settings, r, risk, model,
            algorithm, record_trace, topo, tables,
        )
        if (grid.traversable_mask & (state.traversal == 1)).any():
            risk = risk.lowered(EXPLORE, settings.risk_decrement)
        state = advance_round(state, grid, model)
        records.append(replace(rec, mean_drought_before=before, mean_drought_after=_mean_drought(state, grid)))
    return CruiseReport(grid, records, state, risks)


__all__ = [
    "CruiseReport", "CruiseSettings", "DegenerateEvidenceError", "EdgeFactors",
    "FactorScores", "FactorWeights", "FIRST_ROUND_WEIGHTS", "RiskTable",
    "RoundRecord", "StepTrace", "cruise_round", "factor_scores", "likelihood",
    "min_risk_decision", "posterior", "run_cruises", "select_next",
    "step_distribution", "swath", "walk",
]
