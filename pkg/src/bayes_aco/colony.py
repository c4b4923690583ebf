"""Classic ant colony optimiser over a ``GridMap``.

Pheromone lives on directed edges, stored as a ``(n_cells, 8)`` array indexed
by source cell and direction. Ants walk with a tabu list and die at dead
ends; the generation-best and global-best ants deposit (elitist).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernel import walk_colony
from .grid import (
    DIRECTION_INDEX,
    DIRECTIONS,
    SQRT2,
    Coord,
    GridMap,
    check_reachable,
)

EPSILON = 1e-12


@dataclass(frozen=True)
class AcoConfig:
    ants: int = 50
    generations: int = 100
    alpha: float = 1.0
    beta: float = 7.0
    q: float = 1.0
    evaporation: float = 0.1
    initial_pheromone: float = 1.0
    max_steps: int | None = None  # None -> 4 * width * height
    seed: int = 0

    def __post_init__(self):
        if self.ants < 1:
            raise ValueError("ants must be >= 1")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not 0 < self.evaporation < 1:
            raise ValueError("evaporation must lie in (0, 1)")
        if self.initial_pheromone <= 0:
            raise ValueError("initial_pheromone must be positive")
        if self.q <= 0:
            raise ValueError("q must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def steps_for(self, grid: GridMap) -> int:
        area = grid.width * grid.height
        steps = 4 * area if self.max_steps is None else self.max_steps
        if steps < area:
            raise ValueError(f"max_steps must be >= width*height ({area})")
        return steps


class Topology:
    """Flat-index view of a map: neighbor/cost tables and goal heuristic."""

    def __init__(self, grid: GridMap):
        self.grid = grid
        h, w = grid.height, grid.width
        self.width = w
        self.n_cells = h * w
        trav = grid.traversable_mask
        nbr = np.full((self.n_cells, 8), -1, dtype=np.int64)
        cost = np.zeros((self.n_cells, 8))
        for r in range(h):
            for c in range(w):
                if not trav[r, c]:
                    continue
                for d, (dr, dc) in enumerate(DIRECTIONS):
                    rr, cc = r + dr, c + dc
                    if not (0 <= rr < h and 0 <= cc < w) or not trav[rr, cc]:
                        continue
                    if dr and dc and not trav[r + dr, c] and not trav[r, c + dc]:
                        continue
                    nbr[r * w + c, d] = rr * w + cc
                    cost[r * w + c, d] = SQRT2 if dr and dc else 1.0
        self.nbr = nbr
        self.cost = cost
        self.valid = nbr >= 0
        rows, cols = np.divmod(np.arange(self.n_cells), w)
        dist = np.sqrt((rows - grid.goal[0]) ** 2 + (cols - grid.goal[1]) ** 2)
        self.eta = 1.0 / np.maximum(1.0, dist)
        # heuristic of each edge's head cell
        self.eta_edge = np.where(self.valid, self.eta[np.maximum(nbr, 0)], 0.0)
        self.start = self.flat(grid.start)
        self.goal = self.flat(grid.goal)

    def flat(self, rc: Coord) -> int:
        return rc[0] * self.width + rc[1]

    def coord(self, i: int) -> Coord:
        return divmod(int(i), self.width)

    def edge(self, a: Coord, b: Coord) -> tuple[int, int]:
        return self.flat(a), DIRECTION_INDEX[(b[0] - a[0], b[1] - a[1])]


@dataclass(frozen=True, eq=False)
class PheromoneField:
    tau: np.ndarray  # (n_cells, 8); entries of non-edges are ignored
    valid: np.ndarray
    width: int

    @classmethod
    def uniform(cls, topo: Topology, value: float) -> "PheromoneField":
        tau = np.where(topo.valid, float(value), 0.0)
        return cls(tau, topo.valid, topo.width)

    def get(self, a: Coord, b: Coord) -> float:
        d = DIRECTION_INDEX[(b[0] - a[0], b[1] - a[1])]
        return float(self.tau[a[0] * self.width + a[1], d])

    def min_edge(self) -> float:
        return float(self.tau[self.valid].min())


@dataclass(frozen=True)
class Path:
    cells: tuple[Coord, ...]
    length: float

    @classmethod
    def from_cells(cls, cells) -> "Path":
        cells = tuple((int(r), int(c)) for r, c in cells)
        length = 0.0
        for a, b in zip(cells, cells[1:]):
            dr, dc = abs(a[0] - b[0]), abs(a[1] - b[1])
            if max(dr, dc) != 1:
                raise ValueError(f"{a} -> {b} is not a single grid step")
            length += SQRT2 if dr and dc else 1.0
        return cls(cells, length)

    def edges(self):
        return zip(self.cells, self.cells[1:])

    def __len__(self):
        return len(self.cells)


class DeadEndError(RuntimeError):
    """No unvisited traversable neighbor; the ant is discarded."""


def transition_prior(
    field: PheromoneField,
    grid: GridMap,
    at: Coord,
    visited,
    config: AcoConfig,
    topo: Topology | None = None,
) -> dict[Coord, float]:
    """Normalised ``tau^alpha * eta^beta`` over unvisited neighbors, in
    direction order. ``eta`` is the inverse Euclidean distance to the goal
    (distance clamped below at 1)."""
    topo = topo or Topology(grid)
    i = topo.flat(at)
    cands = []
    for d in range(8):
        nb = topo.nbr[i, d]
        if nb < 0:
            continue
        rc = topo.coord(nb)
        if rc in visited:
            continue
        eta = float(topo.eta_edge[i, d])
        cands.append((rc, float(field.tau[i, d]) ** config.alpha * eta ** config.beta))
    if not cands:
        raise DeadEndError(f"dead end at {at}")
    total = sum(w for _, w in cands)
    if total > 0:
        return {rc: w / total for rc, w in cands}
    return {rc: 1.0 / len(cands) for rc, _ in cands}


def roulette(dist: dict, u: float):
    """Pick from an ordered distribution with one uniform draw ``u``."""
    total = sum(dist.values())
    x = u * total
    acc = 0.0
    choice = None
    for key, p in dist.items():
        acc += p
        choice = key
        if x < acc:
            return key
    return choice


def construct_path(
    grid: GridMap,
    field: PheromoneField,
    config: AcoConfig,
    rng: np.random.Generator,
    topo: Topology | None = None,
) -> Path | None:
    """One ant walk drawing one uniform per step from ``rng``.

    Returns ``None`` when the ant hits a dead end or runs out of steps.
    """
    topo = topo or Topology(grid)
    max_steps = config.steps_for(grid)
    cur = grid.start
    cells = [cur]
    visited = {cur}
    while cur != grid.goal:
        if len(cells) - 1 >= max_steps:
            return None
        try:
            dist = transition_prior(field, grid, cur, visited, config, topo)
        except DeadEndError:
            return None
        cur = roulette(dist, rng.random())
        cells.append(cur)
        visited.add(cur)
    return Path.from_cells(cells)


def update_pheromone(
    field: PheromoneField,
    paths,
    config: AcoConfig,
    costs=None,
) -> PheromoneField:
    """Evaporate every edge, then deposit ``q / cost`` along each path.

    ``cost`` defaults to the path length.
    """
    tau = field.tau * (1.0 - config.evaporation)
    paths = list(paths)
    costs = [p.length for p in paths] if costs is None else list(costs)
    for path, c in zip(paths, costs):
        if c <= 0 or not math.isfinite(c):
            continue
        amount = config.q / c
        for a, b in path.edges():
            tau[a[0] * field.width + a[1], DIRECTION_INDEX[(b[0] - a[0], b[1] - a[1])]] += amount
    tau = np.where(field.valid, np.maximum(tau, EPSILON), 0.0)
    return PheromoneField(tau, field.valid, field.width)


@dataclass
class Convergence:
    """Per-generation running best and generation best (``inf`` where no ant
    reached the goal)."""

    best_so_far: np.ndarray
    generation_best: np.ndarray

    def __len__(self):
        return len(self.best_so_far)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["generation", "best_length_so_far", "generation_best_length"])
        for g, (b, gb) in enumerate(zip(self.best_so_far, self.generation_best)):
            writer.writerow([g, _fmt(b), _fmt(gb)])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.6f}" if math.isfinite(x) else "inf"


@dataclass
class ColonyResult:
    best: Path | None
    best_cost: float
    convergence: Convergence
    field: PheromoneField
    survivors: np.ndarray = field(repr=False)  # ants reaching the goal, per generation


def generation_uniforms(seed: int, stream: int, generation: int, ants: int, steps: int) -> np.ndarray:
    """Row ``a`` is the private stream of ant ``a`` in this generation."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, stream, generation]))
    return rng.random((ants, steps))


def run_colony(
    grid: GridMap,
    config: AcoConfig,
    topo: Topology | None = None,
    *,
    stream: int = 0,
    likelihood: np.ndarray | None = None,
    unexplored: np.ndarray | None = None,
    risk: np.ndarray | None = None,
    info_exponent: float = 0.0,
) -> ColonyResult:
    """K generations of M ants.

    With ``likelihood`` the step distribution is the posterior
    ``prior * likelihood`` and, if ``risk`` is given, the explore/exploit
    risk rule is applied per step. Ant cost is
    ``length / mean_step_likelihood ** info_exponent``.
    """
    topo = topo or Topology(grid)
    max_steps = config.steps_for(grid)
    n_u = min(max_steps, topo.n_cells)
    use_lik = likelihood is not None
    lik = likelihood if use_lik else np.ones_like(topo.cost)
    f4 = unexplored if unexplored is not None else np.zeros_like(topo.cost)
    use_risk = use_lik and risk is not None
    risk_arr = np.asarray(risk if risk is not None else np.zeros((2, 2)), dtype=float)

    pher = PheromoneField.uniform(topo, config.initial_pheromone)
    best, best_cost = None, math.inf
    best_so_far = np.full(config.generations, math.inf)
    gen_best = np.full(config.generations, math.inf)
    survivors = np.zeros(config.generations, dtype=np.int64)
    for g in range(config.generations):
        uniforms = generation_uniforms(config.seed, stream, g, config.ants, n_u)
        paths, n_cells, lengths, lik_sums, ok = walk_colony(
            topo.nbr, topo.cost, pher.tau, topo.eta_edge,
            float(config.alpha), float(config.beta), lik, f4, use_lik, use_risk, risk_arr,
            topo.start, topo.goal, uniforms, max_steps, False,
        )
        survivors[g] = int(ok.sum())
        deposit = []
        if ok.any():
            costs = _ant_costs(lengths, lik_sums, n_cells, info_exponent)
            costs = np.where(ok, costs, math.inf)
            a = int(np.argmin(costs))
            g_path = _to_path(topo, paths[a, : n_cells[a]], lengths[a])
            gen_best[g] = costs[a]
            if costs[a] < best_cost:
                best, best_cost = g_path, float(costs[a])
            deposit.append((g_path, float(costs[a])))
        if best is not None:
            deposit.append((best, best_cost))
        best_so_far[g] = best_cost
        pher = update_pheromone(
            pher, [p for p, _ in deposit], config, costs=[c for _, c in deposit]
        )
    return ColonyResult(best, best_cost, Convergence(best_so_far, gen_best), pher, survivors)


def _ant_costs(lengths, lik_sums, n_cells, info_exponent):
    if info_exponent == 0:
        return lengths.copy()
    steps = np.maximum(n_cells - 1, 1)
    mean_lik = np.maximum(lik_sums / steps, EPSILON)
    return lengths / mean_lik ** info_exponent


def _to_path(topo: Topology, flat_cells, length) -> Path:
    cells = tuple(topo.coord(i) for i in flat_cells)
    path = Path.from_cells(cells)
    return path


def optimize(grid: GridMap, config: AcoConfig) -> tuple[Path, Convergence]:
    """Classic ACO from start to goal; returns the global best path and the
    convergence record."""
    check_reachable(grid)
    result = run_colony(grid, config)
    if result.best is None:
        raise RuntimeError(
            f"no ant reached the goal in {config.generations} generations"
        )
    return result.best, result.convergence
