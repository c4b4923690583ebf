"""Per-cell memory carried across cruise rounds."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

from .grid import CLASS_TO_CHAR, CellClass, GridMap, PredictionWindow

DROUGHT_MAX = 10


@dataclass(frozen=True)
class MoistureModel:
    """Toy sensor model: moisture decays each round; a crop below
    ``dry_threshold`` counts one more drought point per round."""

    decay_per_round: float = 0.2
    dry_threshold: float = 0.5
    irrigation_refill: float = 1.0

    def __post_init__(self):
        if not 0 < self.decay_per_round < 1:
            raise ValueError("decay_per_round must lie in (0, 1)")
        if not 0 < self.dry_threshold < 1:
            raise ValueError("dry_threshold must lie in (0, 1)")
        if not 0 < self.irrigation_refill <= 1:
            raise ValueError("irrigation_refill must lie in (0, 1]")
        if self.dry_threshold >= self.irrigation_refill:
            raise ValueError("dry_threshold must be below irrigation_refill")


@dataclass(frozen=True, eq=False)
class FieldState:
    """Traversal (1 = never irrigated), drought counters, crop moisture and
    per-cell irrigation counts. Operations return new instances."""

    traversal: np.ndarray
    drought: np.ndarray
    moisture: np.ndarray
    irrigation_count: np.ndarray
    round: int = 0

    @classmethod
    def fresh(cls, grid: GridMap, model: MoistureModel | None = None) -> "FieldState":
        model = model or MoistureModel()
        shape = grid.cells.shape
        moisture = np.where(grid.crop_mask, model.irrigation_refill, 0.0)
        return cls(
            traversal=np.ones(shape, dtype=np.int64),
            drought=np.zeros(shape, dtype=np.int64),
            moisture=moisture.astype(float),
            irrigation_count=np.zeros(shape, dtype=np.int64),
        )

    def copy(self, **changes) -> "FieldState":
        arrays = {
            k: getattr(self, k).copy()
            for k in ("traversal", "drought", "moisture", "irrigation_count")
        }
        arrays.update(changes)
        return replace(self, **arrays)

    def __eq__(self, other):
        if not isinstance(other, FieldState):
            return NotImplemented
        return self.round == other.round and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("traversal", "drought", "moisture", "irrigation_count")
        )

    __hash__ = None


def window_sums(state: FieldState, window: PredictionWindow) -> tuple[int, int, int]:
    """``(Wdx, GHdx, mS)`` over the window's cells."""
    sl = window.slices()
    return int(state.traversal[sl].sum()), int(state.drought[sl].sum()), window.size


def record_pass(
    state: FieldState,
    grid: GridMap,
    irrigated,
    model: MoistureModel | None = None,
) -> FieldState:
    """Mark ``irrigated`` cells as explored and water the crops among them.

    Drought is reset to 0 on a cell watered while dry, and on a cell's first
    visit (which replaces any maximum-risk placeholder with an observation).
    """
    model = model or MoistureModel()
    new = state.copy()
    for rc in irrigated:
        first_visit = new.traversal[rc] == 1
        new.traversal[rc] = 0
        if grid.cells[rc] != CellClass.CROP:
            if first_visit:
                new.drought[rc] = 0
            continue
        if first_visit or new.moisture[rc] < model.dry_threshold:
            new.drought[rc] = 0
        new.moisture[rc] = model.irrigation_refill
        new.irrigation_count[rc] += 1
    return new


def advance_round(state: FieldState, grid: GridMap, model: MoistureModel | None = None) -> FieldState:
    model = model or MoistureModel()
    crop = grid.crop_mask
    moisture = np.where(crop, np.maximum(0.0, state.moisture - model.decay_per_round), 0.0)
    dry = crop & (moisture < model.dry_threshold)
    drought = state.drought + dry.astype(np.int64)
    new = state.copy(moisture=moisture, drought=drought)
    return replace(new, round=state.round + 1)


def apply_maximum_risk(state: FieldState, grid: GridMap, drought_max: int = DROUGHT_MAX) -> FieldState:
    """Assume the worst for unexplored ground: drought := drought_max on every
    traversable cell that was never irrigated."""
    if drought_max < 1:
        raise ValueError("drought_max must be >= 1")
    target = grid.traversable_mask & (state.traversal == 1)
    return state.copy(drought=np.where(target, drought_max, state.drought))


def coverage_fraction(state: FieldState, grid: GridMap) -> float:
    """Explored share of crop cells (of traversable cells on crop-free maps)."""
    mask = grid.crop_mask
    if not mask.any():
        mask = grid.traversable_mask
    return float((state.traversal[mask] == 0).mean())


def snapshot_csv(state: FieldState, grid: GridMap) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y", "class", "traversal", "drought", "moisture"])
    for r in range(grid.height):
        for c in range(grid.width):
            writer.writerow([
                c, r, CLASS_TO_CHAR[CellClass(int(grid.cells[r, c]))],
                int(state.traversal[r, c]), int(state.drought[r, c]),
                f"{state.moisture[r, c]:.6f}",
            ])
    return buf.getvalue()
