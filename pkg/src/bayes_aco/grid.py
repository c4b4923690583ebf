"""Static grid environment: cell classes, ASCII maps, 8-neighborhoods,
prediction windows and obstacle statistics."""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path as FilePath

import numpy as np
from scipy import ndimage

Coord = tuple[int, int]

SQRT2 = math.sqrt(2.0)

# (drow, dcol) in a fixed order; direction index d is used for edge storage.
DIRECTIONS: tuple[Coord, ...] = (
    (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1),
)
DIRECTION_INDEX = {d: i for i, d in enumerate(DIRECTIONS)}


class CellClass(IntEnum):
    OBSTACLE = 0
    ROAD = 1
    CROP = 2
    RIVER = 3


CHAR_TO_CLASS = {
    "#": CellClass.OBSTACLE,
    ".": CellClass.ROAD,
    "c": CellClass.CROP,
    "~": CellClass.RIVER,
}
CLASS_TO_CHAR = {v: k for k, v in CHAR_TO_CLASS.items()}


class MapParseError(ValueError):
    """Raised for a malformed ASCII map; carries a 1-based line/column."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "")
            where += ": "
        super().__init__(where + message)


@dataclass(frozen=True, eq=False)
class GridMap:
    """Immutable grid of cell classes with a start and a goal.

    ``cells`` is a read-only ``(height, width)`` int8 array of ``CellClass``
    values. Coordinates are ``(row, col)``.
    """

    cells: np.ndarray
    start: Coord
    goal: Coord
    name: str = field(default="", compare=False)

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.int8)
        if cells.ndim != 2:
            raise ValueError("cells must be a 2-D array")
        h, w = cells.shape
        if h < 2 or w < 2:
            raise ValueError(f"map must be at least 2x2, got {h}x{w}")
        if not np.isin(cells, list(CellClass)).all():
            raise ValueError("cells contain values outside CellClass")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        start = (int(self.start[0]), int(self.start[1]))
        goal = (int(self.goal[0]), int(self.goal[1]))
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "goal", goal)
        for label, c in (("start", start), ("goal", goal)):
            if not self.in_bounds(c):
                raise ValueError(f"{label} {c} out of bounds")
            if not self.traversable(c):
                raise ValueError(f"{label} {c} is not on a traversable cell")
        if start == goal:
            raise ValueError("start and goal must differ")

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def n(self) -> int:
        """Grid scale used by the window-side formula (max of the two sides)."""
        return max(self.width, self.height)

    def in_bounds(self, c: Coord) -> bool:
        return 0 <= c[0] < self.height and 0 <= c[1] < self.width

    def cell_class(self, c: Coord) -> CellClass:
        return CellClass(int(self.cells[c]))

    def traversable(self, c: Coord) -> bool:
        return int(self.cells[c]) in (CellClass.ROAD, CellClass.CROP)

    @property
    def traversable_mask(self) -> np.ndarray:
        return (self.cells == CellClass.ROAD) | (self.cells == CellClass.CROP)

    @property
    def blocked_mask(self) -> np.ndarray:
        """Obstacle or river cells; both count towards obstacle statistics."""
        return (self.cells == CellClass.OBSTACLE) | (self.cells == CellClass.RIVER)

    @property
    def crop_mask(self) -> np.ndarray:
        return self.cells == CellClass.CROP

    def __eq__(self, other):
        if not isinstance(other, GridMap):
            return NotImplemented
        return (
            self.start == other.start
            and self.goal == other.goal
            and np.array_equal(self.cells, other.cells)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"GridMap({self.name or 'unnamed'}, {self.height}x{self.width}, "
            f"start={self.start}, goal={self.goal})"
        )


def parse_map(text: str, name: str = "") -> GridMap:
    """Parse an ASCII ``.grid`` document.

    ``#`` obstacle, ``.`` road, ``c`` crop, ``~`` river, ``S``/``G`` start and
    goal (both stored as road).
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MapParseError("empty map")
    width = len(lines[0])
    rows = []
    start = goal = None
    for r, line in enumerate(lines):
        if len(line) != width:
            raise MapParseError(
                f"ragged row: expected {width} characters, found {len(line)}", r + 1
            )
        row = []
        for c, ch in enumerate(line):
            if ch == "S" or ch == "G":
                label = "start" if ch == "S" else "goal"
                if (start if ch == "S" else goal) is not None:
                    raise MapParseError(f"duplicate {label}", r + 1, c + 1)
                if ch == "S":
                    start = (r, c)
                else:
                    goal = (r, c)
                row.append(CellClass.ROAD)
            elif ch in CHAR_TO_CLASS:
                row.append(CHAR_TO_CLASS[ch])
            else:
                raise MapParseError(f"unknown character {ch!r}", r + 1, c + 1)
        rows.append(row)
    if start is None:
        raise MapParseError("missing start 'S'")
    if goal is None:
        raise MapParseError("missing goal 'G'")
    try:
        return GridMap(np.array(rows, dtype=np.int8), start, goal, name=name)
    except ValueError as exc:
        raise MapParseError(str(exc)) from exc


def render_map(grid: GridMap) -> str:
    out = []
    for r in range(grid.height):
        chars = []
        for c in range(grid.width):
            if (r, c) == grid.start:
                chars.append("S")
            elif (r, c) == grid.goal:
                chars.append("G")
            else:
                chars.append(CLASS_TO_CHAR[CellClass(int(grid.cells[r, c]))])
        out.append("".join(chars) + "\n")
    return "".join(out)


def load_map(path) -> GridMap:
    path = FilePath(path)
    return parse_map(path.read_text(), name=path.stem)


def neighbors(grid: GridMap, at: Coord) -> list[tuple[Coord, float]]:
    """Traversable 8-neighbors of ``at`` with step costs (1 or sqrt 2).

    A diagonal step is dropped when both cells it would cut past are
    non-traversable.
    """
    r, c = at
    out = []
    for dr, dc in DIRECTIONS:
        nb = (r + dr, c + dc)
        if not grid.in_bounds(nb) or not grid.traversable(nb):
            continue
        if dr and dc:
            if not grid.traversable((r + dr, c)) and not grid.traversable((r, c + dc)):
                continue
            out.append((nb, SQRT2))
        else:
            out.append((nb, 1.0))
    return out


def window_side(n: int) -> int:
    """Side of the prediction square, ``min(ceil(sqrt(n)) + 1, 5)``."""
    ceil_sqrt = math.isqrt(n - 1) + 1 if n > 0 else 0
    return min(ceil_sqrt + 1, 5)


@dataclass(frozen=True)
class PredictionWindow:
    anchor: Coord
    direction: Coord
    side: int
    rows: tuple[int, int]  # half-open, already clipped
    cols: tuple[int, int]

    @property
    def cells(self) -> frozenset[Coord]:
        return frozenset(
            (r, c) for r in range(*self.rows) for c in range(*self.cols)
        )

    @property
    def size(self) -> int:
        return (self.rows[1] - self.rows[0]) * (self.cols[1] - self.cols[0])

    def slices(self) -> tuple[slice, slice]:
        return slice(*self.rows), slice(*self.cols)


def _span(anchor: int, step: int, side: int) -> tuple[int, int]:
    if step > 0:
        return anchor, anchor + side
    if step < 0:
        return anchor - side + 1, anchor + 1
    lo = anchor - (side - 1) // 2
    return lo, lo + side


def prediction_window(grid: GridMap, frm: Coord, to: Coord) -> PredictionWindow:
    """Square lookahead anchored at ``to``, extending away from ``frm``.

    The candidate sits on the window edge nearest ``frm``; along an axis with
    no motion the window is centered on it (extra row/column goes to the
    positive side for even sides). Out-of-bounds cells are clipped.
    """
    dr, dc = to[0] - frm[0], to[1] - frm[1]
    if (dr, dc) == (0, 0):
        raise ValueError("prediction window needs distinct from/to cells")
    if abs(dr) > 1 or abs(dc) > 1:
        raise ValueError(f"{to} is not adjacent to {frm}")
    side = window_side(grid.n)
    r0, r1 = _span(to[0], dr, side)
    c0, c1 = _span(to[1], dc, side)
    rows = (max(r0, 0), min(r1, grid.height))
    cols = (max(c0, 0), min(c1, grid.width))
    return PredictionWindow(tuple(to), (dr, dc), side, rows, cols)


_EIGHT = np.ones((3, 3), dtype=bool)


def obstacle_stats(grid: GridMap, window: PredictionWindow) -> tuple[int, int]:
    """``(Znum, Zdx)``: 8-connected obstacle/river components inside the
    window and the total number of such cells."""
    patch = grid.blocked_mask[window.slices()]
    zdx = int(patch.sum())
    if zdx == 0:
        return 0, 0
    _, znum = ndimage.label(patch, structure=_EIGHT)
    return int(znum), zdx


def euclidean(a: Coord, b: Coord) -> float:
    dr, dc = a[0] - b[0], a[1] - b[1]
    return math.sqrt(dr * dr + dc * dc)


def reachable(grid: GridMap, source: Coord | None = None, target: Coord | None = None) -> bool:
    """BFS reachability over the 8-neighborhood (no corner cutting)."""
    source = grid.start if source is None else source
    target = grid.goal if target is None else target
    seen = {source}
    queue = deque([source])
    while queue:
        cur = queue.popleft()
        if cur == target:
            return True
        for nb, _ in neighbors(grid, cur):
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return False


def shortest_path(grid: GridMap) -> tuple[float, list[Coord]]:
    """Dijkstra optimum from start to goal; ``(inf, [])`` when unreachable."""
    dist = {grid.start: 0.0}
    prev: dict[Coord, Coord] = {}
    heap = [(0.0, grid.start)]
    while heap:
        d, cur = heapq.heappop(heap)
        if cur == grid.goal:
            cells = [cur]
            while cells[-1] in prev:
                cells.append(prev[cells[-1]])
            return d, cells[::-1]
        if d > dist[cur]:
            continue
        for nb, cost in neighbors(grid, cur):
            nd = d + cost
            if nd < dist.get(nb, math.inf):
                dist[nb] = nd
                prev[nb] = cur
                heapq.heappush(heap, (nd, nb))
    return math.inf, []


class UnreachableGoalError(RuntimeError):
    pass


def check_reachable(grid: GridMap) -> None:
    if not reachable(grid):
        raise UnreachableGoalError(f"goal unreachable: {grid.goal} from {grid.start}")
