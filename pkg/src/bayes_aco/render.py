"""Plain-text (P3) pixel-map rendering of maps, paths and intensity grids."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .grid import CellClass, GridMap

Color = tuple[int, int, int]

OVERLAYS = ("path", "pheromone", "irrigation", "drought")

DEFAULT_PALETTE = MappingProxyType({
    CellClass.OBSTACLE: (128, 128, 128),
    CellClass.ROAD: (214, 69, 65),
    CellClass.CROP: (96, 186, 96),
    CellClass.RIVER: (66, 110, 214),
})


@dataclass(frozen=True)
class RenderStyle:
    """Pixel size per cell, class colors, the color a cell moves towards as
    its intensity reaches the grid maximum, and the path color."""

    cell_size: int = 8
    palette: dict = field(default_factory=lambda: dict(DEFAULT_PALETTE))
    heat_color: Color = (8, 48, 16)
    path_color: Color = (255, 215, 0)
    overlay: str = "irrigation"

    def __post_init__(self):
        if int(self.cell_size) < 1:
            raise ValueError("cell_size must be >= 1")
        missing = [c.name for c in CellClass if c not in self.palette]
        if missing:
            raise ValueError(f"palette lacks colors for {', '.join(missing)}")
        if self.overlay not in OVERLAYS:
            raise ValueError(f"overlay must be one of {OVERLAYS}")
        for color in (*self.palette.values(), self.heat_color, self.path_color):
            if len(color) != 3 or not all(0 <= int(v) <= 255 for v in color):
                raise ValueError(f"bad RGB color {color!r}")


def _base_image(grid: GridMap, style: RenderStyle) -> np.ndarray:
    lut = np.zeros((len(CellClass), 3), dtype=np.int64)
    for cls in CellClass:
        lut[int(cls)] = style.palette[cls]
    return lut[grid.cells.astype(np.int64)]


def _paint_path(img: np.ndarray, path, style: RenderStyle) -> None:
    if path is None:
        return
    for r, c in getattr(path, "cells", path):
        img[r, c] = style.path_color


def to_ppm(img: np.ndarray, cell_size: int = 1) -> str:
    """Serialize an ``(h, w, 3)`` integer image as plain P3, upscaled by
    ``cell_size``; lines stay under 70 characters."""
    if cell_size > 1:
        img = np.repeat(np.repeat(img, cell_size, axis=0), cell_size, axis=1)
    h, w, _ = img.shape
    lines = ["P3", f"{w} {h}", "255"]
    for row in img:
        line = ""
        for px in row:
            token = f"{px[0]} {px[1]} {px[2]}"
            if line and len(line) + 1 + len(token) > 70:
                lines.append(line)
                line = token
            else:
                line = f"{line} {token}" if line else token
        lines.append(line)
    return "\n".join(lines) + "\n"


def render_map(grid: GridMap, style: RenderStyle | None = None, path=None) -> str:
    """Class colors, with an optional path drawn on top."""
    style = style or RenderStyle()
    img = _base_image(grid, style)
    _paint_path(img, path, style)
    return to_ppm(img, style.cell_size)


def render_heatmap(
    grid: GridMap,
    intensities,
    style: RenderStyle | None = None,
    path=None,
) -> str:
    """Blend each cell from its class color towards ``style.heat_color`` in
    proportion to ``intensity / max(intensity)``. Zero cells keep their
    class color, so an all-zero grid renders exactly like the plain map."""
    style = style or RenderStyle()
    values = np.asarray(intensities, dtype=float)
    if values.size == 0:
        raise ValueError("intensity grid is empty")
    if values.shape != grid.cells.shape:
        raise ValueError(f"intensity grid shape {values.shape} does not match map {grid.cells.shape}")
    if not np.isfinite(values).all() or (values < 0).any():
        raise ValueError("intensities must be finite and non-negative")
    base = _base_image(grid, style)
    peak = values.max()
    if peak > 0:
        t = (values / peak)[..., None]
        heat = np.asarray(style.heat_color, dtype=float)
        img = np.rint(base + t * (heat - base)).astype(np.int64)
    else:
        img = base
    _paint_path(img, path, style)
    return to_ppm(img, style.cell_size)


def parse_ppm(text: str) -> np.ndarray:
    """Read a P3 document back into an ``(h, w, 3)`` array."""
    tokens = [t for line in text.splitlines() for t in line.split("#", 1)[0].split()]
    if not tokens or tokens[0] != "P3":
        raise ValueError("not a plain P3 pixel map")
    w, h, maxval = (int(t) for t in tokens[1:4])
    data = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    if data.size != w * h * 3 or (data > maxval).any():
        raise ValueError("pixel data does not match the header")
    return data.reshape(h, w, 3)
