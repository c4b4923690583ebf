import numpy as np
import pytest

from bayes_aco.colony import Path
from bayes_aco.grid import CellClass, parse_map
from bayes_aco.render import RenderStyle, parse_ppm, render_heatmap, render_map, to_ppm

from conftest import GOLDEN, fixture_map


def test_style_validation():
    with pytest.raises(ValueError):
        RenderStyle(cell_size=0)
    with pytest.raises(ValueError):
        RenderStyle(palette={CellClass.ROAD: (1, 2, 3)})
    with pytest.raises(ValueError):
        RenderStyle(overlay="wind")
    with pytest.raises(ValueError):
        RenderStyle(heat_color=(0, 0, 300))


def test_map_render_colors_and_size():
    m = parse_map("S#\n~c\n.G\n")
    img = parse_ppm(render_map(m, RenderStyle(cell_size=3)))
    assert img.shape == (9, 6, 3)
    style = RenderStyle()
    assert tuple(img[0, 0]) == style.palette[CellClass.ROAD]
    assert tuple(img[0, 3]) == style.palette[CellClass.OBSTACLE]
    assert tuple(img[3, 0]) == style.palette[CellClass.RIVER]
    assert tuple(img[5, 5]) == style.palette[CellClass.CROP]


def test_zero_intensity_equals_plain_map():
    m = fixture_map("dense_area")
    style = RenderStyle(cell_size=2)
    assert render_heatmap(m, np.zeros(m.cells.shape), style) == render_map(m, style)


def test_single_peak_gives_one_saturated_block():
    m = fixture_map("open10")
    values = np.zeros((10, 10))
    values[4, 7] = 5.0
    style = RenderStyle(cell_size=3)
    img = parse_ppm(render_heatmap(m, values, style))
    hot = np.all(img == np.array(style.heat_color), axis=2)
    assert hot.sum() == 9
    rows, cols = np.nonzero(hot)
    assert set(rows) == {12, 13, 14} and set(cols) == {21, 22, 23}


def test_golden_three_by_three():
    m = parse_map("S.c\n#c~\nc.G\n")
    doc = render_heatmap(m, [[0, 0, 2], [0, 1, 0], [3, 0, 0]], RenderStyle(cell_size=2))
    assert doc == (GOLDEN / "heat3x3.ppm").read_text()


def test_linear_blend():
    m = parse_map("Sc\ncG\n")
    style = RenderStyle(cell_size=1)
    img = parse_ppm(render_heatmap(m, [[0, 1], [2, 0]], style))
    base = np.array(style.palette[CellClass.CROP])
    heat = np.array(style.heat_color)
    assert tuple(img[0, 1]) == tuple(np.rint(base + 0.5 * (heat - base)).astype(int))
    assert tuple(img[1, 0]) == tuple(heat)


def test_heatmap_rejects_bad_input():
    m = parse_map("Sc\ncG\n")
    with pytest.raises(ValueError, match="empty"):
        render_heatmap(m, np.zeros((0, 0)))
    with pytest.raises(ValueError, match="shape"):
        render_heatmap(m, np.zeros((3, 3)))
    with pytest.raises(ValueError, match="non-negative"):
        render_heatmap(m, [[0, -1], [0, 0]])


def test_path_overlay():
    m = fixture_map("open10")
    style = RenderStyle(cell_size=1)
    path = Path.from_cells([(0, 0), (1, 1), (2, 2)])
    img = parse_ppm(render_map(m, style, path=path))
    painted = np.all(img == np.array(style.path_color), axis=2)
    assert set(zip(*np.nonzero(painted))) == {(0, 0), (1, 1), (2, 2)}


def test_ppm_lines_are_short():
    m = fixture_map("square_spiral")
    doc = render_map(m, RenderStyle(cell_size=4))
    assert max(len(line) for line in doc.splitlines()) <= 70
    img = np.random.default_rng(0).integers(0, 256, (5, 7, 3))
    assert np.array_equal(parse_ppm(to_ppm(img)), img)
    with pytest.raises(ValueError):
        parse_ppm("P6\n1 1\n255\n0 0 0\n")
