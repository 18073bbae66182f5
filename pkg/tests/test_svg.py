import numpy as np
import pytest

from torsk.svg import colormap, heatmap_svg, write_heatmap_svg


def test_colormap_ends():
    rgb = colormap(np.array([0.0, 1.0, 2.0]), 0.0, 2.0)
    assert rgb[0].tolist() == [68, 1, 84] and rgb[-1].tolist() == [253, 231, 37]
    assert colormap(np.array([5.0]), 1.0, 1.0)[0].tolist() == [68, 1, 84]


def test_heatmap_structure(tmp_path):
    grid = np.arange(6).reshape(2, 3)
    svg = heatmap_svg(grid, cell=10, title="a < b")
    assert svg.count("<rect") == 6 and "a &lt; b" in svg
    assert 'width="30"' in svg
    path = write_heatmap_svg(tmp_path / "h" / "m.svg", grid)
    assert path.read_text().startswith("<svg")
    with pytest.raises(ValueError):
        heatmap_svg(np.zeros(3))
