"""SVG 输出"""

import pytest

from src.errors import ModelError
from src.plotting import annuli_svg, deviation_svg, stable_ball_svg
from src.stable_geometry import linf_space, stable_unit_ball


def test_ball_svg_is_reproducible(rose2):
    ball = stable_unit_ball(rose2)
    first = stable_ball_svg(ball, "rose-2")
    assert first.lstrip().startswith("<?xml")
    assert first == stable_ball_svg(ball, "rose-2")
    assert "<dc:date>" not in first


def test_ball_svg_only_in_the_plane():
    with pytest.raises(ModelError):
        stable_ball_svg(linf_space(3).ball)


def test_curves():
    assert "<svg" in deviation_svg([1, 2, 3], [0, 1, 1])
    assert "<svg" in annuli_svg([13, 48], [36.0], [324.0])
