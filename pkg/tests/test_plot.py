import xml.etree.ElementTree as ET

import numpy as np
import pytest

from mp_viz.errors import ConfigError, DimensionMismatch, NotTwoDimensional
from mp_viz.plot import (
    MARGIN,
    PALETTE,
    PlotOptions,
    label_color,
    ramp_color,
    render_svg,
    save_svg,
    viewport,
)

NS = "{http://www.w3.org/2000/svg}"


def circles(svg):
    return ET.fromstring(svg.split("\n", 1)[1]).iter(f"{NS}circle")


def test_one_circle_per_point(rng):
    Y = rng.normal(size=(37, 2))
    ids = [f"c{i}" for i in range(37)]
    found = list(circles(render_svg(Y, ids)))
    assert len(found) == 37
    assert [c.find(f"{NS}title").text for c in found] == ids


def test_rendering_is_byte_stable(rng):
    Y = rng.normal(size=(15, 2))
    ids = [str(i) for i in range(15)]
    labels = rng.integers(0, 3, size=15)
    assert render_svg(Y, ids, labels=labels) == render_svg(Y.copy(), list(ids), labels=labels)


def test_rejects_non_planar_maps(rng):
    with pytest.raises(NotTwoDimensional):
        render_svg(rng.normal(size=(5, 3)), list("abcde"))
    with pytest.raises(DimensionMismatch):
        render_svg(rng.normal(size=(5, 2)), list("abcd"))
    with pytest.raises(DimensionMismatch):
        render_svg(rng.normal(size=(5, 2)), list("abcde"), labels=[0, 1])


def test_ramp_anchors():
    assert ramp_color(0.0) == "#440154"
    assert ramp_color(0.5) == "#21908d"
    assert ramp_color(1.0) == "#fde725"
    assert ramp_color(-3.0) == ramp_color(0.0)
    # halfway between the first two anchors
    assert ramp_color(1 / 16) == "#461667"


def test_palette_wraps():
    assert label_color(0) == PALETTE[0]
    assert label_color(12) == PALETTE[0]
    assert label_color(13) == PALETTE[1]


def test_fills_follow_labels_or_values():
    Y = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]])
    by_label = [c.get("fill") for c in circles(render_svg(Y, "abc", labels=[2, 0, 2]))]
    assert by_label == [PALETTE[2], PALETTE[0], PALETTE[2]]
    by_value = [c.get("fill") for c in circles(render_svg(Y, "abc", values=[1.0, 3.0, 2.0]))]
    assert by_value == ["#440154", "#fde725", "#21908d"]


def test_viewport_keeps_margins_and_aspect():
    Y = np.array([[0.0, 0.0], [10.0, 5.0]])
    P = viewport(Y, 800, 600)
    # x spans the usable width; y is scaled the same and centred
    assert P[0, 0] == pytest.approx(MARGIN * 800)
    assert P[1, 0] == pytest.approx(800 - MARGIN * 800)
    assert P[0, 1] - P[1, 1] == pytest.approx(5.0 * 72.0)
    assert P[0, 1] > P[1, 1]
    centred = viewport(np.array([[3.0, 3.0]]), 100, 100)
    np.testing.assert_allclose(centred, [[50.0, 50.0]])


def test_value_legend_and_title(tmp_path):
    Y = np.array([[0.0, 0.0], [1.0, 1.0]])
    svg = render_svg(
        Y, ["a", "b"], values=[0.0, 2.0], value_name="volume",
        options=PlotOptions(title="map"),
    )
    assert ">map</text>" in svg
    assert ">volume 0.00</text>" in svg
    assert ">2.00</text>" in svg
    path = save_svg(tmp_path / "m.svg", svg)
    assert path.read_text() == svg


@pytest.mark.parametrize("kwargs", [{"width": 0}, {"radius": 0.0}])
def test_plot_options_validation(kwargs):
    with pytest.raises(ConfigError):
        PlotOptions(**kwargs)
