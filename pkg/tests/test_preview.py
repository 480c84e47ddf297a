import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from matplotlib import colormaps

from tensionnet.errors import ValidationError
from tensionnet.netgraph import LEFT, Arc, Network
from tensionnet.preview import network_svg, paths_svg, preview_svg
from tensionnet.toolpath import annotate_crossings, decompose_paths

NS = "{http://www.w3.org/2000/svg}"


def _hex(name, v):
    r, g, b = (int(round(255 * c)) for c in colormaps[name](v)[:3])
    return f"#{r:02x}{g:02x}{b:02x}"


def _net():
    return Network.build([[0, 0], [10, 0], [5, 8]], [(0, 1), (1, 2), (0, 2)], fixed=[0, 1])


def test_parses_and_counts_elements():
    root = ET.fromstring(network_svg(_net()))
    assert root.tag == NS + "svg"
    assert len(root.findall(f".//{NS}line")) == 3
    assert len(root.findall(f".//{NS}rect")) == 2


def test_empty_network_canvas():
    net = Network.build([[0, 0]], np.zeros((0, 2)), fixed=[0], q=[])
    root = ET.fromstring(network_svg(net))
    assert root.findall(f".//{NS}line") == []
    assert root.get("viewBox") is not None
    assert ET.fromstring(paths_svg([])).findall(f".//{NS}path") == []


def test_tension_colormap_endpoints():
    root = ET.fromstring(network_svg(_net(), tensions=[1.0, 3.0, 2.0], cmap="viridis"))
    lines = root.findall(f".//{NS}line")
    colors = [l.get("stroke") for l in lines]
    assert colors == [_hex("viridis", 0.0), _hex("viridis", 1.0), _hex("viridis", 0.5)]
    assert [float(l.get("data-tension")) for l in lines] == [1.0, 3.0, 2.0]
    desc = root.find(f".//{NS}desc")
    assert float(desc.get("data-tmin")) == 1.0 and float(desc.get("data-tmax")) == 3.0
    with pytest.raises(ValidationError):
        network_svg(_net(), tensions=[1.0, 2.0])


def test_uniform_tension_maps_to_low_end():
    root = ET.fromstring(network_svg(_net(), tensions=[2.0, 2.0, 2.0]))
    assert {l.get("stroke") for l in root.findall(f".//{NS}line")} == {_hex("viridis", 0.0)}


def test_arcs_carry_radius_and_angle():
    alpha = 1.2
    R = 10 / alpha
    chord = 2 * R * math.sin(alpha / 2)
    net = Network.build([[0, 0], [chord, 0]], [(0, 1)], fixed=[0], l0=[10.0],
                        arcs=[Arc(R, alpha, LEFT)])
    root = ET.fromstring(network_svg(net))
    (path,) = root.findall(f".//{NS}path")
    assert float(path.get("data-R")) == pytest.approx(R, rel=1e-5)
    assert float(path.get("data-alpha")) == pytest.approx(alpha, rel=1e-5)
    assert " A " in path.get("d")


def test_three_dimensional_rejected():
    net = Network.build([[0, 0, 0], [1, 0, 0]], [(0, 1)], fixed=[0])
    with pytest.raises(ValidationError, match="2D"):
        network_svg(net)
    with pytest.raises(ValidationError):
        preview_svg("not a network")


def test_paths_marked_by_order_and_crossings(tmp_path):
    net = Network.build([[0, 0], [10, 0], [5, -4], [5, 4]], [(0, 1), (2, 3)], fixed=[0])
    paths = annotate_crossings(decompose_paths(net))
    text = preview_svg(paths, out=tmp_path / "p.svg")
    assert (tmp_path / "p.svg").read_text() == text
    root = ET.fromstring(text)
    groups = root.findall(f".//{NS}g[@data-path]")
    assert [g.get("data-path") for g in groups] == ["0", "1"]
    (dot,) = root.findall(f".//{NS}circle")
    assert (float(dot.get("cx")), float(dot.get("cy"))) == (5.0, 0.0)


def test_deterministic():
    assert network_svg(_net(), tensions=[1.0, 3.0, 2.0]) == network_svg(_net(), tensions=[1.0, 3.0, 2.0])
