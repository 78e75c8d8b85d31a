import xml.etree.ElementTree as ET

from photonic_imc.svg import Figure, _nice_ticks


def _fig():
    f = Figure("t <&>", "x", "y")
    f.line([0, 1, 2], [0, 1, 4], "curve")
    f.points([0.5], [2.0], "pt")
    f.bars([0, 1, 2], [3, 1])
    f.vline(1.5, "mark")
    return f


def test_render_is_valid_xml_and_deterministic():
    a, b = _fig().render(), _fig().render()
    assert a == b
    root = ET.fromstring(a)
    assert root.tag.endswith("svg")
    assert "t &lt;&amp;&gt;" in a
    assert a.count("<polyline") == 1 and a.count("<circle") == 1


def test_log_axis_and_empty_figure():
    f = Figure("r", "i", "res", logy=True)
    f.line([0, 1, 2], [1.0, 1e-5, 1e-10])
    svg = f.render()
    assert "1e-5" in svg
    ET.fromstring(Figure("empty", "x", "y").render())


def test_nice_ticks():
    assert _nice_ticks(0, 1) == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    assert _nice_ticks(2, 2) == [2]
