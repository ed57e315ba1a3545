"""SVG chart emission: structure and determinism."""

import xml.etree.ElementTree as ET

import pytest

from bmapf.svgplot import bar_chart, line_chart


def element_tags(svg_text):
    return {el.tag.split("}")[-1] for el in ET.fromstring(svg_text).iter()}


class TestLineChart:
    def test_restricted_element_set(self):
        svg = line_chart([2, 5, 10], {"a": [1.0, 0.5, 0.7], "b": [2.0, 1.5, 1.0]},
                         "K", "MSE", title="demo")
        assert element_tags(svg) <= {"svg", "line", "rect", "text"}

    def test_deterministic(self):
        args = ([1, 2, 3], {"s": [0.3, 0.2, 0.25]}, "x", "y")
        assert line_chart(*args) == line_chart(*args)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            line_chart([], {"a": []}, "x", "y")
        with pytest.raises(ValueError):
            line_chart([1], {}, "x", "y")


class TestBarChart:
    def test_restricted_element_set(self):
        svg = bar_chart([0.1, 0.5, 0.9],
                        {"a": ([1.0, 2.0, 1.5], [0.2, 0.3, 0.1]),
                         "b": ([0.8, 1.1, 0.9], [0.1, 0.2, 0.2])},
                        "Po", "MSE")
        assert element_tags(svg) <= {"svg", "line", "rect", "text"}

    def test_group_labels_present(self):
        svg = bar_chart([0.1, 0.9], {"m": ([1.0, 2.0], [0.1, 0.1])}, "Po", "MSE")
        texts = [el.text for el in ET.fromstring(svg).iter() if el.tag.endswith("text")]
        assert "0.1" in texts and "0.9" in texts

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            bar_chart([], {"a": ([], [])}, "x", "y")
