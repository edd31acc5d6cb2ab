"""Deterministic SVG rendering checks (string-level, no rasterisation)."""

import numpy as np
import pytest

from restless.svgplot import PALETTE, Series, render_plot


def _render(tmp_path, series, name="fig.svg", **kwargs):
    path = tmp_path / name
    render_plot(path, series, **kwargs)
    return path.read_text()


def test_rerun_is_byte_identical(tmp_path):
    series = [
        Series(x=[0, 1, 2], y=[0.1, 0.5, 0.3], label="alpha", markers=True),
        Series(x=[0, 1, 2], y=[0.4, 0.2, 0.6], label="beta"),
    ]
    a = tmp_path / "a.svg"
    b = tmp_path / "b.svg"
    render_plot(a, series, title="t", xlabel="x", ylabel="y")
    render_plot(b, series, title="t", xlabel="x", ylabel="y")
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.startswith("<svg ")
    assert text.endswith("</svg>\n")


def test_nan_gap_produces_two_polylines(tmp_path):
    text = _render(
        tmp_path, [Series(x=[0, 1, 2, 3, 4], y=[0.0, 1.0, np.nan, 3.0, 4.0])]
    )
    assert text.count("<polyline") == 2


def test_markers_draw_circles(tmp_path):
    text = _render(
        tmp_path, [Series(x=[0, 1, 2], y=[1.0, 2.0, 3.0], markers=True)]
    )
    assert text.count("<circle") == 3
    assert text.count("<polyline") == 1
    # marker-only series also gets circles
    text = _render(
        tmp_path, [Series(x=[0, 1], y=[1.0, 2.0], line=False)], name="m.svg"
    )
    assert text.count("<circle") == 2
    assert "<polyline" not in text


def test_error_bars_drawn_and_extend_range(tmp_path):
    flat = [Series(x=[0, 1, 2], y=[0.5, 0.5, 0.5])]
    with_err = [Series(x=[0, 1, 2], y=[0.5, 0.5, 0.5], yerr=[0.8, 0.8, 0.8])]
    plain = _render(tmp_path, flat, name="plain.svg")
    errd = _render(tmp_path, with_err, name="err.svg")
    # one vertical line per point plus the polyline itself carry the color
    assert errd.count(f'stroke="{PALETTE[0]}"') == 4
    assert plain.count(f'stroke="{PALETTE[0]}"') == 1
    # the y range grows to cover y +- err, so a y tick at 1 appears
    assert 'text-anchor="end">1</text>' in errd
    assert 'text-anchor="end">1</text>' not in plain


def test_bar_series(tmp_path):
    text = _render(
        tmp_path, [Series(x=[0, 1, 2], y=[1.0, 2.0, 3.0], bars=True, line=False)]
    )
    assert text.count('fill-opacity="0.7"') == 3
    assert "<polyline" not in text


def test_log_axis_ticks_and_filtering(tmp_path):
    text = _render(
        tmp_path,
        [Series(x=[1, 2, 3], y=[-1.0, 0.001, 1.0])],
        logy=True,
    )
    # nonpositive point dropped, remaining two still form one segment
    assert text.count("<polyline") == 1
    assert ">0.01</text>" in text


def test_text_escaping(tmp_path):
    text = _render(
        tmp_path,
        [Series(x=[0, 1], y=[0.0, 1.0], label="p<q & r>s")],
        title="a<b & c>d",
    )
    assert "a&lt;b &amp; c&gt;d" in text
    assert "p&lt;q &amp; r&gt;s" in text
    assert "a<b" not in text


def test_legend_and_custom_color(tmp_path):
    text = _render(
        tmp_path,
        [
            Series(x=[0, 1], y=[0.0, 1.0], label="alpha", color="#ff0000"),
            Series(x=[0, 1], y=[1.0, 0.0], label="beta"),
        ],
    )
    assert text.count('width="10" height="10"') == 2
    assert ">alpha</text>" in text
    assert ">beta</text>" in text
    assert 'stroke="#ff0000"' in text
    assert f'fill="{PALETTE[1]}"' in text


def test_validation_errors(tmp_path):
    path = tmp_path / "never.svg"
    with pytest.raises(ValueError, match="at least one series"):
        render_plot(path, [])
    with pytest.raises(ValueError, match="lengths differ"):
        render_plot(path, [Series(x=[0, 1], y=[0.0])])
    with pytest.raises(ValueError, match="error length"):
        render_plot(path, [Series(x=[0, 1], y=[0.0, 1.0], yerr=[0.1])])
    with pytest.raises(ValueError, match="no plottable values"):
        render_plot(path, [Series(x=[0, 1], y=[np.nan, np.nan])])
    assert not path.exists()
