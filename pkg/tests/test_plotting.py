import pytest

from walkbsde.errors import NoDataError
from walkbsde.plotting import emit_plot


def test_empty_table_raises(tmp_path):
    with pytest.raises(NoDataError):
        emit_plot([], tmp_path / "x.svg")


def test_single_point_draws_scatter_only(tmp_path):
    path = tmp_path / "one.svg"
    assert emit_plot([(16, 0.1)], path, reference_slope=-0.5) is None
    assert path.read_text().startswith("<?xml")


def test_fit_and_reference_lines(tmp_path):
    path = tmp_path / "fit.svg"
    fit = emit_plot([(n, n ** -0.5) for n in (16, 64, 256, 1024)], path, reference_slope=-0.5)
    assert fit.slope == pytest.approx(-0.5)
    text = path.read_text()
    assert text.count("<path") > 4


def test_all_zero_series(tmp_path):
    path = tmp_path / "zero.svg"
    assert emit_plot([(4, 0.0), (16, 0.0)], path) is None
    assert path.stat().st_size > 0


def test_identical_input_gives_identical_bytes(tmp_path):
    pts = [(n, 2.0 * n ** -0.75) for n in (16, 64, 256)]
    emit_plot(pts, tmp_path / "a.svg", reference_slope=-0.5, title="law_Y")
    emit_plot(pts, tmp_path / "b.svg", reference_slope=-0.5, title="law_Y")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
