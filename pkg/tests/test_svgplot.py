"""Deterministic SVG rendering and CSV schema validation for all plot kinds."""

import numpy as np
import pytest

from labelvar.diagnostics import boundary_grid
from labelvar.errors import DataFormatError
from labelvar.models import LinearBinaryModel
from labelvar.svgplot import PLOT_KINDS, emit_svg_plot

SWEEP_CSV = """value,test_error_mean,test_error_std
0,0.5,0.02
0.05,0.3,0.01
0.1,0.4,0.03
"""

TIMESERIES_CSV = """epoch,output_variance,target_output_variance
1,0.5,0.25
2,0.3,0.15
3,0.2,0.1
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestDeterminism:
    @pytest.mark.parametrize("kind,text", [
        ("sweep_curve", SWEEP_CSV),
        ("variance_timeseries", TIMESERIES_CSV),
    ])
    def test_same_input_same_bytes(self, tmp_path, kind, text):
        src = write(tmp_path, "in.csv", text)
        a = emit_svg_plot(src, kind, tmp_path / "a.svg")
        b = emit_svg_plot(src, kind, tmp_path / "b.svg")
        assert a.read_bytes() == b.read_bytes()
        assert b"<svg" in a.read_bytes()

    def test_boundary_same_bytes(self, tmp_path):
        grid = boundary_grid(LinearBinaryModel(w=np.array([1.0, -0.5])),
                             (-2, 2, -1, 1), resolution=8)
        src = tmp_path / "grid.csv"
        grid.export_csv(src)
        a = emit_svg_plot(src, "boundary_heatmap", tmp_path / "a.svg")
        b = emit_svg_plot(src, "boundary_heatmap", tmp_path / "b.svg")
        assert a.read_bytes() == b.read_bytes()


class TestSweepCurve:
    def test_series_names_in_legend(self, tmp_path):
        src = write(tmp_path, "in.csv", SWEEP_CSV)
        svg = emit_svg_plot(src, "sweep_curve", tmp_path / "o.svg").read_text()
        assert "test_error" in svg
        assert "polyline" in svg

    def test_nan_rows_dropped(self, tmp_path):
        src = write(tmp_path, "in.csv",
                    "value,m_mean,m_std\n0,nan,nan\n1,0.5,0.1\n2,0.6,0.1\n")
        svg = emit_svg_plot(src, "sweep_curve", tmp_path / "o.svg").read_text()
        assert "nan" not in svg.lower()

    def test_missing_std_pair_rejected(self, tmp_path):
        src = write(tmp_path, "in.csv", "value,m_mean,other\n0,1,2\n")
        with pytest.raises(DataFormatError, match="m_std"):
            emit_svg_plot(src, "sweep_curve", tmp_path / "o.svg")

    def test_wrong_leading_column_rejected(self, tmp_path):
        src = write(tmp_path, "in.csv", "alpha,m_mean,m_std\n0,1,0\n")
        with pytest.raises(DataFormatError, match="value"):
            emit_svg_plot(src, "sweep_curve", tmp_path / "o.svg")

    def test_all_nan_rejected(self, tmp_path):
        src = write(tmp_path, "in.csv", "value,m_mean,m_std\n0,nan,nan\n")
        with pytest.raises(DataFormatError, match="finite"):
            emit_svg_plot(src, "sweep_curve", tmp_path / "o.svg")


class TestBoundaryHeatmap:
    def test_contour_present_for_crossing_boundary(self, tmp_path):
        grid = boundary_grid(LinearBinaryModel(w=np.array([3.0, 0.0])),
                             (-1, 1, -1, 1), resolution=9)
        src = tmp_path / "grid.csv"
        grid.export_csv(src)
        svg = emit_svg_plot(src, "boundary_heatmap", tmp_path / "o.svg").read_text()
        assert svg.count("<rect") >= 81
        assert 'stroke="black"' in svg  # 0.5-level contour segments

    def test_non_rectangular_rejected(self, tmp_path):
        src = write(tmp_path, "g.csv", "x,y,p\n0,0,0.5\n1,0,0.5\n0,1,0.5\n")
        with pytest.raises(DataFormatError, match="rectangular"):
            emit_svg_plot(src, "boundary_heatmap", tmp_path / "o.svg")

    def test_wrong_header_rejected(self, tmp_path):
        src = write(tmp_path, "g.csv", "a,b,c\n0,0,0.5\n")
        with pytest.raises(DataFormatError, match="x, y, p"):
            emit_svg_plot(src, "boundary_heatmap", tmp_path / "o.svg")


class TestVarianceTimeseries:
    def test_renders_each_series(self, tmp_path):
        src = write(tmp_path, "t.csv", TIMESERIES_CSV)
        svg = emit_svg_plot(src, "variance_timeseries", tmp_path / "o.svg").read_text()
        assert "output_variance" in svg
        assert "target_output_variance" in svg

    def test_requires_epoch_column(self, tmp_path):
        src = write(tmp_path, "t.csv", "step,v\n1,0.5\n")
        with pytest.raises(DataFormatError, match="epoch"):
            emit_svg_plot(src, "variance_timeseries", tmp_path / "o.svg")


class TestSchemaErrors:
    def test_unknown_kind(self, tmp_path):
        src = write(tmp_path, "in.csv", SWEEP_CSV)
        with pytest.raises(DataFormatError, match="unknown plot kind"):
            emit_svg_plot(src, "scatter3d", tmp_path / "o.svg")
        assert "scatter3d" not in PLOT_KINDS

    def test_empty_csv(self, tmp_path):
        src = write(tmp_path, "in.csv", "")
        with pytest.raises(DataFormatError, match="empty"):
            emit_svg_plot(src, "sweep_curve", tmp_path / "o.svg")

    def test_ragged_rows(self, tmp_path):
        src = write(tmp_path, "in.csv", "value,m_mean,m_std\n0,1\n")
        with pytest.raises(DataFormatError, match="fields"):
            emit_svg_plot(src, "sweep_curve", tmp_path / "o.svg")

    def test_non_numeric_cell(self, tmp_path):
        src = write(tmp_path, "in.csv", "value,m_mean,m_std\n0,abc,0\n")
        with pytest.raises(DataFormatError, match="non-numeric"):
            emit_svg_plot(src, "sweep_curve", tmp_path / "o.svg")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFormatError, match="cannot read"):
            emit_svg_plot(tmp_path / "none.csv", "sweep_curve", tmp_path / "o.svg")
