import numpy as np
import pytest
from hypothesis import given, strategies as st

from roughcanal.errors import InconsistentScalingError, InvalidGeometryError
from roughcanal.geometry import CellGeometry, PlateGeometry, cell_count, snap_eps, triangle_wave


def test_triangle_wave_is_mean_zero_with_unit_peaks():
    t = np.linspace(-0.5, 0.5, 4001)
    w = triangle_wave(t)
    assert w.max() == pytest.approx(1.0)
    assert w.min() == pytest.approx(-1.0)
    assert w[:-1].mean() == pytest.approx(0.0, abs=1e-12)


def test_flat_cell_volume_and_flags():
    c = CellGeometry.flat(2.0, 0.5, 0.3)
    assert c.volume() == pytest.approx(0.3)
    assert c.cover_area == pytest.approx(1.0)
    assert c.is_flat() and c.is_flat(1) and c.is_flat(2)


def test_corrugated_cell_varies_only_along_first_direction():
    c = CellGeometry.corrugated(0.5, 0.25)
    assert not c.is_flat()
    assert not c.is_flat(1)
    assert c.is_flat(2)
    # mean of the triangle wave vanishes, so the volume equals the mean depth
    assert c.volume() == pytest.approx(0.5)


@pytest.mark.parametrize("depth", [
    np.array([[1.0, -0.1], [1.0, -0.1]]),
    np.array([[1.0, 2.0], [1.5, 1.0]]),
    np.array([1.0, 1.0]),
])
def test_invalid_profiles_are_rejected(depth):
    with pytest.raises(InvalidGeometryError):
        CellGeometry(1.0, 1.0, 2.0, depth)


def test_depth_above_H_is_rejected():
    with pytest.raises(InvalidGeometryError):
        CellGeometry(1.0, 1.0, 0.5, np.ones((2, 2)))


def test_text_round_trip(tmp_path):
    c = CellGeometry.corrugated(0.6, 0.2, a1=1.5)
    path = tmp_path / "cell.txt"
    c.save(path)
    d = CellGeometry.load(path)
    assert (d.a1, d.a2, d.H) == (c.a1, c.a2, c.H)
    np.testing.assert_array_equal(d.depth, c.depth)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_depth_is_periodic(e1, e2):
    c = CellGeometry.from_function(lambda a, b: 1.0 + 0.3 * np.sin(2 * np.pi * a) * np.cos(2 * np.pi * b),
                                   n1=9, n2=9)
    assert c.depth_at(e1, e2) == pytest.approx(c.depth_at(e1 + 1.0, e2 - 2.0), abs=1e-12)


def test_admissible_scales():
    assert cell_count(4.0, 1.0, 0.125) == 32
    with pytest.raises(InconsistentScalingError):
        cell_count(4.0, 1.0, 0.3)
    assert snap_eps(4.0, 1.0, 0.3) == pytest.approx(4.0 / 13)


def test_plate_counts_and_rescaling():
    p = PlateGeometry(CellGeometry.flat(), 4.0, 2.0, 0.25)
    assert (p.N1, p.N2) == (16, 8)
    q = p.with_eps(0.125)
    assert (q.N1, q.N2) == (32, 16)
    with pytest.raises(InconsistentScalingError):
        PlateGeometry(CellGeometry.flat(), 4.0, 2.0, 0.3)
