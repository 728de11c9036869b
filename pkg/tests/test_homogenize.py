import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roughcanal.geometry import CellGeometry, PlateGeometry
from roughcanal.homogenize import (EffectiveTensor, effective_tensor, effective_tensor_boundary_form, homogenize,
                                   solve_correctors, two_scale_average)
from roughcanal.plate import fit_rate


def random_profile(c):
    """Positive Lipschitz profile built from a few periodic modes."""
    def f(e1, e2):
        return (1.0 + c[0] * np.cos(2 * np.pi * e1) + c[1] * np.sin(2 * np.pi * e2)
                + c[2] * np.sin(2 * np.pi * (e1 + e2)))
    return CellGeometry.from_function(f, n1=5, n2=5)


coeffs = st.lists(st.floats(-0.25, 0.25), min_size=3, max_size=3)


def test_flat_cell_identity():
    corr, b = homogenize(CellGeometry.flat(1.0, 1.0, 1.0), (4, 4, 4))
    np.testing.assert_allclose(b.b, np.eye(2), atol=1e-10)
    assert np.abs(corr.W).max() < 1e-10


def test_flat_cell_scales_with_depth():
    _, b = homogenize(CellGeometry.flat(2.0, 1.0, 0.3), (2, 2, 2))
    np.testing.assert_allclose(b.b, 0.3 * 2.0 * np.eye(2), atol=1e-12)


@settings(max_examples=6)
@given(coeffs)
def test_random_profiles_give_spd_tensor_below_volume(c):
    cell = random_profile(c)
    corr = solve_correctors(cell, (4, 4, 3))
    b = effective_tensor(cell, corr)
    vol = corr.mesh.volume()
    assert np.abs(b.b - b.b.T).max() <= 1e-12
    assert b.eigenvalues().min() > 0
    assert np.all(np.diag(b.b) <= vol * (1 + 1e-12))
    for i in (1, 2):
        if not cell.is_flat(i):
            assert b.b[i - 1, i - 1] < vol


@settings(max_examples=4)
@given(coeffs)
def test_boundary_form_agrees_with_gram_form(c):
    cell = random_profile(c)
    corr = solve_correctors(cell, (4, 4, 2))
    np.testing.assert_allclose(effective_tensor(cell, corr).b, effective_tensor_boundary_form(cell, corr).b,
                               atol=1e-10)


def test_correctors_are_gauged_to_mean_zero():
    corr = solve_correctors(CellGeometry.corrugated(), (8, 2, 4))
    np.testing.assert_allclose(corr.mean(), 0.0, atol=1e-12)


def test_corrugated_tensor_structure():
    _, b = homogenize(CellGeometry.corrugated(0.5, 0.25), (8, 2, 8))
    assert b.is_diagonal()
    # invariant direction: b22 is exactly the cell volume
    assert b.b[1, 1] == pytest.approx(0.5, rel=1e-12)
    # harmonic-type reduction in the rough direction
    assert 0.3 < b.b[0, 0] < 0.5


def test_refinement_decreases_rough_direction_coefficient():
    cell = CellGeometry.corrugated(0.5, 0.25)
    vals = [homogenize(cell, (n, 2, n))[1].b[0, 0] for n in (4, 8, 16)]
    assert vals[0] > vals[1] > vals[2]


def test_tensor_helpers():
    t = EffectiveTensor.diagonal(2.0, 3.0)
    assert t.scaled(2.0).b[1, 1] == pytest.approx(6.0)
    np.testing.assert_allclose(t.eigenvalues(), [2.0, 3.0])


@pytest.mark.parametrize("cell", [CellGeometry.flat(), CellGeometry.corrugated()])
def test_two_scale_average_of_mean_zero_field_decays(cell):
    Y = lambda y1, y2: np.cos(np.pi * y1 / 2) * np.cos(np.pi * y2 / 2) * (1 + 0.3 * y1)  # noqa: E731
    Z = lambda a, b, c: np.sin(2 * np.pi * a) + np.cos(2 * np.pi * b) * (1 + c)  # noqa: E731
    eps = [0.25, 0.125, 0.0625]
    out = [two_scale_average(Z, Y, PlateGeometry(cell, 2.0, 2.0, e)) for e in eps]
    assert all(abs(r.z_mean) < 1e-12 for r in out)
    assert fit_rate(eps, [abs(r.lhs) for r in out]) >= 1.5


def test_two_scale_average_matches_mean_for_smooth_fields():
    cell = CellGeometry.corrugated()
    Y = lambda y1, y2: 1.0 + 0.1 * y1 * y2  # noqa: E731
    Z = lambda a, b, c: 2.0  # noqa: E731
    r = two_scale_average(Z, Y, PlateGeometry(cell, 1.0, 1.0, 0.125))
    assert r.lhs == pytest.approx(r.rhs, rel=1e-10)
