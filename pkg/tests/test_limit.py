import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roughcanal.errors import InvalidGeometryError
from roughcanal.homogenize import EffectiveTensor
from roughcanal.limit import LimitProblem, interpolate, nodal_gradient, separable_values, solve_limit


def test_separable_oracle_values():
    tau = separable_values(EffectiveTensor.diagonal(0.5, 0.5), 2.0, 1.0, 3)
    m = np.pi ** 2 * 0.5
    np.testing.assert_allclose(tau, m * np.array([1 / 4 + 1, 1 + 1, 9 / 4 + 1]))


def test_discrete_values_bound_oracle_from_above():
    t = EffectiveTensor.diagonal(0.5, 0.5)
    s = solve_limit(LimitProblem(t, 2.0, 1.0), 5, (32, 32))
    exact = separable_values(t, 2.0, 1.0, 5)
    assert np.all(s.values >= exact)
    assert np.all(s.values / exact - 1 < 0.02)


def test_normalization():
    t = EffectiveTensor.diagonal(1.0, 2.0)
    s = solve_limit(LimitProblem(t, 1.0, 1.0), 3, (16, 16))
    np.testing.assert_allclose(s.gram, np.eye(3), atol=1e-10)


@settings(max_examples=8)
@given(st.floats(0.2, 5.0))
def test_tensor_scaling(c):
    t = EffectiveTensor(np.array([[1.0, 0.2], [0.2, 0.7]]), 1.0, 1.0)
    a = solve_limit(LimitProblem(t, 1.0, 1.0), 3, (12, 12)).values
    b = solve_limit(LimitProblem(t.scaled(c), 1.0, 1.0), 3, (12, 12)).values
    np.testing.assert_allclose(b, c * a, rtol=1e-9)


def test_domain_monotonicity_and_half_domain():
    t = EffectiveTensor.diagonal(0.8, 1.0)
    small = solve_limit(LimitProblem(t, 1.0, 1.0), 1, (16, 16)).values[0]
    large = solve_limit(LimitProblem(t, 2.0, 2.0), 1, (32, 32)).values[0]
    half = solve_limit(LimitProblem(t, 1.0, 1.0, half=True), 1, (16, 8)).values[0]
    assert large < small < half


def test_interpolation_of_linear_fields_is_exact():
    t = EffectiveTensor.diagonal(1.0, 1.0)
    s = solve_limit(LimitProblem(t, 1.0, 1.0), 1, (8, 8))
    mesh = s.meta["mesh"]
    u = 2.0 * mesh.vertices[:, 0] - mesh.vertices[:, 1]
    pts = np.random.default_rng(0).uniform(-0.5, 0.5, (50, 2))
    np.testing.assert_allclose(interpolate(mesh, u, pts), 2 * pts[:, 0] - pts[:, 1], atol=1e-12)
    np.testing.assert_allclose(nodal_gradient(mesh, u), np.tile([2.0, -1.0], (mesh.n_vertices, 1)), atol=1e-12)


def test_indefinite_tensor_rejected():
    with pytest.raises(InvalidGeometryError):
        LimitProblem(EffectiveTensor(np.array([[1.0, 2.0], [2.0, 1.0]]), 1.0, 1.0), 1.0, 1.0)
