import math

import pytest
from hypothesis import given, strategies as st

from roughcanal.canal import CrossSection, rectangle_threshold
from roughcanal.certify import CanalConfig, certify, find_epsilon, spectral_parameter_maps
from roughcanal.errors import InvalidGeometryError, NotFoundError, ThresholdViolationError
from roughcanal.geometry import CellGeometry, PlateGeometry
from roughcanal.plate import flat_plate_values

SECTION = CrossSection.rectangle(2.2, 3.0)


def example(eps=0.25, body=None):
    plate = PlateGeometry(CellGeometry.flat(h=0.5), 4.0, 4.0, eps)
    return CanalConfig(SECTION, plate, body or {})


@given(st.floats(0.0, 1e6))
def test_lambda_mu_round_trip(lam):
    mu = spectral_parameter_maps(lam, "lambda->mu")
    assert spectral_parameter_maps(mu, "mu->lambda") == pytest.approx(lam, rel=1e-15, abs=1e-15)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1.0))
def test_alpha_beta_round_trip(alpha, eps):
    beta = spectral_parameter_maps(alpha, "alpha->beta", eps)
    assert spectral_parameter_maps(beta, "beta->alpha", eps) == pytest.approx(alpha, rel=1e-12)


def test_map_validation():
    with pytest.raises(ValueError):
        spectral_parameter_maps(1.0, "alpha->beta")
    with pytest.raises(ValueError):
        spectral_parameter_maps(1.0, "sideways")


def test_plate_must_fit_under_surface():
    plate = PlateGeometry(CellGeometry.flat(h=0.5), 4.0, 5.0, 0.25)
    with pytest.raises(InvalidGeometryError):
        CanalConfig(SECTION, plate)
    with pytest.raises(InvalidGeometryError):
        CanalConfig(CrossSection.rectangle(2.2, 3.0, half=False), plate)


def test_coarse_scale_certifies_one_mode():
    cert = certify(example(0.25), 0.6)
    assert cert.certified_count == 1
    assert cert.threshold == pytest.approx(rectangle_threshold(2.2, 3.0))
    assert cert.bounds[1] >= 0.6


def test_bounds_lie_above_oracle_and_below_threshold():
    cert = certify(example(0.25), 0.69)
    oracle = flat_plate_values(4.0, 4.0, 0.125, len(cert.bounds), half=True)
    assert all(b >= o for b, o in zip(cert.bounds, oracle))
    assert max(cert.bounds[:cert.certified_count]) < cert.threshold


def test_threshold_violation():
    with pytest.raises(ThresholdViolationError):
        certify(example(), 0.7)


def test_zero_modes_is_degenerate():
    cert = certify(example(), 0.6, n_requested=0)
    assert cert.degenerate and cert.certified_count == 0


def test_budget_gives_partial_certificate():
    cert = certify(example(0.125), 0.6, max_nodes=1000)
    assert cert.partial and cert.certified_count == 0


def test_body_metadata_is_irrelevant():
    a = certify(example(0.25, {"bottom": "flat"}), 0.6).to_dict()
    b = certify(example(0.25, {"bottom": "keel", "draft": 1.7}), 0.6).to_dict()
    assert a == b


def test_asymptotic_method_is_flagged():
    cert = certify(example(0.25), 0.6, method="asymptotic")
    assert any("not rigorous" in f for f in cert.flags)
    assert cert.bounds[0] == pytest.approx(0.25 * 0.5 * math.pi ** 2 * (1 / 16 + 1 / 4))


def test_find_epsilon_single_mode_at_coarsest_scale():
    eps, cert = find_epsilon(example(), 0.69, 1, [0.25, 0.125])
    assert eps == 0.25 and cert.certified_count >= 1


def test_find_epsilon_not_found_reports_best():
    with pytest.raises(NotFoundError) as info:
        find_epsilon(example(), 0.3, 3, [0.5, 0.25])
    assert info.value.best is not None
