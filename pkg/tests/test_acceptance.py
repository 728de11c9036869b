"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line with its runtime."""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from roughcanal.canal import (CrossSection, dispersion, lambda_to_mu, mu_to_lambda, rectangle_threshold, threshold,
                              weyl_residual)
from roughcanal.certify import CanalConfig, certify
from roughcanal.cli import main
from roughcanal.geometry import CellGeometry, PlateGeometry
from roughcanal.homogenize import homogenize, two_scale_average
from roughcanal.limit import LimitProblem, separable_values, solve_limit
from roughcanal.plate import convergence_study, fit_rate, flat_plate_values, solve_plate_steklov

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def report(capsys):
    """Print one verdict line outside pytest's capture, then fail the test if needed."""
    def _report(number, title, checks, started, limit):
        elapsed = time.perf_counter() - started
        checks = dict(checks)
        checks[f"runtime < {limit:g} s"] = elapsed < limit
        failed = [name for name, ok in checks.items() if not ok]
        verdict = "PASS" if not failed else "FAIL"
        with capsys.disabled():
            line = f"\n[{verdict}] criterion {number}: {title} ({elapsed:.2f} s)"
            if failed:
                line += " failed: " + "; ".join(failed)
            print(line)
        assert not failed, failed
    return _report


def test_criterion_1_flat_cell_identity(report):
    t0 = time.perf_counter()
    corr, b = homogenize(CellGeometry.flat(1.0, 1.0, 1.0, 1.0), (4, 4, 4))
    err_b = float(np.abs(b.b - np.eye(2)).max())
    err_w = float(np.abs(corr.W).max())
    report(1, f"flat cell gives b = I (err {err_b:.1e}, |W| {err_w:.1e})",
           {"b = I within 1e-10": err_b <= 1e-10, "correctors within 1e-10": err_w <= 1e-10}, t0, 5)


def _random_profile(rng, vary2=True):
    c = rng.uniform(-0.25, 0.25, 4)
    if not vary2:
        c[1] = c[3] = 0.0

    def f(e1, e2):
        return (1.0 + c[0] * np.cos(2 * np.pi * e1) + c[1] * np.sin(2 * np.pi * e2)
                + c[2] * np.sin(4 * np.pi * e1) * (1 + c[3] * np.cos(2 * np.pi * e2)))
    return CellGeometry.from_function(f, n1=9, n2=9)


def test_criterion_2_gram_spd_invariants(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240501)
    checks = {}
    for n in range(5):
        cell = _random_profile(rng, vary2=n != 4)
        corr, b = homogenize(cell, (8, 8, 4))
        vol = corr.mesh.volume()
        checks[f"profile {n} symmetric"] = np.abs(b.b - b.b.T).max() <= 1e-12
        checks[f"profile {n} positive definite"] = b.eigenvalues().min() > 0
        for i in (1, 2):
            bii = b.b[i - 1, i - 1]
            if cell.is_flat(i):
                checks[f"profile {n} b{i}{i} <= |Sigma|"] = bii <= vol * (1 + 1e-12)
            else:
                checks[f"profile {n} b{i}{i} < |Sigma|"] = bii < vol
    report(2, "effective tensor symmetric, SPD and below |Sigma| on 5 random profiles", checks, t0, 60)


def test_criterion_3_limit_spectrum_oracle(report):
    t0 = time.perf_counter()
    h, A1, A2 = 0.5, 2.0, 2.0
    _, b = homogenize(CellGeometry.flat(1.0, 1.0, h), (2, 2, 2))
    exact = h * np.pi ** 2 * np.sort(np.add.outer((np.arange(1, 5) / A1) ** 2, (np.arange(1, 5) / A2) ** 2).ravel())[:5]
    np.testing.assert_allclose(separable_values(b, A1, A2, 5), exact, rtol=1e-12)
    errs = {}
    for n in (32, 64):
        tau = solve_limit(LimitProblem(b, A1, A2), 5, (n, n)).values
        errs[n] = tau / exact - 1
    ratio = errs[32] / errs[64]
    report(3, f"limit spectrum vs separable oracle (max rel err {errs[64].max():.2e}, ratios "
              f"{np.round(ratio, 2).tolist()})",
           {"rel err < 0.5% at 64x64": np.all(errs[64] < 5e-3),
            "bounds from above": np.all(errs[64] > 0) and np.all(errs[32] > 0),
            "refinement ratio 4 +- 30%": np.all((ratio > 2.8) & (ratio < 5.2))}, t0, 120)


def test_criterion_4_threshold_oracle(report):
    t0 = time.perf_counter()
    exact = math.pi / 2 * math.tanh(math.pi / 2)
    res = threshold(CrossSection.rectangle(1.0, 1.0), target_h=1 / 32)
    lam = res.lambda_gamma0
    rel = lam / exact - 1
    mu_err = abs(mu_to_lambda(res.mu_gamma0) - lam)
    report(4, f"half-rectangle threshold {lam:.6f} vs {exact:.6f} (rel {rel:.2e})",
           {"oracle formula": abs(rectangle_threshold(1.0, 1.0) - exact) < 1e-15,
            "within 0.5% from above": 0 <= rel < 5e-3,
            "mu map exact": res.mu_gamma0 == lambda_to_mu(lam) and mu_err <= 1e-15}, t0, 60)


def test_criterion_5_flat_plate_steklov(report):
    t0 = time.perf_counter()
    plate = PlateGeometry(CellGeometry.flat(1.0, 1.0, 0.5), 4.0, 4.0, 0.25)
    spec = solve_plate_steklov(plate, half=True, k=3, cell_res=(4, 4, 4))
    oracle = flat_plate_values(4.0, 4.0, plate.eps * 0.5, 3, half=True)
    rel = spec.values[0] / oracle[0] - 1
    report(5, f"half plate alpha1 {spec.values[0]:.5f} vs oracle {oracle[0]:.5f} (rel {rel:.2e})",
           {"within 1%": abs(rel) < 0.01, "upper bounds": np.all(spec.values >= oracle)}, t0, 120)


def test_criterion_6_two_scale_convergence(report, tmp_path):
    t0 = time.perf_counter()
    cell = CellGeometry.corrugated(0.5, 0.25)
    rep = convergence_study(cell, 1.0, 1.0, [0.25, 0.125, 0.0625], k=1, cell_res=(4, 4, 4))
    rep.write_csv(tmp_path / "convergence.csv")
    ratio_err = rep.ratio_errors(1)
    rate = rep.rates[1]
    report(6, f"corrugated family |alpha/eps - tau| = {np.round(ratio_err, 5).tolist()}, rate {rate:.2f}",
           {"strictly decreasing": np.all(np.diff(ratio_err) < 0), "rate >= 1": rate is not None and rate >= 1.0},
           t0, 900)


def test_criterion_7_accumulation(report, tmp_path):
    t0 = time.perf_counter()
    section = CrossSection.rectangle(2.2, 3.0)
    plate = PlateGeometry(CellGeometry.flat(1.0, 1.0, 0.5), 4.0, 4.0, 0.125)
    fine = certify(CanalConfig(section, plate), 0.6)
    coarse = certify(CanalConfig(section, plate.with_eps(0.25)), 0.6)
    oracle = flat_plate_values(4.0, 4.0, 0.125 * 0.5, 3, half=True)
    out = tmp_path / "find"
    code = main(["find-eps", "--config", str(CONFIGS / "canal_certify.json"), "--out", str(out),
                 "--eps", "0.25,0.125,0.0625"])
    found = json.loads((out / "result.json").read_text())["result"] if code == 0 else {}
    bounds = np.array(fine.bounds[:3])
    report(7, f"certified {fine.certified_count} modes at eps=1/8, {coarse.certified_count} at eps=1/4, "
              f"find-eps -> {found.get('eps')}",
           {"threshold ~ 0.694": abs(fine.threshold - 0.6946) < 1e-3,
            ">= 3 modes at 1/8": fine.certified_count >= 3,
            ">= 1 mode at 1/4": coarse.certified_count >= 1,
            "oracle ~ {0.192, 0.306, 0.496}": np.allclose(oracle, [0.192, 0.306, 0.496], atol=1e-3),
            "bounds above oracle and < 0.6": np.all(bounds > oracle) and np.all(bounds < 0.6),
            "find-eps returns 1/8": code == 0 and found["eps"] == 0.125}, t0, 600)


def test_criterion_8_dispersion_and_weyl(report):
    t0 = time.perf_counter()
    half = CrossSection.rectangle(1.0, 1.0)
    h = 1 / 16
    lam0 = threshold(half, target_h=h).lambda_gamma0
    curve = dispersion(half, np.linspace(0.0, 2.0, 10), target_h=h)
    at = dispersion(half, [lam0], target_h=h).eta_sq[0, 0]
    full = CrossSection.rectangle(1.0, 1.0, half=False)
    ratios = []
    for lam in (0.0, 0.5, lam0):
        r = [weyl_residual(full, lam, m) for m in range(3, 9)]
        ratios += [b / a for a, b in zip(r, r[1:])]
    ratios = np.array(ratios)
    report(8, f"eta^2(lambda0) = {at:.1e}, Weyl ratios in [{ratios.min():.3f}, {ratios.max():.3f}]",
           {"eta^2 strictly decreasing": np.all(np.diff(curve.eta_sq[:, 0]) < 0),
            "eta^2(lambda0) = 0": abs(at) < 1e-8,
            "Weyl ratios in (0.55, 0.90)": np.all((ratios > 0.55) & (ratios < 0.90))}, t0, 120)


def test_criterion_9_two_scale_averaging(report):
    t0 = time.perf_counter()
    cell = CellGeometry.corrugated(0.5, 0.25)
    Y = lambda y1, y2: np.cos(np.pi * y1 / 2) * np.cos(np.pi * y2 / 2) * (1 + 0.3 * y1)  # noqa: E731
    Z = lambda a, b, c: np.sin(2 * np.pi * a) + np.cos(2 * np.pi * b) * (1 + c)  # noqa: E731
    eps = [0.25, 0.125, 0.0625]
    lhs = [abs(two_scale_average(Z, Y, PlateGeometry(cell, 2.0, 2.0, e)).lhs) for e in eps]
    rate = fit_rate(eps, lhs)
    report(9, f"mean-zero two-scale integrals {np.array(lhs).round(8).tolist()}, rate {rate:.2f}",
           {"rate >= 1.5": rate >= 1.5}, t0, 60)
