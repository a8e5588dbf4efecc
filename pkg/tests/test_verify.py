import numpy as np
import pytest

from resonant_kg.errors import StepTooLarge
from resonant_kg.field import Field, spherical_setup
from resonant_kg.verify import (VerifyReport, check_exact_identities, check_resolvent_bounds,
                                check_resolvent_difference, check_strichartz, evolve,
                                evolve_and_compare, expected_slope, fit_slope, linear_calibration,
                                regularity_sweep, unweighted_counterexample)

from conftest import solved


def test_report_bookkeeping():
    r = VerifyReport("x")
    r.check("a", 0.5)
    r.check("a", -0.1)
    r.check_le("b", 1.0, 1.0)
    assert r.cases_run == 3 and r.cases_passed == 2 and not r.passed
    assert r.worst_margin["a"] == -0.1
    assert r.to_dict()["passed"] is False


def test_exact_identities_pass():
    rep = check_exact_identities(seed=1, n_samples=20)
    assert rep.passed, rep.failures
    assert rep.extra["PiV_even_max"] <= 1e-12


def test_exact_identities_reproducible():
    a = check_exact_identities(seed=7, n_samples=5).to_dict()
    b = check_exact_identities(seed=7, n_samples=5).to_dict()
    assert a == b


def test_strichartz_suite():
    rep = check_strichartz(seed=0, n_samples=30, Jmax=8)
    assert rep.passed, rep.failures
    assert rep.extra["diagonal_six_fold"] == pytest.approx(5 / 8, abs=1e-12)
    # quartic resolvent at omega = 1 with cos t e_0: inner integral -5/12
    assert rep.sup_ratios["quartic_resolvent_1_2_omega1"]["Jmax"] >= 5 / 12 - 1e-12


def test_resolvent_difference_suite():
    rep = check_resolvent_difference(seed=0, n_samples=50)
    assert rep.passed, rep.failures
    assert rep.slopes["difference_vs_eps"] == pytest.approx(1.0, abs=0.05)


def test_unweighted_counterexample():
    ce = unweighted_counterexample()
    assert ce["D_omega"] == pytest.approx(-1.0, abs=1e-9)
    assert ce["D_1"] == -401.0
    assert ce["lhs"] > ce["unweighted_rhs"]
    assert ce["lhs"] <= ce["weighted_rhs"]


def test_resolvent_bounds_suite():
    from resonant_kg.diophantine import admissible_eps_grid
    om = [w for _, w in admissible_eps_grid(3, 0.1, 1e-4, 1e-2, 10, 64)]
    rep = check_resolvent_bounds(om, 0.1)
    assert rep.passed and rep.cases_run == 10


def test_linear_calibration():
    rep = linear_calibration()
    assert rep.evolution["mismatch"] <= 1e-10


def test_energy_drift_ten_periods():
    rep = linear_calibration(periods=10)
    assert rep.evolution["energy_drift"] <= 1e-6


def test_step_too_large():
    basis, trunc = spherical_setup(33, 32, 8, p=5)
    with pytest.raises(StepTooLarge):
        evolve(np.zeros(33), np.zeros(33), basis, 5, 2 * np.pi, 64)


def test_integrator_second_order():
    """Halving dt quarters the one-period error on a nonlinear orbit."""
    basis, trunc = spherical_setup(9, 8, 4, p=3)
    a0 = np.zeros(9)
    a0[0], a0[1] = 0.8, 0.3
    ref = evolve(a0, np.zeros(9), basis, 3, 1.0, 4096)[0]
    e1 = np.linalg.norm(evolve(a0, np.zeros(9), basis, 3, 1.0, 64)[0] - ref)
    e2 = np.linalg.norm(evolve(a0, np.zeros(9), basis, 3, 1.0, 128)[0] - ref)
    assert 3.5 < e1 / e2 < 4.5


@pytest.mark.slow
def test_round_trip_p5():
    spec, mp = solved(5, 0.01)
    rep = evolve_and_compare(mp.state.u, spec)
    assert rep.evolution["mismatch"] <= 1e-4


def test_fit_slope_exact():
    x = np.geomspace(1e-4, 1e-2, 5)
    k, se = fit_slope(x, 3 * x ** 0.25)
    assert k == pytest.approx(0.25, abs=1e-12) and se < 1e-10


def test_expected_slopes():
    assert expected_slope(5) == 0.25 and expected_slope(3) == 0.5 and expected_slope(2) == 0.5


@pytest.mark.slow
def test_regularity_sweep():
    spec, mp = solved(5, 0.01, "spherical", 2)
    grid = [(r, s) for r in (0.0, 0.5, 1.0) for s in (0.5, 1.0, 2.0)]
    rep = regularity_sweep(mp.state, grid, spec.N)
    assert rep.passed and rep.cases_run == sum(r + s >= 1 for r, s in grid)
