import math

import numpy as np
import pandas as pd
import pytest

from verifiers.data_gen import CausalSpec, IndepSpec
from verifiers.errors import InputError
from verifiers.experiments import (
    CAP_FACTORS,
    b_nu,
    binomial_slack,
    appendix_numerics,
    design_variances,
    fit_loglog_slope,
    lambda_ell,
    log2_floor,
    omega_n,
    psi_norm_bound,
    rate_sweep,
    s_fn,
    slope_frame,
    slopes_of,
    summation_check,
    t1,
    tail_cap,
    tail_check,
)


def test_s_and_t1():
    assert s_fn(2.0) == pytest.approx(1.0)
    assert t1(2.0 / 3.0) == pytest.approx(2.0 / 3.0)
    assert t1(3.0) == 1.0


@pytest.mark.parametrize("n", [64, 1000, 16384])
def test_omega_is_80_at_nu_one(n):
    assert omega_n(n, 1.0) == pytest.approx(80.0)


def test_b_nu_value():
    expected = math.sqrt(6) * (1 + 20 * math.pi ** 3 * 2 / (3 * math.sqrt(3)))
    assert b_nu(1.0) == pytest.approx(expected)


@pytest.mark.parametrize("n", [2 ** e for e in range(6, 15)])
def test_lambda_weights_sum_below_one(n):
    weights = lambda_ell(n)
    assert len(weights) == log2_floor(n)
    assert all(w > 0 for w in weights)
    assert math.fsum(weights) < 1.0


def test_log2_floor_exact():
    assert [log2_floor(n) for n in (1, 2, 3, 1023, 1024)] == [0, 1, 1, 9, 10]


def test_summation_caps():
    assert summation_check(1024, 1.0, 2.0).holds
    assert summation_check(4096, 0.5, 3.0).holds
    with pytest.raises(InputError):
        summation_check(64, 1.0, 1.5)


def test_appendix_numerics_table():
    table = appendix_numerics()
    frame = table.to_frame()
    omega = frame[(frame["quantity"] == "Omega_n") & (frame["parameter"] == 1.0)]
    assert not omega.empty
    np.testing.assert_allclose(omega["value"], 80.0)
    sums = table.summation_frame()
    assert sums["holds"].all()


def test_exact_power_law_slope():
    ns = np.array([500, 1000, 2000, 4000])
    fit = fit_loglog_slope(ns, 3.0 * ns ** -0.5)
    assert fit.slope == pytest.approx(-0.5)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.stderr == pytest.approx(0.0, abs=1e-10)


def test_slope_needs_positive_values():
    with pytest.raises(InputError):
        fit_loglog_slope([1, 2], [1.0, 0.0])


def test_slope_frame_windows():
    frame = pd.DataFrame({"n": [100, 100, 400, 400], "sup_l2_err": [0.2, 0.2, 0.1, 0.1]})
    slopes = slopes_of(frame, ["sup_l2_err"])
    table = slope_frame(slopes, {"sup_l2_err": [-0.6, -0.4]})
    assert table.loc[0, "slope"] == pytest.approx(-0.5)
    assert bool(table.loc[0, "within"])


def test_rate_sweep_smoke():
    sweep = rate_sweep(IndepSpec(p=4), [200, 400], k=2, reps=5, seed=1)
    assert len(sweep.rows) == 10
    assert list(sweep.rows["n"]) == [200] * 5 + [400] * 5
    assert (sweep.rows["sup_l1_err"] >= sweep.rows["sup_l2_err"]).all()
    assert set(sweep.slopes) == {"sup_l2_err", "sup_l1_err", "sup_rep_err", "rip", "d"}
    again = rate_sweep(IndepSpec(p=4), [200, 400], k=2, reps=5, seed=1, threads=3)
    pd.testing.assert_frame_equal(sweep.rows, again.rows)


@pytest.mark.slow
def test_independent_rate_slopes():
    sweep = rate_sweep(IndepSpec(p=6), [500, 1000, 2000, 4000, 8000], k=2, reps=200, seed=7, threads=4)
    assert -0.6 <= sweep.slopes["sup_l2_err"].slope <= -0.4
    assert -1.15 <= sweep.slopes["sup_rep_err"].slope <= -0.85


def test_caps_and_slack():
    assert tail_cap("max-mean", 3.0) == pytest.approx(3 * math.exp(-3))
    assert tail_cap("sparse-dependent", 0.0) == 1.0
    assert CAP_FACTORS["max-sum"] == 8.0
    assert binomial_slack(0.5, 2500) == pytest.approx(0.03)


def test_psi_norm_bounds_satisfy_definition():
    k = psi_norm_bound("gaussian", 2.0, 1.0)
    # E exp(Z^2 / K^2) = (1 - 2 / K^2)^(-1/2) for standard normal Z
    assert (1 - 2 / k ** 2) ** -0.5 <= 2.0 + 1e-12
    assert psi_norm_bound("rademacher", 2.0, 1.0) ** -2 == pytest.approx(math.log(2.0))
    assert psi_norm_bound("subweibull", 1.0, 1.0) == pytest.approx(2.0)


def test_design_variances():
    np.testing.assert_allclose(design_variances(IndepSpec(p=3, design={"kind": "subweibull", "alpha": 1.0})), 2.0)
    assert design_variances(IndepSpec(p=3, intercept=True)).shape == (2,)


def test_max_mean_never_exceeds_loose_bound():
    report = tail_check("max-mean", IndepSpec(p=50), n=200, reps=2000, t_grid=(1.0, 3.0, 6.0), seed=3)
    assert report.passed
    frame = report.to_frame()
    assert len(frame) == 3
    row = frame[frame["t"] == 3.0].iloc[0]
    assert row["cap"] == pytest.approx(3 * math.exp(-3))
    assert row["frequency"] <= row["cap"] + row["slack"]
    assert frame[frame["t"] == 6.0]["frequency"].iloc[0] == 0.0


def test_tail_check_validation():
    with pytest.raises(InputError):
        tail_check("max-mean", IndepSpec(p=5), n=100, reps=100)
    with pytest.raises(InputError):
        tail_check("bogus", IndepSpec(p=5), n=100)
    with pytest.raises(InputError):
        tail_check("max-sum", IndepSpec(p=5), n=100)


@pytest.mark.slow
def test_sparse_independent_tails():
    report = tail_check("sparse-iid", IndepSpec(p=5), n=200, k=2, reps=2000, seed=4)
    assert report.passed
    assert set(report.to_frame()["statistic"]) == {"D", "RIP", "any"}


@pytest.mark.slow
def test_dependent_max_sum_tails():
    spec = CausalSpec(p=20, coefficients={"rho": 0.5})
    report = tail_check("max-sum", spec, n=200, reps=2000, seed=5, nu=1.0)
    assert report.passed
    assert report.to_frame()["nu"].eq(1.0).all()
