import numpy as np
import pytest

from verifiers.bound_verifier import (
    APPLICABLE,
    NOT_APPLICABLE,
    VACUOUS,
    BoundVerifier,
    check_l1,
    check_l2,
    check_linrep,
    check_lower,
    check_sandwich,
    random_test_pairs,
)
from verifiers.errors import InputError
from verifiers.error_norms import dvec
from verifiers.linalg_core import SymmetricMatrix
from verifiers.regression_core import RegressionPair

from .conftest import random_spd


@pytest.fixture
def identical(rng):
    pair = RegressionPair(random_spd(rng, 5), rng.standard_normal(5))
    return pair, RegressionPair(pair.sigma, pair.gamma)


def test_identical_pairs_are_zero(identical):
    pair1, pair2 = identical
    for check in (check_l2, check_l1, check_linrep):
        report = check(3, pair1, pair2)
        assert report.precondition == APPLICABLE
        assert report.passed
        assert all(r.lhs == pytest.approx(0.0, abs=1e-12) for r in report.records)
        assert report.quantities["rip"] == 0.0
        assert report.quantities["d"] == 0.0


def test_identity_gram_l2_is_tight(rng):
    dgamma = rng.standard_normal(6)
    pair2 = RegressionPair(SymmetricMatrix.identity(6), rng.standard_normal(6))
    pair1 = RegressionPair(SymmetricMatrix.identity(6), pair2.gamma + dgamma)
    report = check_l2(2, pair1, pair2)
    assert report.passed
    best = dvec(2, dgamma)
    tight = [r for r in report.records if r.model == best.model][0]
    assert tight.lhs == pytest.approx(tight.rhs)


@pytest.mark.parametrize("seed", range(5))
def test_random_pairs_hold(seed):
    rng = np.random.default_rng(seed)
    pair1, pair2 = random_test_pairs(8, 3, rng)
    verifier = BoundVerifier(3, pair1, pair2)
    reports = verifier.run()
    assert [r.theorem for r in reports] == ["l2", "l1", "linrep", "sandwich", "lower"]
    for report in reports[:4]:
        assert report.precondition == APPLICABLE
        assert report.passed, report.failures[:3]
    l2 = {r.model: r.lhs for r in reports[0].records}
    for record in reports[1].records:
        assert record.lhs <= np.sqrt(len(record.model)) * l2[record.model] + 1e-12
        assert record.extra["lhs_l2"] == pytest.approx(l2[record.model])


def test_l1_equals_l2_on_singletons(rng):
    pair1, pair2 = random_test_pairs(5, 1, rng)
    l2 = check_l2(1, pair1, pair2)
    l1 = check_l1(1, pair1, pair2)
    for a, b in zip(l1.records, l2.records):
        assert a.lhs == pytest.approx(b.lhs)
        assert a.rhs == pytest.approx(b.rhs)


def test_linrep_exact_for_fixed_design(rng):
    sigma = random_spd(rng, 5)
    pair1 = RegressionPair(sigma, rng.standard_normal(5))
    pair2 = RegressionPair(sigma, rng.standard_normal(5))
    report = check_linrep(2, pair1, pair2)
    assert report.passed
    assert all(r.lhs == pytest.approx(0.0, abs=1e-10) for r in report.records)


def test_linrep_identity_residual_and_uniform_rhs(rng):
    pair1, pair2 = random_test_pairs(6, 2, rng)
    report = check_linrep(2, pair1, pair2)
    assert report.passed
    for record in report.records:
        assert record.extra["identity_residual"] <= 1e-9
        assert record.rhs <= report.quantities["rhs_uniform"] * (1 + 1e-9)


def test_sandwich_exact_representation(rng):
    sigma = random_spd(rng, 4)
    report = check_sandwich(2, RegressionPair(sigma, rng.standard_normal(4)), RegressionPair(sigma, rng.standard_normal(4)))
    assert report.passed
    lower = [r for r in report.records if r.theorem == "sandwich.lower"]
    upper = [r for r in report.records if r.theorem == "sandwich.upper"]
    assert len(lower) == len(upper) == 10
    for lo, hi in zip(lower, upper):
        assert lo.rhs == pytest.approx(0.5 * lo.lhs)
        assert hi.rhs == pytest.approx(2.0 * hi.lhs)


def test_sandwich_silent_between_half_and_full_lambda(rng):
    pair1, pair2 = random_test_pairs(6, 2, rng, ratio=0.75)
    verifier = BoundVerifier(2, pair1, pair2)
    assert verifier.check_l2().precondition == APPLICABLE
    sandwich = verifier.check_sandwich()
    assert sandwich.precondition == NOT_APPLICABLE
    assert sandwich.passed
    assert all(r.holds is None for r in sandwich.records)


def test_lower_bound_shifted_identity(rng):
    c = 0.3
    pair2 = RegressionPair(SymmetricMatrix.identity(4), rng.standard_normal(4))
    pair1 = RegressionPair(SymmetricMatrix.identity(4) * (1 + c), rng.standard_normal(4))
    report = check_lower(2, pair1, pair2)
    assert report.precondition == APPLICABLE
    assert report.quantities["lambda_delta"] == pytest.approx(c)
    assert report.quantities["rip_sigma2"] == pytest.approx(1.0)
    assert report.passed


def test_lower_bound_indefinite_is_vacuous(rng):
    pair2 = RegressionPair(random_spd(rng, 5), rng.standard_normal(5))
    shift = SymmetricMatrix(np.diag([0.1, -0.1, 0.1, 0.1, 0.1]))
    pair1 = RegressionPair(pair2.sigma + shift, rng.standard_normal(5))
    report = check_lower(2, pair1, pair2)
    assert report.precondition == VACUOUS
    assert report.passed


def test_silent_when_rip_exceeds_lambda(rng):
    pair1, pair2 = random_test_pairs(8, 3, rng, ratio=1.5)
    for check in (check_l2, check_l1, check_linrep, check_sandwich):
        report = check(3, pair1, pair2)
        assert report.precondition == NOT_APPLICABLE
        assert report.passed
        assert {r.status for r in report.records} == {NOT_APPLICABLE}


def test_report_frame(rng):
    pair1, pair2 = random_test_pairs(4, 2, rng)
    frame = check_l2(2, pair1, pair2).to_frame()
    assert list(frame.columns) == ["theorem", "model", "lhs", "rhs", "holds", "slack", "status"]
    assert len(frame) == 10
    assert frame["model"].iloc[0] == "{0}"
    assert frame["holds"].all()


def test_unknown_theorem(rng):
    pair1, pair2 = random_test_pairs(4, 2, rng)
    with pytest.raises(InputError):
        BoundVerifier(2, pair1, pair2).run(["l3"])
