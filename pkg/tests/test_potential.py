import numpy as np
import pytest

from app.core.exceptions import PotentialAssumptionError
from app.services.potential import (
    certify_potential,
    check_growth_bound,
    check_p4,
    dealiased_size,
    require_p4,
    verify_certificate,
)


def test_allen_cahn_constants():
    spec = certify_potential([0.0, 1.0, 0.0, -1.0])
    assert spec.p0 == 3
    assert spec.a1 == pytest.approx(2.0)
    assert spec.a2 == pytest.approx(0.5)
    assert spec.a3 == pytest.approx(0.5)
    assert spec.a_phi == pytest.approx(1.0)
    assert spec.p1 == 2
    assert not spec.is_zero


def test_quintic_constants():
    spec = certify_potential([0.0, 1.0, 0.0, 0.0, 0.0, -1.0])
    assert spec.p0 == 5
    assert spec.a_phi == pytest.approx(1.0)
    # max of x^2 - x^6 / 2 sits at x^4 = 2/3
    assert spec.a3 == pytest.approx(2.0 / 3.0 * np.sqrt(2.0 / 3.0), rel=1e-9)
    assert spec.p1 == 4


@pytest.mark.parametrize(
    "poly, anchor",
    [
        ([0.0, 0.0, 0.0, 1.0], "P2"),
        ([0.0, 0.0, -1.0], "P2"),
        ([0.0, 2.0], "P2"),
        ([1.0, 0.0, 0.0, -1.0], "P0"),
    ],
)
def test_rejected_potentials(poly, anchor):
    with pytest.raises(PotentialAssumptionError) as info:
        certify_potential(poly)
    assert info.value.anchor == anchor


def test_linear_and_zero_potentials():
    linear = certify_potential([0.0, -1.0])
    assert linear.p0 == 1
    assert linear.a_phi == -1.0
    assert linear.a3 == 0.0

    zero = certify_potential([0.0])
    assert zero.is_zero
    assert zero.p0 == 1
    assert certify_potential([]).is_zero


def test_trailing_zeros_do_not_change_degree():
    spec = certify_potential([0.0, 1.0, 0.0, -1.0, 0.0, 0.0])
    assert spec.p0 == 3


@pytest.mark.parametrize(
    "poly", [[0.0, 1.0, 0.0, -1.0], [0.0, 1.0, 1.0, -1.0], [0.0, 1.0, 0.0, 0.0, 0.0, -1.0]]
)
def test_certificate_holds_on_lattice(poly):
    spec = certify_potential(poly)
    report = verify_certificate(spec, radius=10.0, n_points=100_001)
    assert report.passed, report.details
    assert report.details["violations"] == {"P1": 0, "P2": 0, "P3": 0}


@pytest.mark.parametrize(
    "poly, expected",
    [([0.0, 1.0, 0.0, -1.0], 1.0), ([0.0, 0.0, 0.0, -1.0], 1.0), ([0.0, 5.0, 0.0, -1.0], 5.0)],
)
def test_growth_bound(poly, expected):
    spec = certify_potential(poly)
    assert check_growth_bound(spec) == pytest.approx(expected, rel=1e-3)
    assert check_growth_bound(spec) <= expected * (1.0 + 1e-12)


def test_p4_orders():
    allen_cahn = certify_potential([0.0, 1.0, 0.0, -1.0])
    assert check_p4(allen_cahn, 2).passed
    report = check_p4(allen_cahn, 4)
    assert report.required_orders == (2,)
    assert report.passed

    skewed = certify_potential([0.0, 1.0, 1.0, -1.0])
    report = check_p4(skewed, 4)
    assert report.failing_orders == (2,)
    assert not report.vanishing_ok


def test_p4_growth_gate():
    quintic = certify_potential([0.0, 1.0, 0.0, 0.0, 0.0, -1.0])
    report = check_p4(quintic, 2)
    assert report.vanishing_ok
    assert not report.p1_ok
    with pytest.raises(PotentialAssumptionError) as info:
        require_p4(quintic, 2)
    assert info.value.anchor == "P4"


def test_dealiased_size():
    assert dealiased_size(3, 64) == 128
    assert dealiased_size(1, 8) == 8
    assert dealiased_size(5, 10) == 30
