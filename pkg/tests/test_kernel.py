import numpy as np
import pytest

from app.core.exceptions import (
    DomainError,
    GridMismatchError,
    InfeasibleGridError,
    KernelAssumptionError,
    KernelFileError,
)
from app.models.history import HistoryField
from app.models.kernel import KernelSpec
from app.services.kernel import (
    E_beta_norm_sq,
    M_norm_sq,
    build_sgrid,
    load_tabulated_kernel,
    mu_from_K,
    require_M_delta,
    tail_function,
    tail_sup,
    transport_norm_sq,
    validate_M_delta,
    weighted_inner,
)


def test_sgrid_layout(sgrid):
    assert sgrid.nodes[0] == 0.0
    assert sgrid.nodes[1] == pytest.approx(1e-3)
    assert sgrid.s_max == pytest.approx(np.log(1e8))
    assert sgrid.nodes[-1] == sgrid.s_max
    assert 1.0 < sgrid.ratio < 1.25
    assert sgrid.quad_tol <= 1e-3
    assert np.all(sgrid.weights > 0)
    assert sgrid.weights.sum() == pytest.approx(sgrid.s_max)


@pytest.mark.parametrize("J", [4, 8])
def test_sgrid_too_coarse(J):
    with pytest.raises(InfeasibleGridError):
        build_sgrid(1.0, J, 1e-8)


def test_sgrid_bad_domain():
    with pytest.raises(DomainError):
        build_sgrid(0.0, 256, 1e-8)


def test_exponential_kernel_in_class(kernel, sgrid):
    report = validate_M_delta(kernel, sgrid)
    assert report.passed
    assert report.anchor == "M1"


def test_slow_decay_violates_class(sgrid):
    bad = KernelSpec(delta=2.0, rate=1.0)
    report = validate_M_delta(bad, sgrid)
    assert not report.passed
    assert report.offending["s"] == pytest.approx(0.0)
    with pytest.raises(KernelAssumptionError) as info:
        require_M_delta(bad, sgrid)
    assert info.value.anchor == "M1"
    assert info.value.node == 0


def test_tabulated_kernel_class(sgrid):
    s = np.linspace(0.0, 20.0, 41)
    good = KernelSpec(delta=1.0, family="tabulated", table_s=s, table_mu=np.exp(-1.5 * s))
    assert validate_M_delta(good, sgrid).passed

    mu = np.exp(-1.5 * s)
    mu[11] = mu[10]
    flat = KernelSpec(delta=1.0, family="tabulated", table_s=s, table_mu=mu)
    report = validate_M_delta(flat, sgrid)
    assert not report.passed
    assert report.offending["s"] == pytest.approx(s[10])


def test_tabulated_kernel_continues_with_delta():
    s = np.array([0.0, 1.0, 2.0])
    spec = KernelSpec(delta=0.5, family="tabulated", table_s=s, table_mu=np.exp(-s))
    assert spec.mu(1.5) == pytest.approx(np.exp(-1.5))
    assert spec.mu(4.0) == pytest.approx(np.exp(-2.0 - 0.5 * 2.0))
    assert spec.l1_norm() == pytest.approx(np.trapezoid(np.exp(-s), s) + np.exp(-2.0) / 0.5)


def test_load_tabulated_kernel(tmp_path):
    s = np.linspace(0.0, 10.0, 21)
    path = tmp_path / "kernel.txt"
    np.savetxt(path, np.column_stack([s, np.exp(-s)]))
    spec = load_tabulated_kernel(path, delta=1.0)
    assert spec.family == "tabulated"
    assert spec.mu0 == pytest.approx(1.0)
    assert spec.mu(0.25) == pytest.approx(np.exp(-0.25))


def test_load_tabulated_kernel_errors(tmp_path):
    three = tmp_path / "three.txt"
    np.savetxt(three, np.ones((4, 3)))
    with pytest.raises(KernelFileError):
        load_tabulated_kernel(three, 1.0)

    unsorted = tmp_path / "unsorted.txt"
    np.savetxt(unsorted, np.array([[0.0, 1.0], [2.0, 0.5], [1.0, 0.7]]))
    with pytest.raises(KernelFileError):
        load_tabulated_kernel(unsorted, 1.0)

    with pytest.raises(KernelFileError):
        load_tabulated_kernel(tmp_path / "missing.txt", 1.0)


def test_mu_from_K(sgrid):
    spec = mu_from_K(lambda s: np.exp(-s), sgrid)
    np.testing.assert_allclose(spec.table_mu, np.exp(-sgrid.nodes), rtol=1e-6)
    assert spec.delta == pytest.approx(1.0, rel=1e-4)

    sampled = mu_from_K(np.exp(-sgrid.nodes), sgrid, delta=1.0)
    assert sampled.delta == 1.0


def test_mu_from_K_needs_decreasing_K(sgrid):
    with pytest.raises(KernelAssumptionError):
        mu_from_K(lambda s: 1.0 + s, sgrid)


def test_M_norm_of_equality_history(equality_history):
    # int e^{-s} (1 - e^{-s})^2 ds = 1/3
    assert M_norm_sq(equality_history) == pytest.approx(np.pi ** 2 / 3, rel=2e-3)
    assert M_norm_sq(equality_history, beta=1.0) == pytest.approx(np.pi ** 4 / 3, rel=2e-3)


def test_weighted_inner_is_symmetric(sgrid, kernel):
    rng = np.random.default_rng(0)
    a = HistoryField(rng.normal(size=(3, sgrid.size)), sgrid, kernel)
    b = HistoryField(rng.normal(size=(3, sgrid.size)), sgrid, kernel)
    assert weighted_inner(a, b) == pytest.approx(weighted_inner(b, a))


def test_weighted_inner_rejects_mismatch(sgrid, kernel):
    other = build_sgrid(1.0, 512, 1e-8, kernel=kernel)
    with pytest.raises(GridMismatchError):
        weighted_inner(HistoryField.zeros(2, sgrid, kernel), HistoryField.zeros(2, other, kernel))


def test_tail_functions(equality_history):
    with pytest.raises(DomainError):
        tail_function(equality_history, 0.5)
    total = M_norm_sq(equality_history)
    assert tail_function(equality_history, 1.0) == pytest.approx(total, rel=1e-9)
    assert tail_function(equality_history, 4.0) < total
    assert tail_sup(equality_history) >= tail_function(equality_history, 1.0)
    assert tail_sup(HistoryField.zeros(2, equality_history.grid, equality_history.kernel)) == 0.0


def test_E_beta_norm_adds_transport_and_tail(equality_history):
    expected = (
        M_norm_sq(equality_history)
        + transport_norm_sq(equality_history)
        + tail_sup(equality_history)
    )
    assert E_beta_norm_sq(equality_history) == pytest.approx(expected)
    # ||d/ds (1 - e^{-s})||^2 = alpha_1 int e^{-3s} ds
    assert transport_norm_sq(equality_history) == pytest.approx(np.pi ** 2 / 3, rel=3e-2)
