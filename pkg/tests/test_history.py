import numpy as np
import pytest

from app.core.exceptions import CFLViolationError, InsufficientHistoryError, InvalidModeError
from app.models.fields import SpectralField
from app.models.history import HistoryField, PastPath
from app.models.kernel import KernelSpec
from app.services.history import (
    apply_Tmu,
    check_history_regularity,
    check_integration_by_parts,
    dissipativity_margin,
    evolve_history,
    memory_integral,
    project_history,
    representation_eta,
)
from app.services.kernel import M_norm_sq, build_sgrid


def _equality_margin(J: int) -> float:
    kernel = KernelSpec(delta=1.0)
    grid = build_sgrid(1.0, J, 1e-8, kernel=kernel)
    eta = HistoryField.from_profile(lambda s: 1.0 - np.exp(-s), np.array([1.0]), grid, kernel)
    return dissipativity_margin(eta)


def test_transport_of_smooth_profile(equality_history):
    derivative = apply_Tmu(equality_history)
    np.testing.assert_allclose(
        derivative.coeffs[0], -np.exp(-equality_history.grid.nodes), atol=1e-2
    )
    assert not np.any(derivative.coeffs[1])


def test_equality_case_margin_shrinks_with_refinement():
    coarse, fine = _equality_margin(256), _equality_margin(512)
    assert abs(coarse) <= 1e-2 * np.pi ** 2
    assert abs(fine) < abs(coarse)


def test_dissipativity_on_random_histories(sgrid, kernel):
    rng = np.random.default_rng(11)
    s = sgrid.nodes
    for _ in range(100):
        amplitudes = rng.normal(size=(4, 3))
        rates = rng.uniform(0.5, 3.0, size=(4, 3))
        coeffs = np.einsum("kj,kjs->ks", amplitudes, 1.0 - np.exp(-rates[..., None] * s))
        eta = HistoryField(coeffs, sgrid, kernel)
        assert dissipativity_margin(eta) <= 1e-6 * M_norm_sq(eta)


def test_evolve_history_respects_cfl(sgrid, kernel):
    eta = HistoryField.zeros(2, sgrid, kernel)
    with pytest.raises(CFLViolationError) as info:
        evolve_history(eta, SpectralField.zeros(2), 2e-3)
    assert info.value.spacing == pytest.approx(1e-3)
    with pytest.raises(InvalidModeError):
        evolve_history(eta, SpectralField.zeros(3), 1e-4)


def test_evolve_history_first_step(sgrid, kernel):
    eta = HistoryField.zeros(2, sgrid, kernel)
    u = SpectralField(np.array([1.0, -2.0]))
    new = evolve_history(eta, u, 5e-4)
    np.testing.assert_array_equal(new.coeffs[:, 0], 0.0)
    np.testing.assert_allclose(new.coeffs[:, 1:], 5e-4 * u.coeffs[:, None])


def test_past_path_constant_input():
    u = SpectralField(np.array([2.0, 0.0]))
    path = PastPath.from_function(lambda t: u.coeffs, t_end=1.0, dt=1e-2, span=5.0)
    assert path.t == pytest.approx(1.0)
    np.testing.assert_allclose(representation_eta(path, 1.0, 0.5).coeffs, [1.0, 0.0])
    # beyond t the zero initial history only adds int_0^t u
    np.testing.assert_allclose(representation_eta(path, 1.0, 3.0).coeffs, [2.0, 0.0])


def test_past_path_with_initial_history(sgrid, kernel):
    eta0 = HistoryField.from_profile(lambda s: s, np.array([1.0]), sgrid, kernel)
    path = PastPath.from_function(lambda t: np.array([0.0]), t_end=1.0, dt=1e-2, span=30.0, eta0=eta0)
    # eta(t, s) = eta0(s - t) for s > t when u vanishes
    assert representation_eta(path, 1.0, 3.0).coeffs[0] == pytest.approx(2.0, abs=1e-6)


def test_past_path_window():
    path = PastPath.from_function(lambda t: np.array([np.sin(t)]), t_end=3.0, dt=1e-2, span=1.0)
    with pytest.raises(InsufficientHistoryError):
        path.u_at(0.5)
    with pytest.raises(InsufficientHistoryError):
        path.history_matrix(np.array([0.5]), 4.0)
    assert path.u_at(2.5)[0, 0] == pytest.approx(np.sin(2.5), abs=1e-4)


def _integration_by_parts(J: int) -> float:
    grid = build_sgrid(1.0, J, 1e-8)
    path = PastPath.from_function(
        lambda t: np.array([np.cos(t), 0.0]), t_end=20.0, dt=1e-3, span=grid.s_max + 1.0
    )
    return check_integration_by_parts(path, lambda s: np.exp(-s), 20.0, grid)


def test_integration_by_parts():
    assert _integration_by_parts(256) <= 1e-4
    assert _integration_by_parts(1024) <= 2.5e-5


def _backend_gap(J: int) -> float:
    kernel = KernelSpec(delta=1.0)
    grid = build_sgrid(1.0, J, 1e-8, kernel=kernel)
    dt, T = 1e-3, 5.0

    def u(t: float) -> np.ndarray:
        return np.array([np.cos(3.0 * t), 0.5 * np.sin(2.0 * t)])

    eta = HistoryField.zeros(2, grid, kernel)
    for n in range(1, int(round(T / dt)) + 1):
        eta = evolve_history(eta, SpectralField(u(n * dt)), dt)
    path = PastPath.from_function(u, T, dt, grid.s_max)
    reference = path.history_field(grid, kernel)
    gap = HistoryField(eta.coeffs - reference.coeffs, grid, kernel)
    return float(np.sqrt(M_norm_sq(gap) / M_norm_sq(reference)))


def test_history_backends_agree():
    coarse, fine = _backend_gap(256), _backend_gap(512)
    assert coarse <= 0.1
    assert fine <= 0.05
    assert fine < coarse


def test_memory_integral(equality_history):
    # alpha_1 int e^{-s} (1 - e^{-s}) ds = alpha_1 / 2
    value = memory_integral(equality_history)
    assert value.coeffs[0] == pytest.approx(np.pi ** 2 / 2, rel=2e-3)
    assert value.coeffs[1] == 0.0


def test_project_history(sgrid, kernel):
    eta = HistoryField(np.ones((3, sgrid.size)), sgrid, kernel)
    projected = project_history(eta, 1)
    assert projected.coeffs[0].sum() == sgrid.size
    assert not np.any(projected.coeffs[1:])
    with pytest.raises(InvalidModeError):
        project_history(eta, 0)


def test_rough_history_is_flagged_not_rejected(sgrid, kernel, equality_history):
    smooth = check_history_regularity(equality_history)
    assert smooth.passed and not smooth.details["rough"]
    rng = np.random.default_rng(2)
    jagged = HistoryField(1e3 * rng.normal(size=(2, sgrid.size)), sgrid, kernel)
    report = check_history_regularity(jagged)
    assert report.passed
    assert report.details["rough"]
