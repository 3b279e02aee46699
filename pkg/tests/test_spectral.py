import numpy as np
import pytest

from app.core.exceptions import AliasingError, InvalidModeError, NonFiniteFieldError
from app.models.fields import CollocationGrid, SpectralField
from app.services.potential import apply_potential, certify_potential
from app.services.spectral import (
    apply_A,
    discrete_l2_sq,
    eigenvalue,
    eigenvalues,
    project,
    sobolev_norm_sq,
    to_physical,
    to_spectral,
)


def test_eigenvalues():
    assert eigenvalue(1) == pytest.approx(np.pi ** 2)
    assert eigenvalue(3) == pytest.approx(9 * np.pi ** 2)
    np.testing.assert_allclose(eigenvalues(4), (np.pi * np.arange(1, 5)) ** 2)
    with pytest.raises(InvalidModeError):
        eigenvalue(0)


def test_field_rejects_bad_input():
    with pytest.raises(NonFiniteFieldError):
        SpectralField(np.array([1.0, np.nan]))
    with pytest.raises(InvalidModeError):
        SpectralField.basis(5, 4)
    with pytest.raises(InvalidModeError):
        SpectralField.zeros(3) + SpectralField.zeros(4)


@pytest.mark.parametrize("fast", [False, True])
def test_transform_inverts(fast):
    rng = np.random.default_rng(3)
    u = SpectralField(rng.normal(size=8))
    grid = CollocationGrid(16, fast=fast)
    back = to_spectral(to_physical(u, grid), grid, n_modes=8)
    np.testing.assert_allclose(back.coeffs, u.coeffs, atol=1e-12)


def test_fast_and_direct_transforms_agree():
    rng = np.random.default_rng(4)
    u = SpectralField(rng.normal(size=12))
    direct = to_physical(u, CollocationGrid(24))
    fast = to_physical(u, CollocationGrid(24, fast=True))
    np.testing.assert_allclose(fast, direct, atol=1e-12)


def test_basis_values():
    grid = CollocationGrid(7)
    values = to_physical(SpectralField.basis(2, 4), grid)
    np.testing.assert_allclose(values, np.sqrt(2) * np.sin(2 * np.pi * grid.nodes), atol=1e-14)


def test_discrete_parseval():
    rng = np.random.default_rng(5)
    u = SpectralField(rng.normal(size=6))
    grid = CollocationGrid(12)
    assert discrete_l2_sq(to_physical(u, grid), grid) == pytest.approx(sobolev_norm_sq(u, 0.0))


def test_too_few_nodes_is_aliasing():
    with pytest.raises(AliasingError):
        to_physical(SpectralField.zeros(8), CollocationGrid(4))
    with pytest.raises(AliasingError):
        to_spectral(np.zeros(5), CollocationGrid(4))


def test_sobolev_norms_and_A():
    u = SpectralField.basis(2, 3)
    assert sobolev_norm_sq(u, 1.0) == pytest.approx(eigenvalue(2))
    assert sobolev_norm_sq(u, 2.0) == pytest.approx(eigenvalue(2) ** 2)
    np.testing.assert_allclose(apply_A(u).coeffs, [0.0, eigenvalue(2), 0.0])


def test_project():
    u = SpectralField(np.arange(1.0, 6.0))
    np.testing.assert_array_equal(project(u, 2).coeffs, [1.0, 2.0, 0.0, 0.0, 0.0])
    assert project(u, 10) is u
    with pytest.raises(InvalidModeError):
        project(u, 0)


def test_dealiased_cubic_matches_fine_grid():
    spec = certify_potential([0.0, 1.0, 0.0, -1.0])
    rng = np.random.default_rng(6)
    u = SpectralField(0.5 * rng.normal(size=8))
    dealiased = apply_potential(u, spec, CollocationGrid(16))
    fine = apply_potential(u, spec, CollocationGrid(128))
    np.testing.assert_allclose(dealiased.coeffs, fine.coeffs, atol=1e-10)


def test_undersized_collocation_rejected():
    spec = certify_potential([0.0, 1.0, 0.0, -1.0])
    with pytest.raises(AliasingError):
        apply_potential(SpectralField.zeros(8), spec, CollocationGrid(12))
