import logging
from typing import Union

import numpy as np
from scipy.fft import dst

from ..core.exceptions import AliasingError, InvalidModeError
from ..models.fields import CollocationGrid, SpectralField

logger = logging.getLogger(__name__)


def eigenvalue(k: int) -> float:
    """
    alpha_k = (k pi)^2, eigenvalue of the Dirichlet Laplacian on (0, 1)
    """
    if k < 1:
        raise InvalidModeError(f"Mode index must be >= 1, got {k}")
    return float((k * np.pi) ** 2)


def eigenvalues(n_modes: int) -> np.ndarray:
    if n_modes < 1:
        raise InvalidModeError(f"Mode count must be >= 1, got {n_modes}")
    return (np.pi * np.arange(1, n_modes + 1, dtype=float)) ** 2


def sobolev_weights(n_modes: int, r: float) -> np.ndarray:
    return eigenvalues(n_modes) ** r


def sobolev_norm_sq(u: Union[SpectralField, np.ndarray], r: float = 0.0) -> float:
    coeffs = u.coeffs if isinstance(u, SpectralField) else np.asarray(u, dtype=float)
    return float(np.sum(sobolev_weights(coeffs.size, r) * coeffs ** 2))


def project(u: SpectralField, n: int) -> SpectralField:
    """
    P_n: keep modes k <= n, zero the rest
    """
    if n < 1:
        raise InvalidModeError(f"Projection order must be >= 1, got {n}")
    if n >= u.n_modes:
        return u
    coeffs = u.coeffs.copy()
    coeffs[n:] = 0.0
    return SpectralField(coeffs)


def apply_A(u: SpectralField) -> SpectralField:
    return SpectralField(eigenvalues(u.n_modes) * u.coeffs)


def _check_resolution(n_modes: int, grid: CollocationGrid) -> None:
    if grid.n_points < n_modes:
        raise AliasingError(
            f"Collocation grid of {grid.n_points} nodes cannot resolve {n_modes} modes"
        )


def to_physical(u: SpectralField, grid: CollocationGrid) -> np.ndarray:
    """
    u(x_j) = sum_k u_k sqrt(2) sin(k pi x_j) on the collocation nodes
    """
    _check_resolution(u.n_modes, grid)
    if grid.fast:
        padded = np.zeros(grid.n_points)
        padded[: u.n_modes] = u.coeffs
        # DST-I: y_j = 2 sum_k c_k sin(pi k j / (M + 1))
        return dst(padded, type=1) / np.sqrt(2.0)
    return grid.sine_matrix(u.n_modes) @ u.coeffs


def to_spectral(
    values: np.ndarray, grid: CollocationGrid, n_modes: int = None
) -> SpectralField:
    """
    Exact discrete inverse of to_physical, truncated to n_modes
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_points,):
        raise AliasingError(
            f"Expected {grid.n_points} nodal values, got shape {values.shape}"
        )
    n_modes = grid.n_points if n_modes is None else n_modes
    _check_resolution(n_modes, grid)
    if grid.fast:
        coeffs = dst(values, type=1) / (np.sqrt(2.0) * (grid.n_points + 1))
        return SpectralField(coeffs[:n_modes])
    return SpectralField(grid.sine_matrix(n_modes).T @ values / (grid.n_points + 1))


def discrete_l2_sq(values: np.ndarray, grid: CollocationGrid) -> float:
    """
    Discrete Parseval: equals sobolev_norm_sq(u, 0) when M >= N
    """
    return float(np.sum(np.asarray(values) ** 2) / (grid.n_points + 1))
