import logging
from typing import Callable, Optional

import numpy as np

from ..core.config import ROUGH_HISTORY_THRESHOLD
from ..core.exceptions import CFLViolationError, InvalidGridError, InvalidModeError
from ..models.fields import SpectralField
from ..models.history import HistoryField, PastPath
from ..models.kernel import KernelSpec, SGrid
from ..schemas.reports import CheckReport
from .kernel import M_norm_sq, mu_from_K, transport_norm_sq, weighted_inner
from .spectral import eigenvalues

logger = logging.getLogger(__name__)


def apply_Tmu(eta: HistoryField) -> HistoryField:
    """
    T_mu eta = -d eta / ds, upwind from the smaller-s neighbour
    """
    if eta.grid.size < 2:
        raise InvalidGridError("Transport generator needs at least two s-nodes")
    return HistoryField(-eta.grid.upwind_derivative(eta.coeffs), eta.grid, eta.kernel)


def dissipativity_margin(eta: HistoryField) -> float:
    """
    <T_mu eta, eta>_{M^0} + (delta / 2) ||eta||^2_{M^0}; non-positive up to quadrature error
    """
    return weighted_inner(apply_Tmu(eta), eta, 0.0) + 0.5 * eta.kernel.delta * M_norm_sq(eta, 0.0)


def check_history_regularity(eta: HistoryField) -> CheckReport:
    """
    Flag (never reject) histories whose discrete d/ds norm is huge
    """
    norm = transport_norm_sq(eta)
    rough = norm > ROUGH_HISTORY_THRESHOLD
    if rough:
        logger.warning("History has discrete d/ds norm %.3g > %.1e", norm, ROUGH_HISTORY_THRESHOLD)
    return CheckReport(
        name="history-regularity",
        anchor="transport-domain",
        passed=True,
        worst_margin=norm,
        details={"rough": rough, "threshold": ROUGH_HISTORY_THRESHOLD},
    )


def cfl_limit(grid: SGrid) -> float:
    return grid.min_spacing


def evolve_history(eta: HistoryField, u: SpectralField, dt: float) -> HistoryField:
    """
    One explicit upwind step of d_t eta = T_mu eta + u, then eta(0) = 0
    """
    if u.n_modes != eta.n_modes:
        raise InvalidModeError("History and field have different mode counts")
    limit = cfl_limit(eta.grid)
    if dt <= 0 or dt > limit * (1.0 + 1e-9):
        j = int(np.argmin(eta.grid.spacings))
        raise CFLViolationError(
            f"dt = {dt:g} exceeds the smallest s-spacing {limit:.6g} "
            f"(between nodes {j} and {j + 1})",
            spacing=limit,
        )
    coeffs = eta.coeffs
    new = np.empty_like(coeffs)
    courant = dt / eta.grid.spacings
    new[:, 1:] = coeffs[:, 1:] - courant * (coeffs[:, 1:] - coeffs[:, :-1]) + dt * u.coeffs[:, None]
    new[:, 0] = 0.0
    return HistoryField(new, eta.grid, eta.kernel)


def representation_eta(path: PastPath, t: float, s: float) -> SpectralField:
    """
    eta(t, s) = int_0^s u(t - r) dr, continued by eta0(s - t) + int_0^t u for s > t
    """
    return SpectralField(path.history_matrix(np.array([s]), t)[:, 0])


def memory_integral(eta: HistoryField) -> SpectralField:
    """
    int mu(s) A eta(s) ds by the s-grid quadrature
    """
    weights = eta.grid.weights * eta.kernel.mu(eta.grid.nodes)
    return SpectralField(eigenvalues(eta.n_modes) * (eta.coeffs @ weights))


def project_history(eta: HistoryField, n: int) -> HistoryField:
    """
    P_n applied to eta(s) at every memory age
    """
    if n < 1:
        raise InvalidModeError(f"Projection order must be >= 1, got {n}")
    coeffs = eta.coeffs.copy()
    coeffs[n:, :] = 0.0
    return HistoryField(coeffs, eta.grid, eta.kernel)


def check_integration_by_parts(
    path: PastPath,
    K: Callable[[np.ndarray], np.ndarray],
    t: float,
    grid: SGrid,
    kernel: Optional[KernelSpec] = None,
) -> float:
    """
    Relative discrepancy between int K(s) Delta u(t - s) ds and
    int mu(s) Delta eta(t, s) ds with mu = -K'. Both sides are integrated
    over [0, s_max] on the s-grid; returns 0 when both vanish.
    """
    s = grid.nodes
    alpha = eigenvalues(path.n_modes)
    kernel = kernel or mu_from_K(K, grid)

    u_past = path.u_at(t - s)
    lhs = -alpha * (u_past @ (grid.weights * np.asarray(K(s), dtype=float)))

    eta = path.history_matrix(s, t)
    rhs = -alpha * (eta @ (grid.weights * kernel.mu(s)))

    scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(lhs - rhs) / scale)
