import logging
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad
from scipy.optimize import brentq

from ..core.config import (
    CLOSED_FORM_TOL,
    DEFAULT_FIRST_SPACING,
    DEFAULT_QUAD_TOL,
    DEFAULT_TAIL_SAMPLES,
    MAX_GRID_RATIO,
    MIN_GRID_NODES,
    TABULATED_SLACK,
)
from ..core.exceptions import (
    DomainError,
    GridMismatchError,
    InfeasibleGridError,
    KernelAssumptionError,
    KernelFileError,
)
from ..models.history import HistoryField
from ..models.kernel import KernelSpec, SGrid
from ..schemas.reports import CheckReport
from .spectral import eigenvalues

logger = logging.getLogger(__name__)


def validate_M_delta(kernel: KernelSpec, grid: SGrid) -> CheckReport:
    """
    Check mu > 0 and mu' + delta mu <= 0 on the grid.

    Exponential kernels use the closed-form derivative. Tabulated kernels are
    log-linear between table entries, so the check runs on one-sided slopes
    of log mu over each table interval that meets [0, s_max].
    """
    mu = kernel.mu(grid.nodes)
    bad = np.flatnonzero(~(mu > 0))
    if bad.size:
        j = int(bad[0])
        return CheckReport(
            name="kernel-class",
            anchor="M1",
            passed=False,
            worst_margin=float("inf"),
            offending={"node": j, "s": float(grid.nodes[j]), "reason": "mu not positive"},
        )

    if kernel.family == "exponential":
        margins = kernel.mu_prime(grid.nodes) + kernel.delta * mu
        tol = CLOSED_FORM_TOL
        s_at = grid.nodes
    else:
        s, table = kernel.table_s, kernel.table_mu
        if np.any(table <= 0):
            j = int(np.flatnonzero(table <= 0)[0])
            return CheckReport(
                name="kernel-class",
                anchor="M1",
                passed=False,
                worst_margin=float("inf"),
                offending={"node": j, "s": float(s[j]), "reason": "table mu not positive"},
            )
        slopes = np.diff(np.log(table)) / np.diff(s)
        in_range = s[:-1] <= grid.s_max
        left = table[:-1]
        margins = np.where(in_range, left * (slopes + kernel.delta), -np.inf)
        tol = TABULATED_SLACK
        s_at = s[:-1]

    worst = int(np.argmax(margins))
    worst_margin = float(margins[worst])
    passed = worst_margin <= tol
    report = CheckReport(
        name="kernel-class",
        anchor="M1",
        passed=passed,
        worst_margin=worst_margin,
        details={"family": kernel.family, "delta": kernel.delta, "tolerance": tol},
    )
    if not passed:
        report.offending = {"node": worst, "s": float(s_at[worst]), "margin": worst_margin}
    return report


def require_M_delta(kernel: KernelSpec, grid: SGrid) -> CheckReport:
    report = validate_M_delta(kernel, grid)
    if not report.passed:
        off = report.offending or {}
        raise KernelAssumptionError(
            f"Kernel violates mu' + delta mu <= 0 (delta = {kernel.delta}): {off}",
            node=off.get("node"),
            s=off.get("s"),
        )
    return report


def _derivative(K: Callable[[np.ndarray], np.ndarray], s: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """
    Central differences, second-order one-sided at s = 0
    """
    out = (K(s + h) - K(s - h)) / (2.0 * h)
    at_zero = s < h
    if np.any(at_zero):
        s0 = s[at_zero]
        out[at_zero] = (-3.0 * K(s0) + 4.0 * K(s0 + h) - K(s0 + 2.0 * h)) / (2.0 * h)
    return out


def mu_from_K(
    K: Union[Callable[[np.ndarray], np.ndarray], np.ndarray],
    grid: SGrid,
    delta: Optional[float] = None,
    dK: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> KernelSpec:
    """
    mu = -K' sampled on the s-grid, returned as a tabulated kernel.

    K may be a callable (differentiated numerically unless dK is given) or
    an array of values on grid.nodes. When delta is None the largest rate
    the sampled mu supports is used.
    """
    s = grid.nodes
    if dK is not None:
        mu = -np.asarray(dK(s), dtype=float)
    elif callable(K):
        mu = -_derivative(lambda x: np.asarray(K(x), dtype=float), s.copy())
    else:
        values = np.asarray(K, dtype=float)
        if values.shape != s.shape:
            raise GridMismatchError("Tabulated K must have one value per s-grid node")
        mu = -np.gradient(values, s)

    bad = np.flatnonzero(~(mu > 0))
    if bad.size:
        j = int(bad[0])
        raise KernelAssumptionError(
            f"mu = -K' is not positive at s = {s[j]:.6g}; K must be strictly decreasing",
            node=j,
            s=float(s[j]),
        )

    if delta is None:
        delta = float(np.min(-np.diff(np.log(mu)) / np.diff(s)))
        if delta <= 0:
            raise KernelAssumptionError("Sampled mu does not decay; no delta > 0 fits", node=None)
    return KernelSpec(delta=delta, family="tabulated", table_s=s.copy(), table_mu=mu)


def _check_pair(eta1: HistoryField, eta2: HistoryField) -> None:
    if not eta1.grid.is_same(eta2.grid) or eta1.n_modes != eta2.n_modes:
        raise GridMismatchError("Histories live on different grids or mode counts")


def weighted_inner(eta1: HistoryField, eta2: HistoryField, beta: float = 0.0) -> float:
    """
    <eta1, eta2>_{M^beta} = sum_j w_j mu(s_j) sum_k alpha_k^(1 + beta) eta1_k(s_j) eta2_k(s_j)
    """
    _check_pair(eta1, eta2)
    weights = eta1.grid.weights * eta1.kernel.mu(eta1.grid.nodes)
    alpha = eigenvalues(eta1.n_modes) ** (1.0 + beta)
    return float(alpha @ (eta1.coeffs * eta2.coeffs) @ weights)


def M_norm_sq(eta: HistoryField, beta: float = 0.0) -> float:
    return weighted_inner(eta, eta, beta)


def _energy_density(eta: HistoryField) -> np.ndarray:
    """
    mu(s_j) ||A^{1/2} eta(s_j)||^2 at every node
    """
    alpha = eigenvalues(eta.n_modes)
    return eta.kernel.mu(eta.grid.nodes) * (alpha @ eta.coeffs ** 2)


def _integral_to(nodes: np.ndarray, f: np.ndarray, cum: np.ndarray, x: float) -> float:
    """
    int_0^x of the piecewise-linear interpolant of f
    """
    if x <= nodes[0]:
        return 0.0
    if x >= nodes[-1]:
        return float(cum[-1])
    i = int(np.searchsorted(nodes, x, side="right")) - 1
    h = nodes[i + 1] - nodes[i]
    d = x - nodes[i]
    return float(cum[i] + f[i] * d + (f[i + 1] - f[i]) * d * d / (2.0 * h))


def tail_function(eta: HistoryField, r: float) -> float:
    """
    int over (0, 1/r) and (r, s_max) of mu(s) ||A^{1/2} eta(s)||^2 ds
    """
    if r < 1:
        raise DomainError(f"Tail function needs r >= 1, got {r}")
    nodes = eta.grid.nodes
    f = _energy_density(eta)
    cum = cumulative_trapezoid(f, nodes, initial=0.0)
    inner = _integral_to(nodes, f, cum, 1.0 / r)
    outer = float(cum[-1]) - _integral_to(nodes, f, cum, r)
    return inner + outer


def default_r_samples(grid: SGrid, n: int = DEFAULT_TAIL_SAMPLES) -> np.ndarray:
    return np.geomspace(1.0, grid.s_max, n)


def tail_sup(eta: HistoryField, r_samples: Optional[Iterable[float]] = None) -> float:
    """
    max over sampled r of r * tail_function(eta, r); under-approximates the sup over r >= 1
    """
    rs = default_r_samples(eta.grid) if r_samples is None else np.asarray(list(r_samples), dtype=float)
    nodes = eta.grid.nodes
    f = _energy_density(eta)
    cum = cumulative_trapezoid(f, nodes, initial=0.0)
    total = float(cum[-1])
    best = 0.0
    for r in rs:
        if r < 1:
            raise DomainError(f"Tail samples need r >= 1, got {r}")
        value = _integral_to(nodes, f, cum, 1.0 / r) + total - _integral_to(nodes, f, cum, r)
        best = max(best, r * value)
    return best


def transport_norm_sq(eta: HistoryField) -> float:
    """
    ||T_mu eta||^2_{M^0} with the upwind derivative
    """
    derivative = HistoryField(-eta.grid.upwind_derivative(eta.coeffs), eta.grid, eta.kernel)
    return M_norm_sq(derivative, 0.0)


def E_beta_norm_sq(
    eta: HistoryField, beta: float = 0.0, r_samples: Optional[Iterable[float]] = None
) -> float:
    return M_norm_sq(eta, beta) + transport_norm_sq(eta) + tail_sup(eta, r_samples)


def _geometric_nodes(first: float, ratio: float, n_intervals: int) -> np.ndarray:
    if ratio == 1.0:
        return first * np.arange(n_intervals + 1, dtype=float)
    i = np.arange(n_intervals + 1, dtype=float)
    return first * (ratio ** i - 1.0) / (ratio - 1.0)


def trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    h = np.diff(nodes)
    weights = np.zeros_like(nodes)
    weights[:-1] += h / 2.0
    weights[1:] += h / 2.0
    return weights


def build_sgrid(
    delta: float,
    J: int,
    tail_tol: float,
    mu0: float = 1.0,
    first_spacing: float = DEFAULT_FIRST_SPACING,
    kernel: Optional[KernelSpec] = None,
    quad_tol: float = DEFAULT_QUAD_TOL,
) -> SGrid:
    """
    Geometric s-grid with s_0 = 0, s_1 = first_spacing, truncated at
    s_max = ln(mu0 / (delta tail_tol)) / delta so that the analytic tail
    mu0 e^{-delta s_max} / delta equals tail_tol.
    """
    if delta <= 0 or tail_tol <= 0 or mu0 <= 0:
        raise DomainError("build_sgrid needs delta, tail_tol and mu0 positive")
    if J < MIN_GRID_NODES:
        raise InfeasibleGridError(
            f"{J} nodes cannot resolve the memory horizon; use J >= {MIN_GRID_NODES}"
        )
    s_max = float(np.log(mu0 / (delta * tail_tol)) / delta)
    if s_max <= 0:
        raise DomainError(f"tail_tol {tail_tol} is already met at s = 0; nothing to discretize")

    n_intervals = J - 1
    if n_intervals * first_spacing >= s_max:
        ratio = 1.0
        first = s_max / n_intervals
    else:
        def span(q: float) -> float:
            return first_spacing * (q ** n_intervals - 1.0) / (q - 1.0) - s_max

        if span(MAX_GRID_RATIO) < 0:
            raise InfeasibleGridError(
                f"J = {J} nodes cannot reach s_max = {s_max:.4g} with ratio <= {MAX_GRID_RATIO}; "
                "increase J or tail_tol"
            )
        ratio = float(brentq(span, 1.0 + 1e-12, MAX_GRID_RATIO, xtol=1e-14))
        first = first_spacing

    nodes = _geometric_nodes(first, ratio, n_intervals)
    nodes[-1] = s_max
    weights = trapezoid_weights(nodes)

    kernel = kernel or KernelSpec(delta=delta, mu0=mu0)
    tail = kernel.mu0 * np.exp(-delta * s_max) / delta
    if tail > tail_tol * (1.0 + 1e-9):
        raise InfeasibleGridError(f"Tail bound {tail:.3g} exceeds tolerance {tail_tol:.3g}")

    approx = float(weights @ kernel.mu(nodes))
    if kernel.family == "exponential":
        exact = kernel.mu0 / kernel.rate * (1.0 - np.exp(-kernel.rate * s_max))
    else:
        inside = (kernel.table_s > 0) & (kernel.table_s < s_max)
        exact, _ = quad(kernel.mu, 0.0, s_max, points=kernel.table_s[inside][:50], limit=500)
    error = abs(approx - exact) / abs(exact)
    if error > quad_tol:
        raise InfeasibleGridError(
            f"Quadrature of mu misses by {error:.2e} (> {quad_tol:.1e}); increase J"
        )

    logger.debug("s-grid: J=%d s_max=%.4f ratio=%.5f quad_err=%.2e", J, s_max, ratio, error)
    return SGrid(
        nodes=nodes,
        weights=weights,
        s_max=s_max,
        ratio=ratio,
        tail_tol=tail_tol,
        quad_tol=error,
    )


def load_tabulated_kernel(path: Union[str, Path], delta: float) -> KernelSpec:
    """
    Two whitespace-delimited columns (s, mu(s)) with strictly increasing s
    """
    path = Path(path)
    try:
        table = np.loadtxt(path, ndmin=2)
    except (OSError, ValueError) as exc:
        raise KernelFileError(f"Cannot read kernel table {path}: {exc}") from exc
    if table.shape[1] != 2:
        raise KernelFileError(f"Kernel table {path} must have exactly two columns")
    s, mu = table[:, 0], table[:, 1]
    if np.any(np.diff(s) <= 0):
        raise KernelFileError(f"Kernel table {path}: s column is not strictly increasing")
    logger.info("Loaded tabulated kernel from %s (%d rows)", path, s.size)
    return KernelSpec(delta=delta, family="tabulated", table_s=s, table_mu=mu)
