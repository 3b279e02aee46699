"""
Closed-form and brute-force references. Nothing here calls the engine's
spectral, kernel or history numerics.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm

from ..core.exceptions import OracleRefusalError
from ..models.kernel import KernelSpec
from ..models.potential import NoiseSpec, PotentialSpec

logger = logging.getLogger(__name__)


def _alpha(k) -> np.ndarray:
    return (np.pi * np.asarray(k, dtype=float)) ** 2


@dataclass(frozen=True)
class PronySystem:
    """
    Per-mode linear systems for (u_k, m_k) with m_k = int mu(s) eta_k(s) ds:

        du_k/dt = -kappa alpha_k u_k - (1 - kappa) alpha_k m_k
        dm_k/dt = (mu0 / rate) u_k - rate m_k

    exact only for mu(s) = mu0 exp(-rate s)
    """

    matrices: np.ndarray
    kappa: float
    mu0: float
    rate: float

    @classmethod
    def build(cls, n_modes: int, kappa: float, kernel: KernelSpec) -> "PronySystem":
        if kernel.family != "exponential":
            raise OracleRefusalError("The Prony reduction needs an exactly exponential kernel")
        alpha = _alpha(np.arange(1, n_modes + 1))
        mats = np.zeros((n_modes, 2, 2))
        mats[:, 0, 0] = -kappa * alpha
        mats[:, 0, 1] = -(1.0 - kappa) * alpha
        mats[:, 1, 0] = kernel.mu0 / kernel.rate
        mats[:, 1, 1] = -kernel.rate
        return cls(matrices=mats, kappa=kappa, mu0=kernel.mu0, rate=kernel.rate)

    @property
    def n_modes(self) -> int:
        return self.matrices.shape[0]

    def eigenvalues(self, k: int) -> np.ndarray:
        return np.linalg.eigvals(self.matrices[k - 1])


def prony_solve(
    u0: np.ndarray,
    times: np.ndarray,
    kappa: float,
    kernel: KernelSpec,
    m0: Optional[np.ndarray] = None,
    potential: Optional[PotentialSpec] = None,
    noise: Optional[NoiseSpec] = None,
) -> np.ndarray:
    """
    u_k(t) for every requested time by the matrix exponential of each 2x2
    system; returns shape (len(times), n_modes)
    """
    if potential is not None and not potential.is_zero:
        raise OracleRefusalError("The Prony oracle only covers phi = 0")
    if noise is not None and not noise.is_zero:
        raise OracleRefusalError("The Prony oracle only covers the deterministic system")
    u0 = np.asarray(u0, dtype=float)
    system = PronySystem.build(u0.size, kappa, kernel)
    m0 = np.zeros_like(u0) if m0 is None else np.asarray(m0, dtype=float)
    times = np.asarray(times, dtype=float)

    out = np.zeros((times.size, u0.size))
    for k in range(u0.size):
        if u0[k] == 0.0 and m0[k] == 0.0:
            continue
        x0 = np.array([u0[k], m0[k]])
        mat = system.matrices[k]
        for i, t in enumerate(times):
            out[i, k] = (expm(mat * t) @ x0)[0]
    return out


def ou_stationary_variance(k: int, q: float, kappa: float) -> float:
    """
    q^2 / (2 kappa alpha_k)
    """
    return float(q ** 2 / (2.0 * kappa * _alpha(k)))


def ou_discrete_variance(k: int, q: float, kappa: float, dt: float) -> float:
    """
    Stationary variance of the semi-implicit chain: q^2 / (2 kappa alpha_k + dt (kappa alpha_k)^2)
    """
    a = kappa * float(_alpha(k))
    return float(q ** 2 / (2.0 * a + dt * a * a))


def ou_psi0_mean(t: float, u0: float, q: float, kappa: float, k: int = 1) -> float:
    """
    E Psi0 for the scalar OU mode started at u0
    """
    a = kappa * float(_alpha(k))
    decay = np.exp(-2.0 * a * t)
    return float(0.5 * (u0 ** 2 * decay + q ** 2 * (1.0 - decay) / (2.0 * a)))


def fine_quadrature(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    production_nodes: int = 256,
    refinement: int = 4,
) -> float:
    """
    Uniform trapezoid with refinement * production_nodes * 64 intervals,
    improved by one Richardson step against half that resolution
    """
    n = refinement * production_nodes * 64
    fine_x = np.linspace(a, b, n + 1)
    fine_y = f(fine_x)
    fine = np.trapezoid(fine_y, fine_x)
    coarse = np.trapezoid(fine_y[::2], fine_x[::2])
    return float((4.0 * fine - coarse) / 3.0)
