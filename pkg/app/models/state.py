from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from ..services.spectral import eigenvalues
from .fields import CollocationGrid, SpectralField
from .history import HistoryField, PastPath
from .kernel import KernelSpec, SGrid
from .potential import NoiseSpec, PotentialSpec


@dataclass(frozen=True, eq=False)
class SystemModel:
    """
    Everything the right-hand side of the truncated extended system needs
    """

    kernel: KernelSpec
    grid: SGrid
    potential: PotentialSpec
    noise: NoiseSpec
    collocation: CollocationGrid
    kappa: float
    n_modes: int

    @cached_property
    def alpha(self) -> np.ndarray:
        return eigenvalues(self.n_modes)

    @cached_property
    def mu_weights(self) -> np.ndarray:
        """
        w_j mu(s_j), the kernel-weighted quadrature weights
        """
        return self.grid.weights * self.kernel.mu(self.grid.nodes)

    @cached_property
    def q(self) -> np.ndarray:
        return self.noise.amplitudes(self.n_modes)

    @property
    def noise_trace(self) -> float:
        """
        Tr(QQ*) over the simulated modes
        """
        return float(np.sum(self.q ** 2))


@dataclass(frozen=True, eq=False)
class ExtendedState:
    """
    U = (u, eta) at time t. eta is a HistoryField for the grid-transport
    backend or the trajectory's PastPath for the ring-buffer backend.
    """

    u: SpectralField
    eta: Union[HistoryField, PastPath]
    t: float = 0.0

    def eta_matrix(self, grid: SGrid) -> np.ndarray:
        if isinstance(self.eta, HistoryField):
            return self.eta.coeffs
        return self.eta.history_matrix(grid.nodes, self.t)

    def history(self, model: SystemModel) -> HistoryField:
        if isinstance(self.eta, HistoryField):
            return self.eta
        return HistoryField(self.eta_matrix(model.grid), model.grid, model.kernel)
