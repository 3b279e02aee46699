from typing import Optional, Sequence

import numpy as np
import pytest

from app.models.fields import CollocationGrid
from app.models.history import HistoryField
from app.models.kernel import KernelSpec
from app.models.potential import NoiseSpec
from app.models.state import SystemModel
from app.schemas.config import StepperConfig
from app.services.kernel import build_sgrid
from app.services.potential import certify_potential, dealiased_size

ALLEN_CAHN = (0.0, 1.0, 0.0, -1.0)
LINEAR_ZERO = (0.0,)


def make_model(
    potential: Sequence[float] = ALLEN_CAHN,
    noise: Optional[NoiseSpec] = None,
    kappa: float = 0.5,
    n_modes: int = 8,
    n_nodes: int = 256,
    delta: float = 1.0,
) -> SystemModel:
    kernel = KernelSpec(delta=delta)
    grid = build_sgrid(delta, n_nodes, 1e-8, kernel=kernel)
    spec = certify_potential(potential)
    return SystemModel(
        kernel=kernel,
        grid=grid,
        potential=spec,
        noise=noise if noise is not None else NoiseSpec.zero(n_modes),
        collocation=CollocationGrid(dealiased_size(spec.p0, n_modes)),
        kappa=kappa,
        n_modes=n_modes,
    )


def make_stepper(model: SystemModel, dt: float = 1e-3, stride: int = 1, backend: str = "ring-buffer"):
    return StepperConfig(
        dt=dt, kappa=model.kappa, n_modes=model.n_modes, backend=backend, record_stride=stride
    )


@pytest.fixture
def kernel():
    return KernelSpec(delta=1.0)


@pytest.fixture
def sgrid(kernel):
    return build_sgrid(1.0, 256, 1e-8, kernel=kernel)


@pytest.fixture
def allen_cahn_model():
    return make_model()


@pytest.fixture
def ou_model():
    """
    kappa = 1, phi = 0, q_1 = 1: u_1 is an OU process
    """
    return make_model(LINEAR_ZERO, NoiseSpec.diagonal([1.0]), kappa=1.0, n_modes=2)


@pytest.fixture
def equality_history(sgrid, kernel):
    """
    eta(s) = (1 - e^{-s}) e_1
    """
    return HistoryField.from_profile(lambda s: 1.0 - np.exp(-s), np.array([1.0, 0.0]), sgrid, kernel)
