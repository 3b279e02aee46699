import logging
from typing import Dict, Optional

import numpy as np

from ..models.fields import SpectralField
from ..models.history import HistoryField
from ..models.state import ExtendedState, SystemModel
from ..schemas.reports import FunctionalReport
from .history import apply_Tmu
from .kernel import M_norm_sq, tail_sup, weighted_inner
from .spectral import sobolev_norm_sq, to_physical

logger = logging.getLogger(__name__)


def psi(state: ExtendedState, model: SystemModel, m: int = 0) -> float:
    """
    Psi_m(U) = 1/2 ||u||^2_{H^m} + (1 - kappa)/2 ||eta||^2_{M^m}
    """
    energy = 0.5 * sobolev_norm_sq(state.u, m)
    if model.kappa < 1.0:
        energy += 0.5 * (1.0 - model.kappa) * M_norm_sq(state.history(model), m)
    return energy


def hilbert_norm_sq(state: ExtendedState, model: SystemModel, m: int = 0) -> float:
    """
    ||U||^2 = ||u||^2_{H^m} + ||eta||^2_{M^m}
    """
    return sobolev_norm_sq(state.u, m) + M_norm_sq(state.history(model), m)


def nonlinear_power(u: SpectralField, model: SystemModel) -> float:
    """
    <phi(u), u> by collocation quadrature, exact on a dealiased grid
    """
    if model.potential.is_zero:
        return 0.0
    values = to_physical(u, model.collocation)
    return float(np.sum(model.potential(values) * values) / (model.collocation.n_points + 1))


def generator_psi0(state: ExtendedState, model: SystemModel) -> float:
    """
    L Psi0 = -kappa ||A^{1/2} u||^2 + (1 - kappa) <T_mu eta, eta>_{M^0}
             + <phi(u), u> + 1/2 Tr(QQ*)
    """
    kappa = model.kappa
    value = -kappa * sobolev_norm_sq(state.u, 1.0)
    if kappa < 1.0:
        eta = state.history(model)
        value += (1.0 - kappa) * weighted_inner(apply_Tmu(eta), eta, 0.0)
    value += nonlinear_power(state.u, model)
    value += 0.5 * model.noise_trace
    return value


def exp_beta(model: SystemModel) -> Optional[float]:
    """
    beta = kappa alpha_1 / (2 Tr(QQ*)), half the admissible threshold; None without noise
    """
    trace = model.noise_trace
    if trace == 0.0:
        return None
    return 0.5 * model.kappa * float(model.alpha[0]) / trace


def decay_constants(model: SystemModel) -> Dict[str, float]:
    """
    c0 = min(2 kappa alpha_1, (1 - kappa) delta) and C0 = (a3 |O| + Tr(QQ*)/2) / c0, |O| = 1
    """
    kappa, alpha1, delta = model.kappa, float(model.alpha[0]), model.kernel.delta
    if kappa < 1.0:
        c0 = min(2.0 * kappa * alpha1, (1.0 - kappa) * delta)
    else:
        c0 = 2.0 * kappa * alpha1
    C0 = (model.potential.a3 + 0.5 * model.noise_trace) / c0
    return {"c0": c0, "C0": C0}


def nudging_rate(model: SystemModel, n_hat: int) -> float:
    """
    min(2 (kappa alpha_nhat - a_phi), delta)
    """
    alpha_hat = float((n_hat * np.pi) ** 2)
    return min(2.0 * (model.kappa * alpha_hat - model.potential.a_phi), model.kernel.delta)


def record_row(state: ExtendedState, model: SystemModel) -> Dict[str, float]:
    """
    One row of a trajectory record
    """
    kappa = model.kappa
    u = state.u
    eta: HistoryField = state.history(model)
    eta_m = [M_norm_sq(eta, float(m)) for m in range(3)]
    transport = apply_Tmu(eta)
    transport_sq = M_norm_sq(transport, 0.0)
    h = [sobolev_norm_sq(u, float(m)) for m in range(3)]
    weight = 0.5 * (1.0 - kappa)

    generator = -kappa * h[1] + nonlinear_power(u, model) + 0.5 * model.noise_trace
    if kappa < 1.0:
        generator += (1.0 - kappa) * weighted_inner(transport, eta, 0.0)

    return {
        "t": state.t,
        "Psi0": 0.5 * h[0] + weight * eta_m[0],
        "Psi1": 0.5 * h[1] + weight * eta_m[1],
        "Psi2": 0.5 * h[2] + weight * eta_m[2],
        "H0_norm_sq": h[0],
        "H1_norm_sq": h[1],
        "eta_M0_sq": eta_m[0],
        "Teta_M0_sq": transport_sq,
        "tail_sup": tail_sup(eta),
        "LPsi0": generator,
    }


def functional_report(state: ExtendedState, model: SystemModel, m_max: int = 2) -> FunctionalReport:
    psis = [psi(state, model, m) for m in range(m_max + 1)]
    beta = exp_beta(model)
    return FunctionalReport(
        t=state.t,
        psi=psis,
        exp_moment=None if beta is None else float(np.exp(beta * psis[0])),
        generator_value=generator_psi0(state, model),
    )
