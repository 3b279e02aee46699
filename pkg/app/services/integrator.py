import logging
from typing import Any, Callable, Dict, List, Mapping, Optional, Union

import numpy as np
from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits
from tqdm import tqdm

from ..core.config import BLOWUP_THRESHOLD
from ..core.exceptions import BlowUpError, ControlConfigurationError, InvalidModeError
from ..models.fields import SpectralField
from ..models.history import HistoryField, PastPath
from ..models.records import PAIR_COLUMNS, TRAJECTORY_COLUMNS, PairedRecord, TrajectoryRecord
from ..models.state import ExtendedState, SystemModel
from ..schemas.config import ControlConfig, StepperConfig
from .history import evolve_history
from .kernel import M_norm_sq
from .lyapunov import nudging_rate, record_row
from .noise import NoiseStream, sample_noise_increment
from .potential import apply_potential
from .spectral import sobolev_norm_sq

logger = logging.getLogger(__name__)

Monitor = Callable[[ExtendedState], Any]


def _memory_term(state: ExtendedState, model: SystemModel) -> np.ndarray:
    """
    coefficients of int mu(s) A eta(s) ds
    """
    return model.alpha * (state.eta_matrix(model.grid) @ model.mu_weights)


def drift(state: ExtendedState, model: SystemModel, cfg: StepperConfig) -> SpectralField:
    """
    -kappa A u - (1 - kappa) int mu A eta ds + phi(u)
    """
    kappa = cfg.kappa
    value = -kappa * model.alpha * state.u.coeffs
    if kappa < 1.0:
        value = value - (1.0 - kappa) * _memory_term(state, model)
    value = value + apply_potential(state.u, model.potential, model.collocation).coeffs
    return SpectralField(value)


def initial_state(
    model: SystemModel,
    cfg: StepperConfig,
    u0: Optional[SpectralField] = None,
    eta0: Optional[HistoryField] = None,
) -> ExtendedState:
    """
    U0 = (u0, eta0) laid out for the configured history backend
    """
    u0 = u0 if u0 is not None else SpectralField.zeros(model.n_modes)
    if u0.n_modes != model.n_modes:
        raise InvalidModeError(f"u0 has {u0.n_modes} modes, model has {model.n_modes}")
    if cfg.backend == "grid-transport":
        eta = eta0 if eta0 is not None else HistoryField.zeros(model.n_modes, model.grid, model.kernel)
    else:
        eta = PastPath(u0, cfg.dt, model.grid.s_max, eta0)
    return ExtendedState(u=u0, eta=eta, t=0.0)


def _advance(
    state: ExtendedState,
    u_new: np.ndarray,
    dt: float,
) -> ExtendedState:
    if not np.all(np.isfinite(u_new)) or np.linalg.norm(u_new) > BLOWUP_THRESHOLD:
        raise BlowUpError(
            f"||u||_H exceeded {BLOWUP_THRESHOLD:g} at t = {state.t + dt:.6g}",
            last_state=state,
        )
    u = SpectralField(u_new)
    if isinstance(state.eta, HistoryField):
        return ExtendedState(u=u, eta=evolve_history(state.eta, u, dt), t=state.t + dt)
    state.eta.record(u)
    return ExtendedState(u=u, eta=state.eta, t=state.eta.t)


def _explicit_part(state: ExtendedState, model: SystemModel, memory_weight: float) -> np.ndarray:
    value = apply_potential(state.u, model.potential, model.collocation).coeffs
    if memory_weight != 0.0:
        value = value - memory_weight * _memory_term(state, model)
    return value


def step(
    state: ExtendedState,
    dt: float,
    rng: Optional[Union[NoiseStream, np.random.Generator]],
    model: SystemModel,
    cfg: StepperConfig,
    increment: Optional[SpectralField] = None,
) -> ExtendedState:
    """
    Semi-implicit Euler-Maruyama: diffusion implicit, memory and phi explicit.
    A given increment is used as-is; otherwise one is drawn from rng.
    """
    kappa = cfg.kappa
    if increment is None:
        increment = (
            SpectralField.zeros(model.n_modes)
            if rng is None
            else sample_noise_increment(model.q, dt, rng)
        )
    explicit = _explicit_part(state, model, 1.0 - kappa)
    u_new = (state.u.coeffs + dt * explicit + increment.coeffs) / (1.0 + dt * kappa * model.alpha)
    return _advance(state, u_new, dt)


def check_spectral_gap(model: SystemModel, ctrl: ControlConfig) -> float:
    """
    kappa alpha_nhat - a_phi, which must be positive
    """
    if ctrl.n_hat > model.n_modes:
        raise ControlConfigurationError(
            f"n_hat = {ctrl.n_hat} exceeds the simulated {model.n_modes} modes"
        )
    gap = model.kappa * float(model.alpha[ctrl.n_hat - 1]) - model.potential.a_phi
    if gap <= 0:
        raise ControlConfigurationError(
            f"kappa alpha_{ctrl.n_hat} = {model.kappa * model.alpha[ctrl.n_hat - 1]:.6g} "
            f"does not exceed a_phi = {model.potential.a_phi:.6g}; raise n_hat"
        )
    return gap


def step_controlled(
    state_hat: ExtendedState,
    u_reference: SpectralField,
    dt: float,
    shared_increment: SpectralField,
    model: SystemModel,
    cfg: StepperConfig,
    ctrl: ControlConfig,
) -> ExtendedState:
    """
    step() for the nudged copy plus -kappa alpha_nhat P_nhat (u_hat - u) dt.
    With ctrl.weighted False the copy uses the unweighted drift
    -A u_hat - int mu A eta_hat ds.
    """
    check_spectral_gap(model, ctrl)
    kappa = cfg.kappa
    diffusion, memory = (kappa, 1.0 - kappa) if ctrl.weighted else (1.0, 1.0)

    n_hat = ctrl.n_hat
    control = np.zeros(model.n_modes)
    control[:n_hat] = (
        -kappa * model.alpha[n_hat - 1] * (state_hat.u.coeffs[:n_hat] - u_reference.coeffs[:n_hat])
    )
    explicit = _explicit_part(state_hat, model, memory) + control
    u_new = (state_hat.u.coeffs + dt * explicit + shared_increment.coeffs) / (
        1.0 + dt * diffusion * model.alpha
    )
    return _advance(state_hat, u_new, dt)


def _n_steps(T: float, dt: float) -> int:
    return int(round(T / dt))


def run_trajectory(
    model: SystemModel,
    cfg: StepperConfig,
    T: float,
    seed: int,
    u0: Optional[SpectralField] = None,
    eta0: Optional[HistoryField] = None,
    trajectory_id: int = 0,
    monitors: Optional[Mapping[str, Monitor]] = None,
    keep_final_state: bool = True,
    progress: bool = False,
) -> TrajectoryRecord:
    """
    Iterate step() up to T, recording every cfg.record_stride steps
    (step 0 included) and calling each monitor on the recorded states
    """
    state = initial_state(model, cfg, u0, eta0)
    rng = NoiseStream(seed, trajectory_id, model.n_modes)
    monitors = dict(monitors or {})
    rows: List[Dict[str, float]] = []
    extras: Dict[str, List[Any]] = {name: [] for name in monitors}

    def observe(s: ExtendedState) -> None:
        rows.append(record_row(s, model))
        for name, monitor in monitors.items():
            extras[name].append(monitor(s))

    n_steps = _n_steps(T, cfg.dt)
    logger.debug("Trajectory %d: %d steps of %g", trajectory_id, n_steps, cfg.dt)
    observe(state)
    steps = range(1, n_steps + 1)
    for n in tqdm(steps, disable=not progress, desc=f"trajectory {trajectory_id}"):
        state = step(state, cfg.dt, rng, model, cfg)
        if n % cfg.record_stride == 0:
            observe(state)

    columns = {name: np.array([row[name] for row in rows]) for name in TRAJECTORY_COLUMNS}
    return TrajectoryRecord(
        columns=columns,
        final_u=state.u,
        seed=seed,
        trajectory_id=trajectory_id,
        dt=cfg.dt,
        record_stride=cfg.record_stride,
        final_state=state if keep_final_state else None,
        extras={name: np.array(values) for name, values in extras.items()},
    )


def _ensemble_member(
    model: SystemModel,
    cfg: StepperConfig,
    T: float,
    seed: int,
    u0: Optional[SpectralField],
    eta0: Optional[HistoryField],
    trajectory_id: int,
    monitors: Optional[Mapping[str, Monitor]],
) -> TrajectoryRecord:
    with threadpool_limits(limits=1):
        return run_trajectory(
            model, cfg, T, seed, u0, eta0, trajectory_id, monitors, keep_final_state=False
        )


def run_ensemble(
    model: SystemModel,
    cfg: StepperConfig,
    T: float,
    seed: int,
    n_paths: int,
    u0: Optional[SpectralField] = None,
    eta0: Optional[HistoryField] = None,
    n_jobs: int = 1,
    monitors: Optional[Mapping[str, Monitor]] = None,
) -> List[TrajectoryRecord]:
    """
    Independent trajectories 0..n_paths-1; results come back in id order
    """
    logger.info("Ensemble of %d paths to T=%g on %d worker(s)", n_paths, T, n_jobs)
    return Parallel(n_jobs=n_jobs)(
        delayed(_ensemble_member)(model, cfg, T, seed, u0, eta0, i, monitors)
        for i in range(n_paths)
    )


def _pair_distance_sq(a: ExtendedState, b: ExtendedState, model: SystemModel) -> float:
    diff = HistoryField(a.eta_matrix(model.grid) - b.eta_matrix(model.grid), model.grid, model.kernel)
    return sobolev_norm_sq(a.u - b.u, 0.0) + M_norm_sq(diff, 0.0)


def _state_norm_sq(state: ExtendedState, model: SystemModel, m: float) -> float:
    return sobolev_norm_sq(state.u, m) + M_norm_sq(state.history(model), m)


def run_coupled_pair(
    model: SystemModel,
    cfg: StepperConfig,
    ctrl: ControlConfig,
    T: float,
    seed: int,
    u0: Optional[SpectralField] = None,
    eta0: Optional[HistoryField] = None,
    trajectory_id: int = 0,
    shared_noise: bool = True,
    m: int = 2,
) -> PairedRecord:
    """
    Advance (u, eta) and the nudged (u_hat, eta_hat) from 0. The copy reuses
    the reference increment unless shared_noise is False (negative control).
    """
    check_spectral_gap(model, ctrl)
    reference = initial_state(model, cfg, u0, eta0)
    nudged = initial_state(model, cfg)
    rng = NoiseStream(seed, trajectory_id, model.n_modes)
    rng_hat = None if shared_noise else NoiseStream(seed, trajectory_id + 1_000_003, model.n_modes)

    rate = nudging_rate(model, ctrl.n_hat)
    initial = _pair_distance_sq(reference, nudged, model)
    prefactor = 1.0 / (1.0 - model.kappa) if model.kappa < 1.0 else float("inf")
    rows = []

    def observe() -> None:
        t = reference.t
        rows.append(
            {
                "t": t,
                "diff_sq": _pair_distance_sq(reference, nudged, model),
                "hat_Hm_sq": _state_norm_sq(nudged, model, float(m)),
                "bound": prefactor * np.exp(-rate * t) * initial,
            }
        )

    observe()
    for n in range(1, _n_steps(T, cfg.dt) + 1):
        increment = sample_noise_increment(model.q, cfg.dt, rng)
        u_ref = reference.u
        reference = step(reference, cfg.dt, None, model, cfg, increment=increment)
        if rng_hat is not None:
            increment = sample_noise_increment(model.q, cfg.dt, rng_hat)
        nudged = step_controlled(nudged, u_ref, cfg.dt, increment, model, cfg, ctrl)
        if n % cfg.record_stride == 0:
            observe()

    return PairedRecord(
        columns={name: np.array([row[name] for row in rows]) for name in PAIR_COLUMNS},
        seed=seed,
        trajectory_id=trajectory_id,
        shared_noise=shared_noise,
        m=m,
        rate=rate,
        initial_norm_sq=initial,
        meta={"n_hat": ctrl.n_hat, "weighted": ctrl.weighted, "kappa": model.kappa},
    )


def run_coupled_ensemble(
    model: SystemModel,
    cfg: StepperConfig,
    ctrl: ControlConfig,
    T: float,
    seed: int,
    n_paths: int,
    u0: Optional[SpectralField] = None,
    shared_noise: bool = True,
    n_jobs: int = 1,
    m: int = 2,
) -> List[PairedRecord]:
    def member(i: int) -> PairedRecord:
        with threadpool_limits(limits=1):
            return run_coupled_pair(model, cfg, ctrl, T, seed, u0, None, i, shared_noise, m)

    return Parallel(n_jobs=n_jobs)(delayed(member)(i) for i in range(n_paths))
