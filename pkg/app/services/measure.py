import logging
from typing import Dict, Optional, Tuple

import numpy as np

from ..core.config import MIN_BATCHES, STATIONARITY_Z
from ..core.exceptions import ConfigurationError, NoiseAssumptionError
from ..models.records import TrajectoryRecord
from ..models.state import SystemModel
from ..schemas.config import StepperConfig
from ..schemas.reports import MeasureEstimate, MomentEstimate, MonitorReport, StationarityVerdict
from .integrator import run_trajectory
from .lyapunov import decay_constants, exp_beta
from .monitors import plateau_ratio
from .noise import require_noise
from .potential import require_p4

logger = logging.getLogger(__name__)

MODAL = "u_coeffs"


def batch_means(values: np.ndarray, n_batches: int = MIN_BATCHES) -> Tuple[float, float]:
    """
    Mean and batch-means standard error over contiguous batches
    """
    values = np.asarray(values, dtype=float)
    if n_batches < MIN_BATCHES:
        raise ConfigurationError(f"Batch means need at least {MIN_BATCHES} batches")
    if values.size < n_batches:
        raise ConfigurationError(
            f"{values.size} samples cannot fill {n_batches} batches; lengthen the run"
        )
    usable = values[: values.size - values.size % n_batches]
    means = usable.reshape(n_batches, -1).mean(axis=1)
    return float(values.mean()), float(means.std(ddof=1) / np.sqrt(n_batches))


def default_burn_in(model: SystemModel) -> float:
    """
    10 / c0
    """
    return 10.0 / decay_constants(model)["c0"]


def _modal_monitor(state) -> np.ndarray:
    return state.u.coeffs.copy()


def measure_from_record(
    record: TrajectoryRecord,
    model: SystemModel,
    burn_in: float,
    n_batches: int = MIN_BATCHES,
    start: Optional[float] = None,
    end: Optional[float] = None,
) -> MeasureEstimate:
    """
    Time averages over [max(burn_in, start), end] of a recorded trajectory
    """
    t = record.t
    lo = burn_in if start is None else max(burn_in, start)
    hi = t[-1] if end is None else end
    window = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    if not window.any():
        raise ConfigurationError(f"No samples in the averaging window [{lo}, {hi}]")

    moments: Dict[str, MomentEstimate] = {}

    def add(name: str, series: np.ndarray) -> None:
        estimate, stderr = batch_means(series[window], n_batches)
        moments[name] = MomentEstimate(estimate=estimate, stderr=stderr)

    for name in ("Psi0", "Psi1", "Psi2", "H0_norm_sq", "H1_norm_sq", "Teta_M0_sq", "tail_sup"):
        add(name, record.column(name))
    beta = exp_beta(model)
    if beta is not None:
        add("exp_beta_Psi0", np.exp(beta * record.column("Psi0")))

    profile = []
    if MODAL in record.extras:
        energy = record.extras[MODAL] ** 2
        h2 = energy @ model.alpha ** 2
        h3 = energy @ model.alpha ** 3
        add("H2_norm_sq", h2)
        add("H3_norm_sq", h3)
        add("H1_H2_product", record.column("H1_norm_sq") * h2)
        add("H2_H3_product", h2 * h3)
        for k in range(model.n_modes):
            add(f"u{k + 1}_sq", energy[:, k])
            profile.append(moments[f"u{k + 1}_sq"].estimate)

    return MeasureEstimate(
        T=float(hi),
        burn_in=float(lo),
        dt=record.dt,
        n_batches=n_batches,
        moments=moments,
        tail_sup_avg=moments["tail_sup"].estimate,
        spectral_profile=profile,
        alpha=model.alpha.tolist(),
    )


def run_for_measure(
    model: SystemModel, cfg: StepperConfig, T: float, seed: int, progress: bool = False
) -> TrajectoryRecord:
    """
    One long trajectory from U0 = 0 with per-mode coefficients recorded
    """
    return run_trajectory(
        model,
        cfg,
        T,
        seed,
        monitors={MODAL: _modal_monitor},
        keep_final_state=False,
        progress=progress,
    )


def krylov_bogoliubov(
    model: SystemModel,
    cfg: StepperConfig,
    T: float,
    seed: int,
    burn_in: Optional[float] = None,
    n_batches: int = MIN_BATCHES,
    progress: bool = False,
) -> MeasureEstimate:
    """
    Time-averaged measure from U0 = 0 over [burn_in, T]
    """
    burn_in = default_burn_in(model) if burn_in is None else burn_in
    if T <= burn_in:
        raise ConfigurationError(f"T = {T} must exceed the burn-in {burn_in:.4g}")
    logger.info("Krylov-Bogoliubov average to T=%g (burn-in %.4g)", T, burn_in)
    record = run_for_measure(model, cfg, T, seed, progress=progress)
    return measure_from_record(record, model, burn_in, n_batches)


def tightness_diagnostic(record: TrajectoryRecord, n_blocks: int = MIN_BATCHES) -> MonitorReport:
    """
    (i) (1/t) int_0^t ||A^{1/2} u||^2 stays bounded, (ii) ||T_mu eta||^2_{M^0}
    and (iii) sup_r r tail(r) plateau; each by the block plateau ratio
    """
    t = record.t
    h1 = record.column("H1_norm_sq")
    cumulative = np.concatenate([[0.0], np.cumsum(0.5 * (h1[1:] + h1[:-1]) * np.diff(t))])
    running = np.divide(cumulative, t, out=np.zeros_like(cumulative), where=t > 0)
    half = t.size // 2
    slope = float(np.polyfit(t[half:], cumulative[half:], 1)[0]) if t.size - half >= 2 else 0.0

    ratios = {
        "time_average_H1": plateau_ratio(running[1:], n_blocks) if t.size > 1 else 0.0,
        "transport": plateau_ratio(record.column("Teta_M0_sq"), n_blocks),
        "tail_sup": plateau_ratio(record.column("tail_sup"), n_blocks),
    }
    bounded = all(np.isfinite(r) and r <= 2.0 for r in ratios.values())
    return MonitorReport(
        name="tightness",
        anchor="tightness",
        constants={"cumulative_slope": slope},
        worst_margin=max(ratios.values()),
        verdict="bounded" if bounded else "unbounded",
        details={"plateau_ratios": ratios},
    )


def stationarity_test(
    first: MeasureEstimate, second: MeasureEstimate, threshold: float = STATIONARITY_Z
) -> StationarityVerdict:
    """
    Two-sample z-score per shared moment; pass when every |z| <= threshold
    """
    z_scores = {}
    for name in sorted(set(first.moments) & set(second.moments)):
        a, b = first.moments[name], second.moments[name]
        scale = np.hypot(a.stderr, b.stderr)
        if scale == 0.0:
            z_scores[name] = 0.0 if a.estimate == b.estimate else float("inf")
        else:
            z_scores[name] = float((a.estimate - b.estimate) / scale)
    passed = all(abs(z) <= threshold for z in z_scores.values())
    return StationarityVerdict(z_scores=z_scores, threshold=threshold, verdict="pass" if passed else "fail")


def spectral_decay_exponent(profile, max_mode: int = 16) -> Optional[float]:
    """
    Slope of log E u_k^2 against log k over modes <= max_mode (negative for decay)
    """
    energy = np.asarray(profile[:max_mode], dtype=float)
    k = np.arange(1, energy.size + 1, dtype=float)
    positive = energy > 0
    if positive.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log(k[positive]), np.log(energy[positive]), 1)
    return float(slope)


def _finiteness_ratio(series: np.ndarray) -> float:
    """
    last-quarter average over second-quarter average
    """
    quarters = np.array_split(np.asarray(series, dtype=float), 4)
    second, last = quarters[1].mean(), quarters[3].mean()
    if second == 0.0:
        return 0.0 if last == 0.0 else float("inf")
    return float(last / second)


def _regularity_summary(record: TrajectoryRecord, model: SystemModel, estimate: MeasureEstimate) -> dict:
    energy = record.extras[MODAL] ** 2
    h1 = energy @ model.alpha
    h2 = energy @ model.alpha ** 2
    ratios = {"H1": _finiteness_ratio(h1), "H2": _finiteness_ratio(h2)}
    return {
        "H1_mean": estimate.moments["H1_norm_sq"].estimate,
        "H2_mean": estimate.moments["H2_norm_sq"].estimate,
        "H3_mean": estimate.moments["H3_norm_sq"].estimate,
        "H1_H2_product_mean": estimate.moments["H1_H2_product"].estimate,
        "H2_H3_product_mean": estimate.moments["H2_H3_product"].estimate,
        "finiteness_ratios": ratios,
        "stable": {name: bool(np.isfinite(r) and r <= 2.0) for name, r in ratios.items()},
        "decay_exponent": spectral_decay_exponent(estimate.spectral_profile),
    }


def regularity_diagnostic(
    smooth_model: SystemModel,
    rough_model: SystemModel,
    cfg: StepperConfig,
    T: float,
    seed: int,
    m: int = 2,
    burn_in: Optional[float] = None,
    n_batches: int = MIN_BATCHES,
) -> MonitorReport:
    """
    Stationary H^1 / H^2 moments and spectral decay for a smooth and a rough
    noise; the smooth noise must have Tr(Q A^m Q) finite
    """
    try:
        require_noise(smooth_model.noise, m)
    except NoiseAssumptionError as exc:
        raise ConfigurationError(
            f"Smooth noise has divergent Tr(Q A^{m} Q): {exc}", anchor="Q2"
        ) from exc
    require_noise(rough_model.noise)
    if m >= 2:
        require_p4(smooth_model.potential, m)

    summaries = {}
    for label, model in (("smooth", smooth_model), ("rough", rough_model)):
        record = run_for_measure(model, cfg, T, seed)
        burn = default_burn_in(model) if burn_in is None else burn_in
        estimate = measure_from_record(record, model, burn, n_batches)
        summaries[label] = _regularity_summary(record, model, estimate)
        summaries[label]["spectral_profile"] = estimate.spectral_profile

    smooth_exp = summaries["smooth"]["decay_exponent"]
    rough_exp = summaries["rough"]["decay_exponent"]
    steeper = smooth_exp is not None and rough_exp is not None and smooth_exp < rough_exp
    stable = (
        summaries["smooth"]["stable"]["H1"]
        and summaries["smooth"]["stable"]["H2"]
        and summaries["rough"]["stable"]["H1"]
    )
    return MonitorReport(
        name="regularity",
        anchor="support-regularity",
        constants={"m": float(m)},
        worst_margin=None if not steeper else float(smooth_exp - rough_exp),
        verdict="pass" if steeper and stable else "fail",
        details=summaries,
    )
