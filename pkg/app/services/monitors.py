import logging
from typing import Iterable, List, Literal, Optional, Sequence, Union

import numpy as np

from ..core.exceptions import ConfigurationError
from ..models.fields import SpectralField
from ..models.records import PairedRecord, TrajectoryRecord, stack_column
from ..models.state import SystemModel
from ..schemas.config import StepperConfig
from ..schemas.reports import MonitorReport
from .integrator import run_ensemble
from .lyapunov import decay_constants, exp_beta

logger = logging.getLogger(__name__)

Records = Union[TrajectoryRecord, Sequence[TrajectoryRecord]]


def _as_list(records: Records) -> List[TrajectoryRecord]:
    if isinstance(records, TrajectoryRecord):
        return [records]
    return list(records)


def _mean_and_stderr(values: np.ndarray) -> tuple:
    """
    column-wise ensemble mean and its standard error (0 for a single path)
    """
    mean = values.mean(axis=0)
    if values.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, values.std(axis=0, ddof=1) / np.sqrt(values.shape[0])


def plateau_ratio(series: np.ndarray, n_blocks: int = 20) -> float:
    """
    max of block averages over the last half divided by the mean over the
    second quarter; 0 when the series vanishes identically
    """
    series = np.asarray(series, dtype=float)
    n_blocks = min(n_blocks, series.size)
    blocks = np.array([b.mean() for b in np.array_split(series, n_blocks)])
    second_quarter = blocks[n_blocks // 4 : n_blocks // 2]
    last_half = blocks[n_blocks // 2 :]
    reference = second_quarter.mean() if second_quarter.size else blocks.mean()
    peak = last_half.max() if last_half.size else blocks.max()
    if reference == 0.0:
        return 0.0 if peak == 0.0 else float("inf")
    return float(peak / reference)


def fitted_decay_rate(t: np.ndarray, series: np.ndarray) -> Optional[float]:
    """
    -slope of log(series) over the first quarter of positive samples
    """
    n = max(3, t.size // 4)
    t, series = t[:n], series[:n]
    positive = series > 0
    if positive.sum() < 3:
        return None
    slope, _ = np.polyfit(t[positive], np.log(series[positive]), 1)
    return float(-slope)


def monitor_dissipation(
    records: Records,
    model: SystemModel,
    which: Literal["psi0", "psi1", "psi2"] = "psi0",
    n_sigma: float = 3.0,
) -> MonitorReport:
    """
    psi0: E Psi0(t) <= exp(-c0 t) Psi0(U0) + C0 at every recorded t, with the
    ensemble mean allowed n_sigma standard errors. psi1, psi2: boundedness
    of the time-averaged mean plus a fitted decay rate (no constants exist).
    """
    paths = _as_list(records)
    column = {"psi0": "Psi0", "psi1": "Psi1", "psi2": "Psi2"}[which]
    values = stack_column(paths, column)
    t = paths[0].t
    mean, stderr = _mean_and_stderr(values)

    if which == "psi0":
        constants = decay_constants(model)
        bound = np.exp(-constants["c0"] * t) * mean[0] + constants["C0"]
        margin = mean - bound - n_sigma * stderr
        worst = int(np.argmax(margin))
        verdict = "pass" if margin[worst] <= 0 else "fail"
        return MonitorReport(
            name="psi0-decay",
            anchor="psi0-decay",
            constants=constants,
            worst_margin=float(margin[worst]),
            ci=(float(mean[worst] - n_sigma * stderr[worst]), float(mean[worst] + n_sigma * stderr[worst])),
            verdict=verdict,
            details={"t_worst": float(t[worst]), "paths": len(paths), "violations": int(np.sum(margin > 0))},
        )

    ratio = plateau_ratio(mean)
    rate = fitted_decay_rate(t, mean)
    return MonitorReport(
        name=f"{which}-boundedness",
        anchor=f"{which}-moment",
        constants={} if rate is None else {"fitted_rate": rate},
        worst_margin=ratio,
        ci=(float(mean.min()), float(mean.max())),
        verdict="bounded" if np.isfinite(ratio) and ratio <= 2.0 else "unbounded",
        details={"time_average": float(mean.mean()), "paths": len(paths)},
    )


def generator_consistency(
    model: SystemModel,
    cfg: StepperConfig,
    t: float,
    h: float,
    n_paths: int,
    seed: int,
    u0: Optional[SpectralField] = None,
    n_jobs: int = 1,
    bias_fraction: float = 0.05,
) -> MonitorReport:
    """
    Compare (E Psi0(U(t+h)) - E Psi0(U(t))) / h with E L Psi0(U(t)) over an
    ensemble; pass within 4 standard errors plus bias_fraction |E L Psi0|
    """
    stride = int(round(h / cfg.dt))
    if stride < 1 or abs(stride * cfg.dt - h) > 1e-9 * h:
        raise ConfigurationError("h must be a positive multiple of dt")
    index = int(round(t / h))
    if abs(index * h - t) > 1e-9 * max(1.0, t):
        raise ConfigurationError("t must be a multiple of h")

    stepper = cfg.model_copy(update={"record_stride": stride})
    paths = run_ensemble(model, stepper, t + h, seed, n_paths, u0=u0, n_jobs=n_jobs)
    return generator_consistency_report(paths, index, bias_fraction)


def generator_consistency_report(
    records: Sequence[TrajectoryRecord], index: int, bias_fraction: float = 0.05
) -> MonitorReport:
    """
    Paired quotient of Psi0 between records index and index + 1 against
    E L Psi0 at record index
    """
    paths = _as_list(records)
    n_paths = len(paths)
    times = paths[0].t
    t, h = float(times[index]), float(times[index + 1] - times[index])
    psi0 = stack_column(paths, "Psi0")
    generator = stack_column(paths, "LPsi0")

    quotient = (psi0[:, index + 1] - psi0[:, index]) / h
    paired = quotient - generator[:, index]
    difference = float(paired.mean())
    stderr = float(paired.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0
    expected = float(generator[:, index].mean())
    allowance = 4.0 * stderr + bias_fraction * abs(expected)
    return MonitorReport(
        name="generator-consistency",
        anchor="generator",
        constants={"t": t, "h": h},
        worst_margin=abs(difference) - allowance,
        ci=(difference - 4.0 * stderr, difference + 4.0 * stderr),
        verdict="pass" if abs(difference) <= allowance else "fail",
        details={
            "finite_difference": float(quotient.mean()),
            "generator_mean": expected,
            "stderr": stderr,
            "paths": n_paths,
        },
    )


def stepwise_energy_check(
    record: TrajectoryRecord, model: SystemModel, slack_factor: float = 10.0
) -> MonitorReport:
    """
    Noise off: (Psi0(n+1) - Psi0(n)) / dt <= -kappa ||u||^2_{H^1}
    - (1 - kappa) delta / 2 ||eta||^2_{M^0} + a3, with slack_factor dt (1 + |rhs|)
    """
    if not model.noise.is_zero:
        raise ConfigurationError("The stepwise energy inequality only applies with noise off")
    if record.record_stride != 1:
        raise ConfigurationError("Stepwise energy check needs a record with stride 1")
    kappa, delta, dt = model.kappa, model.kernel.delta, record.dt
    psi0 = record.column("Psi0")
    lhs = np.diff(psi0) / dt
    rhs = (
        -kappa * record.column("H1_norm_sq")[:-1]
        - 0.5 * (1.0 - kappa) * delta * record.column("eta_M0_sq")[:-1]
        + model.potential.a3
    )
    margin = lhs - rhs - slack_factor * dt * (1.0 + np.abs(rhs))
    worst = int(np.argmax(margin)) if margin.size else 0
    worst_margin = float(margin[worst]) if margin.size else 0.0
    return MonitorReport(
        name="stepwise-energy",
        anchor="psi0-energy-inequality",
        constants={"a3": model.potential.a3, "slack_factor": slack_factor},
        worst_margin=worst_margin,
        verdict="pass" if worst_margin <= 0 else "fail",
        details={"steps": int(margin.size), "violations": int(np.sum(margin > 0))},
    )


def monitor_psi0_powers(records: Records, powers: Iterable[int] = (2, 3)) -> List[MonitorReport]:
    """
    Boundedness of E Psi0^n along the record
    """
    paths = _as_list(records)
    values = stack_column(paths, "Psi0")
    reports = []
    for n in powers:
        mean, _ = _mean_and_stderr(values ** n)
        ratio = plateau_ratio(mean)
        reports.append(
            MonitorReport(
                name=f"psi0-power-{n}",
                anchor="psi0-moments",
                constants={"n": float(n)},
                worst_margin=ratio,
                ci=(float(mean.min()), float(mean.max())),
                verdict="bounded" if np.isfinite(ratio) and ratio <= 2.0 else "unbounded",
                details={"time_average": float(mean.mean())},
            )
        )
    return reports


def monitor_exponential_moment(records: Records, model: SystemModel) -> MonitorReport:
    """
    E exp(beta Psi0) with beta at half the admissible threshold
    """
    beta = exp_beta(model)
    if beta is None:
        return MonitorReport(
            name="exp-moment",
            anchor="exponential-moment",
            verdict="info",
            details={"reason": "noise off, beta undefined"},
        )
    paths = _as_list(records)
    values = np.exp(beta * stack_column(paths, "Psi0"))
    mean, stderr = _mean_and_stderr(values)
    ratio = plateau_ratio(mean)
    finite = bool(np.all(np.isfinite(mean)))
    return MonitorReport(
        name="exp-moment",
        anchor="exponential-moment",
        constants={"beta": beta},
        worst_margin=ratio,
        ci=(float(mean.mean() - 3 * stderr.mean()), float(mean.mean() + 3 * stderr.mean())),
        verdict="bounded" if finite and ratio <= 2.0 else "unbounded",
        details={"time_average": float(mean.mean())},
    )


def contraction_report(pairs: Sequence[PairedRecord], slack: float = 1e-8) -> MonitorReport:
    """
    Per-path check of ||(u - u_hat, eta - eta_hat)||^2 <= bound(t) + slack,
    plus boundedness of the nudged copy's higher norm
    """
    margins = np.array([np.max(p.columns["diff_sq"] - p.columns["bound"] - slack) for p in pairs])
    worst = int(np.argmax(margins))
    hat = np.vstack([p.columns["hat_Hm_sq"] for p in pairs])
    ratio = plateau_ratio(hat.mean(axis=0))
    return MonitorReport(
        name="nudging-contraction",
        anchor="nudging-contraction",
        constants={"rate": pairs[0].rate, "slack": slack},
        worst_margin=float(margins[worst]),
        verdict="pass" if margins[worst] <= 0 else "fail",
        details={
            "paths": len(pairs),
            "failing_paths": [int(i) for i in np.flatnonzero(margins > 0)],
            "hat_Hm_bounded": bool(np.isfinite(ratio) and ratio <= 2.0),
            "hat_Hm_max": float(hat.max()),
            "m": pairs[0].m,
        },
    )


def negative_control_report(pairs: Sequence[PairedRecord], threshold: float = 1e-2) -> MonitorReport:
    """
    Independent noise must keep the pair apart: the distance averaged over
    the last quarter stays above threshold times the initial one on every path
    """

    def late_ratio(p: PairedRecord) -> float:
        diff = p.columns["diff_sq"]
        late = diff[-max(1, diff.size // 4):].mean()
        return late / p.initial_norm_sq if p.initial_norm_sq > 0 else 0.0

    finals = np.array([late_ratio(p) for p in pairs])
    return MonitorReport(
        name="nudging-negative-control",
        anchor="nudging-contraction",
        constants={"threshold": threshold},
        worst_margin=float(threshold - finals.min()),
        verdict="pass" if finals.min() > threshold else "fail",
        details={"min_final_ratio": float(finals.min()), "paths": len(pairs)},
    )
