import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import ValidationError

from ..core.exceptions import ConfigurationError, EngineError
from ..models.fields import CollocationGrid, SpectralField
from ..models.kernel import KernelSpec
from ..models.potential import NoiseSpec
from ..models.state import SystemModel
from ..schemas.config import ExperimentConfig, KernelConfig, NoiseConfig
from ..schemas.reports import CheckReport, ValidationSummary
from ..services.integrator import check_spectral_gap
from ..services.kernel import build_sgrid, load_tabulated_kernel, validate_M_delta
from ..services.lyapunov import decay_constants, exp_beta
from ..services.noise import trace_QAmQ, validate_noise
from ..services.output import write_json, write_manifest
from ..services.potential import (
    certify_potential,
    check_growth_bound,
    check_p4,
    dealiased_size,
    verify_certificate,
)

logger = logging.getLogger(__name__)


@dataclass
class RunContext:
    """
    What every subcommand receives from the group options
    """

    config: ExperimentConfig
    config_path: Optional[Path]
    seed: int
    threads: int
    output_dir: Path


def load_experiment_config(path: Optional[Union[str, Path]]) -> ExperimentConfig:
    """
    YAML file -> ExperimentConfig; no path gives the default experiment
    """
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except OSError as exc:
        raise ConfigurationError(f"Cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Config {path} is not valid YAML: {exc}") from exc
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigurationError(f"Config {path} failed validation: {exc}") from exc


def build_kernel(cfg: KernelConfig) -> KernelSpec:
    if cfg.family == "tabulated":
        return load_tabulated_kernel(cfg.table_path, cfg.delta)
    return KernelSpec(delta=cfg.delta, mu0=cfg.mu0, rate=cfg.rate)


def build_noise(cfg: NoiseConfig, n_modes: int) -> NoiseSpec:
    if cfg.power is not None:
        return NoiseSpec.power(cfg.power.amplitude, cfg.power.exponent, n_modes, cfg.power.cutoff)
    if cfg.diagonal:
        return NoiseSpec.diagonal(cfg.diagonal)
    return NoiseSpec.zero(n_modes)


def build_model(config: ExperimentConfig, noise: Optional[NoiseConfig] = None) -> SystemModel:
    """
    Assemble the SystemModel; `noise` overrides the model's noise section
    (the regularity mode builds one model per noise)
    """
    disc = config.discretization
    kernel = build_kernel(config.model.kernel)
    grid = build_sgrid(
        kernel.delta,
        disc.n_nodes,
        disc.tail_tol,
        mu0=kernel.mu0,
        first_spacing=disc.first_spacing,
        kernel=kernel,
    )
    potential = certify_potential(config.model.potential)
    n_points = disc.collocation or dealiased_size(potential.p0, disc.n_modes)
    if config.model.kappa == 1.0:
        logger.warning("kappa = 1: memory is decoupled from u (outside the standing assumption)")
    return SystemModel(
        kernel=kernel,
        grid=grid,
        potential=potential,
        noise=build_noise(noise or config.model.noise, disc.n_modes),
        collocation=CollocationGrid(n_points, fast=disc.fast_transform),
        kappa=config.model.kappa,
        n_modes=disc.n_modes,
    )


def initial_u(config: ExperimentConfig) -> SpectralField:
    coeffs = np.zeros(config.discretization.n_modes)
    for k, value in config.run.u0.items():
        coeffs[k - 1] = value
    return SpectralField(coeffs)


def _error_report(exc: EngineError) -> CheckReport:
    return CheckReport(
        name="construction",
        anchor=exc.anchor or type(exc).__name__,
        passed=False,
        details=exc.to_dict(),
    )


def _model_checks(config: ExperimentConfig, model: SystemModel) -> List[CheckReport]:
    checks = [validate_M_delta(model.kernel, model.grid), verify_certificate(model.potential)]
    growth = check_growth_bound(model.potential)
    checks.append(
        CheckReport(
            name="potential-growth",
            anchor="potential-growth",
            passed=bool(np.isfinite(growth)),
            details={"C_phi": growth},
        )
    )
    regularity = config.mode == "regularity"
    checks.extend(validate_noise(model.noise))
    if regularity:
        m = config.regularity.m
        smooth = build_noise(config.regularity.smooth_noise, model.n_modes)
        rough = build_noise(config.regularity.rough_noise, model.n_modes)
        for label, noise in (("smooth", smooth), ("rough", rough)):
            for report in validate_noise(noise, m if label == "smooth" else None):
                report.name = f"{label}-{report.name}"
                checks.append(report)
        p4 = check_p4(model.potential, m)
        checks.append(
            CheckReport(
                name="potential-regularity",
                anchor="P4",
                passed=p4.passed,
                details={
                    "m": m,
                    "required_orders": list(p4.required_orders),
                    "failing_orders": list(p4.failing_orders),
                    "p1": p4.p1,
                },
            )
        )
    elif model.potential.p1 >= 4:
        logger.warning("p1 = %d >= 4: regularity results do not cover this potential", model.potential.p1)
    if config.mode == "nudge":
        gap = CheckReport(name="spectral-gap", anchor="spectral-gap", passed=True)
        try:
            gap.worst_margin = check_spectral_gap(model, config.control)
        except EngineError as exc:
            gap.passed = False
            gap.details = exc.to_dict()
        checks.append(gap)
    return checks


def certified_constants(config: ExperimentConfig, model: SystemModel) -> Dict[str, object]:
    spec = model.potential
    constants: Dict[str, object] = {
        "a1": spec.a1,
        "a2": spec.a2,
        "a3": spec.a3,
        "a_phi": spec.a_phi,
        "p0": spec.p0,
        "C_phi": check_growth_bound(spec),
        "trace_QQ": trace_QAmQ(model.noise, 0),
        "s_max": model.grid.s_max,
        "grid_ratio": model.grid.ratio,
        "collocation_nodes": model.collocation.n_points,
        **decay_constants(model),
    }
    beta = exp_beta(model)
    if beta is not None:
        constants["beta"] = beta
    if config.mode == "regularity":
        smooth = build_noise(config.regularity.smooth_noise, model.n_modes)
        constants[f"smooth_trace_QA{config.regularity.m}Q"] = trace_QAmQ(smooth, config.regularity.m)
    return constants


def _validate(config: ExperimentConfig) -> Tuple[ValidationSummary, Optional[SystemModel]]:
    try:
        model = build_model(config)
    except EngineError as exc:
        logger.debug("Model construction failed: %s", exc.detail)
        return ValidationSummary(passed=False, checks=[_error_report(exc)]), None
    checks = _model_checks(config, model)
    summary = ValidationSummary(
        passed=all(c.passed for c in checks),
        checks=checks,
        constants=certified_constants(config, model),
    )
    return summary, model


def validate_experiment(config: ExperimentConfig) -> ValidationSummary:
    """
    Run every validator that applies to the config's mode. Construction
    errors (P0/P2, infeasible grids, unreadable tables) become failed checks.
    """
    return _validate(config)[0]


def require_validated(config: ExperimentConfig) -> SystemModel:
    """
    Gate for the stepping commands: the model, or the first failed check as an error
    """
    summary, model = _validate(config)
    if not summary.passed:
        failed = next(c for c in summary.checks if not c.passed)
        raise ConfigurationError(
            f"Validation failed ({failed.name}): {failed.offending or failed.details}",
            anchor=failed.anchor,
        )
    return model


def write_report(run: RunContext, name: str, payload) -> str:
    """
    JSON artifact under the output directory; returns its name for the manifest
    """
    write_json(run.output_dir / name, payload)
    return name


def finish(run: RunContext, command: str, artifacts: List[str]) -> None:
    write_manifest(run.output_dir, run.config, run.seed, command, artifacts)
    logger.info("%s finished; %d artifact(s) in %s", command, len(artifacts), run.output_dir)
