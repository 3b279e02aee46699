import logging
from typing import Dict, List

import click
import numpy as np

from ..core.exceptions import OracleRefusalError
from ..models.state import SystemModel
from ..schemas.config import ExperimentConfig
from ..schemas.reports import MonitorReport
from ..services.integrator import run_trajectory
from ..services.measure import MODAL, default_burn_in, measure_from_record, run_for_measure
from ..services.oracles import fine_quadrature, ou_discrete_variance, ou_stationary_variance, prony_solve
from ..services.output import write_csv
from .deps import RunContext, build_model, finish, initial_u, require_validated, write_report

logger = logging.getLogger(__name__)

PRONY_TOL = 1e-3
OU_RELATIVE_TOL = 0.05
OU_N_SIGMA = 3.0


def kernel_quadrature_report(model: SystemModel) -> MonitorReport:
    """
    s-grid quadrature of mu against a brute-force trapezoid on [0, s_max]
    """
    grid = model.grid
    reference = fine_quadrature(model.kernel.mu, 0.0, grid.s_max, production_nodes=grid.size)
    approx = float(grid.weights @ model.kernel.mu(grid.nodes))
    error = abs(approx - reference) / abs(reference)
    return MonitorReport(
        name="kernel-quadrature",
        anchor="M1",
        constants={"quad_tol": grid.quad_tol},
        worst_margin=error,
        verdict="pass" if error <= 1e-3 else "fail",
        details={"grid": approx, "reference": reference},
    )


def refined_config(config: ExperimentConfig) -> ExperimentConfig:
    """
    dt / 2 and J x 2
    """
    disc = config.discretization
    finer = disc.model_copy(update={"dt": disc.dt / 2, "n_nodes": 2 * disc.n_nodes})
    return config.model_copy(update={"discretization": finer})


def prony_comparison(config: ExperimentConfig, model: SystemModel, seed: int) -> Dict[str, np.ndarray]:
    """
    Engine modes against the matrix-exponential solution at every recorded time
    """
    u0 = initial_u(config)
    oracle_args = dict(potential=model.potential, noise=model.noise)
    # refuse before stepping
    prony_solve(u0.coeffs, [0.0], model.kappa, model.kernel, **oracle_args)
    record = run_trajectory(
        model,
        config.stepper(),
        config.run.T,
        seed,
        u0,
        monitors={MODAL: lambda state: state.u.coeffs.copy()},
        keep_final_state=False,
        progress=True,
    )
    oracle = prony_solve(u0.coeffs, record.t, model.kappa, model.kernel, **oracle_args)
    return {"t": record.t, "engine": record.extras[MODAL], "oracle": oracle}


def prony_report(config: ExperimentConfig, model: SystemModel, seed: int, refine: bool) -> tuple:
    base = prony_comparison(config, model, seed)
    error = float(np.max(np.abs(base["engine"] - base["oracle"])))
    details = {"sup_error": error, "dt": config.discretization.dt, "J": config.discretization.n_nodes}
    verdict = error <= PRONY_TOL
    if refine:
        finer_config = refined_config(config)
        finer = prony_comparison(finer_config, build_model(finer_config), seed)
        finer_error = float(np.max(np.abs(finer["engine"] - finer["oracle"])))
        details["refined_sup_error"] = finer_error
        details["improves"] = finer_error < error
        verdict = verdict and finer_error < error
    report = MonitorReport(
        name="prony-oracle",
        anchor="prony-reduction",
        constants={"tolerance": PRONY_TOL},
        worst_margin=error - PRONY_TOL,
        verdict="pass" if verdict else "fail",
        details=details,
    )
    table = {"t": base["t"].tolist()}
    for k in np.flatnonzero(np.any(base["oracle"] != 0.0, axis=0)):
        table[f"u{k + 1}_engine"] = base["engine"][:, k].tolist()
        table[f"u{k + 1}_oracle"] = base["oracle"][:, k].tolist()
    return report, table


def ou_report(config: ExperimentConfig, model: SystemModel, seed: int) -> tuple:
    """
    Time-averaged E u_k^2 against q_k^2 / (2 alpha_k) for every noisy mode
    """
    if model.kappa != 1.0 or not model.potential.is_zero or model.noise.is_zero:
        raise OracleRefusalError("The OU oracle needs kappa = 1, phi = 0 and noise on")
    burn_in = default_burn_in(model) if config.run.burn_in is None else config.run.burn_in
    record = run_for_measure(model, config.stepper(), config.run.T, seed, progress=True)
    estimate = measure_from_record(record, model, burn_in, config.run.n_batches)

    table: Dict[str, List[float]] = {
        name: [] for name in ("k", "estimate", "stderr", "continuous", "discrete", "relative_error")
    }
    passed = True
    for k in np.flatnonzero(model.q) + 1:
        moment = estimate.moments[f"u{k}_sq"]
        continuous = ou_stationary_variance(int(k), float(model.q[k - 1]), model.kappa)
        discrete = ou_discrete_variance(int(k), float(model.q[k - 1]), model.kappa, config.discretization.dt)
        relative = abs(moment.estimate - continuous) / continuous
        within_se = abs(moment.estimate - discrete) <= OU_N_SIGMA * moment.stderr
        passed = passed and relative <= OU_RELATIVE_TOL and within_se
        for name, value in zip(
            table, (int(k), moment.estimate, moment.stderr, continuous, discrete, relative)
        ):
            table[name].append(value)

    report = MonitorReport(
        name="ou-oracle",
        anchor="invariant-measure",
        constants={"relative_tolerance": OU_RELATIVE_TOL, "n_sigma": OU_N_SIGMA},
        worst_margin=max(table["relative_error"]) - OU_RELATIVE_TOL,
        verdict="pass" if passed else "fail",
        details={"burn_in": burn_in, "T": config.run.T},
    )
    return report, table


@click.command("oracle-check")
@click.option("--refine/--no-refine", default=True, help="Repeat the Prony comparison at dt/2, J x 2")
@click.pass_obj
def cmd_oracle_check(run: RunContext, refine: bool):
    """
    Compare the engine with the exact references that apply to the config
    """
    config = run.config
    model = require_validated(config)
    reports = [kernel_quadrature_report(model)]
    artifacts = []

    if model.noise.is_zero:
        report, table = prony_report(config, model, run.seed, refine)
        name = "prony_comparison.csv"
    else:
        report, table = ou_report(config, model, run.seed)
        name = "ou_comparison.csv"
    reports.append(report)
    write_csv(run.output_dir / name, table)
    artifacts.append(name)

    for r in reports:
        logger.info("%s: %s", r.name, r.verdict)
    artifacts.append(write_report(run, "oracle.json", [r.model_dump(mode="json") for r in reports]))
    finish(run, "oracle-check", artifacts)
