import logging
from typing import List

import click

from ..core.exceptions import BlowUpError
from ..models.records import TRAJECTORY_COLUMNS, TrajectoryRecord
from ..services.integrator import run_ensemble, run_trajectory
from ..services.measure import tightness_diagnostic
from ..services.monitors import (
    generator_consistency_report,
    monitor_dissipation,
    monitor_exponential_moment,
    monitor_psi0_powers,
    stepwise_energy_check,
)
from ..services.output import write_blowup_bundle, write_csv, write_snapshot
from .deps import RunContext, finish, initial_u, require_validated, write_report

logger = logging.getLogger(__name__)


def _monitor_reports(records: List[TrajectoryRecord], model) -> list:
    reports = [monitor_dissipation(records, model, which) for which in ("psi0", "psi1", "psi2")]
    reports.extend(monitor_psi0_powers(records))
    reports.append(monitor_exponential_moment(records, model))
    reports.append(tightness_diagnostic(records[0]))
    if model.noise.is_zero and records[0].record_stride == 1:
        reports.append(stepwise_energy_check(records[0], model))
    if len(records) > 1 and records[0].t.size > 1:
        reports.append(generator_consistency_report(records, records[0].t.size - 2))
    return reports


@click.command("simulate")
@click.pass_obj
def cmd_simulate(run: RunContext):
    """
    Trajectory CSVs, monitor reports and the final state snapshot
    """
    config = run.config
    model = require_validated(config)
    cfg = config.stepper()
    T, n_paths = config.run.T, config.run.ensemble

    if T == 0:
        names = [f"trajectory_{i}.csv" for i in range(n_paths)]
        for name in names:
            write_csv(run.output_dir / name, {column: [] for column in TRAJECTORY_COLUMNS})
        finish(run, "simulate", names)
        return

    try:
        if n_paths == 1:
            records = [run_trajectory(model, cfg, T, run.seed, initial_u(config), progress=True)]
        else:
            records = run_ensemble(
                model, cfg, T, run.seed, n_paths, u0=initial_u(config), n_jobs=run.threads
            )
    except BlowUpError as exc:
        write_blowup_bundle(run.output_dir, exc, model)
        raise

    artifacts = []
    for record in records:
        name = f"trajectory_{record.trajectory_id}.csv"
        write_csv(run.output_dir / name, record.columns)
        artifacts.append(name)
    if records[0].final_state is not None:
        write_snapshot(run.output_dir / "final_state.bin", records[0].final_state, model)
        artifacts.append("final_state.bin")

    reports = _monitor_reports(records, model)
    for report in reports:
        logger.info("%s: %s", report.name, report.verdict)
    artifacts.append(write_report(run, "monitors.json", [r.model_dump(mode="json") for r in reports]))
    finish(run, "simulate", artifacts)
