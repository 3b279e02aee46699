import logging
from typing import List

import click

from ..models.records import PAIR_COLUMNS, PairedRecord
from ..services.integrator import run_coupled_ensemble
from ..services.monitors import contraction_report, negative_control_report
from ..services.output import write_csv
from .deps import RunContext, finish, initial_u, require_validated, write_report

logger = logging.getLogger(__name__)


def _pair_table(pairs: List[PairedRecord]) -> dict:
    table = {"path": [], **{name: [] for name in PAIR_COLUMNS}}
    for pair in pairs:
        table["path"].extend([pair.trajectory_id] * len(pair))
        for name in PAIR_COLUMNS:
            table[name].extend(pair.columns[name].tolist())
    return table


@click.command("nudge")
@click.pass_obj
def cmd_nudge(run: RunContext):
    """
    Shared-noise coupled pairs plus the independent-noise negative control
    """
    config = run.config
    model = require_validated(config)
    cfg, ctrl = config.stepper(), config.control
    u0 = initial_u(config)

    common = dict(u0=u0, n_jobs=run.threads, m=config.regularity.m)
    pairs = run_coupled_ensemble(model, cfg, ctrl, config.run.T, run.seed, ctrl.paths, **common)
    reports = [contraction_report(pairs)]
    write_csv(run.output_dir / "paired.csv", _pair_table(pairs))
    artifacts = ["paired.csv"]

    if ctrl.negative_control:
        independent = run_coupled_ensemble(
            model, cfg, ctrl, config.run.T, run.seed, ctrl.paths, shared_noise=False, **common
        )
        reports.append(negative_control_report(independent))
        write_csv(run.output_dir / "paired_independent.csv", _pair_table(independent))
        artifacts.append("paired_independent.csv")

    for report in reports:
        logger.info("%s: %s (worst margin %.3g)", report.name, report.verdict, report.worst_margin)
    artifacts.append(write_report(run, "nudge.json", [r.model_dump(mode="json") for r in reports]))
    finish(run, "nudge", artifacts)
