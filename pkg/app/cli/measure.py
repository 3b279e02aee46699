import logging

import click

from ..core.exceptions import BlowUpError, ConfigurationError
from ..services.measure import (
    default_burn_in,
    measure_from_record,
    run_for_measure,
    stationarity_test,
    tightness_diagnostic,
)
from ..services.output import write_blowup_bundle, write_csv, write_spectral_profile
from .deps import RunContext, finish, require_validated, write_report

logger = logging.getLogger(__name__)


@click.command("measure")
@click.pass_obj
def cmd_measure(run: RunContext):
    """
    Krylov-Bogoliubov estimate from U0 = 0 over [burn_in, T]. The run continues
    to 2T so the stationarity check can compare [T/2, T] against [T, 2T].
    """
    config = run.config
    model = require_validated(config)
    cfg = config.stepper()
    T = config.run.T
    burn_in = default_burn_in(model) if config.run.burn_in is None else config.run.burn_in
    if T <= burn_in:
        raise ConfigurationError(f"T = {T} must exceed the burn-in {burn_in:.4g}")

    try:
        record = run_for_measure(model, cfg, 2.0 * T, run.seed, progress=True)
    except BlowUpError as exc:
        write_blowup_bundle(run.output_dir, exc, model)
        raise

    n_batches = config.run.n_batches
    estimate = measure_from_record(record, model, burn_in, n_batches, end=T)
    first = measure_from_record(record, model, burn_in, n_batches, start=0.5 * T, end=T)
    second = measure_from_record(record, model, burn_in, n_batches, start=T)
    stationarity = stationarity_test(first, second)
    logger.info("Stationarity of [T/2, T] against [T, 2T]: %s", stationarity.verdict)

    artifacts = [
        write_report(run, "measure.json", estimate),
        write_report(run, "stationarity.json", stationarity),
        write_report(run, "tightness.json", tightness_diagnostic(record)),
    ]
    write_csv(run.output_dir / "trajectory.csv", record.columns)
    write_spectral_profile(run.output_dir / "spectral_profile.csv", estimate.alpha, estimate.spectral_profile)
    artifacts.extend(["trajectory.csv", "spectral_profile.csv"])
    finish(run, "measure", artifacts)
