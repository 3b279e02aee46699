import click

from ..services.measure import regularity_diagnostic
from ..services.output import write_spectral_profile
from .deps import RunContext, build_model, finish, require_validated, write_report


@click.command("regularity")
@click.pass_obj
def cmd_regularity(run: RunContext):
    """
    Stationary H^1 / H^2 moments and spectral decay for a smooth and a rough noise
    """
    config = run.config.model_copy(update={"mode": "regularity"})
    base = require_validated(config)
    reg = config.regularity
    smooth = build_model(config, noise=reg.smooth_noise)
    rough = build_model(config, noise=reg.rough_noise)

    report = regularity_diagnostic(
        smooth,
        rough,
        config.stepper(),
        config.run.T,
        run.seed,
        m=reg.m,
        burn_in=config.run.burn_in,
        n_batches=config.run.n_batches,
    )
    artifacts = [write_report(run, "regularity.json", report)]
    for label in ("smooth", "rough"):
        name = f"spectral_profile_{label}.csv"
        write_spectral_profile(run.output_dir / name, base.alpha, report.details[label]["spectral_profile"])
        artifacts.append(name)
    finish(run, "regularity", artifacts)
