import click

from ..services.output import dumps
from .deps import RunContext, finish, validate_experiment, write_report


@click.command("validate")
@click.pass_context
def cmd_validate(ctx: click.Context):
    """
    Run every validator and print the certified constants; exit code 0 iff all pass
    """
    run: RunContext = ctx.obj
    summary = validate_experiment(run.config)
    click.echo(dumps(summary.model_dump(mode="json")).decode())
    finish(run, "validate", [write_report(run, "validation.json", summary)])
    if not summary.passed:
        ctx.exit(1)
