import logging
from pathlib import Path
from typing import Optional

import click

from .cli import COMMANDS
from .cli.deps import RunContext, load_experiment_config
from .core.config import resolve_output_dir, settings
from .core.exceptions import EngineError
from .core.logging import setup_logging
from .services.output import dumps

logger = logging.getLogger(__name__)


class EngineGroup(click.Group):
    """
    Maps EngineError to a JSON error on stderr and exit code 1
    """

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except EngineError as exc:
            logger.debug("Command failed", exc_info=True)
            click.echo(dumps(exc.to_dict()).decode(), err=True)
            ctx.exit(1)
        except OSError as exc:
            error = {"error": type(exc).__name__, "detail": str(exc), "path": exc.filename}
            click.echo(dumps(error).decode(), err=True)
            ctx.exit(1)


@click.group(cls=EngineGroup)
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Experiment YAML; the default Allen-Cahn experiment when omitted",
)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Overrides run.seed")
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--output-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default="INFO",
    show_default=True,
)
@click.version_option(settings.VERSION, prog_name=settings.PROJECT_NAME)
@click.pass_context
def cli(
    ctx: click.Context,
    config_path: Optional[Path],
    seed: Optional[int],
    threads: int,
    output_dir: Optional[Path],
    log_level: str,
):
    """
    Stochastic heat equation with memory: validation, simulation and diagnostics
    """
    setup_logging(log_level)
    config = load_experiment_config(config_path)
    output = Path(resolve_output_dir(str(output_dir) if output_dir else None))
    output.mkdir(parents=True, exist_ok=True)
    ctx.obj = RunContext(
        config=config,
        config_path=config_path,
        seed=config.run.seed if seed is None else seed,
        threads=threads,
        output_dir=output,
    )
    logger.debug("Config %s, seed %d, output %s", config_path, ctx.obj.seed, output)


for command in COMMANDS:
    cli.add_command(command)


def main() -> None:
    cli(prog_name=settings.PROJECT_NAME)


if __name__ == "__main__":
    main()
