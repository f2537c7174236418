from typing import Annotated

import typer

from app.client.logger import configure_logging, logger
from app.config import settings
from app.route.router import api_router

cli = typer.Typer(
    name=settings.PROJECT_NAME,
    help="Lattice attacks on noisy polynomial interpolation over short intervals.",
    no_args_is_help=True,
    add_completion=False,
)


@cli.callback()
def main(
    quiet: Annotated[
        bool, typer.Option("--quiet", help="Silence console logging")
    ] = False,
) -> None:
    configure_logging(console=False if quiet else None)
    logger.debug("cli started", project=settings.PROJECT_NAME)


cli.add_typer(api_router)


if __name__ == "__main__":
    cli()
