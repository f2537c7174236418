from contextlib import contextmanager
from pathlib import Path
from typing import Annotated, Iterator, Optional

import typer
from pydantic import ValidationError

from app.client.logger import logger
from app.errors import (
    ConfigError,
    DomainError,
    EnumerationRefusedError,
    InstanceParseError,
)

EXIT_ATTACK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3

ConfigOpt = Annotated[
    Optional[Path], typer.Option("--config", help="key=value parameter file")
]
NOpt = Annotated[Optional[int], typer.Option("--n", help="Degree")]
KOpt = Annotated[Optional[int], typer.Option("--k", help="Lowest unknown coefficient")]
HOpt = Annotated[Optional[int], typer.Option("--h", help="Interval radius")]
DeltaOpt = Annotated[Optional[int], typer.Option("--delta", help="Noise bound")]
DeltaExpOpt = Annotated[
    Optional[int], typer.Option("--delta-exp", help="delta = p >> delta_exp")
]
PrimeBitsOpt = Annotated[
    Optional[int], typer.Option("--prime-bits", help="Bits of a generated prime")
]
PrimeOpt = Annotated[Optional[int], typer.Option("--prime", help="Explicit prime")]
DOpt = Annotated[Optional[int], typer.Option("--d", help="Number of observations")]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="Master seed")]
TrialsOpt = Annotated[Optional[int], typer.Option("--trials", help="Seeded trials")]
GridOpt = Annotated[Optional[int], typer.Option("--grid", help="Grid or sample size")]
OutOpt = Annotated[Optional[Path], typer.Option("--out", help="Output directory")]
WorkersOpt = Annotated[
    Optional[int], typer.Option("--workers", help="Worker processes for trials")
]
BOpt = Annotated[Optional[int], typer.Option("--b", help="Word size setting h, delta, p")]
WindowOpt = Annotated[
    Optional[int], typer.Option("--window", help="Draw points from [0, window)")
]
DMinOpt = Annotated[Optional[int], typer.Option("--d-min", help="First d of the sweep")]
DMaxOpt = Annotated[Optional[int], typer.Option("--d-max", help="Last d of the sweep")]
ReferenceOpt = Annotated[
    bool, typer.Option("--reference", help="Use the published instance")
]


def flag(value: bool) -> Optional[bool]:
    """Unset boolean flags defer to the config file."""
    return True if value else None


@contextmanager
def command_errors() -> Iterator[None]:
    """Map failures onto exit codes: 2 for configuration, 3 for files."""
    try:
        yield
    except InstanceParseError as e:
        logger.error("malformed input: {error}", error=str(e))
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(code=EXIT_IO)
    except (ValidationError, ConfigError, DomainError, EnumerationRefusedError) as e:
        logger.error("configuration rejected: {error}", error=str(e))
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(code=EXIT_CONFIG)
    except OSError as e:
        logger.error("file error: {error}", error=str(e))
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(code=EXIT_IO)
