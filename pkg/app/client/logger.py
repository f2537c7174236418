import sys

import logfire

from app.config import settings

# Re-export logfire as logger
logger = logfire


def configure_logging(console: bool | None = None) -> None:
    """Configure logfire once per process.

    Spans are only shipped when a token is present; otherwise they go to the
    console on stderr so CSV written to stdout stays clean.
    """
    show_console = settings.LOG_CONSOLE if console is None else console
    logfire.configure(
        token=settings.LOGFIRE_TOKEN,
        service_name=settings.PROJECT_NAME,
        environment=settings.LOGFIRE_ENVIRONMENT,
        send_to_logfire="if-token-present",
        console=(
            logfire.ConsoleOptions(min_log_level=settings.LOG_LEVEL, output=sys.stderr)
            if show_console
            else False
        ),
    )
