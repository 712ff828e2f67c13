import logging

from rich import pretty
from rich.console import Console
from rich.logging import RichHandler

console = Console()
err_console = Console(stderr=True)
pretty.install()


def setup_logging(level: str = "INFO"):
    """
    route every module logger through rich on stderr
    stdout stays free for the result summary
    """
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        numeric = logging.INFO
    logging.basicConfig(
        level=numeric,
        format="%(name)s: %(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False, rich_tracebacks=True)],
        force=True,
    )
