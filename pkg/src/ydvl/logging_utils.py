"""Centralised logging configuration."""

from __future__ import annotations

import logging
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler


def configure_logging(level: int | str = logging.INFO, console: Optional[Console] = None) -> None:
    """Configure laboratory-wide logging with Rich.

    ``level`` accepts either a numeric level or a name such as ``"DEBUG"`` so the
    value of ``YDVL_LOG_LEVEL`` can be passed straight through.
    """

    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    console = console or Console(stderr=True)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        handlers=[RichHandler(console=console, rich_tracebacks=True, markup=True)],
        force=True,
    )


__all__ = ["configure_logging"]
