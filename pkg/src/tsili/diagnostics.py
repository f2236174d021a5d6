"""Structured warnings.

Every warning is logged on the ``tsili`` logger as ``WARN <code> <detail>``
and optionally appended to a caller-owned list so reports can carry them.
"""
from __future__ import annotations

import logging
import os
import sys
from dataclasses import dataclass

logger = logging.getLogger("tsili")


@dataclass(frozen=True)
class Warn:
    code: str
    detail: str

    def __str__(self) -> str:
        return f"WARN {self.code} {self.detail}"


def warn(code: str, detail: str, sink: list | None = None) -> Warn:
    w = Warn(code, detail)
    logger.warning(str(w))
    if sink is not None:
        sink.append(w)
    return w


def configure_logging(stream=None) -> None:
    """Route the ``tsili`` logger to stderr; level comes from ``TSILI_LOG``."""
    level_name = os.environ.get("TSILI_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.handlers[:] = [handler]
    logger.setLevel(level)
    logger.propagate = False
