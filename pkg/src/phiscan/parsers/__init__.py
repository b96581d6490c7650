"""Artifact parser registry.

Each parser binds to one app's data-root folder by exact name plus an
artifact signature. Root matching requires exactly one parser to accept.
"""

from __future__ import annotations

from .base import AppParser, ParseResult
from .glucosmart import GlucoSmartParser
from .healthmate import HealthMateParser
from .myvitals import MyVitalsParser

__all__ = [
    "AppParser",
    "GlucoSmartParser",
    "HealthMateParser",
    "MyVitalsParser",
    "ParseResult",
    "default_registry",
    "display_name_for",
]


def default_registry() -> tuple[AppParser, ...]:
    """The built-in parsers, in stable registration order."""
    return (MyVitalsParser(), GlucoSmartParser(), HealthMateParser())


def display_name_for(package_name: str, registry: tuple[AppParser, ...] | None = None) -> str:
    """Human-facing app name for a package folder (folder name if unknown)."""
    for parser in registry or default_registry():
        if parser.folder == package_name:
            return parser.display_name
    return package_name
