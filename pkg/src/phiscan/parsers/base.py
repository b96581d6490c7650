"""Parser plugin base: detection and parsing of one app's data root."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..artifacts import ArtifactRecord
from ..evidence import AppDataRoot, EvidenceSource


@dataclass(frozen=True)
class ParseResult:
    """Everything one parser recovered from one app root."""

    records: tuple[ArtifactRecord, ...] = ()
    warnings: tuple[str, ...] = ()
    db_statuses: tuple = ()
    consumed: frozenset[str] = field(default_factory=frozenset)


class AppParser:
    """One registered artifact parser.

    Subclasses set the identity fields and implement detect/parse.
    detect must be cheap and side-effect free; parse never raises for
    partial or damaged artifacts, it degrades into warnings.
    """

    parser_id: str = ""
    display_name: str = ""
    folder: str = ""
    signature: str = ""  # human-readable artifact requirement, for list-parsers

    def detect(self, root: AppDataRoot, source: EvidenceSource) -> bool:
        raise NotImplementedError

    def parse(self, root: AppDataRoot, source: EvidenceSource, *,
              recovered_at: str = "", code_map=None) -> ParseResult:
        raise NotImplementedError
