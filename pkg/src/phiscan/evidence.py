"""Read-only evidence containers: extracted /data/data trees as dirs or zips.

Android application data lives under /data/data, one folder per installed
package. This module opens an already-extracted copy of that layout
(plain directory or zip archive), enumerates the per-app roots, and gives
hashed read access for chain-of-custody. Nothing here ever writes to the
container.
"""

from __future__ import annotations

import hashlib
import os
import zipfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import CorruptArchiveError, NotFoundError, UnsupportedContainerError

CONTAINER_DIRECTORY = "directory"
CONTAINER_ZIP = "zip-archive"

DIGEST_ALGORITHM = "sha-256"


@dataclass(frozen=True)
class FileDigest:
    relative_path: str
    algorithm: str
    hex_digest: str
    byte_length: int


@dataclass(frozen=True)
class AppDataRoot:
    """One top-level application folder inside the evidence tree."""

    package_name: str
    relative_path: str
    matched_parser: str | None = None


@dataclass(frozen=True)
class EvidenceSource:
    """An opened evidence container. Immutable; all operations are pure reads."""

    origin: str
    container_kind: str
    root_listing: frozenset[str]
    opened_at: str
    top_level_dirs: tuple[str, ...] = ()
    skipped_entries: tuple[str, ...] = ()


def _safe_relpath(name: str) -> str | None:
    # Normalize an archive entry name; None means the entry is unsafe or
    # meaningless (absolute, parent-escaping, backslashed, empty).
    if "\\" in name or name.startswith("/"):
        return None
    parts = [p for p in name.split("/") if p not in ("", ".")]
    if not parts or any(p == ".." for p in parts):
        return None
    if ":" in parts[0]:  # windows drive prefix smuggled into the archive
        return None
    return "/".join(parts)


def _open_directory(path: Path) -> tuple[frozenset[str], tuple[str, ...], tuple[str, ...]]:
    listing: set[str] = set()
    skipped: list[str] = []
    top_dirs: set[str] = set()
    for dirpath, dirnames, filenames in os.walk(path, followlinks=False):
        rel_dir = Path(dirpath).relative_to(path)
        if rel_dir != Path("."):
            first = rel_dir.as_posix().split("/")[0]
            top_dirs.add(first)
        # prune symlinked subdirectories: evidence must never escape its root
        pruned = [d for d in dirnames if (Path(dirpath) / d).is_symlink()]
        for d in pruned:
            dirnames.remove(d)
            skipped.append((rel_dir / d).as_posix() + " (symlink)")
        for fn in filenames:
            full = Path(dirpath) / fn
            if full.is_symlink():
                skipped.append((rel_dir / fn).as_posix() + " (symlink)")
                continue
            listing.add((rel_dir / fn).as_posix() if rel_dir != Path(".") else fn)
    return frozenset(listing), tuple(sorted(top_dirs)), tuple(sorted(skipped))


def _open_zip(path: Path) -> tuple[frozenset[str], tuple[str, ...], tuple[str, ...]]:
    listing: set[str] = set()
    skipped: list[str] = []
    top_dirs: set[str] = set()
    try:
        with zipfile.ZipFile(path) as zf:
            for info in zf.infolist():
                safe = _safe_relpath(info.filename)
                if safe is None:
                    skipped.append(f"{info.filename} (unsafe path)")
                    continue
                if info.is_dir():
                    top_dirs.add(safe.split("/")[0])
                    continue
                listing.add(safe)
                if "/" in safe:
                    top_dirs.add(safe.split("/")[0])
    except zipfile.BadZipFile as exc:
        raise CorruptArchiveError(f"{path}: {exc}") from exc
    # a top-level plain file is not an app root
    top_dirs = {d for d in top_dirs if d not in listing}
    return frozenset(listing), tuple(sorted(top_dirs)), tuple(sorted(skipped))


def open_source(path: str | Path) -> EvidenceSource:
    """Open a directory or zip archive rooted at the extracted /data/data layout."""
    path = Path(path)
    if not path.exists():
        raise NotFoundError(f"evidence path does not exist: {path}")
    opened_at = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    if path.is_dir():
        listing, top_dirs, skipped = _open_directory(path)
        kind = CONTAINER_DIRECTORY
    elif zipfile.is_zipfile(path):
        listing, top_dirs, skipped = _open_zip(path)
        kind = CONTAINER_ZIP
    elif path.suffix.lower() == ".zip":
        raise CorruptArchiveError(f"{path}: zip central directory unreadable")
    else:
        raise UnsupportedContainerError(f"{path}: neither a directory nor a zip archive")
    return EvidenceSource(
        origin=str(path),
        container_kind=kind,
        root_listing=listing,
        opened_at=opened_at,
        top_level_dirs=top_dirs,
        skipped_entries=skipped,
    )


def evidence_label(source: EvidenceSource) -> str:
    """Container-independent label: basename with any .zip suffix stripped.

    Keeps reports over a directory and a zip of the same content
    byte-identical.
    """
    base = os.path.basename(source.origin.rstrip("/"))
    if base.lower().endswith(".zip"):
        base = base[:-4]
    return base


def read_file(source: EvidenceSource, relative_path: str) -> bytes:
    """Return the exact stored bytes of one file in the container."""
    if relative_path not in source.root_listing:
        raise NotFoundError(f"not in evidence listing: {relative_path}")
    if source.container_kind == CONTAINER_DIRECTORY:
        return (Path(source.origin) / relative_path).read_bytes()
    with zipfile.ZipFile(source.origin) as zf:
        for info in zf.infolist():
            if _safe_relpath(info.filename) == relative_path and not info.is_dir():
                return zf.read(info)
    raise NotFoundError(f"not in evidence listing: {relative_path}")


def hash_file(source: EvidenceSource, relative_path: str) -> FileDigest:
    """SHA-256 digest over the exact file bytes, for chain-of-custody."""
    data = read_file(source, relative_path)
    return FileDigest(
        relative_path=relative_path,
        algorithm=DIGEST_ALGORITHM,
        hex_digest=hashlib.sha256(data).hexdigest(),
        byte_length=len(data),
    )


def enumerate_app_roots(source: EvidenceSource, registry=None) -> list[AppDataRoot]:
    """One AppDataRoot per top-level directory, sorted by package name.

    matched_parser is set iff exactly one registered parser's detect
    accepts the root.
    """
    if registry is None:
        from .parsers import default_registry

        registry = default_registry()
    roots = []
    for name in sorted(source.top_level_dirs):
        provisional = AppDataRoot(package_name=name, relative_path=name)
        matches = [p.parser_id for p in registry if p.detect(provisional, source)]
        matched = matches[0] if len(matches) == 1 else None
        roots.append(
            AppDataRoot(package_name=name, relative_path=name, matched_parser=matched)
        )
    return roots


def files_under(source: EvidenceSource, root: AppDataRoot) -> list[str]:
    """All listed files beneath an app root, sorted."""
    prefix = root.relative_path + "/"
    return sorted(p for p in source.root_listing if p.startswith(prefix))
