"""Per-version source code databases and the roots manifest.

A database maps canonical module names to files under one version's source
root.  Keys are kept sorted so a lookup is a binary search.
"""
from __future__ import annotations

import csv
import enum
import os
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

from .diagnostics import warn
from .errors import ConfigError


class Strategy(str, enum.Enum):
    EXACT_PATH = "exact-path"
    JAVA_PACKAGE = "java-package"
    UNIQUE_SUFFIX = "unique-suffix"


@dataclass(frozen=True)
class NameResolution:
    strategy: Strategy = Strategy.JAVA_PACKAGE
    source_extension: str = ".java"

    @classmethod
    def parse(cls, strategy: str, source_extension: str = ".java") -> "NameResolution":
        try:
            return cls(Strategy(strategy), source_extension)
        except ValueError:
            known = ", ".join(s.value for s in Strategy)
            raise ConfigError(f"unknown name resolution {strategy!r} (known: {known})") from None


@dataclass(frozen=True)
class SourceCodeDatabase:
    version: str
    root: Path
    resolution: NameResolution
    keys: tuple[str, ...] = ()
    # One relative path per key; under unique-suffix, a tuple of candidates.
    values: tuple = ()

    def __len__(self) -> int:
        return len(self.keys)

    def entries(self) -> list[tuple[str, str]]:
        rows = []
        for key, value in zip(self.keys, self.values):
            if isinstance(value, tuple):
                rows.extend((key, v) for v in value)
            else:
                rows.append((key, value))
        return rows

    def _find(self, key: str):
        i = bisect_left(self.keys, key)
        if i < len(self.keys) and self.keys[i] == key:
            return self.values[i]
        return None


def canonical_key(relpath: str, resolution: NameResolution) -> str:
    """Index key for a file given its root-relative POSIX path."""
    if resolution.strategy is Strategy.EXACT_PATH:
        return relpath
    if resolution.strategy is Strategy.JAVA_PACKAGE:
        stem = relpath
        if stem.endswith(resolution.source_extension):
            stem = stem[: -len(resolution.source_extension)]
        return stem.replace("/", ".")
    return PurePosixPath(relpath).name


def _walk_sources(root: Path, extension: str, warnings: list | None):
    def onerror(err: OSError):
        warn("unreadable-dir", f"path={err.filename} error={err.strerror}", warnings)

    for dirpath, dirnames, filenames in os.walk(root, onerror=onerror, followlinks=False):
        dirnames.sort()
        for fname in sorted(filenames):
            if not fname.endswith(extension):
                continue
            full = os.path.join(dirpath, fname)
            if os.path.islink(full):
                continue
            if not os.access(full, os.R_OK):
                warn("unreadable-file", f"path={full}", warnings)
                continue
            yield Path(full).relative_to(root).as_posix()


def build_index(
    root: str | Path,
    resolution: NameResolution = NameResolution(),
    *,
    version: str = "",
    warnings: list | None = None,
) -> SourceCodeDatabase:
    """Enumerate source files under ``root`` and key them by canonical name."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"source root is not a readable directory: {root}")
    os.listdir(root)  # surfaces PermissionError for the root itself

    table: dict[str, list[str]] = {}
    for rel in _walk_sources(root, resolution.source_extension, warnings):
        table.setdefault(canonical_key(rel, resolution), []).append(rel)

    keys = tuple(sorted(table))
    if resolution.strategy is Strategy.UNIQUE_SUFFIX:
        values = tuple(tuple(sorted(table[k])) for k in keys)
    else:
        values = []
        for k in keys:
            paths = sorted(table[k])
            if len(paths) > 1:
                warn("key-collision", f"version={version} key={k} kept={paths[0]} "
                     f"dropped={','.join(paths[1:])}", warnings)
            values.append(paths[0])
        values = tuple(values)
    return SourceCodeDatabase(version=version, root=root, resolution=resolution,
                              keys=keys, values=values)


def _name_as_path(name: str, extension: str) -> str:
    name = name.replace("\\", "/")
    if "/" in name or name.endswith(extension):
        return name
    return name.replace(".", "/") + extension


def lookup(db: SourceCodeDatabase, name: str, warnings: list | None = None) -> str | None:
    """Relative path of the file backing ``name``, or None."""
    res = db.resolution
    if res.strategy is Strategy.EXACT_PATH:
        return db._find(name.replace("\\", "/"))
    if res.strategy is Strategy.JAVA_PACKAGE:
        return db._find(name)

    suffix = _name_as_path(name, res.source_extension).lstrip("/")
    candidates = db._find(PurePosixPath(suffix).name)
    if not candidates:
        return None
    hits = [p for p in candidates if p == suffix or p.endswith("/" + suffix)]
    if len(hits) == 1:
        return hits[0]
    if len(hits) > 1:
        warn("ambiguous-name", f"version={db.version} name={name} "
             f"candidates={','.join(hits)}", warnings)
    return None


def export_index_csv(db: SourceCodeDatabase, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["name", "codePath"])
        writer.writerows(db.entries())


@dataclass
class Manifest:
    """Version roots for one project.

    File format, one directive per line (``#`` comments allowed)::

        project <name>
        version <id> <source-root>
        dataset <id> <csv-path>

    ``version`` lines are given in release order.  Relative paths resolve
    against the manifest's directory.  A version without a ``dataset`` line
    uses ``<id>.csv`` next to the manifest.
    """

    path: Path
    project: str = ""
    versions: list[tuple[str, Path]] = field(default_factory=list)
    datasets: dict[str, Path] = field(default_factory=dict)

    @property
    def version_ids(self) -> list[str]:
        return [v for v, _ in self.versions]

    def dataset_path(self, version: str) -> Path:
        return self.datasets.get(version, self.path.parent / f"{version}.csv")


def parse_manifest(text: str, path: str | Path) -> Manifest:
    path = Path(path)
    base = path.parent
    m = Manifest(path=path, project=path.parent.name)
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 2)
        kind = parts[0]
        if kind == "project" and len(parts) >= 2:
            m.project = line.split(None, 1)[1].strip()
        elif kind in ("version", "dataset") and len(parts) == 3:
            vid, target = parts[1], Path(parts[2].strip())
            target = target if target.is_absolute() else base / target
            if kind == "version":
                if vid in seen:
                    raise ConfigError(f"{path}:{lineno}: duplicate version {vid!r}")
                seen.add(vid)
                m.versions.append((vid, target))
            else:
                m.datasets[vid] = target
        else:
            raise ConfigError(f"{path}:{lineno}: cannot parse manifest line {line!r}")
    unknown = set(m.datasets) - seen
    if unknown:
        raise ConfigError(f"{path}: dataset lines for undeclared versions: {sorted(unknown)}")
    if not m.versions:
        raise ConfigError(f"{path}: manifest declares no versions")
    return m


def read_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    return parse_manifest(path.read_text(encoding="utf-8"), path)
