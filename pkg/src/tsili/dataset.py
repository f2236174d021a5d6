"""Loading, validating and writing per-version defect datasets.

A dataset file is a delimited text file with a header row.  Each data row
becomes an :class:`Instance`.  The raw record text is kept alongside the
parsed cells so that writing the augmented file reproduces every original
byte and only appends the ``isInconsistentLabel`` cell.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .diagnostics import warn
from .errors import RowError, SchemaError, StateError

IL_COLUMN = "isInconsistentLabel"


class ILFlag(str, enum.Enum):
    NO = "NO"
    YES = "YES"
    NA = "NA"
    UNSET = "UNSET"


@dataclass(frozen=True)
class SchemaConfig:
    """Which columns hold the instance name, defect label and size.

    Column references may carry a 1-based occurrence suffix, ``name[2]``,
    for files whose header repeats a column name.
    """

    name: str = "name"
    label: str = "bug"
    sloc: str | None = None
    exclude: frozenset[str] = frozenset()
    delimiter: str = ","


PRESETS: dict[str, SchemaConfig] = {
    "default": SchemaConfig(),
    "eclipse-2007": SchemaConfig(
        name="filename", label="post", sloc="TLOC",
        exclude=frozenset({"plugin"}), delimiter=";",
    ),
    # The PROMISE header is "name,version,name,..." where the first name
    # column is the project and the second the class.
    "metrics-repo-2010": SchemaConfig(
        name="name[2]", label="bug", sloc="loc",
        exclude=frozenset({"name", "version"}),
    ),
    "jira-ha-2019": SchemaConfig(
        name="File", label="HeuBugCount", sloc="CountLineCode",
        exclude=frozenset({"HeuBug", "RealBug", "RealBugCount"}),
    ),
    "jira-ra-2019": SchemaConfig(
        name="File", label="RealBugCount", sloc="CountLineCode",
        exclude=frozenset({"HeuBug", "RealBug", "HeuBugCount"}),
    ),
    "ma-szz-2020": SchemaConfig(
        name="relName", label="bug", sloc="CountLineCode",
    ),
}

_DELIMITER_NAMES = {"comma": ",", "semicolon": ";", "tab": "\t", "pipe": "|"}


def parse_schema_text(text: str) -> SchemaConfig:
    """Parse a schema config file.

    One ``key = value`` pair per line, ``#`` starts a comment.  Keys:
    ``preset`` (base preset to extend), ``name``, ``label``, ``sloc``,
    ``exclude`` (comma separated) and ``delimiter`` (a single character or
    one of comma/semicolon/tab/pipe).
    """
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, sep, value = line.partition(":")
        if not sep:
            raise SchemaError(f"schema line {lineno}: expected 'key = value'")
        values[key.strip().lower()] = value.strip()

    unknown = set(values) - {"preset", "name", "label", "sloc", "exclude", "delimiter"}
    if unknown:
        raise SchemaError(f"unknown schema keys: {', '.join(sorted(unknown))}")

    base = PRESETS["default"]
    if "preset" in values:
        base = get_preset(values["preset"])
    kwargs: dict = {}
    if "name" in values:
        kwargs["name"] = values["name"]
    if "label" in values:
        kwargs["label"] = values["label"]
    if "sloc" in values:
        kwargs["sloc"] = values["sloc"] or None
    if "exclude" in values:
        kwargs["exclude"] = frozenset(c.strip() for c in values["exclude"].split(",") if c.strip())
    if "delimiter" in values:
        d = _DELIMITER_NAMES.get(values["delimiter"].lower(), values["delimiter"])
        if len(d) != 1:
            raise SchemaError(f"delimiter must be one character, got {values['delimiter']!r}")
        kwargs["delimiter"] = d
    return replace(base, **kwargs)


def get_preset(name: str) -> SchemaConfig:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise SchemaError(
            f"unknown schema preset {name!r} (known: {', '.join(sorted(PRESETS))})"
        ) from None


def resolve_schema(spec: str | None) -> SchemaConfig:
    """A preset name or a path to a schema file."""
    if spec is None:
        return PRESETS["default"]
    if spec.lower() in PRESETS:
        return PRESETS[spec.lower()]
    path = Path(spec)
    if not path.is_file():
        raise SchemaError(f"schema {spec!r} is neither a preset nor a readable file")
    return parse_schema_text(path.read_text(encoding="utf-8", errors="replace"))


@dataclass(frozen=True)
class Instance:
    name: str
    label: int
    features: Mapping[str, float] = field(default_factory=dict)
    sloc: int | None = None
    il_flag: ILFlag = ILFlag.UNSET
    row: tuple[str, ...] = ()
    raw: str = ""

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.sloc is not None and self.sloc < 0:
            raise ValueError(f"sloc must be non-negative, got {self.sloc}")


@dataclass(frozen=True)
class VersionDataset:
    project: str
    version: str
    release_order: int
    instances: tuple[Instance, ...]
    header: tuple[str, ...] = ()
    header_raw: str = ""
    delimiter: str = ","
    il_index: int | None = None

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def names(self) -> list[str]:
        return [inst.name for inst in self.instances]

    def with_flags(self, flags: Mapping[str, ILFlag]) -> "VersionDataset":
        return replace(
            self,
            instances=tuple(replace(i, il_flag=flags[i.name]) for i in self.instances),
        )


@dataclass(frozen=True)
class MultiVersionDataset:
    project: str
    versions: tuple[VersionDataset, ...]

    def __post_init__(self):
        orders = [v.release_order for v in self.versions]
        if orders != sorted(orders) or len(set(orders)) != len(orders):
            raise ValueError("versions must be strictly ordered by release_order")

    def __iter__(self) -> Iterator[VersionDataset]:
        return iter(self.versions)

    def __len__(self) -> int:
        return len(self.versions)

    def by_version(self) -> dict[str, VersionDataset]:
        return {v.version: v for v in self.versions}


_COLREF = re.compile(r"^(.*)\[(\d+)\]$")


def _column_index(header: Sequence[str], ref: str) -> int:
    m = _COLREF.match(ref)
    col, nth = (m.group(1), int(m.group(2))) if m else (ref, 1)
    hits = [i for i, h in enumerate(header) if h.strip() == col]
    if len(hits) < nth or nth < 1:
        raise SchemaError(f"missing column {ref!r}")
    return hits[nth - 1]


class _LineRecorder:
    """Line iterator that remembers the raw lines consumed by csv.reader."""

    def __init__(self, lines: list[str]):
        self._it = iter(lines)
        self.taken: list[str] = []

    def __iter__(self):
        return self

    def __next__(self) -> str:
        line = next(self._it)
        self.taken.append(line)
        return line

    def pop(self) -> str:
        raw = "".join(self.taken)
        self.taken = []
        return raw


def _parse_label(cell: str, row: int) -> int:
    try:
        value = float(cell.strip())
    except ValueError:
        raise RowError(row, f"non-numeric label {cell!r}") from None
    if math.isnan(value) or value < 0:
        raise RowError(row, f"label must be a non-negative number, got {cell!r}")
    return 1 if value > 0 else 0


def _parse_sloc(cell: str, row: int) -> int | None:
    cell = cell.strip()
    if not cell:
        return None
    try:
        value = float(cell)
    except ValueError:
        raise RowError(row, f"non-numeric sloc {cell!r}") from None
    if math.isnan(value) or value < 0:
        raise RowError(row, f"sloc must be non-negative, got {cell!r}")
    return int(value)


def _parse_flag(cell: str, row: int) -> ILFlag:
    cell = cell.strip()
    if not cell:
        return ILFlag.UNSET
    try:
        flag = ILFlag(cell.upper())
    except ValueError:
        raise RowError(row, f"invalid {IL_COLUMN} value {cell!r}") from None
    if flag is ILFlag.UNSET:
        raise RowError(row, f"invalid {IL_COLUMN} value {cell!r}")
    return flag


def parse_version_dataset(
    text: str,
    schema: SchemaConfig,
    *,
    version: str,
    project: str = "",
    release_order: int = 0,
    warnings: list | None = None,
) -> VersionDataset:
    # str.splitlines also breaks on form feeds and unicode separators.
    lines = [ln for ln in re.split(r"(?<=\r\n)|(?<=\n)|(?<=\r)(?!\n)", text) if ln]
    rec = _LineRecorder(lines)
    reader = csv.reader(rec, delimiter=schema.delimiter)
    try:
        header = tuple(next(reader))
    except StopIteration:
        raise SchemaError("dataset has no header row") from None
    header_raw = rec.pop()

    name_idx = _column_index(header, schema.name)
    label_idx = _column_index(header, schema.label)
    sloc_idx = _column_index(header, schema.sloc) if schema.sloc else None
    il_idx = next((i for i, h in enumerate(header) if h.strip() == IL_COLUMN), None)
    reserved = {name_idx, label_idx, sloc_idx, il_idx}
    feature_idx = [
        i for i, h in enumerate(header)
        if i not in reserved and h.strip() not in schema.exclude
    ]

    instances: list[Instance] = []
    seen: set[str] = set()
    for row_no, cells in enumerate(reader, 1):
        raw = rec.pop()
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) < len(header):
            raise RowError(row_no, f"expected {len(header)} cells, got {len(cells)}")
        name = cells[name_idx].strip()
        label = _parse_label(cells[label_idx], row_no)
        sloc = _parse_sloc(cells[sloc_idx], row_no) if sloc_idx is not None else None
        flag = _parse_flag(cells[il_idx], row_no) if il_idx is not None else ILFlag.UNSET
        if name in seen:
            warn("duplicate-name", f"version={version} row={row_no} name={name}", warnings)
            continue
        seen.add(name)
        features: dict[str, float] = {}
        for i in feature_idx:
            key = header[i].strip()
            if key in features:
                continue
            try:
                features[key] = float(cells[i])
            except ValueError:
                pass
        instances.append(Instance(
            name=name, label=label, features=features, sloc=sloc,
            il_flag=flag, row=tuple(cells), raw=raw,
        ))

    return VersionDataset(
        project=project, version=version, release_order=release_order,
        instances=tuple(instances), header=header, header_raw=header_raw,
        delimiter=schema.delimiter, il_index=il_idx,
    )


def load_version_dataset(
    path: str | Path,
    schema: SchemaConfig,
    *,
    version: str | None = None,
    project: str = "",
    release_order: int = 0,
    warnings: list | None = None,
) -> VersionDataset:
    """Read one version's dataset file.

    Numeric labels above zero become 1 (defect counts are binarized).
    Invalid UTF-8 bytes are replaced rather than rejected.
    """
    path = Path(path)
    text = path.read_bytes().decode("utf-8", errors="replace")
    return parse_version_dataset(
        text, schema,
        version=version if version is not None else path.stem,
        project=project, release_order=release_order, warnings=warnings,
    )


def _require_flags(dataset: VersionDataset, op: str) -> None:
    unset = [i.name for i in dataset.instances if i.il_flag is ILFlag.UNSET]
    if unset:
        raise StateError(
            f"{op}: {len(unset)} instance(s) in version {dataset.version} have no "
            f"{IL_COLUMN} flag (first: {unset[0]}); run detection first"
        )


def clean(dataset: VersionDataset) -> VersionDataset:
    """Drop every instance flagged YES; NO and NA instances are kept."""
    _require_flags(dataset, "clean")
    return replace(
        dataset,
        instances=tuple(i for i in dataset.instances if i.il_flag is not ILFlag.YES),
    )


def _split_terminator(raw: str) -> tuple[str, str]:
    for term in ("\r\n", "\n", "\r"):
        if raw.endswith(term):
            return raw[: -len(term)], term
    return raw, ""


def render_augmented(dataset: VersionDataset) -> str:
    _require_flags(dataset, "write")
    d = dataset.delimiter
    if dataset.il_index is None:
        body, term = _split_terminator(dataset.header_raw)
        out = [body + d + IL_COLUMN + (term or "\n")]
        for inst in dataset.instances:
            body, term = _split_terminator(inst.raw)
            out.append(body + d + inst.il_flag.value + (term or "\n"))
        return "".join(out)

    # Source already carried the column: rewrite that cell in place.
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=d, lineterminator="\n")
    writer.writerow(dataset.header)
    for inst in dataset.instances:
        cells = list(inst.row)
        cells[dataset.il_index] = inst.il_flag.value
        writer.writerow(cells)
    return buf.getvalue()


def write_augmented_dataset(dataset: VersionDataset, path: str | Path) -> None:
    """Write the dataset with a trailing ``isInconsistentLabel`` column."""
    text = render_augmented(dataset)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
