"""Three-stage inconsistent label identification.

Stage 1 builds an information table of every dataset instance whose source
file can be found.  Stage 2 groups the table by module name and, inside each
group with more than one label, partitions members by normalized source
text; every class of identical code with mixed labels is marked YES.
Stage 3 copies the verdicts back onto the datasets, using NA for instances
without usable source.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import groupby
from pathlib import Path
from typing import Mapping, Sequence

from .codeindex import Manifest, NameResolution, SourceCodeDatabase, build_index, lookup
from .dataset import (
    ILFlag,
    MultiVersionDataset,
    SchemaConfig,
    load_version_dataset,
)
from .diagnostics import warn
from .errors import ConfigError, StateError
from .normalize import C_FAMILY, LanguageProfile, normalize

BY_NAME = "by-name"
BY_VERSION = "by-version"

NA_MISSING = "source-not-found"
NA_EMPTY = "empty-code"
NA_UNREADABLE = "unreadable"


@dataclass(frozen=True)
class ModuleInfoRecord:
    name: str
    version: str
    code_path: str
    defect_label: int
    is_inconsistent: ILFlag = ILFlag.NO
    release_order: int = 0
    root: Path | None = None
    na_reason: str | None = None

    @property
    def flag(self) -> ILFlag:
        return ILFlag.NA if self.na_reason else self.is_inconsistent

    @property
    def full_path(self) -> Path:
        return (self.root / self.code_path) if self.root is not None else Path(self.code_path)


@dataclass(frozen=True)
class ModuleInfoTable:
    records: tuple[ModuleInfoRecord, ...]
    ordering: str = BY_NAME

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


@dataclass
class RunReport:
    project: str
    versions: list[dict] = field(default_factory=list)
    totals: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_dict(self, include_timings: bool = False) -> dict:
        d = {
            "project": self.project,
            "versions": self.versions,
            "totals": self.totals,
            "warnings": [str(w) for w in self.warnings],
        }
        if include_timings:
            d["timings"] = self.timings
        return d


def _by_name_key(r: ModuleInfoRecord):
    return (r.name, r.release_order)


def stage1_build_table(
    datasets: MultiVersionDataset,
    dbs: Mapping[str, SourceCodeDatabase],
    warnings: list | None = None,
) -> ModuleInfoTable:
    versions = [v.version for v in datasets]
    if set(versions) != set(dbs):
        missing = sorted(set(versions) - set(dbs))
        extra = sorted(set(dbs) - set(versions))
        raise ConfigError(f"dataset/database versions differ: missing={missing} extra={extra}")
    records = []
    for ds in datasets:
        db = dbs[ds.version]
        for inst in ds.instances:
            path = lookup(db, inst.name, warnings)
            if path is None:
                continue
            records.append(ModuleInfoRecord(
                name=inst.name, version=ds.version, code_path=path,
                defect_label=inst.label, release_order=ds.release_order, root=db.root,
            ))
    records.sort(key=_by_name_key)
    return ModuleInfoTable(tuple(records), BY_NAME)


def _read_code(rec: ModuleInfoRecord, profile: LanguageProfile, warnings: list | None):
    try:
        raw = rec.full_path.read_bytes().decode("utf-8", errors="replace")
    except OSError as exc:
        warn("unreadable-source", f"version={rec.version} name={rec.name} "
             f"path={rec.code_path} error={exc.strerror or exc}", warnings)
        return None
    return normalize(raw, profile, source=f"{rec.version}:{rec.code_path}", warnings=warnings)


def _mark_group(
    group: list[ModuleInfoRecord],
    profile: LanguageProfile,
    warnings: list | None,
) -> list[ModuleInfoRecord]:
    if len({r.defect_label for r in group}) == 1:
        return group

    out = list(group)
    # digest -> list of (text, member indices); text confirms digest equality.
    classes: dict[str, list[tuple[str, list[int]]]] = {}
    for i, rec in enumerate(group):
        code = _read_code(rec, profile, warnings)
        if code is None:
            out[i] = replace(rec, na_reason=NA_UNREADABLE)
            continue
        if code.empty:
            out[i] = replace(rec, na_reason=NA_EMPTY)
            continue
        buckets = classes.setdefault(code.digest, [])
        for text, members in buckets:
            if text == code.text:
                members.append(i)
                break
        else:
            buckets.append((code.text, [i]))

    for buckets in classes.values():
        for _, members in buckets:
            if len({group[i].defect_label for i in members}) > 1:
                for i in members:
                    out[i] = replace(out[i], is_inconsistent=ILFlag.YES)
    return out


def stage2_mark_inconsistent(
    table: ModuleInfoTable,
    profile: LanguageProfile = C_FAMILY,
    *,
    warnings: list | None = None,
    workers: int = 1,
) -> ModuleInfoTable:
    if table.ordering != BY_NAME:
        raise StateError("stage 2 needs the information table sorted by name")
    groups = [list(g) for _, g in groupby(table.records, key=lambda r: r.name)]

    # Each worker gets its own warning list; merged in group order afterwards.
    def work(group):
        local: list = []
        return _mark_group(group, profile, local), local

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, groups))
    else:
        results = [work(g) for g in groups]

    records = []
    for marked, local in results:
        records.extend(marked)
        if warnings is not None:
            warnings.extend(local)
    return ModuleInfoTable(tuple(records), BY_NAME)


def stage3_augment(
    datasets: MultiVersionDataset,
    table: ModuleInfoTable,
) -> tuple[MultiVersionDataset, ModuleInfoTable]:
    by_version = ModuleInfoTable(
        tuple(sorted(table.records, key=lambda r: (r.release_order, r.name))), BY_VERSION,
    )
    current = {
        v: {r.name: r for r in recs}
        for v, recs in groupby(by_version.records, key=lambda r: r.version)
    }
    augmented = []
    for ds in datasets:
        recs = current.get(ds.version, {})
        flags = {}
        for inst in ds.instances:
            rec = recs.get(inst.name)
            flags[inst.name] = rec.flag if rec is not None else ILFlag.NA
        augmented.append(ds.with_flags(flags))
    return MultiVersionDataset(datasets.project, tuple(augmented)), by_version


def build_databases(
    roots: Mapping[str, Path] | Sequence[tuple[str, Path]],
    resolution: NameResolution,
    *,
    warnings: list | None = None,
    workers: int = 1,
) -> dict[str, SourceCodeDatabase]:
    items = list(roots.items()) if isinstance(roots, Mapping) else list(roots)

    def one(item):
        local: list = []
        vid, root = item
        return vid, build_index(root, resolution, version=vid, warnings=local), local

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(i) for i in items]
    dbs = {}
    for vid, db, local in results:
        dbs[vid] = db
        if warnings is not None:
            warnings.extend(local)
    return dbs


def load_project(
    manifest: Manifest,
    schema: SchemaConfig,
    warnings: list | None = None,
) -> MultiVersionDataset:
    versions = []
    for order, vid in enumerate(manifest.version_ids):
        versions.append(load_version_dataset(
            manifest.dataset_path(vid), schema, version=vid,
            project=manifest.project, release_order=order, warnings=warnings,
        ))
    return MultiVersionDataset(manifest.project, tuple(versions))


def run_tsili(
    datasets: MultiVersionDataset,
    roots: Manifest | Mapping[str, Path],
    resolution: NameResolution = NameResolution(),
    profile: LanguageProfile = C_FAMILY,
    *,
    workers: int = 1,
) -> tuple[MultiVersionDataset, ModuleInfoTable, RunReport]:
    """Run all three stages and summarize what was matched and flagged."""
    if len(datasets) < 1:
        raise ConfigError("at least one version is required")
    if isinstance(roots, Manifest):
        roots = dict(roots.versions)
    warnings: list = []
    timings = {}

    t0 = time.perf_counter()
    dbs = build_databases(roots, resolution, warnings=warnings, workers=workers)
    table = stage1_build_table(datasets, dbs, warnings)
    t1 = time.perf_counter()
    table = stage2_mark_inconsistent(table, profile, warnings=warnings, workers=workers)
    t2 = time.perf_counter()
    augmented, table = stage3_augment(datasets, table)
    t3 = time.perf_counter()
    timings = {"stage1": t1 - t0, "stage2": t2 - t1, "stage3": t3 - t2}

    matched = {}
    for r in table.records:
        matched[r.version] = matched.get(r.version, 0) + 1
    per_version = []
    totals = {"instances": 0, "matched": 0, "YES": 0, "NO": 0, "NA": 0}
    for ds in augmented:
        counts = {f.value: 0 for f in (ILFlag.YES, ILFlag.NO, ILFlag.NA)}
        for inst in ds.instances:
            counts[inst.il_flag.value] += 1
        n = len(ds)
        m = matched.get(ds.version, 0)
        per_version.append({
            "version": ds.version,
            "instances": n,
            "matched": m,
            "coverage": (m / n) if n else None,
            "databaseSize": len(dbs[ds.version]),
            **counts,
        })
        totals["instances"] += n
        totals["matched"] += m
        for k, v in counts.items():
            totals[k] += v
    report = RunReport(datasets.project, per_version, totals, warnings, timings)
    return augmented, table, report


MODULE_INFO_COLUMNS = ("name", "version", "codePath", "defectLabel", "isInconsistentLabel")


def write_module_info(table: ModuleInfoTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MODULE_INFO_COLUMNS)
        for r in table.records:
            writer.writerow([r.name, r.version, r.code_path, r.defect_label, r.flag.value])
