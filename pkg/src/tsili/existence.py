"""Prevalence of inconsistent labels per version and across datasets."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Mapping, Sequence

from .dataset import ILFlag, VersionDataset
from .errors import StateError

RATIOS = ("ilinAll", "ilinBuggy", "ilinClean")
_TITLES = {"ilinAll": "ILinAll", "ilinBuggy": "ILinBuggy", "ilinClean": "ILinClean"}


@dataclass(frozen=True)
class Counts:
    total: int
    buggy: int
    clean: int
    yes_all: int
    yes_buggy: int
    yes_clean: int
    na: int


@dataclass(frozen=True)
class ExistenceReport:
    version: str
    ilinAll: float | None
    ilinBuggy: float | None
    ilinClean: float | None
    counts: Counts

    def to_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = asdict(self.counts)
        return d


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def existence_ratios(dataset: VersionDataset) -> ExistenceReport:
    """ILinAll, ILinBuggy and ILinClean for one augmented version.

    NA-flagged instances count in the denominators but never as YES.
    """
    total = buggy = yes_b = yes_c = na = 0
    for inst in dataset.instances:
        if inst.il_flag is ILFlag.UNSET:
            raise StateError(f"version {dataset.version}: instance {inst.name} has no flag")
        total += 1
        buggy += inst.label
        if inst.il_flag is ILFlag.YES:
            if inst.label:
                yes_b += 1
            else:
                yes_c += 1
        elif inst.il_flag is ILFlag.NA:
            na += 1
    clean = total - buggy
    counts = Counts(total, buggy, clean, yes_b + yes_c, yes_b, yes_c, na)
    return ExistenceReport(
        version=dataset.version,
        ilinAll=_ratio(yes_b + yes_c, total),
        ilinBuggy=_ratio(yes_b, buggy),
        ilinClean=_ratio(yes_c, clean),
        counts=counts,
    )


@dataclass(frozen=True)
class RatioSummary:
    versions: int
    nonzero: int
    mean: float | None
    low: float | None
    high: float | None

    @property
    def nonzero_fraction(self) -> float:
        return self.nonzero / self.versions if self.versions else 0.0


def _summarize(values: Sequence[float | None]) -> RatioSummary:
    present = [v for v in values if v is not None]
    nonzero = sum(1 for v in present if v != 0)
    if not present:
        return RatioSummary(len(values), 0, None, None, None)
    return RatioSummary(len(values), nonzero, sum(present) / len(present), min(present), max(present))


@dataclass
class SummaryReport:
    """Table-2 shaped summary: one row per dataset plus pooled rows."""

    rows: dict[str, dict[str, RatioSummary]] = field(default_factory=dict)
    overall: dict[str, RatioSummary] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def conv(d):
            return {k: {**asdict(v), "nonzeroFraction": v.nonzero_fraction} for k, v in d.items()}

        return {
            "datasets": {name: conv(r) for name, r in self.rows.items()},
            "overall": conv(self.overall),
        }


def aggregate(
    reports: Sequence[ExistenceReport] | Mapping[str, Sequence[ExistenceReport]],
) -> SummaryReport:
    """Per-dataset and pooled summaries.

    A bare sequence is treated as a single dataset named ``dataset``.  The
    pooled row weights every version equally, across all datasets.
    """
    groups = dict(reports) if isinstance(reports, Mapping) else {"dataset": list(reports)}
    if not any(groups.values()):
        raise ValueError("aggregate needs at least one report")
    out = SummaryReport()
    pooled: list[ExistenceReport] = []
    for name, reps in groups.items():
        pooled.extend(reps)
        out.rows[name] = {r: _summarize([getattr(x, r) for x in reps]) for r in RATIOS}
    out.overall = {r: _summarize([getattr(x, r) for x in pooled]) for r in RATIOS}
    return out


def percent(value: float | None) -> str:
    """Integer percent, half-to-even; zero prints as ``0`` like the usual table."""
    if value is None:
        return "NA"
    p = Decimal(repr(value)) * 100
    n = int(p.quantize(Decimal(1), rounding=ROUND_HALF_EVEN))
    return "0" if n == 0 and value == 0 else f"{n}%"


def _cell_avg(s: RatioSummary) -> str:
    if s.mean is None:
        return "NA"
    return f"{percent(s.mean)} ({percent(s.low)}~{percent(s.high)})"


def to_markdown(summary: SummaryReport) -> str:
    head = ["Dataset"]
    for r in RATIOS:
        head += [f"#versions({_TITLES[r]} ≠ 0)/#versions", f"Average {_TITLES[r]} (range)"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for name, row in summary.rows.items():
        cells = [name]
        for r in RATIOS:
            s = row[r]
            cells += [f"{s.nonzero}/{s.versions}", _cell_avg(s)]
        lines.append("| " + " | ".join(cells) + " |")
    avg = ["Average ratio"]
    allv = ["All versions"]
    for r in RATIOS:
        s = summary.overall[r]
        avg += ["", percent(s.mean)]
        allv += [f"{s.nonzero}/{s.versions}", ""]
    lines.append("| " + " | ".join(avg) + " |")
    lines.append("| " + " | ".join(allv) + " |")
    return "\n".join(lines) + "\n"
