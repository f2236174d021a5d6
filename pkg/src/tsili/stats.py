"""Bootstrap intervals, PAD cut-offs, DTP and feature-rank shifts."""
from __future__ import annotations

import csv
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import SchemaError
from .metrics import PredictionSet, effort_prefix

OOM = "OOM"


@dataclass(frozen=True)
class BootstrapCI:
    mean: float
    stddev: float
    lower: float
    upper: float
    replicates: int
    seed: int
    level: float = 0.95
    sample_mean: float = math.nan
    sample_stddev: float = math.nan

    def to_dict(self) -> dict:
        return {
            "replicateMean": self.mean,
            "replicateStdDev": self.stddev,
            "lower": self.lower,
            "upper": self.upper,
            "level": self.level,
            "replicates": self.replicates,
            "seed": self.seed,
            "sampleMean": self.sample_mean,
            "sampleStdDev": self.sample_stddev,
            "significant": significant(self),
        }


def _replicate_means(values: np.ndarray, seeds: Sequence[np.random.SeedSequence]) -> np.ndarray:
    n = len(values)
    lo, hi = values.min(), values.max()
    out = np.empty(len(seeds))
    for j, ss in enumerate(seeds):
        idx = np.random.default_rng(ss).integers(0, n, size=n)
        # Clipping only absorbs rounding; a resample mean is always within [min, max].
        out[j] = min(max(values[idx].mean(), lo), hi)
    return out


def bootstrap_ci(
    values: Iterable[float],
    replicates: int = 1000,
    level: float = 0.95,
    *,
    seed: int,
    workers: int = 1,
) -> BootstrapCI:
    """Percentile bootstrap interval for the mean.

    Replicate ``j`` draws from its own generator spawned off ``seed``, so
    the result does not depend on ``workers``.
    """
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValueError("bootstrap_ci needs at least one value")
    if replicates < 1:
        raise ValueError("replicates must be positive")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")

    seeds = np.random.SeedSequence(seed).spawn(replicates)
    if workers > 1:
        chunks = np.array_split(np.arange(replicates), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda c: _replicate_means(arr, [seeds[i] for i in c]), chunks))
        stats = np.concatenate(parts)
    else:
        stats = _replicate_means(arr, seeds)

    alpha = (1 - level) / 2
    lower, upper = np.percentile(stats, [100 * alpha, 100 * (1 - alpha)], method="linear")
    return BootstrapCI(
        mean=float(stats.mean()),
        stddev=float(stats.std(ddof=1)) if replicates > 1 else 0.0,
        lower=float(lower),
        upper=float(upper),
        replicates=replicates,
        seed=seed,
        level=level,
        sample_mean=float(arr.mean()),
        sample_stddev=float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
    )


def significant(ci: BootstrapCI) -> bool:
    """Zero outside the closed interval [lower, upper]."""
    return not (ci.lower <= 0 <= ci.upper)


# -- PAD cut-offs ---------------------------------------------------------

@dataclass(frozen=True)
class Cutoff:
    kind: str  # "binary", "size" or "top"
    value: float

    @property
    def label(self) -> str:
        if self.kind == "binary":
            return "binary" if self.value == 0.5 else f"binary({self.value:g})"
        pct = _pct(self.value)
        return f"{pct}% size" if self.kind == "size" else f"top {pct}%"

    @property
    def needs_sloc(self) -> bool:
        return self.kind == "size"


def _pct(value: float) -> str:
    p = Fraction(str(value)) * 100
    return str(p.numerator) if p.denominator == 1 else f"{float(p):g}"


DEFAULT_CUTOFFS = (
    Cutoff("binary", 0.5),
    Cutoff("size", 0.2),
    Cutoff("top", 0.1),
    Cutoff("top", 0.2),
    Cutoff("top", 0.3),
)

_CUTOFF_RE = re.compile(r"^(binary|size|top)(?:(:)?([0-9]*\.?[0-9]+))?$")


def parse_cutoff(text: str) -> Cutoff:
    """Parse a cut-off token.

    ``binary`` (threshold 0.5) or ``binary:0.6``; ``size20`` / ``top10`` give
    percentages, ``size:0.2`` / ``top:0.1`` give fractions.
    """
    m = _CUTOFF_RE.match(text.strip().lower())
    if not m:
        raise ValueError(f"cannot parse cutoff {text!r}")
    kind, colon, num = m.groups()
    if kind == "binary":
        if num and not colon:
            raise ValueError(f"binary threshold needs a colon: {text!r}")
        return Cutoff("binary", float(num) if num else 0.5)
    if not num:
        raise ValueError(f"cutoff {text!r} needs a percentage")
    value = Fraction(num) if colon else Fraction(num) / 100
    if not 0 < value <= 1:
        raise ValueError(f"cutoff fraction out of range in {text!r}")
    return Cutoff(kind, float(value))


def select_pad(preds: PredictionSet, cutoff: Cutoff) -> list[str]:
    """Names predicted as defective under ``cutoff``, in ranking order."""
    ranked = preds.ranked()
    if cutoff.kind == "binary":
        return [r.name for r in ranked if r.score > cutoff.value]
    if cutoff.kind == "size":
        if not preds.has_sloc:
            raise ValueError("size cut-off needs sloc >= 1 for every instance")
        return [r.name for r in effort_prefix(ranked, cutoff.value)]
    k = math.floor(Fraction(str(cutoff.value)) * len(ranked))
    return [r.name for r in ranked[:k]]


def true_positives(preds: PredictionSet, pad: Iterable[str]) -> set[str]:
    defective = {r.name for r in preds.records if r.actual}
    return set(pad) & defective


def dtp(tp_nc: set[str], tp_cc: set[str]) -> float | None:
    """1 - Jaccard similarity of the two true-positive sets; NA if both empty."""
    union = tp_nc | tp_cc
    if not union:
        return None
    # One division, so 2/3 comes out as the nearest float rather than 1 - 0.333...
    return (len(union) - len(tp_nc & tp_cc)) / len(union)


# -- feature rank shift ---------------------------------------------------

@dataclass(frozen=True)
class ShiftReport:
    shifts: dict[int, int | str] = field(default_factory=dict)

    def __getitem__(self, k: int):
        return self.shifts[k]


def shift_ranks(importance_cc: Sequence[str], importance_nc: Sequence[str], top_k: int = 3) -> ShiftReport:
    """shift(k) = k - rank of CC's k-th feature in NC, or OOM when NC lacks it."""
    nc_rank = {}
    for i, f in enumerate(importance_nc, 1):
        nc_rank.setdefault(f, i)
    shifts: dict[int, int | str] = {}
    for k, feature in enumerate(importance_cc[:top_k], 1):
        shifts[k] = k - nc_rank[feature] if feature in nc_rank else OOM
    return ShiftReport(shifts)


SHIFT_BINS = ("positive", "0", "negative_in_top3", "out_of_top3", OOM)


def shift_bin(k: int, value: int | str, top: int = 3) -> str:
    """Bin for a shift at CC rank k; 'in top 3' means NC rank <= 3."""
    if value == OOM:
        return OOM
    if value == 0:
        return "0"
    if value > 0:
        return "positive"
    return "negative_in_top3" if k - value <= top else "out_of_top3"


def shift_distribution(reports: Sequence[ShiftReport], top_k: int = 3) -> dict[int, dict[str, float]]:
    """Proportion of reports falling in each bin, per CC rank k."""
    if not reports:
        raise ValueError("shift_distribution needs at least one report")
    out: dict[int, dict[str, float]] = {}
    for k in range(1, top_k + 1):
        counts = dict.fromkeys(SHIFT_BINS, 0)
        n = 0
        for rep in reports:
            if k in rep.shifts:
                counts[shift_bin(k, rep.shifts[k])] += 1
                n += 1
        if n:
            out[k] = {b: c / n for b, c in counts.items()}
    return out


def shift_counts(reports: Sequence[ShiftReport], top_k: int = 3) -> dict[int, dict[str, int]]:
    out = {}
    for k in range(1, top_k + 1):
        counts = dict.fromkeys(SHIFT_BINS, 0)
        for rep in reports:
            if k in rep.shifts:
                counts[shift_bin(k, rep.shifts[k])] += 1
        out[k] = counts
    return out


def write_shift_histogram(reports: Sequence[ShiftReport], path: str | Path, top_k: int = 3) -> None:
    counts = shift_counts(reports, top_k)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "bin", "count", "proportion"])
        for k, bins in counts.items():
            n = sum(bins.values())
            for b, c in bins.items():
                w.writerow([k, b, c, f"{c / n:.6f}" if n else "NA"])


def load_importance(path: str | Path) -> list[str]:
    """Features ordered by rank from a ``rank,feature`` file."""
    with open(path, encoding="utf-8", errors="replace", newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or {"rank", "feature"} - set(reader.fieldnames):
            raise SchemaError(f"{path}: expected columns rank,feature")
        rows = []
        for i, row in enumerate(reader, 1):
            try:
                rows.append((float(row["rank"]), i, row["feature"].strip()))
            except ValueError:
                raise SchemaError(f"{path}: row {i}: non-numeric rank {row['rank']!r}") from None
    return [f for _, _, f in sorted(rows)]
