"""Classification and ranking indicators, random-model baselines, diff/pgr.

Indicators are reported under the names F1, AUC, ER, RI, AP, RR, Popt and
ACC.  ``None`` stands for NA wherever an indicator is undefined.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import BoundError, RowError, SchemaError

INDICATORS = ("F1", "AUC", "ER", "RI", "AP", "RR", "Popt", "ACC")
BRUTE_FORCE_MAX_N = 12


@dataclass(frozen=True)
class Prediction:
    name: str
    actual: int
    score: float
    sloc: int | None = None


class PredictionSet:
    """Scored test instances from an externally trained model."""

    def __init__(self, records: Iterable[Prediction]):
        self.records: tuple[Prediction, ...] = tuple(records)
        seen = set()
        for r in self.records:
            if r.name in seen:
                raise ValueError(f"duplicate instance name {r.name!r}")
            seen.add(r.name)
            if r.actual not in (0, 1):
                raise ValueError(f"{r.name}: actual must be 0 or 1")
            if not 0.0 <= r.score <= 1.0:
                raise ValueError(f"{r.name}: score {r.score} outside [0, 1]")

    @classmethod
    def from_arrays(cls, actual, score, sloc=None, names=None) -> "PredictionSet":
        n = len(actual)
        names = names if names is not None else [f"m{i:06d}" for i in range(n)]
        sloc = sloc if sloc is not None else [None] * n
        return cls(
            Prediction(str(nm), int(a), float(s), None if l is None else int(l))
            for nm, a, s, l in zip(names, actual, score, sloc)
        )

    def __len__(self) -> int:
        return len(self.records)

    @property
    def names(self) -> set[str]:
        return {r.name for r in self.records}

    @property
    def n1(self) -> int:
        return sum(r.actual for r in self.records)

    @property
    def has_sloc(self) -> bool:
        return bool(self.records) and all(r.sloc is not None and r.sloc >= 1 for r in self.records)

    def ranked(self) -> list[Prediction]:
        """Descending score, ties by ascending name."""
        return sorted(self.records, key=lambda r: (-r.score, r.name))


def load_predictions(path: str | Path) -> PredictionSet:
    """Read a ``name,actual,score,sloc`` file; the sloc column may be absent or blank."""
    with open(path, encoding="utf-8", errors="replace", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for col in ("name", "actual", "score"):
            if col not in fields:
                raise SchemaError(f"{path}: missing column {col!r}")
        records = []
        for i, row in enumerate(reader, 1):
            try:
                actual = float(row["actual"])
                score = float(row["score"])
                sloc_cell = (row.get("sloc") or "").strip()
                sloc = int(float(sloc_cell)) if sloc_cell else None
            except ValueError as exc:
                raise RowError(i, str(exc)) from None
            records.append(Prediction(row["name"].strip(), 1 if actual > 0 else 0, score, sloc))
    try:
        return PredictionSet(records)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def n1(self) -> int:
        return self.tp + self.fn

    @property
    def q(self) -> float | None:
        """Actual defect fraction n1/N."""
        return self.n1 / self.n if self.n else None

    @property
    def precision(self) -> float | None:
        pos = self.tp + self.fp
        return self.tp / pos if pos else None

    @property
    def recall(self) -> float | None:
        return self.tp / self.n1 if self.n1 else None


def confusion(preds: PredictionSet, threshold: float = 0.5) -> ConfusionMatrix:
    """An instance is predicted defective only when its score exceeds ``threshold``."""
    tp = fp = tn = fn = 0
    for r in preds.records:
        if r.score > threshold:
            if r.actual:
                tp += 1
            else:
                fp += 1
        elif r.actual:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, tn, fn)


def f1(cm: ConfusionMatrix) -> float:
    p = cm.precision or 0.0
    r = cm.recall or 0.0
    return 2 * p * r / (p + r) if p + r else 0.0


def er(cm: ConfusionMatrix) -> float | None:
    """Effort reduction against a random model reaching the same recall.

    The model inspects TP+FP modules; the random model needs r*N.  Hence
    ER = 1 - (TP+FP)/(r*N), which equals 1 - q/p with q = n1/N.
    """
    if cm.tp == 0:
        return None
    return 1 - (cm.tp + cm.fp) * cm.n1 / (cm.tp * cm.n)


def ri(cm: ConfusionMatrix) -> float | None:
    """Recall increase at equal effort: p/q - 1."""
    q, p = cm.q, cm.precision
    if not q or p is None:
        return None
    return p / q - 1


def auc(preds: PredictionSet) -> float | None:
    """Mann-Whitney estimate; tied scores earn half credit."""
    actual = np.fromiter((r.actual for r in preds.records), dtype=np.int8, count=len(preds))
    score = np.fromiter((r.score for r in preds.records), dtype=float, count=len(preds))
    n1 = int(actual.sum())
    n0 = len(actual) - n1
    if n1 == 0 or n0 == 0:
        return None
    ranks = rankdata(score)
    u = ranks[actual == 1].sum() - n1 * (n1 + 1) / 2
    return float(u / (n1 * n0))


def _average_precision(labels: Sequence[int]) -> float | None:
    n1 = sum(labels)
    if n1 == 0:
        return None
    hits = 0
    total = 0.0
    for i, rel in enumerate(labels, 1):
        if rel:
            hits += 1
            total += hits / i
    return total / n1


def _reciprocal_rank(labels: Sequence[int]) -> float | None:
    for i, rel in enumerate(labels, 1):
        if rel:
            return 1.0 / i
    return None


def _alberg_area(order: Sequence[Prediction], total_sloc: int, n1: int) -> float:
    area = 0.0
    x0 = y0 = 0.0
    cum_s = cum_d = 0
    for r in order:
        cum_s += r.sloc
        cum_d += r.actual
        x1, y1 = cum_s / total_sloc, cum_d / n1
        area += (x1 - x0) * (y0 + y1) / 2
        x0, y0 = x1, y1
    return area


def alberg_curve(order: Sequence[Prediction]) -> tuple[list[float], list[float]]:
    """Cumulative SLOC share vs cumulative defect share, origin included."""
    total = sum(r.sloc for r in order)
    n1 = sum(r.actual for r in order)
    xs, ys = [0.0], [0.0]
    cs = cd = 0
    for r in order:
        cs += r.sloc
        cd += r.actual
        xs.append(cs / total)
        ys.append(cd / n1 if n1 else 0.0)
    return xs, ys


def popt(preds: PredictionSet) -> float | None:
    if not preds.has_sloc:
        return None
    n1 = preds.n1
    if n1 == 0:
        return None
    total = sum(r.sloc for r in preds.records)
    ranked = preds.ranked()
    optimal = sorted(preds.records, key=lambda r: (-r.actual / r.sloc, r.name))
    worst = sorted(preds.records, key=lambda r: (r.actual / r.sloc, r.name))
    a_m = _alberg_area(ranked, total, n1)
    a_opt = _alberg_area(optimal, total, n1)
    a_worst = _alberg_area(worst, total, n1)
    if a_opt == a_worst:
        return None
    return 1 - (a_opt - a_m) / (a_opt - a_worst)


def effort_prefix(ranked: Sequence[Prediction], fraction: float) -> list[Prediction]:
    """Longest ranking prefix whose cumulative SLOC stays within ``fraction`` of the total."""
    frac = Fraction(str(fraction))
    total = sum(r.sloc for r in ranked)
    budget_num, budget_den = frac.numerator * total, frac.denominator
    out = []
    cum = 0
    for r in ranked:
        cum += r.sloc
        if cum * budget_den > budget_num:
            break
        out.append(r)
    return out


def acc(preds: PredictionSet, effort: float = 0.2) -> float | None:
    if not preds.has_sloc:
        return None
    n1 = preds.n1
    if n1 == 0:
        return None
    top = effort_prefix(preds.ranked(), effort)
    return sum(r.actual for r in top) / n1


@dataclass(frozen=True)
class RankMetrics:
    AP: float | None
    RR: float | None
    Popt: float | None
    ACC: float | None


def rank_eval(preds: PredictionSet) -> RankMetrics:
    labels = [r.actual for r in preds.ranked()]
    return RankMetrics(
        AP=_average_precision(labels),
        RR=_reciprocal_rank(labels),
        Popt=popt(preds),
        ACC=acc(preds),
    )


def evaluate(preds: PredictionSet, threshold: float = 0.5) -> dict[str, float | None]:
    """All eight indicators for one prediction set."""
    cm = confusion(preds, threshold)
    rk = rank_eval(preds)
    return {
        "F1": f1(cm),
        "AUC": auc(preds),
        "ER": er(cm),
        "RI": ri(cm),
        "AP": rk.AP,
        "RR": rk.RR,
        "Popt": rk.Popt,
        "ACC": rk.ACC,
    }


# -- random-model baselines -------------------------------------------------

def _check_counts(n: int, n1: int) -> None:
    if n < 1 or not 0 <= n1 <= n:
        raise ValueError(f"need 0 <= n1 <= N and N >= 1, got N={n}, n1={n1}")


def random_ap_exact(n: int, n1: int) -> Fraction | None:
    """Expected AP of a uniformly random ranking, as an exact fraction."""
    _check_counts(n, n1)
    if n1 == 0:
        return None
    total = Fraction(0)
    for i in range(1, n + 1):
        # sum_k k * C(i-1, k-1) * C(N-i, n1-k); the 1/i factor is applied once per i
        s = sum(k * math.comb(i - 1, k - 1) * math.comb(n - i, n1 - k)
                for k in range(1, min(i, n1) + 1))
        if s:
            total += Fraction(s, i)
    return total / (n1 * math.comb(n, n1))


def random_rr_exact(n: int, n1: int) -> Fraction | None:
    """Expected reciprocal rank of the first defective under random ranking."""
    _check_counts(n, n1)
    if n1 == 0:
        return None
    total = Fraction(0)
    for i in range(1, n - n1 + 2):
        total += Fraction(math.comb(n - i, n1 - 1), i)
    return total / math.comb(n, n1)


def random_baseline(indicator: str, n: int, n1: int) -> float | None:
    """Expected indicator value of a random model on a test set of N with n1 defective."""
    _check_counts(n, n1)
    if indicator == "F1":
        q = Fraction(n1, n)
        return float(2 * q * Fraction(1, 2) / (q + Fraction(1, 2)))
    if indicator in ("AUC", "Popt"):
        return 0.5
    if indicator in ("ER", "RI"):
        return 0.0
    if indicator == "ACC":
        return 0.2
    if indicator == "AP":
        v = random_ap_exact(n, n1)
        return None if v is None else float(v)
    if indicator == "RR":
        v = random_rr_exact(n, n1)
        return None if v is None else float(v)
    raise ValueError(f"unknown indicator {indicator!r}")


def brute_force_random(indicator: str, n: int, n1: int) -> Fraction | None:
    """Exact mean of AP or RR over every placement of n1 defectives among N ranks."""
    if indicator not in ("AP", "RR"):
        raise ValueError("brute force covers AP and RR only")
    if n > BRUTE_FORCE_MAX_N:
        raise BoundError(f"N={n} exceeds brute-force bound {BRUTE_FORCE_MAX_N}")
    _check_counts(n, n1)
    if n1 == 0:
        return None
    total = Fraction(0)
    count = 0
    for positions in combinations(range(1, n + 1), n1):
        if indicator == "RR":
            total += Fraction(1, positions[0])
        else:
            total += sum(Fraction(k, i) for k, i in enumerate(positions, 1)) / n1
        count += 1
    return total / count


# -- relative change ------------------------------------------------------

def diff(perf_nc: float | None, perf_cc: float | None) -> float | None:
    """Percent change of NC relative to CC; positive means NC looks better."""
    if perf_nc is None or perf_cc is None or perf_cc == 0:
        return None
    return (perf_nc - perf_cc) / perf_cc * 100


def pgr(perf_nc: float | None, perf_cc: float | None, perf_random: float | None) -> float | None:
    """Percent change in gain over the random model."""
    if perf_nc is None or perf_cc is None or perf_random is None:
        return None
    gain_cc = perf_cc - perf_random
    if gain_cc == 0:
        return None
    return ((perf_nc - perf_random) - gain_cc) / gain_cc * 100
