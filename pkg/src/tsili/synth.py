"""Synthetic multi-version fixtures with planted inconsistent labels.

Each scenario kind plants the label outcome of one labeling failure: a
target module whose code is identical across a span of versions but whose
collected labels disagree.  Decoy modules, a module with a missing source
file and a comment-only module surround the target.  Every file is rendered
with seeded whitespace and comment noise, so two versions of the same code
variant differ byte-wise but normalize to the same text.

Expected flags follow from construction: which code variant each version
carries and which label was collected for it.
"""
from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .dataset import ILFlag, MultiVersionDataset, VersionDataset
from .errors import StructureError

KINDS = (
    "no-bug-fp",
    "intrinsic-fn",
    "extrinsic",
    "szz-comment",
    "szz-rollback",
    "time-window",
    "av-earliest",
    "av-missing",
    "av-error",
)


@dataclass(frozen=True)
class Plant:
    """Label outcome of one module over consecutive versions."""

    role: str
    actual: tuple[int, ...]
    collected: tuple[int, ...]
    variants: tuple[int, ...]


# Consecutive-version patterns; variants equal => identical normalized code.
PATTERNS: dict[str, tuple[Plant, ...]] = {
    # No bug at all, yet the earlier version is labeled buggy.
    "no-bug-fp": (Plant("X", (0, 0), (1, 0), (0, 0)),),
    # Intrinsic bug present in three identical versions, middle one missed.
    "intrinsic-fn": (Plant("X", (1, 1, 1), (1, 0, 1), (0, 0, 0)),),
    # Extrinsic bug: unchanged code, defective only from the third version.
    "extrinsic": (Plant("X", (0, 0, 1, 1, 1), (0, 1, 0, 1, 1), (0, 0, 0, 0, 0)),),
    # Comment-only edit traced as bug-introducing; B really changed.
    "szz-comment": (
        Plant("A", (0, 0), (0, 1), (0, 0)),
        Plant("B", (0, 1), (0, 1), (0, 1)),
    ),
    # Rollback hides the original bug-introducing commit.
    "szz-rollback": (Plant("A", (1, 1), (0, 1), (0, 0)),),
    # Window too short for A (FN); mixed-purpose fix touches B (FP).
    "time-window": (
        Plant("A", (1, 1), (0, 1), (0, 0)),
        Plant("B", (0, 0), (0, 1), (0, 0)),
    ),
    # Only the earliest affected version is used (A); mixed-purpose fix (B).
    "av-earliest": (
        Plant("A", (1, 1), (1, 0), (0, 0)),
        Plant("B", (0, 0), (1, 0), (0, 0)),
    ),
    # Affected-version field misses the first version.
    "av-missing": (Plant("A", (1, 1), (0, 1), (0, 0)),),
    # Third version recorded as the second one.
    "av-error": (Plant("A", (0, 0, 1, 1), (0, 1, 0, 1), (0, 0, 1, 1)),),
}

_WORDS = (
    "alpha", "bravo", "cache", "delta", "event", "filter", "graph", "handler",
    "index", "join", "kernel", "layout", "merge", "node", "option", "parser",
    "query", "router", "stream", "token", "util", "visitor", "writer", "zone",
)
_SYLL = ("Ab", "Ber", "Cor", "Dex", "El", "Fra", "Gul", "Hex", "Ion", "Jun",
         "Kal", "Lum", "Mor", "Nix", "Ost", "Pra", "Qua", "Rel", "Sto", "Tur")


@dataclass(frozen=True)
class SynthParams:
    modules: int = 8
    versions: int | None = None
    filler: tuple[int, int] = (1, 4)


@dataclass(frozen=True)
class SynthScenario:
    kind: str
    seed: int
    params: SynthParams = SynthParams()
    planted: bool = True

    def __post_init__(self):
        if self.kind not in PATTERNS:
            raise ValueError(f"unknown scenario kind {self.kind!r} (known: {', '.join(KINDS)})")


@dataclass(frozen=True)
class TruthRow:
    name: str
    version: str
    actual: int
    collected: int
    expected: ILFlag
    role: str = ""


@dataclass
class GroundTruth:
    rows: list[TruthRow] = field(default_factory=list)

    def index(self) -> dict[tuple[str, str], TruthRow]:
        return {(r.name, r.version): r for r in self.rows}

    def expected_yes(self) -> set[tuple[str, str]]:
        return {(r.name, r.version) for r in self.rows if r.expected is ILFlag.YES}


@dataclass
class Fixture:
    root: Path
    manifest: Path
    versions: list[str]
    truth: GroundTruth


# -- module model ---------------------------------------------------------

@dataclass
class _Module:
    name: str                       # dotted class name
    role: str
    variants: dict[int, int]        # version index -> code variant
    actual: dict[int, int]
    collected: dict[int, int]
    missing: set[int] = field(default_factory=set)
    comment_only: bool = False

    @property
    def relpath(self) -> str:
        return self.name.replace(".", "/") + ".java"


def _class_tokens(module: str, variant: int, seed: int, filler: tuple[int, int]) -> list[str]:
    """Token stream of one code variant; identical across versions by construction."""
    rng = random.Random(f"code:{seed}:{module}:{variant}")
    pkg, cls = module.rsplit(".", 1)
    toks = ["package", pkg, ";", "import", "java.util.List", ";",
            "public", "class", cls, "{"]
    tag = f'"{rng.choice(_WORDS)} // not a comment /* {variant} */"'
    toks += ["private", "static", "final", "String", "TAG", "=", tag, ";"]
    toks += ["private", "int", "rev", "=", str(variant * 7919 + rng.randrange(1000)), ";"]
    for m in range(rng.randint(*filler)):
        name = f"{rng.choice(_WORDS)}{m}"
        c1, c2 = rng.randrange(2, 97), rng.randrange(100)
        op = rng.choice((">", ">=", "<", "!="))
        toks += ["public", "int", name, "(", "int", "a", ")", "{",
                 "if", "(", "a", op, "1", ")", "{",
                 "return", "a", "*", str(c1), "+", "rev", ";", "}",
                 "char", "sep", "=", rng.choice(("'/'", "'\\''", "'*'", "'\"'")), ";",
                 "return", str(c2), "/", "2", ";", "}"]
    toks.append("}")
    return toks


def _comment(rng: random.Random) -> str:
    words = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(1, 5)))
    style = rng.randrange(3)
    if style == 0:
        return f"// {words}\n"
    if style == 1:
        return f"/* {words} */"
    return f"/**\n * {words}\n * @since {rng.randint(1, 9)}\n */"


_BREAK_AFTER = {";", "{", "}"}


def _render(tokens: list[str], rng: random.Random) -> str:
    """Join tokens with noisy whitespace and comments.

    At least one whitespace character separates every pair of tokens, so
    normalization yields exactly ``" ".join(tokens)``.
    """
    parts = []
    if rng.random() < 0.5:
        parts.append(f"/*\n * Copyright {rng.randint(2000, 2020)} {rng.choice(_WORDS)}\n */\n")
    depth = 0
    for i, tok in enumerate(tokens):
        if tok == "}":
            depth -= 1
        parts.append(tok)
        if tok == "{":
            depth += 1
        if i == len(tokens) - 1:
            break
        if tok in _BREAK_AFTER:
            gap = "\n" * rng.choice((1, 1, 1, 2)) + rng.choice(("    ", "\t", "  ")) * max(depth, 0)
        else:
            gap = rng.choice((" ", " ", " ", "  ", "\t", " \t "))
        if rng.random() < 0.08:
            gap = gap + _comment(rng) + rng.choice((" ", "\n", "\n  "))
        parts.append(gap)
    parts.append("\n")
    if rng.random() < 0.3:
        parts.append(_comment(rng) + "\n")
    return "".join(parts)


def _comment_only_file(rng: random.Random) -> str:
    return "\n".join(_comment(rng).rstrip("\n") for _ in range(rng.randint(1, 3))) + "\n"


def _unique_names(rng: random.Random, count: int) -> list[str]:
    names: set[str] = set()
    out = []
    while len(out) < count:
        pkg = rng.choice(_WORDS)
        cls = "".join(rng.choice(_SYLL) for _ in range(2)) + rng.choice(("Impl", "Util", "Manager", "Map", ""))
        name = f"org.synth.{pkg}.{cls}"
        if name not in names:
            names.add(name)
            out.append(name)
    return out


def _expected_flags(mod: _Module, versions: range) -> dict[int, ILFlag]:
    """Flags the detection rule must produce for one module."""
    present = [v for v in versions if v not in mod.missing]
    flags = {v: ILFlag.NA for v in versions if v in mod.missing}
    labels = {mod.collected[v] for v in present}
    if len(labels) <= 1:
        flags.update({v: ILFlag.NO for v in present})
        return flags
    if mod.comment_only:
        flags.update({v: ILFlag.NA for v in present})
        return flags
    classes: dict[int, list[int]] = {}
    for v in present:
        classes.setdefault(mod.variants[v], []).append(v)
    for members in classes.values():
        mixed = len({mod.collected[v] for v in members}) > 1
        for v in members:
            flags[v] = ILFlag.YES if mixed else ILFlag.NO
    return flags


def _build_modules(scenario: SynthScenario, rng: random.Random) -> tuple[list[_Module], int]:
    plants = PATTERNS[scenario.kind]
    span = len(plants[0].actual)
    n_versions = scenario.params.versions or span + 1
    if n_versions < max(span, 2):
        raise ValueError(f"{scenario.kind} needs at least {max(span, 2)} versions")
    versions = range(n_versions)
    offset = rng.randint(0, n_versions - span)
    n_decoys = max(scenario.params.modules, 2)
    names = iter(_unique_names(rng, len(plants) + n_decoys + 2))
    unique_variant = iter(range(100, 10_000))
    modules: list[_Module] = []

    for plant in plants:
        mod = _Module(next(names), f"target-{plant.role}", {}, {}, {})
        for v in versions:
            if offset <= v < offset + span:
                j = v - offset
                mod.variants[v] = plant.variants[j]
                mod.actual[v] = plant.actual[j]
                mod.collected[v] = plant.collected[j] if scenario.planted else plant.actual[j]
            else:
                # Outside the span the module has its own code in every version.
                mod.variants[v] = next(unique_variant)
                lab = rng.randint(0, 1)
                mod.actual[v] = mod.collected[v] = lab
        modules.append(mod)

    for d in range(n_decoys):
        stable = d % 2 == 0
        mod = _Module(next(names), "decoy-stable" if stable else "decoy-evolving", {}, {}, {})
        label = rng.randint(0, 1)
        for v in versions:
            mod.variants[v] = 0 if stable else next(unique_variant)
            lab = label if stable else rng.randint(0, 1)
            mod.actual[v] = mod.collected[v] = lab
        modules.append(mod)

    # Source file deleted in one version: NA there, consistent elsewhere.
    miss = _Module(next(names), "missing-source", {}, {}, {})
    label = rng.randint(0, 1)
    for v in versions:
        miss.variants[v] = 0
        miss.actual[v] = miss.collected[v] = label
    miss.missing.add(rng.randrange(n_versions))
    modules.append(miss)

    # Comment-only file with mixed labels: read, found empty, NA everywhere.
    pkg_name = next(names).rsplit(".", 1)[0] + ".package-info"
    doc = _Module(pkg_name, "comment-only", {}, {}, {}, comment_only=True)
    first = rng.randint(0, 1)
    for v in versions:
        doc.variants[v] = 0
        doc.actual[v] = doc.collected[v] = first if v % 2 == 0 else 1 - first
    modules.append(doc)
    return modules, n_versions


def version_id(i: int) -> str:
    return f"1.{i}"


def _write_fixture(
    out: Path,
    modules: list[_Module],
    n_versions: int,
    seed: int,
    project: str,
    filler: tuple[int, int],
    rng: random.Random,
) -> Fixture:
    out.mkdir(parents=True, exist_ok=True)
    versions = range(n_versions)
    vids = [version_id(v) for v in versions]
    truth = GroundTruth()
    rows_by_version: dict[int, list[list]] = {v: [] for v in versions}
    token_cache: dict[tuple[str, int], list[str]] = {}

    for mod in modules:
        flags = _expected_flags(mod, versions)
        for v in versions:
            vid = vids[v]
            src_root = out / vid / "src"
            path = src_root / mod.relpath
            render_rng = random.Random(f"render:{seed}:{mod.name}:{v}")
            if mod.comment_only:
                text = _comment_only_file(render_rng)
                methods = 0
            else:
                key = (mod.name, mod.variants[v])
                if key not in token_cache:
                    token_cache[key] = _class_tokens(mod.name, mod.variants[v], seed, filler)
                toks = token_cache[key]
                text = _render(toks, render_rng)
                methods = toks.count("public") - 1
            sloc = sum(1 for line in text.splitlines() if line.strip())
            if v not in mod.missing:
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(text, encoding="utf-8", newline="\n")
            rows_by_version[v].append([
                mod.name, methods, render_rng.randint(5, 60), sloc, mod.collected[v],
            ])
            truth.rows.append(TruthRow(mod.name, vid, mod.actual[v], mod.collected[v], flags[v], mod.role))

    for v in versions:
        rows = rows_by_version[v]
        rng.shuffle(rows)
        with open(out / f"{vids[v]}.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["name", "wmc", "rfc", "loc", "bug"])
            w.writerows(rows)

    manifest = out / "manifest"
    lines = [f"project {project}"]
    for vid in vids:
        lines.append(f"version {vid} {vid}/src")
        lines.append(f"dataset {vid} {vid}.csv")
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_truth(truth, out / "truth.csv")
    return Fixture(out, manifest, vids, truth)


def generate(scenario: SynthScenario, out_dir: str | Path) -> Fixture:
    """Write source trees, datasets, manifest and truth.csv under ``out_dir``.

    Layout: ``<out>/<version>/src/...``, ``<out>/<version>.csv``,
    ``<out>/truth.csv`` and ``<out>/manifest``.  Identical inputs produce
    byte-identical files.
    """
    rng = random.Random(f"scenario:{scenario.kind}:{scenario.seed}:{scenario.planted}")
    modules, n_versions = _build_modules(scenario, rng)
    return _write_fixture(
        Path(out_dir), modules, n_versions, scenario.seed,
        f"synth-{scenario.kind}", scenario.params.filler, rng,
    )


def generate_bulk(
    out_dir: str | Path,
    *,
    versions: int = 3,
    modules: int = 137,
    methods: tuple[int, int] = (12, 16),
    seed: int = 0,
) -> Fixture:
    """A larger fixture for timing runs.

    Half the modules keep their code across versions and half change it;
    labels are random per version, so most groups have mixed labels and
    every file gets read and normalized.
    """
    rng = random.Random(f"bulk:{seed}")
    names = _unique_names(rng, modules)
    vrange = range(versions)
    unique_variant = iter(range(100, 10**7))
    mods = []
    for i, name in enumerate(names):
        mod = _Module(name, "bulk", {}, {}, {})
        for v in vrange:
            mod.variants[v] = 0 if i % 2 == 0 else next(unique_variant)
            mod.actual[v] = mod.collected[v] = rng.randint(0, 1)
        mods.append(mod)
    return _write_fixture(Path(out_dir), mods, versions, seed, "synth-bulk", methods, rng)


# -- truth I/O and verification ---------------------------------------------

TRUTH_COLUMNS = ("name", "version", "actual", "collected", "expectedFlag", "role")


def write_truth(truth: GroundTruth, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUTH_COLUMNS)
        for r in sorted(truth.rows, key=lambda r: (r.name, r.version)):
            w.writerow([r.name, r.version, r.actual, r.collected, r.expected.value, r.role])


def read_truth(path: str | Path) -> GroundTruth:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [
            TruthRow(d["name"], d["version"], int(d["actual"]), int(d["collected"]),
                     ILFlag(d["expectedFlag"]), d.get("role", ""))
            for d in csv.DictReader(fh)
        ]
    return GroundTruth(rows)


@dataclass(frozen=True)
class VerificationReport:
    precision: float | None
    recall: float | None
    true_positives: int
    false_positives: int
    false_negatives: int
    na_mismatches: tuple[tuple[str, str], ...]

    @property
    def na_match(self) -> bool:
        return not self.na_mismatches

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "truePositives": self.true_positives,
            "falsePositives": self.false_positives,
            "falseNegatives": self.false_negatives,
            "naMatch": self.na_match,
            "naMismatches": [list(x) for x in self.na_mismatches],
        }


def verify(
    truth: GroundTruth,
    augmented: MultiVersionDataset | Mapping[str, VersionDataset],
) -> VerificationReport:
    """Compare detected flags with the planted ground truth."""
    versions = augmented.by_version() if isinstance(augmented, MultiVersionDataset) else dict(augmented)
    observed: dict[tuple[str, str], ILFlag] = {}
    for vid, ds in versions.items():
        for inst in ds.instances:
            observed[(inst.name, vid)] = inst.il_flag
    expected = {k: r.expected for k, r in truth.index().items()}
    if set(observed) != set(expected):
        only_truth = sorted(set(expected) - set(observed))[:5]
        only_data = sorted(set(observed) - set(expected))[:5]
        raise StructureError(
            f"truth and datasets disagree on instances: truth-only={only_truth} data-only={only_data}"
        )
    flagged = {k for k, f in observed.items() if f is ILFlag.YES}
    planted = {k for k, f in expected.items() if f is ILFlag.YES}
    tp = len(flagged & planted)
    fp = len(flagged - planted)
    fn = len(planted - flagged)
    na_mismatch = tuple(sorted(
        k for k in expected
        if (expected[k] is ILFlag.NA) != (observed[k] is ILFlag.NA)
    ))
    return VerificationReport(
        precision=tp / len(flagged) if flagged else None,
        recall=tp / len(planted) if planted else None,
        true_positives=tp,
        false_positives=fp,
        false_negatives=fn,
        na_mismatches=na_mismatch,
    )
