"""Command line entry point: ``tsili <subcommand> ...``.

Exit codes: 0 success (warnings and inconsistent labels included),
1 verification mismatch, 2 configuration or input-contract error,
3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .codeindex import NameResolution, export_index_csv, read_manifest
from .core import load_project, run_tsili, write_module_info
from .dataset import (
    load_version_dataset,
    resolve_schema,
    write_augmented_dataset,
)
from .diagnostics import configure_logging, warn
from .errors import TsiliError
from .existence import aggregate, existence_ratios, percent, to_markdown
from .metrics import INDICATORS, diff, evaluate, load_predictions, pgr, random_baseline
from .normalize import C_FAMILY, normalize_file
from .stats import (
    DEFAULT_CUTOFFS,
    bootstrap_ci,
    dtp,
    load_importance,
    parse_cutoff,
    select_pad,
    shift_distribution,
    shift_ranks,
    true_positives,
    write_shift_histogram,
)
from .synth import KINDS, SynthParams, SynthScenario, generate, generate_bulk, read_truth, verify

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_IO = 3

RUN_REPORT = "run_report.json"


class UsageError(Exception):
    """Bad flag combination, reported with exit code 2."""


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _provenance(args, **config) -> dict:
    return {"toolVersion": __version__, "subcommand": args.command, "config": config}


# -- detect ---------------------------------------------------------------

def cmd_detect(args) -> int:
    schema = resolve_schema(args.schema)
    resolution = NameResolution.parse(args.resolve, args.extension)
    manifest = read_manifest(args.manifest)
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    load_warnings: list = []
    datasets = load_project(manifest, schema, load_warnings)
    augmented, table, report = run_tsili(
        datasets, manifest, resolution, C_FAMILY, workers=args.workers,
    )
    report.warnings[:0] = load_warnings

    for ds in augmented:
        write_augmented_dataset(ds, out / f"{ds.version}.csv")
    write_module_info(table, out / "moduleInfo.csv")
    if args.export_index:
        from .core import build_databases
        dbs = build_databases(dict(manifest.versions), resolution)
        for vid, db in dbs.items():
            export_index_csv(db, out / f"index-{vid}.csv")

    payload = _provenance(
        args,
        manifest=str(args.manifest),
        schema=args.schema or "default",
        resolve=resolution.strategy.value,
        extension=resolution.source_extension,
        workers=args.workers,
    )
    payload.update(report.to_dict())
    _write_json(out / RUN_REPORT, payload)
    # Wall-clock timings live apart from the report so reruns stay byte-identical.
    _write_json(out / "timings.json", report.timings)
    t = report.totals
    print(f"{augmented.project}: {t['instances']} instances, {t['matched']} matched, "
          f"YES={t['YES']} NO={t['NO']} NA={t['NA']}")
    return EXIT_OK


# -- stats ----------------------------------------------------------------

def _stats_group(path: Path, schema, warnings: list) -> tuple[str, list]:
    """One dataset: a detect output directory or a single augmented CSV."""
    if path.is_dir():
        report = path / RUN_REPORT
        if report.is_file():
            versions = [v["version"] for v in json.loads(report.read_text(encoding="utf-8"))["versions"]]
            files = [path / f"{v}.csv" for v in versions]
        else:
            files = sorted(p for p in path.glob("*.csv") if p.name != "moduleInfo.csv"
                           and not p.name.startswith("index-"))
        name = path.name
    else:
        files, name = [path], path.stem
    if not files:
        raise UsageError(f"{path}: no augmented datasets found")
    reports = []
    for f in files:
        ds = load_version_dataset(f, schema, warnings=warnings)
        if ds.il_index is None:
            raise UsageError(f"{f}: no isInconsistentLabel column; run detect first")
        reports.append(existence_ratios(ds))
    return name, reports


def cmd_stats(args) -> int:
    if not args.inputs:
        raise UsageError("stats needs at least one augmented dataset or directory")
    schema = resolve_schema(args.schema)
    warnings: list = []
    groups: dict[str, list] = {}
    for p in args.inputs:
        name, reports = _stats_group(Path(p), schema, warnings)
        while name in groups:
            name += "'"
        groups[name] = reports
    summary = aggregate(groups)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    payload = _provenance(args, inputs=[str(p) for p in args.inputs], schema=args.schema or "default")
    payload["versions"] = {name: [r.to_dict() for r in reps] for name, reps in groups.items()}
    payload["summary"] = summary.to_dict()
    payload["warnings"] = [str(w) for w in warnings]
    _write_json(out / "stats.json", payload)
    (out / "stats.md").write_text(to_markdown(summary), encoding="utf-8")
    if args.figures:
        from .plotting import existence_plot
        existence_plot(groups, out / "existence.png")
    for name, row in summary.rows.items():
        s = row["ilinAll"]
        print(f"{name}: {s.nonzero}/{s.versions} versions with ILinAll != 0, average {percent(s.mean)}")
    return EXIT_OK


# -- eval -----------------------------------------------------------------

def _ci(values, args) -> dict | None:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return bootstrap_ci(vals, args.replicates, seed=args.seed, workers=args.workers).to_dict()


def _fmt(v, spec=".4f") -> str:
    return "NA" if v is None else format(v, spec)


def cmd_eval(args) -> int:
    if not args.nc or len(args.nc) != len(args.cc or []):
        raise UsageError("give --nc and --cc the same number of times (one pair per batch)")
    if len(args.importance_nc or []) != len(args.importance_cc or []):
        raise UsageError("give --importance-nc and --importance-cc the same number of times")
    if args.replicates < 1:
        raise UsageError("--replicates must be positive")
    explicit = [parse_cutoff(c) for c in args.cutoff] if args.cutoff else None
    warnings: list = []

    batches = []
    for nc_path, cc_path in zip(args.nc, args.cc):
        nc, cc = load_predictions(nc_path), load_predictions(cc_path)
        if nc.names != cc.names:
            raise UsageError(f"{nc_path} and {cc_path} hold different instance names")
        batches.append((nc_path, cc_path, nc, cc))

    have_sloc = all(cc.has_sloc and nc.has_sloc for _, _, nc, cc in batches)
    if explicit is not None:
        cutoffs = explicit
        if not have_sloc and any(c.needs_sloc for c in cutoffs):
            raise UsageError("size cut-off requested but predictions lack sloc >= 1 for every instance")
    else:
        cutoffs = [c for c in DEFAULT_CUTOFFS if have_sloc or not c.needs_sloc]
        if len(cutoffs) < len(DEFAULT_CUTOFFS):
            warn("size-cutoff-skipped", "predictions carry no sloc", warnings)

    batch_rows = []
    for nc_path, cc_path, nc, cc in batches:
        actual_nc = {r.name: r.actual for r in nc.records}
        if any(actual_nc[r.name] != r.actual for r in cc.records):
            warn("actual-mismatch", f"{nc_path} vs {cc_path}: using CC labels", warnings)
        perf_nc, perf_cc = evaluate(nc, args.threshold), evaluate(cc, args.threshold)
        n, n1 = len(cc), cc.n1
        row = {"nc": str(nc_path), "cc": str(cc_path), "N": n, "n1": n1, "indicators": {}, "dtp": {}}
        for ind in INDICATORS:
            rnd = random_baseline(ind, n, n1)
            row["indicators"][ind] = {
                "NC": perf_nc[ind], "CC": perf_cc[ind], "random": rnd,
                "diff": diff(perf_nc[ind], perf_cc[ind]),
                "pgr": pgr(perf_nc[ind], perf_cc[ind], rnd),
            }
        # Both models are judged against the CC test labels.
        for c in cutoffs:
            tp_nc = true_positives(cc, select_pad(nc, c))
            tp_cc = true_positives(cc, select_pad(cc, c))
            row["dtp"][c.label] = dtp(tp_nc, tp_cc)
        batch_rows.append(row)

    summary = {"indicators": {}, "dtp": {}}
    for ind in INDICATORS:
        summary["indicators"][ind] = {
            k: _ci([b["indicators"][ind][k] for b in batch_rows], args)
            for k in ("NC", "CC", "diff", "pgr")
        }
    for c in cutoffs:
        summary["dtp"][c.label] = _ci([b["dtp"][c.label] for b in batch_rows], args)

    shift_payload = None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.importance_nc:
        reports = [
            shift_ranks(load_importance(cc_f), load_importance(nc_f))
            for nc_f, cc_f in zip(args.importance_nc, args.importance_cc)
        ]
        dist = shift_distribution(reports)
        shift_payload = {
            "reports": [{str(k): v for k, v in r.shifts.items()} for r in reports],
            "distribution": {str(k): v for k, v in dist.items()},
        }
        write_shift_histogram(reports, out / "shift_histogram.csv")
        if args.figures:
            from .plotting import shift_plot
            shift_plot(dist, out / "shift.png")

    payload = _provenance(
        args,
        nc=[str(p) for p in args.nc], cc=[str(p) for p in args.cc],
        importanceNc=[str(p) for p in args.importance_nc or []],
        importanceCc=[str(p) for p in args.importance_cc or []],
        cutoffs=[c.label for c in cutoffs], threshold=args.threshold,
        seed=args.seed, replicates=args.replicates,
    )
    payload.update({"batches": batch_rows, "summary": summary, "shift": shift_payload,
                    "warnings": [str(w) for w in warnings]})
    _write_json(out / "eval_report.json", payload)
    (out / "eval_report.md").write_text(_eval_markdown(summary), encoding="utf-8")
    if args.figures and have_sloc:
        from .plotting import alberg_plot
        _, _, nc, cc = batches[0]
        alberg_plot({"NC": nc, "CC": cc}, out / "alberg.png")

    for ind in INDICATORS:
        d = summary["indicators"][ind]["diff"]
        print(f"{ind:5s} diff mean {_fmt(d and d['sampleMean'], '.2f')}%"
              + ("" if d is None else f"  CI [{d['lower']:.2f}, {d['upper']:.2f}]"
                 + (" significant" if d["significant"] else "")))
    return EXIT_OK


def _eval_markdown(summary: dict) -> str:
    lines = ["| Indicator | NC mean | CC mean | diff % [CI] | pgr % [CI] |", "|---|---|---|---|---|"]

    def cell(ci, pct=False):
        if ci is None:
            return "NA"
        s = f"{ci['sampleMean']:.2f} [{ci['lower']:.2f}, {ci['upper']:.2f}]" if pct else f"{ci['sampleMean']:.3f}"
        return s + (" *" if pct and ci["significant"] else "")

    for ind, row in summary["indicators"].items():
        lines.append(f"| {ind} | {cell(row['NC'])} | {cell(row['CC'])} | "
                     f"{cell(row['diff'], True)} | {cell(row['pgr'], True)} |")
    lines += ["", "| Cut-off | DTP mean [CI] |", "|---|---|"]
    for label, ci in summary["dtp"].items():
        lines.append(f"| {label} | {cell(ci, True)} |")
    lines += ["", "`*` marks intervals that exclude 0."]
    return "\n".join(lines) + "\n"


# -- synth / verify / normalize ---------------------------------------------

def cmd_synth(args) -> int:
    if args.bulk:
        fx = generate_bulk(args.out, modules=args.modules or 137,
                           versions=args.versions or 3, seed=args.seed)
    else:
        if args.kind is None:
            raise UsageError("synth needs --kind (or --bulk)")
        params = SynthParams(modules=args.modules or 8, versions=args.versions)
        scenario = SynthScenario(args.kind, args.seed, params, planted=not args.control)
        fx = generate(scenario, args.out)
    yes = len(fx.truth.expected_yes())
    print(f"wrote {fx.manifest} ({len(fx.versions)} versions, {yes} planted YES instances)")
    return EXIT_OK


def cmd_verify(args) -> int:
    truth = read_truth(args.truth)
    schema = resolve_schema(args.schema)
    d = Path(args.augmented)
    versions = sorted({r.version for r in truth.rows})
    augmented = {
        v: load_version_dataset(d / f"{v}.csv", schema, version=v) for v in versions
    }
    rep = verify(truth, augmented)
    result = rep.to_dict()
    result["toolVersion"] = __version__
    print(json.dumps(result, indent=2))
    ok = rep.na_match and rep.false_positives == 0 and rep.false_negatives == 0
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_normalize(args) -> int:
    warnings: list = []
    code = normalize_file(args.file, C_FAMILY, warnings)
    if args.digest:
        print(code.digest)
    else:
        sys.stdout.write(code.text + "\n")
    return EXIT_OK


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tsili",
        description="Detect inconsistent defect labels across versions and measure their impact.",
        epilog="Set TSILI_LOG=DEBUG|INFO|WARNING|ERROR to control diagnostics on stderr.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="flag inconsistent labels and write augmented datasets")
    d.add_argument("--manifest", required=True, help="roots manifest (project/version/dataset lines)")
    d.add_argument("--schema", help="column preset name or schema file (default: name,bug)")
    d.add_argument("--resolve", default="java-package",
                   help="name resolution: exact-path, java-package or unique-suffix")
    d.add_argument("--extension", default=".java", help="source file extension to index")
    d.add_argument("--out", required=True, help="output directory")
    d.add_argument("--workers", type=int, default=1, help="threads for indexing and stage 2")
    d.add_argument("--export-index", action="store_true", help="also write index-<version>.csv")
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("stats", help="inconsistent-label ratios over augmented datasets")
    s.add_argument("inputs", nargs="*", help="detect output directories or augmented CSV files")
    s.add_argument("--schema", help="column preset name or schema file")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--figures", action="store_true", help="render existence.png")
    s.set_defaults(func=cmd_stats)

    e = sub.add_parser("eval", help="compare NC and CC predictions")
    e.add_argument("--nc", action="append", help="NC predictions (name,actual,score[,sloc]); repeat per batch")
    e.add_argument("--cc", action="append", help="CC predictions, paired with --nc in order")
    e.add_argument("--importance-nc", action="append", help="NC feature ranking (rank,feature)")
    e.add_argument("--importance-cc", action="append", help="CC feature ranking, paired in order")
    e.add_argument("--cutoff", action="append",
                   help="binary, binary:T, sizeP, topP (percent) or size:F, top:F (fraction); repeatable")
    e.add_argument("--threshold", type=float, default=0.5, help="score threshold for F1/ER/RI")
    e.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    e.add_argument("--replicates", type=int, default=1000, help="bootstrap replicates")
    e.add_argument("--workers", type=int, default=1, help="bootstrap threads (results do not depend on it)")
    e.add_argument("--out", required=True, help="output directory")
    e.add_argument("--figures", action="store_true", help="render shift.png and alberg.png")
    e.set_defaults(func=cmd_eval)

    y = sub.add_parser("synth", help="generate a fixture with planted inconsistent labels")
    y.add_argument("--kind", choices=KINDS, help="labeling-failure scenario")
    y.add_argument("--seed", type=int, default=0)
    y.add_argument("--modules", type=int, help="decoy module count (bulk: total modules)")
    y.add_argument("--versions", type=int, help="version count")
    y.add_argument("--control", action="store_true", help="collected labels equal actual labels")
    y.add_argument("--bulk", action="store_true", help="large timing fixture instead of a scenario")
    y.add_argument("--out", required=True)
    y.set_defaults(func=cmd_synth)

    v = sub.add_parser("verify", help="compare detect output with a fixture's truth.csv")
    v.add_argument("--truth", required=True)
    v.add_argument("--augmented", required=True, help="detect output directory")
    v.add_argument("--schema")
    v.set_defaults(func=cmd_verify)

    n = sub.add_parser("normalize", help="print the normalized text of a source file")
    n.add_argument("file")
    n.add_argument("--digest", action="store_true", help="print the sha256 digest instead")
    n.set_defaults(func=cmd_normalize)
    return p


def main(argv=None) -> int:
    configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, TsiliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
