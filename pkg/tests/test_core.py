import csv
import json

import pytest
from hypothesis import given, settings, strategies as st

from tsili.codeindex import NameResolution, read_manifest
from tsili.core import (
    BY_VERSION,
    ModuleInfoTable,
    build_databases,
    load_project,
    run_tsili,
    stage1_build_table,
    stage2_mark_inconsistent,
    write_module_info,
)
from tsili.dataset import ILFlag, SchemaConfig
from tsili.errors import ConfigError, StateError
from tsili.normalize import normalize

from .conftest import write_project

SCHEMA = SchemaConfig()
CODE_A = "class A {\n  int f() { return 1; }\n}\n"
CODE_A_NOISY = "/* header */ class A {   // x\n\tint f() { return 1; } }"
CODE_B = "class A {\n  int f() { return 2; }\n}\n"
DOC = "/** package docs */\n"


def run(manifest, workers=1):
    m = read_manifest(manifest)
    return run_tsili(load_project(m, SCHEMA), m, workers=workers)


def flags(augmented, name):
    return [next(i.il_flag for i in ds.instances if i.name == name) for ds in augmented]


def test_labels_flip_once_identical_code(project):
    vs = {f"1.{i}": {"x.XPathParser": (1 if i < 10 else 0, CODE_A)} for i in range(18)}
    aug, table, rep = run(project(vs))
    assert flags(aug, "x.XPathParser") == [ILFlag.YES] * 18
    assert rep.totals["YES"] == 18


def test_alternating_labels_noisy_copies(project):
    vs = {f"2.{i}": {"o.SourceTree": (lab, CODE_A if i % 2 else CODE_A_NOISY)}
          for i, lab in enumerate((0, 1, 0, 1))}
    aug, _, _ = run(project(vs))
    assert flags(aug, "o.SourceTree") == [ILFlag.YES] * 4


def test_code_difference_blocks(project):
    aug, _, _ = run(project({"1": {"p.A": (1, CODE_A)}, "2": {"p.A": (0, CODE_B)}}))
    assert flags(aug, "p.A") == [ILFlag.NO, ILFlag.NO]


def test_single_label_group_not_read(project):
    aug, _, _ = run(project({v: {"p.A": (1, CODE_A), "p.package-info": (0, DOC)} for v in "123"}))
    assert flags(aug, "p.A") == [ILFlag.NO] * 3
    # Comment-only file with one label is never read, so it stays NO.
    assert flags(aug, "p.package-info") == [ILFlag.NO] * 3


def test_comment_only_mixed_labels_na(project):
    aug, table, _ = run(project({"1": {"p.package-info": (0, DOC)}, "2": {"p.package-info": (1, DOC)}}))
    assert flags(aug, "p.package-info") == [ILFlag.NA, ILFlag.NA]
    assert {r.na_reason for r in table.records} == {"empty-code"}


def test_missing_source_na_and_partial(project):
    vs = {
        "1": {"p.A": (0, CODE_A)},
        "2": {"p.A": (1, None)},
        "3": {"p.A": (1, CODE_A)},
    }
    aug, table, rep = run(project(vs))
    assert flags(aug, "p.A") == [ILFlag.YES, ILFlag.NA, ILFlag.YES]
    assert [v["matched"] for v in rep.versions] == [1, 0, 1]
    assert rep.versions[1]["coverage"] == 0.0


def test_unreadable_file_na(project):
    manifest = project({"1": {"p.A": (0, CODE_A)}, "2": {"p.A": (1, CODE_A)}, "3": {"p.A": (1, CODE_A)}})
    m = read_manifest(manifest)
    ds = load_project(m, SCHEMA)
    dbs = build_databases(dict(m.versions), NameResolution())
    (manifest.parent / "3/src/p/A.java").unlink()
    sink = []
    table = stage2_mark_inconsistent(stage1_build_table(ds, dbs), warnings=sink)
    assert [r.flag for r in table.records] == [ILFlag.YES, ILFlag.YES, ILFlag.NA]
    assert sink[0].code == "unreadable-source"


def test_single_version_zero_yes(project):
    _, _, rep = run(project({"1": {"p.A": (1, CODE_A), "p.B": (0, CODE_B)}}))
    assert rep.totals["YES"] == 0 and rep.totals["NO"] == 2


def test_no_sources_all_na(project):
    manifest = project({"1": {"p.A": (1, None)}, "2": {"p.A": (0, None)}})
    aug, table, _ = run(manifest)
    assert len(table) == 0
    assert flags(aug, "p.A") == [ILFlag.NA, ILFlag.NA]


def test_version_mismatch(project):
    m = read_manifest(project({"1": {"p.A": (1, CODE_A)}}))
    with pytest.raises(ConfigError):
        stage1_build_table(load_project(m, SCHEMA), {})


def test_stage2_requires_name_order():
    with pytest.raises(StateError):
        stage2_mark_inconsistent(ModuleInfoTable((), BY_VERSION))


def test_table_order_and_export(project, tmp_path):
    vs = {"a": {"z.Z": (0, CODE_A), "b.B": (1, CODE_A)}, "b": {"z.Z": (1, CODE_A), "b.B": (1, CODE_B)}}
    aug, table, rep = run(project(vs))
    assert [(r.version, r.name) for r in table.records] == [("a", "b.B"), ("a", "z.Z"), ("b", "b.B"), ("b", "z.Z")]
    out = tmp_path / "mi.csv"
    write_module_info(table, out)
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["name", "version", "codePath", "defectLabel", "isInconsistentLabel"]
    assert rows[2] == ["z.Z", "a", "z/Z.java", "0", "YES"]
    d = rep.to_dict()
    assert "timings" not in d and set(rep.timings) == {"stage1", "stage2", "stage3"}
    json.dumps(d)


# -- oracle comparison on random projects -----------------------------------

_POOL = [CODE_A, CODE_A_NOISY, CODE_B, DOC, None]


def oracle(versions):
    """Pairwise restatement of the rule, independent of grouping code."""
    norm = {c: normalize(c).text for c in _POOL if c is not None}
    out = {}
    for vid, mods in versions.items():
        for name, (label, code) in mods.items():
            if code is None:
                out[(name, vid)] = ILFlag.NA
                continue
            others = [(lab, c) for v, ms in versions.items() if name in ms
                      for lab, c in [ms[name]] if c is not None]
            mixed = len({versions[v][name][0] for v in versions if name in versions[v]
                         and versions[v][name][1] is not None}) > 1
            if mixed and norm[code] == "":
                out[(name, vid)] = ILFlag.NA
            elif any(lab != label and c is not None and norm[c] == norm[code] and norm[c] for lab, c in others):
                out[(name, vid)] = ILFlag.YES
            else:
                out[(name, vid)] = ILFlag.NO
    return out


_module = st.tuples(st.integers(0, 1), st.sampled_from(_POOL))
_version = st.dictionaries(st.sampled_from(["p.A", "p.B", "q.C"]), _module, max_size=3)


@settings(max_examples=60)
@given(st.lists(_version, min_size=1, max_size=5))
def test_matches_pairwise_oracle(tmp_path_factory, vlist):
    versions = {f"v{i}": mods for i, mods in enumerate(vlist)}
    root = tmp_path_factory.mktemp("proj")
    manifest = write_project(root, versions)
    expected = oracle(versions)
    for workers in (1, 3):
        aug, _, rep = run(manifest, workers)
        got = {(i.name, ds.version): i.il_flag for ds in aug for i in ds.instances}
        assert got == expected
        assert rep.totals["YES"] + rep.totals["NO"] + rep.totals["NA"] == rep.totals["instances"]
