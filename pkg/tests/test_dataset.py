import pytest
from hypothesis import given, strategies as st

from tsili.dataset import (
    IL_COLUMN,
    ILFlag,
    Instance,
    MultiVersionDataset,
    SchemaConfig,
    VersionDataset,
    clean,
    get_preset,
    load_version_dataset,
    parse_schema_text,
    parse_version_dataset,
    render_augmented,
    resolve_schema,
    write_augmented_dataset,
)
from tsili.errors import RowError, SchemaError, StateError

SCHEMA = SchemaConfig(name="name", label="bug")


def parse(text, schema=SCHEMA, **kw):
    return parse_version_dataset(text, schema, version=kw.pop("version", "v1"), **kw)


def test_labels_binarized():
    ds = parse("name,wmc,bug\norg.apache.xpath.SourceTree,3,1\nb,2,0\nc,1,3\n")
    assert [(i.name, i.label) for i in ds.instances] == [
        ("org.apache.xpath.SourceTree", 1), ("b", 0), ("c", 1),
    ]
    assert ds.instances[0].features == {"wmc": 3.0}
    assert all(i.il_flag is ILFlag.UNSET for i in ds.instances)


def test_missing_column_named():
    with pytest.raises(SchemaError, match="bug"):
        parse("name,wmc\na,1\n")


def test_bad_label_reports_row():
    with pytest.raises(RowError) as exc:
        parse("name,bug\na,0\nb,yes\n")
    assert exc.value.row == 2
    with pytest.raises(RowError):
        parse("name,bug\na,-1\n")


def test_duplicate_keeps_first():
    sink = []
    ds = parse("name,bug\na,1\na,0\nb,0\n", warnings=sink)
    assert [(i.name, i.label) for i in ds.instances] == [("a", 1), ("b", 0)]
    assert [w.code for w in sink] == ["duplicate-name"]
    assert "row=2" in sink[0].detail


def test_sloc_and_occurrence_suffix():
    schema = get_preset("metrics-repo-2010")
    ds = parse("name,version,name,wmc,loc,bug\nant,1.3,org.A,2,120,1\n", schema)
    inst = ds.instances[0]
    assert inst.name == "org.A" and inst.sloc == 120 and inst.features == {"wmc": 2.0}


def test_eclipse_preset_semicolon():
    schema = get_preset("eclipse-2007")
    ds = parse("plugin;filename;pre;post;TLOC\np;org/eclipse/A.java;0;2;40\n", schema)
    assert ds.instances[0].label == 1 and ds.instances[0].sloc == 40


def test_schema_file(tmp_path):
    cfg = parse_schema_text("preset = jira-ha-2019\nlabel = RealBugCount  # override\ndelimiter = tab\n")
    assert cfg.name == "File" and cfg.label == "RealBugCount" and cfg.delimiter == "\t"
    with pytest.raises(SchemaError):
        parse_schema_text("colour = red\n")
    p = tmp_path / "s.cfg"
    p.write_text("name = cls\nlabel = defects\nexclude = a, b\n")
    assert resolve_schema(str(p)) == SchemaConfig(name="cls", label="defects", exclude=frozenset({"a", "b"}))
    with pytest.raises(SchemaError):
        resolve_schema("no-such-preset")


def _flagged(flags):
    insts = tuple(Instance(n, 0, il_flag=f, raw=f"{n},0\n") for n, f in flags.items())
    return VersionDataset("p", "v", 0, insts, ("name", "bug"), "name,bug\n")


def test_clean_examples():
    ds = _flagged({"A": ILFlag.YES, "B": ILFlag.NO, "C": ILFlag.NA})
    assert clean(ds).names == ["B", "C"]
    no = _flagged({"A": ILFlag.NO, "B": ILFlag.NO})
    assert clean(no) == no
    assert clean(_flagged({"A": ILFlag.YES})).names == []
    with pytest.raises(StateError):
        clean(_flagged({"A": ILFlag.UNSET}))


@given(st.lists(st.sampled_from([ILFlag.YES, ILFlag.NO, ILFlag.NA]), max_size=20))
def test_clean_properties(flags):
    ds = _flagged({f"m{i}": f for i, f in enumerate(flags)})
    once = clean(ds)
    assert clean(once) == once
    assert len(once) + flags.count(ILFlag.YES) == len(ds)


def test_write_appends_column_byte_exact(tmp_path):
    text = 'name,comment,bug\r\na,"x, ""quoted""",1\r\nb,plain,0\r\nc,  spaced ,0'
    ds = parse(text)
    flags = {"a": ILFlag.YES, "b": ILFlag.NA, "c": ILFlag.NO}
    out = tmp_path / "out.csv"
    write_augmented_dataset(ds.with_flags(flags), out)
    data = out.read_bytes().decode()
    assert data == (
        f'name,comment,bug,{IL_COLUMN}\r\na,"x, ""quoted""",1,YES\r\n'
        'b,plain,0,NA\r\nc,  spaced ,0,NO\n'
    )
    back = load_version_dataset(out, SCHEMA)
    assert [i.il_flag for i in back.instances] == [ILFlag.YES, ILFlag.NA, ILFlag.NO]
    assert [i.row[:3] for i in back.instances] == [i.row for i in ds.instances]


def test_write_requires_flags():
    with pytest.raises(StateError):
        render_augmented(parse("name,bug\na,1\n"))


def test_rewrite_existing_column():
    ds = parse(f"name,bug,{IL_COLUMN}\na,1,NO\n")
    assert ds.instances[0].il_flag is ILFlag.NO
    assert render_augmented(ds.with_flags({"a": ILFlag.YES})) == f"name,bug,{IL_COLUMN}\na,1,YES\n"


def test_invalid_utf8_replaced(tmp_path):
    p = tmp_path / "v.csv"
    p.write_bytes(b"name,bug\nA\xff,1\n")
    assert load_version_dataset(p, SCHEMA).instances[0].name == "A�"


_CELL = st.text(alphabet='ab ,"x\t;', max_size=6)


@given(st.lists(st.tuples(_CELL, st.integers(0, 5)), min_size=1, max_size=10, unique_by=lambda r: r[0].strip()))
def test_round_trip_preserves_cells(rows):
    import csv
    import io

    rows = [(n, lab) for n, lab in rows if n.strip()]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "bug"])
    w.writerows(rows)
    ds = parse(buf.getvalue())
    flagged = ds.with_flags({i.name: ILFlag.NO for i in ds.instances})
    again = parse(render_augmented(flagged))
    assert [i.row[:2] for i in again.instances] == [i.row for i in ds.instances]


def test_multi_version_order():
    a = VersionDataset("p", "1", 0, ())
    b = VersionDataset("p", "2", 1, ())
    assert MultiVersionDataset("p", (a, b)).by_version() == {"1": a, "2": b}
    with pytest.raises(ValueError):
        MultiVersionDataset("p", (b, a))
