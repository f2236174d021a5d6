import pytest
from hypothesis import given, strategies as st

from tsili.dataset import ILFlag, Instance, VersionDataset
from tsili.errors import StateError
from tsili.existence import (
    Counts,
    ExistenceReport,
    aggregate,
    existence_ratios,
    percent,
    to_markdown,
)


def make(rows, version="v"):
    insts = tuple(Instance(f"m{i}", lab, il_flag=f) for i, (lab, f) in enumerate(rows))
    return VersionDataset("p", version, 0, insts)


def test_counting_example():
    rows = ([(1, ILFlag.YES)] * 8 + [(1, ILFlag.NO)] * 12
            + [(0, ILFlag.YES)] * 2 + [(0, ILFlag.NA)] * 5 + [(0, ILFlag.NO)] * 73)
    r = existence_ratios(make(rows))
    assert (r.ilinAll, r.ilinBuggy, r.ilinClean) == (0.10, 0.40, 0.025)
    assert r.counts == Counts(100, 20, 80, 10, 8, 2, 5)


def test_zero_and_na():
    r = existence_ratios(make([(1, ILFlag.NO), (0, ILFlag.NA)]))
    assert (r.ilinAll, r.ilinBuggy, r.ilinClean) == (0, 0, 0)
    r = existence_ratios(make([(0, ILFlag.YES)]))
    assert r.ilinBuggy is None and r.ilinClean == 1.0
    assert existence_ratios(make([])).ilinAll is None
    with pytest.raises(StateError):
        existence_ratios(make([(0, ILFlag.UNSET)]))


@given(st.lists(st.tuples(st.integers(0, 1), st.sampled_from([ILFlag.YES, ILFlag.NO, ILFlag.NA])),
                min_size=1, max_size=40))
def test_ratio_invariants(rows):
    r = existence_ratios(make(rows))
    c = r.counts
    assert c.yes_all == c.yes_buggy + c.yes_clean
    assert r.ilinAll == pytest.approx((c.yes_buggy + c.yes_clean) / c.total)
    for v in (r.ilinAll, r.ilinBuggy, r.ilinClean):
        assert v is None or 0 <= v <= 1


def _rep(v, all_):
    return ExistenceReport(v, all_, all_, all_, Counts(1, 0, 0, 0, 0, 0, 0))


def test_aggregate_examples():
    s = aggregate([_rep("a", 0.3)])
    assert (s.overall["ilinAll"].mean, s.overall["ilinAll"].low, s.overall["ilinAll"].high) == (0.3, 0.3, 0.3)
    s = aggregate([_rep("a", 0.0), _rep("b", 0.2)])
    row = s.rows["dataset"]["ilinAll"]
    assert row.nonzero == 1 and row.nonzero_fraction == 0.5 and row.mean == pytest.approx(0.1)
    s = aggregate([_rep("a", None), _rep("b", 0.2)])
    assert s.overall["ilinAll"].mean == 0.2 and s.overall["ilinAll"].versions == 2
    with pytest.raises(ValueError):
        aggregate([])


def test_aggregate_pools_versions_equally():
    s = aggregate({"x": [_rep("1", 0.1)], "y": [_rep("1", 0.0), _rep("2", 0.0), _rep("3", 0.2)]})
    assert s.rows["x"]["ilinAll"].mean == 0.1
    assert s.overall["ilinAll"].mean == pytest.approx(0.3 / 4)
    assert s.overall["ilinAll"].nonzero == 2


@given(st.lists(st.one_of(st.none(), st.floats(0, 1)), min_size=1, max_size=20))
def test_mean_within_range(values):
    s = aggregate([_rep(str(i), v) for i, v in enumerate(values)]).overall["ilinAll"]
    if s.mean is not None:
        assert s.low - 1e-12 <= s.mean <= s.high + 1e-12


def test_percent_format():
    assert percent(0.0) == "0"
    assert percent(0.025) == "2%"    # half-to-even
    assert percent(0.035) == "4%"
    assert percent(0.004) == "0%"
    assert percent(None) == "NA"


def test_markdown_shape():
    s = aggregate({"ECLIPSE": [_rep("2.0", 0.01), _rep("2.1", 0.02), _rep("3.0", 0.02)]})
    md = to_markdown(s)
    assert "| ECLIPSE | 3/3 | 2% (1%~2%) |" in md
    assert md.splitlines()[-2].startswith("| Average ratio |")
    assert md.splitlines()[-1].startswith("| All versions | 3/3 |")
