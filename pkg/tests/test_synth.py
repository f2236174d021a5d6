import filecmp
from dataclasses import replace

import pytest

from tsili.codeindex import read_manifest
from tsili.core import load_project, run_tsili
from tsili.dataset import ILFlag, SchemaConfig
from tsili.errors import StructureError
from tsili.normalize import normalize_file
from tsili.synth import (
    KINDS,
    GroundTruth,
    SynthParams,
    SynthScenario,
    generate,
    read_truth,
    verify,
)


def detect(fx):
    m = read_manifest(fx.manifest)
    aug, _, _ = run_tsili(load_project(m, SchemaConfig()), m)
    return aug


@pytest.mark.parametrize("kind", KINDS)
def test_every_kind_detected(kind, tmp_path):
    fx = generate(SynthScenario(kind, 1), tmp_path)
    rep = verify(fx.truth, detect(fx))
    assert rep.precision == rep.recall == 1.0
    assert rep.na_match


def test_szz_rollback_pattern(tmp_path):
    fx = generate(SynthScenario("szz-rollback", 4), tmp_path)
    yes = sorted((r.version, r.collected) for r in fx.truth.rows if r.expected is ILFlag.YES)
    assert len(yes) == 2 and [c for _, c in yes] == [0, 1]


def test_time_window_two_pairs(tmp_path):
    fx = generate(SynthScenario("time-window", 2), tmp_path)
    by_role = {}
    for r in fx.truth.rows:
        if r.expected is ILFlag.YES:
            by_role.setdefault(r.role, []).append((r.version, r.actual, r.collected))
    assert set(by_role) == {"target-A", "target-B"}
    assert [(a, c) for _, a, c in sorted(by_role["target-A"])] == [(1, 0), (1, 1)]  # FN first
    assert [(a, c) for _, a, c in sorted(by_role["target-B"])] == [(0, 0), (0, 1)]  # FP second


def test_control_has_no_yes(tmp_path):
    fx = generate(SynthScenario("no-bug-fp", 3, planted=False), tmp_path)
    assert all(r.expected is not ILFlag.YES for r in fx.truth.rows)
    rep = verify(fx.truth, detect(fx))
    assert rep.precision is None and rep.recall is None and rep.false_positives == 0


def test_na_cases_present(tmp_path):
    fx = generate(SynthScenario("av-missing", 9), tmp_path)
    roles = {r.role for r in fx.truth.rows if r.expected is ILFlag.NA}
    assert roles == {"missing-source", "comment-only"}
    doc = [r for r in fx.truth.rows if r.role == "comment-only"]
    assert len({r.collected for r in doc}) == 2


def test_deterministic_bytes(tmp_path):
    a = generate(SynthScenario("extrinsic", 7), tmp_path / "a")
    b = generate(SynthScenario("extrinsic", 7), tmp_path / "b")
    cmp = filecmp.dircmp(a.root, b.root)

    def same(c):
        return not (c.left_only or c.right_only or c.diff_files) and all(same(s) for s in c.subdirs.values())

    files = [p.relative_to(a.root) for p in a.root.rglob("*") if p.is_file()]
    assert same(cmp)
    assert all((a.root / f).read_bytes() == (b.root / f).read_bytes() for f in files)
    c = generate(SynthScenario("extrinsic", 8), tmp_path / "c")
    assert (c.root / "truth.csv").read_bytes() != (a.root / "truth.csv").read_bytes()


def test_noise_preserves_normalized_target(tmp_path):
    for kind in KINDS:
        fx = generate(SynthScenario(kind, 5), tmp_path / kind)
        files = {}
        for r in fx.truth.rows:
            if r.role.startswith("target"):
                path = fx.root / r.version / "src" / (r.name.replace(".", "/") + ".java")
                files[(r.name, r.version)] = (r.collected, path.read_bytes(), normalize_file(path).text)
        for r in fx.truth.rows:
            if r.expected is not ILFlag.YES:
                continue
            label, raw, text = files[(r.name, r.version)]
            partners = [v for (n, _), v in files.items() if n == r.name and v[0] != label and v[2] == text]
            assert partners, (kind, r)
            assert all(p[1] != raw for p in partners)  # same code, different bytes


def test_params(tmp_path):
    fx = generate(SynthScenario("szz-rollback", 1, SynthParams(modules=20, versions=6)), tmp_path)
    assert len(fx.versions) == 6
    assert len({r.name for r in fx.truth.rows}) == 20 + 1 + 2
    with pytest.raises(ValueError):
        generate(SynthScenario("extrinsic", 1, SynthParams(versions=3)), tmp_path / "x")
    with pytest.raises(ValueError):
        SynthScenario("no-such-kind", 1)


def test_verifier_mutation(tmp_path):
    fx = generate(SynthScenario("intrinsic-fn", 3), tmp_path)
    aug = detect(fx)
    # Drop one planted YES from the truth: the detector's extra YES is now a false positive.
    rows = list(fx.truth.rows)
    i = next(i for i, r in enumerate(rows) if r.expected is ILFlag.YES)
    rows[i] = replace(rows[i], expected=ILFlag.NO)
    rep = verify(GroundTruth(rows), aug)
    assert rep.precision < 1 and rep.recall == 1.0
    # And an NA turned into NO is reported as an NA mismatch.
    j = next(i for i, r in enumerate(rows) if r.expected is ILFlag.NA)
    rows[j] = replace(rows[j], expected=ILFlag.NO)
    assert not verify(GroundTruth(rows), aug).na_match


def test_verify_name_mismatch(tmp_path):
    fx = generate(SynthScenario("av-error", 3), tmp_path)
    rows = fx.truth.rows[:-1]
    with pytest.raises(StructureError):
        verify(GroundTruth(rows), detect(fx))


def test_truth_round_trip(tmp_path):
    fx = generate(SynthScenario("av-earliest", 2), tmp_path)
    back = read_truth(tmp_path / "truth.csv")
    assert sorted(back.rows, key=lambda r: (r.name, r.version)) == sorted(
        fx.truth.rows, key=lambda r: (r.name, r.version))
