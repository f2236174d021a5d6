import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True,
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def write_project(root: Path, versions: dict[str, dict[str, tuple[int, str | None]]], project="demo"):
    """Lay out a manifest project.

    ``versions`` maps version id -> {dotted name: (label, java source or None)}.
    A ``None`` source leaves the dataset row without a file.
    """
    lines = [f"project {project}"]
    for vid, modules in versions.items():
        src = root / vid / "src"
        src.mkdir(parents=True, exist_ok=True)
        rows = ["name,loc,bug"]
        for name, (label, code) in modules.items():
            if code is not None:
                path = src / (name.replace(".", "/") + ".java")
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(code, encoding="utf-8")
            rows.append(f"{name},{len((code or '').splitlines())},{label}")
        (root / f"{vid}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
        lines.append(f"version {vid} {vid}/src")
    manifest = root / "manifest"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


@pytest.fixture
def project(tmp_path):
    def make(versions, project="demo"):
        return write_project(tmp_path, versions, project)
    return make


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(line)
