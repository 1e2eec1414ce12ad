"""Fixtures produce real CSVs through the primary package's CLI, which is the
only interface the figure scripts consume."""

import json
import subprocess
import sys

import pytest


def run_trilevel(args, out_path, allowed_codes=(0,)):
    proc = subprocess.run(
        [sys.executable, "-m", "trilevel.cli", *args, "--out", str(out_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode in allowed_codes, proc.stderr
    assert out_path.exists()
    return out_path


@pytest.fixture(scope="session")
def sweep_csv(tmp_path_factory):
    """Small Xi semiclassical surface (9x9 grid)."""
    path = tmp_path_factory.mktemp("csv") / "surface.csv"
    return run_trilevel(
        ["semiclassical", "--kind", "xi", "--detuning", "d21=0", "--detuning", "d32=0",
         "--na", "2", "--grid", "mu12=0:2:0.25", "--grid", "mu23=0:2:0.25"],
        path,
    )


@pytest.fixture(scope="session")
def separatrix_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("csv") / "separatrix.csv"
    return run_trilevel(
        ["separatrix", "--kind", "xi", "--detuning", "d21=0", "--detuning", "d32=0",
         "--na", "2", "--grid", "mu23=0:2:0.25", "--grid", "mu12=0:2.5:0.05"],
        path,
    )


@pytest.fixture(scope="session")
def compare_csv(tmp_path_factory):
    """Xi comparison curve data at Na=3 along mu12."""
    path = tmp_path_factory.mktemp("csv") / "compare.csv"
    return run_trilevel(
        ["compare", "--kind", "xi", "--detuning", "d21=0", "--detuning", "d32=0",
         "--na", "3", "--mu", "mu23=0.5", "--grid", "mu12=0:2:0.2"],
        path,
    )


@pytest.fixture(scope="session")
def distribution_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("csv") / "dist.csv"
    return run_trilevel(
        ["distribution", "--kind", "xi", "--detuning", "d21=0", "--detuning", "d32=0",
         "--na", "10", "--mu", "mu12=1.5", "--mu", "mu23=2.5", "--m-max", "60"],
        path,
    )


@pytest.fixture(scope="session")
def compare_grid_csv(tmp_path_factory):
    """Small 2D compare grid for surface plots (Na=2 keeps it fast)."""
    path = tmp_path_factory.mktemp("csv") / "compare2d.csv"
    return run_trilevel(
        ["compare", "--kind", "xi", "--detuning", "d21=0", "--detuning", "d32=0",
         "--na", "2", "--grid", "mu12=0.2:2:0.45", "--grid", "mu23=0.2:2:0.45"],
        path,
    )


def write_spec(tmp_path, **doc):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(doc))
    return path
