import hashlib
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

PLOTS_DIR = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PLOTS_DIR))

import render  # noqa: E402

CLI = [sys.executable, "-m", "qrp_lab.cli"]


def run_harness(tmp_path, experiment, cfg, name):
    cfg_path = tmp_path / f"{name}.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / f"{name}.csv"
    proc = subprocess.run(
        CLI + [experiment, "--config", str(cfg_path), "--out", str(out), "--seed", "11"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="module")
def harness_csvs(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("curves")
    small = {"n_reservoirs": 12, "n_inner": 4, "t_max": 3}
    paths = {
        "variance": run_harness(
            tmp_path, "variance", dict(small, n_a=[1], n_h=[2, 3]), "variance"
        ),
        "memory": run_harness(
            tmp_path, "memory-input", dict(small, n_a=[1], n_h=[1]), "memory"
        ),
        "erasure": run_harness(
            tmp_path,
            "erasure-unital",
            dict(small, n_a=[1], n_h=[1], q_list=[0.8, 0.9], n_pairs=4),
            "erasure",
        ),
        "layered": run_harness(
            tmp_path, "layered", dict(small, n_a=[1], n_h=[2, 3], layers=[1, 2]), "layered"
        ),
        "ising": run_harness(
            tmp_path, "ising", dict(small, n_a=[1], n_h=[1], dt_list=[0.3, 0.9]), "ising"
        ),
    }
    return paths


RECIPE_SOURCES = {
    "fig2": ("variance",),
    "fig3": ("memory",),
    "fig4": ("erasure",),
    "fig5": ("layered", "variance"),
    "fig6": ("ising",),
    "fig7": ("variance",),
}


@pytest.mark.parametrize("recipe", ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7"])
def test_recipes_render_images(recipe, harness_csvs, tmp_path):
    csvs = [str(harness_csvs[s]) for s in RECIPE_SOURCES[recipe]]
    out = tmp_path / f"{recipe}.png"
    assert render.main(["--recipe", recipe, "--csv", *csvs, "--out", str(out)]) == 0
    assert out.exists() and out.stat().st_size > 1000


@pytest.mark.parametrize("recipe", ["fig2", "fig3", "fig4", "fig5", "fig6"])
def test_recomputed_references_match_simulator_column(recipe, harness_csvs):
    # The render tool recomputes every reference from the sweep columns; the
    # simulator's analytic_ref column must agree to 1e-12.
    rows = render.load_rows([str(harness_csvs[s]) for s in RECIPE_SOURCES[recipe]])
    checked = 0
    for row in rows:
        if row["analytic_ref"] is None:
            continue
        recomputed = render.recompute_reference(recipe, row)
        assert recomputed is not None
        assert abs(recomputed - row["analytic_ref"]) <= 1e-12 * max(1.0, abs(recomputed))
        checked += 1
    assert checked > 0


def test_missing_column_reports_name(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("experiment,n_a,n_h\nvariance,1,1\n")
    out = tmp_path / "fig.png"
    assert render.main(["--recipe", "fig2", "--csv", str(bad), "--out", str(out)]) == 1
    assert "t" in capsys.readouterr().err
    assert not out.exists()


def test_empty_csv_is_an_error(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text(",".join(render.SCHEMA) + "\n")
    out = tmp_path / "fig.png"
    assert render.main(["--recipe", "fig2", "--csv", str(empty), "--out", str(out)]) == 1
    assert not out.exists()


def test_render_is_idempotent_and_does_not_mutate_input(harness_csvs, tmp_path):
    source = harness_csvs["variance"]
    digest_before = hashlib.sha256(source.read_bytes()).hexdigest()
    out1 = tmp_path / "a.png"
    out2 = tmp_path / "b.png"
    render.main(["--recipe", "fig2", "--csv", str(source), "--out", str(out1)])
    render.main(["--recipe", "fig2", "--csv", str(source), "--out", str(out2)])
    assert hashlib.sha256(source.read_bytes()).hexdigest() == digest_before
    assert out1.read_bytes() == out2.read_bytes()
