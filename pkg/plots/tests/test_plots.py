import hashlib
import os
import subprocess
import sys
from pathlib import Path

import pytest

from dltplots import cdf_points
from dltplots.cli import main
from dltplots.render import SCHEMAS, SchemaError, render

def write_cell(target: Path, rows_per_file=None):
    """Minimal synthetic scenario cell."""
    target.mkdir(parents=True, exist_ok=True)
    content = {
        "aggregate.csv": [
            "t,dr_mean,dr_std,latency_mean,latency_std,transit_mean,transit_std",
            "0.0,0.0,0.0,,,0.0,0.0",
            "1.0,25.0,1.0,0.5,0.1,0.7,0.05",
            "2.0,49.0,0.5,0.6,0.1,0.8,0.05",
        ],
        "per_node_agg.csv": [
            "t,node,dr_mean,dr_std,scaled_dr_mean",
            "0.0,0,0.0,0.0,0.0", "0.0,1,0.0,0.0,0.0",
            "1.0,0,10.0,0.1,10.0", "1.0,1,5.0,0.1,10.0",
            "2.0,0,11.0,0.1,11.0", "2.0,1,5.5,0.1,11.0",
        ],
        "latency.csv": [
            "run,node,issue_time,latency,work",
            "0,0,0.1,0.4,1.0", "0,0,0.6,0.9,1.0", "0,0,1.2,0.5,1.0",
            "0,1,0.2,1.4,1.0", "0,1,0.9,0.8,1.0",
        ],
        "nodes.csv": [
            "run,node,reputation,mode,assured_rate,peak_inbox",
            "0,0,1.0,content,25.0,3.0",
            "0,1,0.5,best-effort,12.5,2.0",
        ],
        "config.ini": ["[scheduler]", "scheduling_rate = 50.0"],
    }
    if rows_per_file:
        content.update(rows_per_file)
    for name, lines in content.items():
        (target / name).write_text("\n".join(lines) + "\n")


ALL_IMAGES = ["timeseries.png", "scaled_rates.png", "latency_cdf.png",
              "max_transit.png"]


class TestRender:
    def test_all_four_kinds_render(self, tmp_path):
        cell = tmp_path / "cell"
        out = tmp_path / "fig"
        write_cell(cell)
        paths = render("all", str(cell), str(out))
        assert sorted(os.path.basename(p) for p in paths) == \
            sorted(ALL_IMAGES)
        assert all(os.path.getsize(p) > 0 for p in paths)

    def test_empty_series_renders_axes(self, tmp_path):
        cell = tmp_path / "cell"
        write_cell(cell, {
            "aggregate.csv": [",".join(SCHEMAS["aggregate.csv"])],
            "latency.csv": [",".join(SCHEMAS["latency.csv"])],
            "per_node_agg.csv": [",".join(SCHEMAS["per_node_agg.csv"])],
        })
        out = tmp_path / "fig"
        paths = render("all", str(cell), str(out))
        assert len(paths) == 4

    def test_schema_mismatch_reports_column_diff(self, tmp_path):
        cell = tmp_path / "cell"
        write_cell(cell, {"aggregate.csv": ["t,dr_mean,bogus", "0,1,2"]})
        with pytest.raises(SchemaError) as err:
            render("timeseries", str(cell), str(tmp_path / "fig"))
        msg = str(err.value)
        assert "missing" in msg and "dr_std" in msg and "bogus" in msg

    def test_inputs_never_modified_and_output_deterministic(self, tmp_path):
        cell = tmp_path / "cell"
        write_cell(cell)
        before = {f: hashlib.sha256((cell / f).read_bytes()).hexdigest()
                  for f in os.listdir(cell)}
        first = {}
        for sub in ("one", "two"):
            out = tmp_path / sub
            render("all", str(cell), str(out))
            hashes = {f: hashlib.sha256((out / f).read_bytes()).hexdigest()
                      for f in ALL_IMAGES}
            if first:
                assert hashes == first
            first = hashes
        after = {f: hashlib.sha256((cell / f).read_bytes()).hexdigest()
                 for f in os.listdir(cell)}
        assert before == after

    def test_cdf_points_monotone_in_unit_interval(self):
        xs, ys = cdf_points([0.4, 0.1, 2.5, 0.9, 0.9])
        assert xs == sorted(xs)
        assert all(0.0 < y <= 1.0 for y in ys)
        assert all(b >= a for a, b in zip(ys, ys[1:]))
        assert ys[-1] == pytest.approx(1.0)


class TestCli:
    def test_exit_zero(self, tmp_path):
        cell = tmp_path / "cell"
        write_cell(cell)
        assert main(["timeseries", "--in", str(cell),
                     "--out", str(tmp_path / "fig")]) == 0
        assert (tmp_path / "fig" / "timeseries.png").exists()

    def test_schema_error_exit_two(self, tmp_path, capsys):
        cell = tmp_path / "cell"
        write_cell(cell, {"aggregate.csv": ["a,b", "1,2"]})
        assert main(["timeseries", "--in", str(cell),
                     "--out", str(tmp_path / "fig")]) == 2
        assert "missing" in capsys.readouterr().err

    def test_missing_directory_nonzero(self, tmp_path):
        assert main(["timeseries", "--in", str(tmp_path / "nope"),
                     "--out", str(tmp_path / "fig")]) != 0


@pytest.fixture(scope="module")
def scenario_dirs(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    for scenario in ("honest", "malicious"):
        proc = subprocess.run(
            [sys.executable, "-m", "dltsim.cli", "simulate", scenario,
             "--runs", "2", "--seed", "7", "--duration", "40",
             "--out", str(out),
             "--set", "node_count=15", "--set", "reputation_total=105",
             "--set", "malicious_start=10"],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
    return out


class TestAgainstSimulatorOutput:
    """Secondary acceptance: regenerate every figure kind from honest and
    malicious scenario CSVs produced by the simulator CLI."""

    def test_four_figure_kinds_from_both_scenarios(self, scenario_dirs,
                                                    tmp_path):
        for scenario in ("honest", "malicious"):
            rc = main(["all", "--in", str(scenario_dirs / scenario),
                       "--out", str(tmp_path / scenario)])
            assert rc == 0
            for image in ALL_IMAGES:
                assert (tmp_path / scenario / image).exists()

    def test_cdf_data_monotone_for_real_runs(self, scenario_dirs):
        import csv
        for scenario in ("honest", "malicious"):
            per_node = {}
            with open(scenario_dirs / scenario / "latency.csv") as fh:
                for row in csv.DictReader(fh):
                    per_node.setdefault(row["node"], []).append(
                        float(row["latency"]))
            assert per_node
            for lats in per_node.values():
                xs, ys = cdf_points(lats)
                assert all(b >= a for a, b in zip(ys, ys[1:]))
                assert 0.0 < ys[0] and ys[-1] == pytest.approx(1.0)
