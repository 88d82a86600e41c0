import csv
import filecmp
import os
import subprocess
import sys

import pytest

from dltsim.cli import main
from dltsim.config import SimConfig
from dltsim.scenarios import SCENARIO_NAMES, build_scenario, run_scenario


def small_base(**kw):
    d = dict(node_count=10, neighbour_count=4, duration=15.0, seed=11,
             reputation_total=70.0, malicious_start=5.0)
    d.update(kw)
    return SimConfig(**d)


class TestRegistry:
    def test_all_presets_build(self):
        base = small_base()
        for name in SCENARIO_NAMES:
            sc = build_scenario(name, base)
            assert sc.cells

    def test_sweeps_expand_to_cells(self):
        base = small_base()
        assert [c.label for c in build_scenario("sweep-A", base).cells] == \
            ["A=0.025", "A=0.075", "A=0.225"]
        assert [c.label for c in build_scenario("drr-vs-drrminus",
                                                base).cells] == \
            ["drrminus", "drr"]
        ns = [c.config.node_count
              for c in build_scenario("sweep-n", base).cells]
        assert ns == [25, 50, 100]

    def test_malicious_preset_uses_switches(self):
        base = small_base(malicious_nodes=[3])
        cell = build_scenario("malicious", base).cells[0]
        assert cell.config.malicious_nodes == []
        assert [sw.node for sw in cell.config.switches] == [3]
        from_start = build_scenario(
            "malicious", small_base(malicious_nodes=[3],
                                    malicious_start=0.0)).cells[0]
        assert from_start.config.malicious_nodes == [3]

    def test_unknown_scenario(self):
        from dltsim.config import ConfigError
        with pytest.raises(ConfigError):
            build_scenario("warp", small_base())


EXPECTED_FILES = {
    "timeseries.csv": ["run", "t", "dr", "dr_pct", "mean_latency",
                       "max_transit"],
    "per_node.csv": ["run", "t", "node", "dr_i", "scaled_dr_i"],
    "latency.csv": ["run", "node", "issue_time", "latency", "work"],
    "drops.csv": ["run", "t", "node", "issuer", "seq", "work"],
    "nodes.csv": ["run", "node", "reputation", "mode", "assured_rate",
                  "peak_inbox"],
    "summary.csv": ["run", "dr_final60", "dr_pct_final60",
                    "mean_latency_final60", "max_transit_median",
                    "max_transit_max", "transit_slope_final3rd", "drops",
                    "peak_inbox", "issued", "disseminated"],
    "aggregate.csv": ["t", "dr_mean", "dr_std", "latency_mean",
                      "latency_std", "transit_mean", "transit_std"],
    "per_node_agg.csv": ["t", "node", "dr_mean", "dr_std",
                         "scaled_dr_mean"],
}


class TestExport:
    def test_csv_schema_and_documented_columns(self, tmp_path):
        run_scenario("honest", small_base(), runs=2, out_dir=str(tmp_path))
        cell = tmp_path / "honest"
        for fname, header in EXPECTED_FILES.items():
            with open(cell / fname) as fh:
                assert next(csv.reader(fh)) == header
        assert (cell / "config.ini").exists()
        assert (cell / "cell.json").exists()

    def test_aggregate_is_pointwise_mean_and_std(self, tmp_path):
        run_scenario("honest", small_base(), runs=3, out_dir=str(tmp_path))
        cell = tmp_path / "honest"
        per_run = {}
        with open(cell / "timeseries.csv") as fh:
            for row in csv.DictReader(fh):
                per_run.setdefault(row["t"], []).append(float(row["dr"]))
        with open(cell / "aggregate.csv") as fh:
            for row in csv.DictReader(fh):
                vals = per_run[row["t"]]
                mean = sum(vals) / len(vals)
                var = sum((v - mean) ** 2 for v in vals) / len(vals)
                assert float(row["dr_mean"]) == pytest.approx(mean)
                assert float(row["dr_std"]) == pytest.approx(var ** 0.5)

    def test_multi_cell_directories(self, tmp_path):
        run_scenario("drr-vs-drrminus", small_base(), runs=1,
                     out_dir=str(tmp_path))
        assert (tmp_path / "drr-vs-drrminus" / "drrminus"
                / "timeseries.csv").exists()
        assert (tmp_path / "drr-vs-drrminus" / "drr"
                / "timeseries.csv").exists()

    def test_byte_identical_for_same_seed(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for target in (a, b):
            run_scenario("malicious", small_base(), runs=2,
                         out_dir=str(target))
        files = sorted(os.listdir(a / "malicious"))
        match, mismatch, errors = filecmp.cmpfiles(
            a / "malicious", b / "malicious", files, shallow=False)
        assert not mismatch and not errors

    def test_different_seed_changes_output(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        run_scenario("honest", small_base(seed=1), runs=1, out_dir=str(a))
        run_scenario("honest", small_base(seed=2), runs=1, out_dir=str(b))
        assert (a / "honest" / "timeseries.csv").read_bytes() != \
            (b / "honest" / "timeseries.csv").read_bytes()


class TestCli:
    ARGS = ["--runs", "1", "--seed", "3", "--duration", "10",
            "--set", "node_count=10", "--set", "reputation_total=70"]

    def test_simulate_exit_zero(self, tmp_path):
        code = main(["simulate", "honest", "--out", str(tmp_path)] +
                    self.ARGS)
        assert code == 0
        assert (tmp_path / "honest" / "timeseries.csv").exists()

    def test_unknown_scenario_exit_two(self, tmp_path):
        assert main(["simulate", "warp", "--out", str(tmp_path)]) == 2

    def test_invalid_override_exit_two(self, tmp_path):
        assert main(["simulate", "honest", "--out", str(tmp_path),
                     "--set", "rate_decrease=1.5"]) == 2

    def test_config_file_ingestion(self, tmp_path):
        ini = tmp_path / "sim.ini"
        ini.write_text("[network]\nnode_count = 10\nduration = 8\n"
                       "[reputation]\nreputation_total = 70\n")
        code = main(["simulate", "honest", "--out", str(tmp_path / "out"),
                     "--config", str(ini), "--runs", "1", "--seed", "2"])
        assert code == 0
        text = (tmp_path / "out" / "honest" / "config.ini").read_text()
        assert "node_count = 10" in text

    def test_console_script_entry(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "dltsim.cli", "simulate", "honest",
             "--out", str(tmp_path)] + self.ARGS,
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr


class TestRunSweep:
    def test_sweep_cells_and_export(self, tmp_path):
        from dltsim.scenarios import run_sweep
        results = run_sweep("W", [1.0, 2.0], runs=1, base=small_base(),
                            out_dir=str(tmp_path))
        assert sorted(results) == ["W=1.0", "W=2.0"]
        for label in results:
            assert (tmp_path / "sweep-W" / label / "aggregate.csv").exists()
            assert len(results[label]) == 1

    def test_sweep_applies_the_parameter(self):
        from dltsim.scenarios import run_sweep
        results = run_sweep("A", [0.05], runs=1, base=small_base())
        cfg = results["A=0.05"][0].config
        assert cfg.rate_increase == 0.05

    def test_node_count_sweep_conserves_total_reputation(self):
        from dltsim.scenarios import run_sweep
        results = run_sweep("node_count", [8, 12], runs=1,
                            base=small_base())
        totals = [sum(rr[0].reputations) for rr in results.values()]
        assert totals[0] == pytest.approx(totals[1])

    def test_bad_sweeps_rejected(self):
        from dltsim.config import ConfigError
        from dltsim.scenarios import run_sweep
        with pytest.raises(ConfigError):
            run_sweep("warp", [1.0], runs=1, base=small_base())
        with pytest.raises(ConfigError):
            run_sweep("W", [], runs=1, base=small_base())
