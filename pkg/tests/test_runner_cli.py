"""End-to-end runner, report serialization and the command line."""

import csv
import io
import json
import math
import os
import re

import numpy as np
import pytest

from loraskg import RunConfig, SimConfig, StageError, calibrated_config, run_pipeline, run_sweep
from loraskg.chansim import serialize_eve_csv, simulate
from loraskg.cli import main
from loraskg.runner import atomic_write, build_report, write_outputs
from loraskg.trace import parse_trace_csv, serialize_trace_csv


def small_sim(seed=3, n=1280, **overrides):
    return calibrated_config(n_samples=n, seed=seed, **overrides)


def sim_config_file(tmp_path, seed=3, n=1280):
    path = tmp_path / "sim.json"
    cfg = small_sim(seed, n)
    path.write_text(json.dumps({
        "n_samples": cfg.n_samples, "probe_period": cfg.probe_period,
        "rx_delay": cfg.rx_delay, "ar_coeff": cfg.ar_coeff,
        "noise_std_alice": cfg.noise_std_alice, "noise_std_bob": cfg.noise_std_bob,
        "seed": cfg.seed,
    }))
    return str(path)


class TestRunConfig:
    def test_requires_exactly_one_source(self):
        with pytest.raises(ValueError, match="exactly one input source"):
            RunConfig()
        with pytest.raises(ValueError, match="exactly one input source"):
            RunConfig(input_csv="x.csv", sim=small_sim())

    def test_eve_needs_input_csv(self):
        with pytest.raises(ValueError, match="eve_csv requires"):
            RunConfig(sim=small_sim(), eve_csv="eve.csv")

    def test_cutoff_range(self):
        with pytest.raises(ValueError, match="outside"):
            RunConfig(sim=small_sim(), cutoff=0.3)
        with pytest.raises(ValueError, match="outside"):
            RunConfig(sim=small_sim(), cutoffs=(0.1, 0.3))

    def test_quantizer_names(self):
        with pytest.raises(ValueError, match="unknown quantizer"):
            RunConfig(sim=small_sim(), quantizers=("gray",))
        with pytest.raises(ValueError, match="at least one"):
            RunConfig(sim=small_sim(), quantizers=())

    def test_alpha_range(self):
        with pytest.raises(ValueError, match="alpha"):
            RunConfig(sim=small_sim(), alpha=0.0)


class TestRunPipeline:
    def test_structure_and_bookkeeping(self):
        config = RunConfig(sim=small_sim())
        outcomes = run_pipeline(config)
        assert set(outcomes) == {"threshold", "difference"}
        for oc in outcomes.values():
            n_blocks = len(oc.outcomes)
            assert n_blocks == 10  # 1280 // 128
            assert oc.code.code_id == "bch(127,15,27)"  # cutoff 0.2
            accepted = [o for o in oc.outcomes if o.accepted]
            assert len(oc.transcript) == len(accepted)
            for o in oc.outcomes:
                if not o.accepted:
                    assert o.reconciled is None and o.randomness is None
                elif o.reconciled:
                    assert o.corrected_errors is not None
                    assert o.randomness is not None
            # sim input always carries Eve observations
            assert oc.eve is not None

    def test_grouped_key_accounting(self):
        config = RunConfig(sim=small_sim(seed=1, n=2560))
        oc = run_pipeline(config)["difference"]
        passing = [
            o.block_index
            for o in oc.outcomes
            if o.randomness is not None and o.randomness.passed
        ]
        group = math.ceil(128 / oc.code.k)  # 9 for bch(127,15,27)
        assert group == 9
        assert len(oc.keys) == len(passing) // group
        assert oc.pending_blocks == passing[len(passing) - len(passing) % group:]
        for label, key in oc.keys:
            assert label in ("AppSKey", "NwkSEncKey")
            assert len(key.source_blocks) == group
            assert key.leakage_total == group * (oc.code.n - oc.code.k)

    def test_paper_mode_one_key_per_block(self):
        config = RunConfig(sim=small_sim(seed=1, n=2560), paper_mode=True)
        oc = run_pipeline(config)["difference"]
        passing = [
            o.block_index
            for o in oc.outcomes
            if o.randomness is not None and o.randomness.passed
        ]
        assert len(passing) > 0
        assert [k.source_blocks for _, k in oc.keys] == [[b] for b in passing]
        assert oc.pending_blocks == []
        assert all(k.leakage_total == oc.code.n - oc.code.k for _, k in oc.keys)

    def test_key_labels_alternate(self):
        config = RunConfig(sim=small_sim(seed=1, n=2560), paper_mode=True)
        oc = run_pipeline(config)["difference"]
        labels = [label for label, _ in oc.keys]
        assert len(labels) >= 2
        assert labels == [("AppSKey", "NwkSEncKey")[i % 2] for i in range(len(labels))]

    def test_deterministic_report(self):
        config = RunConfig(sim=small_sim(seed=7))
        r1 = build_report(config, run_pipeline(config))
        r2 = build_report(config, run_pipeline(config))
        assert json.dumps(r1, sort_keys=True) == json.dumps(r2, sort_keys=True)

    def test_lower_cutoff_accepts_fewer(self):
        tight = RunConfig(sim=small_sim(seed=2), cutoff=0.05)
        loose = RunConfig(sim=small_sim(seed=2), cutoff=0.25)
        oc_t = run_pipeline(tight)["difference"]
        oc_l = run_pipeline(loose)["difference"]
        n_t = sum(o.accepted for o in oc_t.outcomes)
        n_l = sum(o.accepted for o in oc_l.outcomes)
        assert n_t <= n_l
        assert oc_t.code.k >= oc_l.code.k  # lighter code at tighter cutoff

    def test_cutoff_beyond_code_coverage_degrades_per_block(self):
        # 0.25 exceeds the strongest code's t/n (27/127); the run must
        # still complete, sending such blocks to that code
        config = RunConfig(sim=small_sim(seed=6), cutoff=0.25)
        oc = run_pipeline(config)["difference"]
        assert oc.code.code_id == "bch(127,15,27)"
        for o in oc.outcomes:
            if o.accepted and o.bdr_ab > 27 / 127:
                assert o.reconciled is False

    def test_enhance_degree_flows_through(self):
        config = RunConfig(sim=small_sim(seed=2), enhance_degree=8)
        outcomes = run_pipeline(config)
        assert set(outcomes) == {"threshold", "difference"}

    def test_stage_error_segment(self):
        config = RunConfig(sim=small_sim(n=64))
        with pytest.raises(StageError, match="segment") as err:
            run_pipeline(config)
        assert err.value.stage == "segment"

    def test_stage_error_input(self):
        config = RunConfig(input_csv="does-not-exist.csv")
        with pytest.raises(StageError, match="input"):
            run_pipeline(config)

    def test_stage_error_quantize(self):
        config = RunConfig(sim=small_sim(), enhance_degree=128)
        with pytest.raises(StageError, match="quantize"):
            run_pipeline(config)

    def test_no_probe_period(self, tmp_path):
        rows = "".join(f"{i},0.0,-70.{i % 10},-71.{i % 10}\n" for i in range(128))
        path = tmp_path / "flat.csv"
        path.write_text("uplink_counter,t,rssi_dev,rssi_gw\n" + rows)
        with pytest.raises(StageError, match="no usable probe period"):
            run_pipeline(RunConfig(input_csv=str(path)))


class TestCsvInput:
    @pytest.fixture()
    def trace_files(self, tmp_path):
        real = simulate(small_sim(seed=5, n=300))
        buf = io.StringIO()
        serialize_trace_csv(real.trace, buf)
        trace_path = tmp_path / "trace.csv"
        trace_path.write_text(buf.getvalue())
        buf = io.StringIO()
        serialize_eve_csv(real, buf)
        eve_path = tmp_path / "eve.csv"
        eve_path.write_text(buf.getvalue())
        return str(trace_path), str(eve_path)

    def test_csv_matches_sim_route(self, trace_files):
        trace_path, eve_path = trace_files
        from_csv = run_pipeline(RunConfig(input_csv=trace_path, eve_csv=eve_path))
        from_sim = run_pipeline(RunConfig(sim=small_sim(seed=5, n=300)))
        for q in ("threshold", "difference"):
            a, b = from_csv[q], from_sim[q]
            assert [o.to_dict() for o in a.outcomes] == [o.to_dict() for o in b.outcomes]
            assert [k.hex for _, k in a.keys] == [k.hex for _, k in b.keys]

    def test_without_eve_csv(self, trace_files):
        trace_path, _ = trace_files
        oc = run_pipeline(RunConfig(input_csv=trace_path))["difference"]
        assert oc.eve is None
        assert all(o.bdr_ea is None for o in oc.outcomes)

    def test_eve_csv_missing_counter(self, trace_files, tmp_path):
        trace_path, eve_path = trace_files
        lines = open(eve_path).read().splitlines()
        del lines[5]
        short = tmp_path / "eve_short.csv"
        short.write_text("\n".join(lines) + "\n")
        with pytest.raises(StageError, match="eve trace missing uplink_counter 4"):
            run_pipeline(RunConfig(input_csv=trace_path, eve_csv=str(short)))


class TestOutputs:
    def test_files_written(self, tmp_path):
        config = RunConfig(sim=small_sim(), out_dir=str(tmp_path / "out"))
        outcomes = run_pipeline(config)
        written = write_outputs(config, outcomes)
        assert sorted(os.path.basename(p) for p in written) == [
            "keys_difference.txt",
            "keys_threshold.txt",
            "report.json",
            "transcript_difference.csv",
            "transcript_threshold.csv",
        ]
        report = json.loads(open(os.path.join(config.out_dir, "report.json")).read())
        assert set(report) == {"kgr_accounting", "config", "quantizers"}
        assert report["config"]["cutoff"] == 0.2
        assert "transcript_overhead_bits" in report["quantizers"]["difference"]["reconciliation"]

    def test_transcript_csv_shape(self, tmp_path):
        config = RunConfig(sim=small_sim(), out_dir=str(tmp_path))
        outcomes = run_pipeline(config)
        write_outputs(config, outcomes)
        lines = open(tmp_path / "transcript_difference.csv").read().splitlines()
        assert lines[0] == "block_index,code_id,syndrome_hex,verify_digest_hex"
        accepted = sum(o.accepted for o in outcomes["difference"].outcomes)
        assert len(lines) == 1 + accepted
        # code_id contains commas, so the field is quoted; parse properly
        rows = list(csv.reader(lines[1:]))
        for idx, code_id, syn, dig in rows:
            assert code_id == "bch(127,15,27)"
            assert len(syn) == 2 * ((112 + 7) // 8)
            assert len(dig) == 8

    def test_key_file_format(self, tmp_path):
        config = RunConfig(
            sim=small_sim(seed=1, n=2560), paper_mode=True, out_dir=str(tmp_path)
        )
        outcomes = run_pipeline(config)
        write_outputs(config, outcomes)
        lines = open(tmp_path / "keys_difference.txt").read().splitlines()
        assert len(lines) == len(outcomes["difference"].keys)
        pattern = re.compile(
            r"^[0-9a-f]{32} (AppSKey|NwkSEncKey) blocks=\d+(,\d+)* leakage_bits=\d+$"
        )
        for line in lines:
            assert pattern.match(line), line

    def test_atomic_write_no_temp_left(self, tmp_path):
        path = tmp_path / "x.txt"
        atomic_write(str(path), "payload")
        assert path.read_text() == "payload"
        assert os.listdir(tmp_path) == ["x.txt"]


class TestRunSweep:
    def test_rows_and_monotonicity(self):
        config = RunConfig(sim=small_sim(seed=4), cutoffs=(0.05, 0.1, 0.15, 0.2, 0.25))
        rows = run_sweep(config)
        assert [c for c, _ in rows] == [0.05, 0.1, 0.15, 0.2, 0.25]
        for q in ("threshold", "difference"):
            series = [cell[q] for _, cell in rows]
            assert series == sorted(series)

    def test_unsorted_cutoffs_stage_error(self):
        config = RunConfig(sim=small_sim(), cutoffs=(0.2, 0.1))
        with pytest.raises(StageError, match="sweep"):
            run_sweep(config)


class TestCli:
    def test_simulate_writes_csvs(self, tmp_path, capsys):
        cfg = tmp_path / "sim.json"
        cfg.write_text(json.dumps({"n_samples": 256}))
        rc = main(["simulate", "--sim", str(cfg), "--seed", "5", "--out", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert "simulated 256 samples" in out
        trace = parse_trace_csv(open(tmp_path / "trace.csv").read())
        assert len(trace) == 256
        assert (tmp_path / "eve.csv").exists()

    def test_run_roundtrip(self, tmp_path, capsys):
        sim_path = sim_config_file(tmp_path)
        out = tmp_path / "out"
        rc = main(["run", "--sim", sim_path, "--out", str(out)])
        assert rc == 0
        text = capsys.readouterr().out
        assert "threshold: 10 blocks" in text
        assert "difference: 10 blocks" in text
        assert "wrote" in text
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["paper_mode"] is False
        assert set(report["quantizers"]) == {"threshold", "difference"}

    def test_run_quantizer_and_cutoff_flags(self, tmp_path):
        sim_path = sim_config_file(tmp_path)
        out = tmp_path / "out"
        rc = main([
            "run", "--sim", sim_path, "--quantizer", "difference",
            "--cutoff", "0.1", "--paper-mode", "--out", str(out),
        ])
        assert rc == 0
        report = json.loads((out / "report.json").read_text())
        assert list(report["quantizers"]) == ["difference"]
        assert report["config"]["cutoff"] == 0.1
        assert report["config"]["paper_mode"] is True
        # 13/127 >= 0.1, so the 50-bit-message code is the best fit
        assert report["quantizers"]["difference"]["reconciliation"]["code_id"] == "bch(127,50,13)"

    def test_run_from_csv_with_eve(self, tmp_path, capsys):
        real = simulate(small_sim(seed=5, n=300))
        buf = io.StringIO()
        serialize_trace_csv(real.trace, buf)
        (tmp_path / "trace.csv").write_text(buf.getvalue())
        buf = io.StringIO()
        serialize_eve_csv(real, buf)
        (tmp_path / "eve.csv").write_text(buf.getvalue())
        out = tmp_path / "out"
        rc = main([
            "run", "--input", str(tmp_path / "trace.csv"),
            "--eve", str(tmp_path / "eve.csv"), "--out", str(out),
        ])
        assert rc == 0
        report = json.loads((out / "report.json").read_text())
        assert report["quantizers"]["difference"]["eve"] is not None

    def test_config_file_with_flag_override(self, tmp_path):
        sim_path = sim_config_file(tmp_path)
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({
            "sim": json.loads(open(sim_path).read()),
            "cutoff": 0.15,
            "quantizers": ["difference"],
            "out_dir": str(tmp_path / "from_file"),
        }))
        rc = main(["run", "--config", str(cfg), "--cutoff", "0.2"])
        assert rc == 0
        report = json.loads((tmp_path / "from_file" / "report.json").read_text())
        assert report["config"]["cutoff"] == 0.2  # flag wins
        assert list(report["quantizers"]) == ["difference"]  # file survives

    def test_identical_runs_identical_quantizer_output(self, tmp_path):
        sim_path = sim_config_file(tmp_path, seed=11)
        reports = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["run", "--sim", sim_path, "--out", str(out)]) == 0
            reports.append(json.loads((out / "report.json").read_text())["quantizers"])
        assert json.dumps(reports[0], sort_keys=True) == json.dumps(reports[1], sort_keys=True)

    def test_sweep_csv(self, tmp_path, capsys):
        sim_path = sim_config_file(tmp_path)
        out = tmp_path / "out"
        rc = main([
            "sweep", "--sim", sim_path, "--cutoffs", "0.05,0.1,0.2", "--out", str(out),
        ])
        assert rc == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "cutoff,kgr_threshold,kgr_difference"
        assert len(lines) == 4

    def test_report_summary(self, tmp_path, capsys):
        sim_path = sim_config_file(tmp_path)
        out = tmp_path / "out"
        main(["run", "--sim", sim_path, "--out", str(out)])
        capsys.readouterr()
        rc = main(["report", str(out / "report.json")])
        assert rc == 0
        text = capsys.readouterr().out
        assert "KGR counts all probed time" in text
        assert "difference: 10 blocks" in text
        assert "mean key time" in text
        assert "eve:" in text

    def test_missing_input_exit_code(self, tmp_path, capsys):
        rc = main(["run", "--input", str(tmp_path / "nope.csv")])
        assert rc == 1
        assert "error in stage input" in capsys.readouterr().err

    def test_no_source_exit_code(self, capsys):
        rc = main(["run"])
        assert rc == 1
        assert "exactly one input source" in capsys.readouterr().err

    def test_bad_cutoff_exit_code(self, tmp_path, capsys):
        sim_path = sim_config_file(tmp_path)
        rc = main(["run", "--sim", sim_path, "--cutoff", "0.3"])
        assert rc == 1
        assert "outside" in capsys.readouterr().err

    def test_unknown_command_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2


class TestGoldenReport:
    def test_small_run_matches_golden(self):
        """Pins the full report for one fixed configuration.

        Regenerate tests/golden/report_small.json with
        scripts/make_golden.py after an intentional behavior change.
        """
        config = RunConfig(sim=small_sim(seed=3, n=1280))
        report = build_report(config, run_pipeline(config))
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
        golden_path = os.path.join(os.path.dirname(__file__), "golden", "report_small.json")
        assert text == open(golden_path).read()
