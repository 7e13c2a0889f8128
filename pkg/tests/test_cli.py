import json
import subprocess
import sys

import pytest

from failscope import synth
from failscope.cli import run
from failscope.views import load_report


@pytest.fixture
def synth_config_path(tmp_path):
    cfg = synth.SynthConfig(
        topics=(
            synth.TopicSpec("baseball", ("bat", "ball", "glove", "field"), 50),
            synth.TopicSpec("kitchen", ("stove", "pan", "sink", "oven"), 50),
        ),
        seed=5,
        detectors={
            "baseball": synth.DetectorSpec(precision=0.8, recall=0.9),
            "kitchen": synth.DetectorSpec(precision=0.8, recall=0.9),
        },
        rules=(synth.FailureRule((("detector_precision", "le", 0.8),), 0.9),),
        background_failure_prob=0.1,
    )
    path = tmp_path / "config.json"
    path.write_text(json.dumps(synth.config_to_dict(cfg)))
    return str(path)


@pytest.fixture
def dataset_path(tmp_path, synth_config_path):
    out = tmp_path / "data.json"
    manifest = tmp_path / "manifest.json"
    assert run(["synth", "--config", synth_config_path,
                "--out", str(out), "--manifest", str(manifest)]) == 0
    return str(out)


ANALYZE_FLAGS = ["--view", "component", "--source", "crowd",
                 "--cluster-source", "crowd", "--k", "2",
                 "--min-leaf", "5", "--seed", "7"]


class TestSynthCommand:
    def test_outputs_both_files(self, tmp_path, synth_config_path):
        out = tmp_path / "d.json"
        man = tmp_path / "m.json"
        assert run(["synth", "--config", synth_config_path,
                    "--out", str(out), "--manifest", str(man)]) == 0
        assert out.exists() and man.exists()

    def test_same_seed_same_bytes(self, tmp_path, synth_config_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(["synth", "--config", synth_config_path, "--out", str(a),
             "--manifest", str(tmp_path / "ma.json")])
        run(["synth", "--config", synth_config_path, "--out", str(b),
             "--manifest", str(tmp_path / "mb.json")])
        assert a.read_bytes() == b.read_bytes()

    def test_seed_override_changes_output(self, tmp_path, synth_config_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(["synth", "--config", synth_config_path, "--out", str(a),
             "--manifest", str(tmp_path / "ma.json")])
        run(["synth", "--config", synth_config_path, "--seed", "901",
             "--out", str(b), "--manifest", str(tmp_path / "mb.json")])
        assert a.read_bytes() != b.read_bytes()


class TestValidateCommand:
    def test_clean_dataset_exits_zero(self, dataset_path, capsys):
        assert run(["validate", "--input", dataset_path]) == 0
        assert "analysis-ready" in capsys.readouterr().out

    def test_corrupted_dataset_exits_nonzero(self, tmp_path, dataset_path, capsys):
        raw = json.loads(open(dataset_path).read())
        raw["instances"][1]["id"] = raw["instances"][0]["id"]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(raw))
        assert run(["validate", "--input", str(bad)]) == 1
        assert "duplicate-id" in capsys.readouterr().out

    def test_missing_file_exits_one(self, tmp_path, capsys):
        assert run(["validate", "--input", str(tmp_path / "nope.json")]) == 1
        assert "error [validate]" in capsys.readouterr().err


class TestAnalyzeCommand:
    def test_deterministic_across_runs_and_jobs(self, tmp_path, dataset_path):
        outs = []
        for name, jobs in (("r1.json", "1"), ("r2.json", "1"), ("r3.json", "8")):
            out = tmp_path / name
            assert run(["analyze", "--input", dataset_path, *ANALYZE_FLAGS,
                        "--jobs", jobs, "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_bad_flags_exit_two(self, dataset_path):
        assert run(["analyze", "--input", dataset_path, "--view", "bogus",
                    "--out", "x.json"]) == 2

    def test_unknown_subcommand_exits_two(self):
        assert run(["frobnicate"]) == 2


class TestWhatIfCommand:
    def test_exclusion_removes_feature_and_matches_hash(self, tmp_path, dataset_path):
        base = tmp_path / "base.json"
        run(["analyze", "--input", dataset_path, *ANALYZE_FLAGS, "--out", str(base)])
        base_report = load_report(str(base))
        root = base_report.generic.tree.root.split.feature
        out = tmp_path / "whatif.json"
        assert run(["whatif", "--input", dataset_path, "--report", str(base),
                    "--exclude", root, "--out", str(out)]) == 0
        new_report = load_report(str(out))
        assert root not in new_report.generic.tree.features_tested()

        # the whatif output equals a from-scratch analyze with the same exclusion
        fresh = tmp_path / "fresh.json"
        run(["analyze", "--input", dataset_path, *ANALYZE_FLAGS,
             "--exclude", root, "--out", str(fresh)])
        assert out.read_bytes() == fresh.read_bytes()

    def test_merge_groups_parse(self, tmp_path, dataset_path):
        base = tmp_path / "base.json"
        run(["analyze", "--input", dataset_path, *ANALYZE_FLAGS, "--out", str(base)])
        ids = [c.cluster_id for c in load_report(str(base)).clusters]
        out = tmp_path / "merged.json"
        assert run(["whatif", "--input", dataset_path, "--report", str(base),
                    "--merge", f"{ids[0]},{ids[1]}", "--out", str(out)]) == 0
        assert len(load_report(str(out)).clusters) == len(ids) - 1

    def test_bad_merge_group_exits_one(self, tmp_path, dataset_path, capsys):
        base = tmp_path / "base.json"
        run(["analyze", "--input", dataset_path, *ANALYZE_FLAGS, "--out", str(base)])
        assert run(["whatif", "--input", dataset_path, "--report", str(base),
                    "--merge", "a,b", "--out", str(tmp_path / "x.json")]) == 1
        assert "error [whatif]" in capsys.readouterr().err


class TestCompareRenderCommands:
    def test_compare_self_zero_deltas(self, tmp_path, dataset_path):
        base = tmp_path / "base.json"
        run(["analyze", "--input", dataset_path, *ANALYZE_FLAGS, "--out", str(base)])
        out = tmp_path / "cmp.json"
        assert run(["compare", "--a", str(base), "--b", str(base),
                    "--out", str(out)]) == 0
        raw = json.loads(out.read_text())
        assert all(row["rate_delta"] == 0.0 for row in raw["rows"])

    def test_render_html_contains_hash(self, tmp_path, dataset_path):
        base = tmp_path / "base.json"
        run(["analyze", "--input", dataset_path, *ANALYZE_FLAGS, "--out", str(base)])
        report = load_report(str(base))
        page = tmp_path / "report.html"
        assert run(["render", "--report", str(base), "--out", str(page)]) == 0
        html = page.read_text()
        assert report.config_hash in html
        assert "<table>" in html


class TestEntryPoint:
    def test_module_invocation(self, tmp_path, synth_config_path):
        out = tmp_path / "d.json"
        proc = subprocess.run(
            [sys.executable, "-m", "failscope.cli", "synth",
             "--config", synth_config_path,
             "--out", str(out), "--manifest", str(tmp_path / "m.json")],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.exists()
