"""Regenerate the frontend test fixtures from real server responses.

Run from the repo root after changing the core:
    python3 scripts/make_ui_fixtures.py          # rewrite fixtures
    python3 scripts/make_ui_fixtures.py --check  # fail if fixtures are stale
"""

import argparse
import json
import pathlib
import subprocess
import sys
import tempfile

from fastapi.testclient import TestClient

from failscope import synth, views
from failscope.dataset import save_dataset
from failscope.dtree import TreeParams
from failscope.server import create_app
from failscope.views import ViewSpec

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "frontend" / "tests" / "fixtures"

CONFIG = synth.SynthConfig(
    topics=(
        synth.TopicSpec("baseball", ("bat", "ball", "glove", "field"), 60),
        synth.TopicSpec("kitchen", ("stove", "pan", "sink", "oven"), 60),
        synth.TopicSpec("beach", ("sand", "wave", "towel", "shell"), 60),
    ),
    seed=19,
    detectors={t: synth.DetectorSpec(precision=0.8, recall=0.85)
               for t in ("baseball", "kitchen", "beach")},
    rules=(synth.FailureRule((("detector_precision", "le", 0.8),), 0.85),),
    background_failure_prob=0.15,
)

SPEC = ViewSpec("component", "crowd", "crowd", k=3,
                tree=TreeParams(min_samples_leaf=5, seed=4))


CHECK_ONLY = False


def write(name: str, payload) -> None:
    path = FIXTURES / name
    body = json.dumps(payload, sort_keys=True, indent=1) + "\n"
    if CHECK_ONLY:
        if not path.exists() or path.read_text() != body:
            raise SystemExit(f"stale fixture: {path} (rerun without --check)")
        print(f"ok {path.name}")
        return
    path.write_text(body)
    print(f"wrote {path}")


def main() -> int:
    dataset, _ = synth.generate(CONFIG)
    app = create_app(dataset, SPEC)
    client = TestClient(app)

    report = client.get("/api/report").json()
    write("report.json", report)
    write("clusters.json", client.get("/api/clusters").json())
    write("dendrogram.json", client.get("/api/dendrogram").json())

    cid = report["clusters"][0]["cluster_id"]
    write("cluster_tree.json", client.get(f"/api/clusters/{cid}/tree").json())
    write("cluster_ranking.json", client.get(f"/api/clusters/{cid}/ranking").json())

    root_feature = report["generic"]["tree"]["root"]["feature"]
    leaf = report["generic"]["tree"]["root"]["left"]
    while leaf["kind"] != "leaf":
        leaf = leaf["left"]
    write("leaf_instances.json",
          client.get(f"/api/trees/generic/leaves/{leaf['id']}/instances").json())

    whatif = client.post(
        "/api/whatif", json={"excluded_features": [root_feature]}
    ).json()
    write("whatif_exclude_root.json", whatif)

    merge_ids = sorted(c["cluster_id"] for c in report["clusters"])[:2]
    write("whatif_merge.json",
          client.post("/api/whatif", json={"merges": [merge_ids]}).json())

    # cross-check: the CLI whatif reproduces the same report byte-for-byte
    with tempfile.TemporaryDirectory() as tmp:
        tmp_path = pathlib.Path(tmp)
        save_dataset(dataset, str(tmp_path / "data.json"))
        base = views.build_view(dataset, SPEC)
        views.save_report(base, str(tmp_path / "base.json"))
        out = tmp_path / "whatif.json"
        rc = subprocess.run(
            [sys.executable, "-m", "failscope.cli", "whatif",
             "--input", str(tmp_path / "data.json"),
             "--report", str(tmp_path / "base.json"),
             "--exclude", root_feature, "--out", str(out)],
        ).returncode
        assert rc == 0
        cli_report = json.loads(out.read_text())
        assert cli_report == whatif, "CLI whatif diverged from server whatif"
        print(f"CLI round-trip ok: config hash {cli_report['config_hash']}")
    write("meta.json", {"excluded_root_feature": root_feature})
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--check", action="store_true",
                        help="verify fixtures instead of rewriting them")
    CHECK_ONLY = parser.parse_args().check
    sys.exit(main())
