import threading
import time

import pytest
from fastapi.testclient import TestClient

from failscope import views
from failscope.dtree import TreeParams, leaf_instances
from failscope.server import create_app
from failscope.views import ViewSpec

from test_views import two_topic_dataset

SPEC = ViewSpec("component", "crowd", "crowd", k=2,
                tree=TreeParams(min_samples_leaf=5, seed=7))


@pytest.fixture(scope="module")
def dataset():
    ds, _ = two_topic_dataset(seed=13)
    return ds


@pytest.fixture(scope="module")
def client(dataset):
    app = create_app(dataset, SPEC)
    with TestClient(app) as c:
        yield c


class TestReads:
    def test_report_served_and_cached_byte_identical(self, client):
        first = client.get("/api/report")
        second = client.get("/api/report")
        assert first.status_code == 200
        assert first.content == second.content
        raw = first.json()
        assert raw["kind"] == "performance_report"
        assert raw["schema_version"] == 1

    def test_cluster_summaries_match_report(self, client):
        report = client.get("/api/report").json()
        summaries = client.get("/api/clusters").json()
        assert summaries["config_hash"] == report["config_hash"]
        by_id = {c["cluster_id"]: c for c in report["clusters"]}
        for row in summaries["clusters"]:
            full = by_id[row["cluster_id"]]
            assert row["size"] == full["size"]
            assert row["satisfaction_rate"] == full["satisfaction_rate"]
            assert row["top_terms"] == full["top_terms"]
            assert row["cv_accuracy"] == (
                full["cv"]["mean_accuracy"] if full["cv"] else None
            )

    def test_cluster_tree_and_ranking(self, client):
        summaries = client.get("/api/clusters").json()["clusters"]
        cid = summaries[0]["cluster_id"]
        tree = client.get(f"/api/clusters/{cid}/tree")
        assert tree.status_code == 200
        assert tree.json()["tree"]["root"]["samples"]
        ranking = client.get(f"/api/clusters/{cid}/ranking")
        assert ranking.status_code == 200
        assert ranking.json()["entries"]

    def test_unknown_cluster_404(self, client):
        assert client.get("/api/clusters/999/tree").status_code == 404
        assert client.get("/api/clusters/999/ranking").status_code == 404

    def test_dendrogram_merge_list(self, client, dataset):
        raw = client.get("/api/dendrogram").json()
        assert len(raw["leaves"]) == len(dataset)
        assert len(raw["merges"]) == len(dataset) - 1

    def test_leaf_instances_match_tree(self, client):
        report = views.report_from_dict(client.get("/api/report").json())
        tree = report.generic.tree
        leaf = tree.leaves()[0]
        body = client.get(f"/api/trees/generic/leaves/{leaf.id}/instances")
        assert body.status_code == 200
        got_ids = [i["id"] for i in body.json()["instances"]]
        assert tuple(got_ids) == leaf_instances(tree, leaf.id)
        for inst in body.json()["instances"]:
            assert inst["label"] in ("satisfactory", "unsatisfactory")
            assert "detector_precision" in inst["features"]

    def test_unknown_tree_or_leaf_404(self, client):
        assert client.get("/api/trees/bogus/leaves/0/instances").status_code == 404
        assert client.get("/api/trees/generic/leaves/9999/instances").status_code == 404


class TestWhatIf:
    def test_exclusion_removes_feature(self, client):
        report = views.report_from_dict(client.get("/api/report").json())
        root = report.generic.tree.root.split.feature
        res = client.post("/api/whatif", json={"excluded_features": [root]})
        assert res.status_code == 200
        new = views.report_from_dict(res.json())
        assert root not in new.generic.tree.features_tested()

    def test_cache_hit_returns_identical_bytes(self, client):
        body = {"excluded_features": ["detector_recall"]}
        first = client.post("/api/whatif", json=body)
        second = client.post("/api/whatif", json=body)
        assert first.content == second.content
        config_hash = first.json()["config_hash"]
        cached = client.get(f"/api/whatif/{config_hash}")
        assert cached.content == first.content

    def test_digest_mismatch_409(self, client):
        res = client.post("/api/whatif", json={"dataset_digest": "deadbeef"})
        assert res.status_code == 409

    def test_malformed_body_400(self, client):
        res = client.post("/api/whatif", content=b"{not json",
                          headers={"content-type": "application/json"})
        assert res.status_code == 400
        res = client.post("/api/whatif", json={"merges": "nope"})
        assert res.status_code == 400

    def test_unknown_cluster_400(self, client):
        res = client.post("/api/whatif", json={"merges": [[0, 999]]})
        assert res.status_code == 400

    def test_unknown_hash_404(self, client):
        assert client.get("/api/whatif/ffffffffffffffff").status_code == 404

    def test_single_flight_dedupes_concurrent_requests(self, dataset, monkeypatch):
        calls = []
        original = views.what_if

        def counted(*args, **kwargs):
            calls.append(1)
            time.sleep(0.2)
            return original(*args, **kwargs)

        monkeypatch.setattr("failscope.server.views.what_if", counted)
        app = create_app(dataset, SPEC)
        with TestClient(app) as c:
            body = {"excluded_features": ["language_errors"]}
            results = {}

            def post(tag):
                results[tag] = c.post("/api/whatif", json=body)

            threads = [threading.Thread(target=post, args=(i,)) for i in range(3)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        assert len(calls) == 1
        bodies = {r.content for r in results.values()}
        assert len(bodies) == 1

    def test_slow_computation_returns_202_then_poll(self, dataset, monkeypatch):
        original = views.what_if

        def slow(*args, **kwargs):
            time.sleep(0.4)
            return original(*args, **kwargs)

        monkeypatch.setattr("failscope.server.views.what_if", slow)
        app = create_app(dataset, SPEC, time_budget=0.05)
        with TestClient(app) as c:
            res = c.post("/api/whatif", json={"excluded_features": ["term_count"]})
            # term_count is not a component-view feature: immediate 400
            assert res.status_code == 400
            res = c.post("/api/whatif", json={"excluded_features": ["detector_recall"]})
            assert res.status_code == 202
            token = res.json()["config_hash"]
            deadline = time.time() + 5
            while time.time() < deadline:
                polled = c.get(f"/api/whatif/{token}")
                if polled.status_code == 200:
                    break
                assert polled.status_code == 202
                time.sleep(0.05)
            assert polled.status_code == 200
            assert polled.json()["config_hash"] == token
