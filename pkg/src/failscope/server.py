"""HTTP facade exposing reports and what-if analysis.

The server holds one validated dataset and its base report. Every response
is a pure function of (dataset digest, endpoint, request body, seed):
what-if results are cached as serialized bytes keyed by config hash, so a
repeated request returns a byte-identical body, and concurrent identical
requests share a single computation.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import clustering, views
from .dataset import Dataset, build_feature_table
from .views import PerformanceReport, ViewSpec, WhatIfDelta

DEFAULT_TIME_BUDGET = 2.0  # seconds before a what-if turns into a 202 poll

_UI_DIST = Path(__file__).resolve().parents[2] / "frontend" / "dist"


def _json_bytes(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode() + b"\n"


class _WhatIfJob:
    def __init__(self):
        self.done = threading.Event()
        self.body: bytes | None = None
        self.error: str | None = None


class ReportService:
    """Base report plus a single-flight cache of what-if reports."""

    def __init__(self, dataset: Dataset, spec: ViewSpec, jobs: int = 1,
                 time_budget: float = DEFAULT_TIME_BUDGET):
        self.dataset = dataset
        self.jobs = jobs
        self.time_budget = time_budget
        self.base = views.build_view(dataset, spec, jobs=jobs)
        self.digest = self.base.dataset_digest
        matrix = clustering.build_term_matrix(dataset, spec.clustering_source)
        self.dendrogram = clustering.agglomerate(matrix)
        self._cache: dict[str, bytes] = {
            self.base.config_hash: views.report_to_json_bytes(self.base)
        }
        self._reports: dict[str, PerformanceReport] = {self.base.config_hash: self.base}
        self._inflight: dict[str, _WhatIfJob] = {}
        self._lock = threading.Lock()

    def cached(self, config_hash: str) -> bytes | None:
        with self._lock:
            return self._cache.get(config_hash)

    def pending(self, config_hash: str) -> bool:
        with self._lock:
            return config_hash in self._inflight

    def report_for(self, config_hash: str) -> PerformanceReport | None:
        with self._lock:
            return self._reports.get(config_hash)

    def submit_whatif(self, delta: WhatIfDelta) -> tuple[str, _WhatIfJob]:
        """Start (or join) the computation for a delta; returns its hash."""
        target = views.apply_delta(self.base.spec, delta)
        config_hash = views.config_hash(self.digest, target)
        with self._lock:
            if config_hash in self._cache:
                job = _WhatIfJob()
                job.body = self._cache[config_hash]
                job.done.set()
                return config_hash, job
            if config_hash in self._inflight:
                return config_hash, self._inflight[config_hash]
            job = _WhatIfJob()
            self._inflight[config_hash] = job

        def work():
            try:
                report = views.what_if(self.base, self.dataset, delta, jobs=self.jobs)
                body = views.report_to_json_bytes(report)
                with self._lock:
                    self._cache[config_hash] = body
                    self._reports[config_hash] = report
                    job.body = body
            except Exception as exc:  # surfaced to the poller
                job.error = str(exc)
            finally:
                with self._lock:
                    self._inflight.pop(config_hash, None)
                job.done.set()

        threading.Thread(target=work, daemon=True).start()
        return config_hash, job


def _cluster_summary(c: views.ClusterReport) -> dict:
    return {
        "cluster_id": c.cluster_id,
        "label": c.label,
        "size": c.size,
        "top_terms": list(c.top_terms),
        "satisfaction_rate": c.satisfaction_rate,
        "human_agreement": c.human_agreement,
        "cv_accuracy": c.cv.mean_accuracy if c.cv else None,
        "highlight": c.highlight,
        "skip_reason": c.skip_reason,
    }


def create_app(dataset: Dataset, spec: ViewSpec, jobs: int = 1,
               time_budget: float = DEFAULT_TIME_BUDGET) -> FastAPI:
    service = ReportService(dataset, spec, jobs=jobs, time_budget=time_budget)
    app = FastAPI(title="failscope", version="1")
    app.state.service = service

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": "malformed body"})

    def raw(payload: dict, status: int = 200) -> Response:
        return Response(content=_json_bytes(payload), status_code=status,
                        media_type="application/json")

    @app.get("/api/report")
    def get_report():
        return Response(content=service.cached(service.base.config_hash),
                        media_type="application/json")

    @app.get("/api/clusters")
    def get_clusters():
        return raw({
            "schema_version": views.REPORT_SCHEMA_VERSION,
            "config_hash": service.base.config_hash,
            "clusters": [_cluster_summary(c) for c in service.base.clusters],
        })

    def _find_cluster(cluster_id: int) -> views.ClusterReport | None:
        for c in service.base.clusters:
            if c.cluster_id == cluster_id:
                return c
        return None

    @app.get("/api/clusters/{cluster_id}/tree")
    def get_tree(cluster_id: int):
        c = _find_cluster(cluster_id)
        if c is None:
            return raw({"detail": f"unknown cluster {cluster_id}"}, 404)
        if c.tree is None:
            return raw({"detail": f"cluster {cluster_id} skipped: {c.skip_reason}"}, 404)
        from .dtree import tree_to_dict
        return raw({
            "schema_version": views.REPORT_SCHEMA_VERSION,
            "cluster_id": cluster_id,
            "tree": tree_to_dict(c.tree),
        })

    @app.get("/api/clusters/{cluster_id}/ranking")
    def get_ranking(cluster_id: int):
        c = _find_cluster(cluster_id)
        if c is None:
            return raw({"detail": f"unknown cluster {cluster_id}"}, 404)
        return raw({
            "schema_version": views.REPORT_SCHEMA_VERSION,
            "cluster_id": cluster_id,
            "entries": [[name, mi] for name, mi in c.ranking.entries],
            "single_class": c.ranking.single_class,
        })

    @app.get("/api/trees/{tree_id}/leaves/{leaf_id}/instances")
    def get_leaf_instances(tree_id: str, leaf_id: int):
        if tree_id == "generic":
            tree = service.base.generic.tree
        elif tree_id.startswith("cluster-"):
            try:
                c = _find_cluster(int(tree_id.split("-", 1)[1]))
            except ValueError:
                c = None
            if c is None or c.tree is None:
                return raw({"detail": f"unknown tree {tree_id}"}, 404)
            tree = c.tree
        else:
            return raw({"detail": f"unknown tree {tree_id}"}, 404)
        try:
            node = tree.node(leaf_id)
        except Exception:
            return raw({"detail": f"unknown leaf {leaf_id}"}, 404)
        if not node.is_leaf:
            return raw({"detail": f"node {leaf_id} is not a leaf"}, 404)
        features = dataset.catalog.select(spec.view_kind, spec.data_source)
        members = [dataset.by_id(i) for i in node.instance_ids]
        table = build_feature_table(dataset, features, members)
        return raw({
            "schema_version": views.REPORT_SCHEMA_VERSION,
            "tree": tree_id,
            "leaf": leaf_id,
            "instances": [
                {
                    "id": inst.id,
                    "label": inst.label,
                    "features": {
                        name: table.values[i, j]
                        for j, name in enumerate(table.feature_names)
                    },
                }
                for i, inst in enumerate(members)
            ],
        })

    @app.get("/api/dendrogram")
    def get_dendrogram():
        return raw({
            "schema_version": views.REPORT_SCHEMA_VERSION,
            **clustering.dendrogram_to_dict(service.dendrogram),
        })

    @app.post("/api/whatif")
    async def post_whatif(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return raw({"detail": "malformed body"}, 400)
        if not isinstance(body, dict):
            return raw({"detail": "malformed body"}, 400)
        expected = body.get("dataset_digest")
        if expected is not None and expected != service.digest:
            return raw({"detail": "dataset digest mismatch"}, 409)
        try:
            delta = views.delta_from_dict(body)
        except (views.ViewError, TypeError, ValueError):
            return raw({"detail": "malformed body"}, 400)
        try:
            views._validate_delta(service.base, dataset, delta)
        except views.ViewError as exc:
            return raw({"detail": str(exc)}, 400)
        config_hash, job = service.submit_whatif(delta)
        job.done.wait(timeout=service.time_budget)
        if not job.done.is_set():
            return raw({"status": "pending", "config_hash": config_hash}, 202)
        if job.error is not None:
            return raw({"detail": job.error}, 400)
        assert job.body is not None
        return Response(content=job.body, media_type="application/json")

    @app.get("/api/whatif/{config_hash}")
    def get_whatif(config_hash: str):
        body = service.cached(config_hash)
        if body is not None:
            return Response(content=body, media_type="application/json")
        if service.pending(config_hash):
            return raw({"status": "pending", "config_hash": config_hash}, 202)
        return raw({"detail": f"unknown report {config_hash}"}, 404)

    if _UI_DIST.is_dir():
        app.mount("/", StaticFiles(directory=str(_UI_DIST), html=True), name="ui")

    return app
