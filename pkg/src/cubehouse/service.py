"""Session, persistence and the HTTP API.

The on-disk warehouse *is* the document set; there is no other database.
A session keeps an immutable warehouse snapshot plus named cubes; readers
grab the current snapshot reference and stay consistent for free, while a
rule application takes the single writer slot, rewrites the documents
through a journaled temp+rename commit protocol, and swaps the snapshot.
Killing the process at any point of the commit leaves the directory
recoverable to either the old or the new warehouse; recovery runs on the
next open.

Cubes are tied to the warehouse version they were built from and are
flagged stale after an apply.

Endpoints: GET /model, POST /cubes, GET /cubes/{id}, POST /cubes/{id}/op,
POST /rules/validate, POST /rules/apply, POST /mine/{task}, GET /log.
Errors come back as {"error": {"code", "message", "where"?}}.
"""

from __future__ import annotations

import json
import os
import threading
from typing import Any, Callable, Mapping

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import association, clustering, factorial
from .cube import (
    Cube,
    build_cube,
    cube_from_json,
    cube_to_json,
    dice,
    drill_down,
    pull,
    push,
    roll_up,
    rotate,
    slice_cube,
    switch,
)
from .errors import EngineError
from .evolution import (
    RuleSet,
    apply_ruleset,
    parse_rules,
    rules_from_json,
    validate_ruleset,
)
from .model import Warehouse, validate
from .xmlio import MODEL_FILE, load_warehouse, serialize_warehouse

JOURNAL_FILE = ".apply-journal"
_NEW_SUFFIX = ".apply-new"


# ---------------------------------------------------------------------------
# Journaled commit


def recover_directory(directory: str) -> None:
    """Finish or roll back an interrupted commit.

    With a journal present the commit had reached its point of no return:
    roll forward by renaming every staged file that is still pending. Without
    one, staged files were never committed: drop them.
    """
    journal_path = os.path.join(directory, JOURNAL_FILE)
    if os.path.exists(journal_path):
        with open(journal_path, encoding="utf-8") as fh:
            names = json.load(fh)
        for name in names:
            staged = os.path.join(directory, name + _NEW_SUFFIX)
            if os.path.exists(staged):
                os.replace(staged, os.path.join(directory, name))
        os.remove(journal_path)
        return
    for entry in os.listdir(directory):
        if entry.endswith(_NEW_SUFFIX) or entry == JOURNAL_FILE + ".tmp":
            os.remove(os.path.join(directory, entry))


def commit_documents(directory: str, documents: Mapping[str, str],
                     fault: Callable[[str], None] | None = None) -> None:
    """Replace warehouse documents atomically (write temp, journal, rename).

    ``fault`` is a test hook called between protocol steps; raising from it
    simulates a crash at that point.
    """
    def step(label: str) -> None:
        if fault is not None:
            fault(label)

    names = sorted(documents)
    for name in names:
        step(f"stage:{name}")
        staged = os.path.join(directory, name + _NEW_SUFFIX)
        with open(staged, "w", encoding="utf-8") as fh:
            fh.write(documents[name])
            fh.flush()
            os.fsync(fh.fileno())
    step("journal")
    journal_tmp = os.path.join(directory, JOURNAL_FILE + ".tmp")
    with open(journal_tmp, "w", encoding="utf-8") as fh:
        json.dump(names, fh)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(journal_tmp, os.path.join(directory, JOURNAL_FILE))
    for name in names:
        step(f"rename:{name}")
        os.replace(os.path.join(directory, name + _NEW_SUFFIX),
                   os.path.join(directory, name))
    step("cleanup")
    os.remove(os.path.join(directory, JOURNAL_FILE))


# ---------------------------------------------------------------------------
# Shared operator dispatch (HTTP and CLI run the exact same code)


def apply_operator(cube: Cube, request: Mapping[str, Any]) -> Cube:
    op = request.get("op")
    if op == "roll-up":
        return roll_up(cube, request["dimension"], request["level"])
    if op == "drill-down":
        return drill_down(cube, request["dimension"], request["level"])
    if op == "slice":
        return slice_cube(cube, request["dimension"], request["member"])
    if op == "dice":
        return dice(cube, request["predicates"])
    if op == "rotate":
        return rotate(cube, request["order"])
    if op == "switch":
        return switch(cube, request["dimension"], request["members"])
    if op == "push":
        return push(cube, request["dimension"])
    if op == "pull":
        return pull(cube)
    raise EngineError("unknown-operator", f"operator {op!r} is not one of the nine")


def model_to_dict(warehouse: Warehouse) -> dict:
    model = warehouse.model
    return {
        "dimensions": [
            {
                "id": d.id,
                "path": d.path,
                "levels": [
                    {
                        "id": lv.id,
                        "attributes": [{"name": a.name, "type": a.type}
                                       for a in lv.attributes],
                        "members": list(warehouse.dimension_data[d.id]
                                        .level(lv.id).ids()),
                    }
                    for lv in d.levels
                ],
            }
            for d in model.dimensions
        ],
        "facts": {
            "id": model.facts.id,
            "path": model.facts.path,
            "measures": [{"id": m.id, "type": m.type} for m in model.facts.measures],
            "dimensions": list(model.facts.dimension_refs),
            "rows": len(warehouse.facts.rows),
        },
    }


MAX_RENDERED_CELLS = 10_000


def render_cube(cube_id: str, cube: Cube, stale: bool,
                offset: int = 0, limit: int | None = None) -> dict:
    doc = cube_to_json(cube)
    doc["id"] = cube_id
    doc["stale"] = stale
    total = len(doc["cells"])
    if limit is None and total > MAX_RENDERED_CELLS:
        limit = MAX_RENDERED_CELLS
    if offset or limit is not None:
        end = None if limit is None else offset + limit
        doc["cells"] = doc["cells"][offset:end]
    doc["cell_total"] = total
    doc["cell_offset"] = offset
    return doc


def _ruleset_from_request(body: Mapping[str, Any]) -> RuleSet:
    if "text" in body:
        return parse_rules(body["text"])
    return rules_from_json(body)


class Session:
    """One loaded warehouse directory plus its named cubes and apply log."""

    def __init__(self, directory: str):
        self.directory = directory
        recover_directory(directory)
        self.warehouse = load_warehouse(directory)
        self.report = validate(self.warehouse)
        self.version = 1
        self.cubes: dict[str, tuple[Cube, int]] = {}
        self.log: list[dict] = []
        self._counter = 0
        self._lock = threading.Lock()
        self._writer = threading.Lock()

    # -- warehouse ---------------------------------------------------------

    def model_info(self) -> dict:
        info = model_to_dict(self.warehouse)
        info["version"] = self.version
        info["validation"] = self.report.to_dict()
        return info

    # -- cubes ---------------------------------------------------------------

    def _store(self, cube: Cube) -> str:
        with self._lock:
            self._counter += 1
            cube_id = f"c{self._counter}"
            self.cubes[cube_id] = (cube, self.version)
        return cube_id

    def _fetch(self, cube_id: str) -> tuple[Cube, int]:
        entry = self.cubes.get(cube_id)
        if entry is None:
            raise EngineError("unknown-cube", f"no cube {cube_id!r}", where=cube_id)
        return entry

    def create_cube(self, body: Mapping[str, Any]) -> dict:
        axes = [(ax["dimension"], ax["level"]) for ax in body["axes"]]
        cube = build_cube(self.warehouse, axes, body["measure"],
                          body.get("aggregate", "SUM"))
        cube_id = self._store(cube)
        return render_cube(cube_id, cube, stale=False)

    def register_cube(self, cube: Cube) -> str:
        """Adopt an externally built cube (the CLI loads exported cubes)."""
        return self._store(cube)

    def operate(self, cube_id: str, body: Mapping[str, Any]) -> dict:
        cube, version = self._fetch(cube_id)
        result = apply_operator(cube, body)
        new_id = self._store(result)
        return render_cube(new_id, result, stale=version != self.version)

    def get_cube(self, cube_id: str, offset: int = 0, limit: int | None = None) -> dict:
        cube, version = self._fetch(cube_id)
        return render_cube(cube_id, cube, stale=version != self.version,
                           offset=offset, limit=limit)

    # -- evolution -----------------------------------------------------------

    def validate_rules(self, body: Mapping[str, Any]) -> dict:
        rule_set = _ruleset_from_request(body)
        report = validate_ruleset(rule_set, self.warehouse)
        return report.to_dict()

    def apply_rules(self, body: Mapping[str, Any], dry_run: bool = False) -> dict:
        rule_set = _ruleset_from_request(body)
        report = validate_ruleset(rule_set, self.warehouse)
        if dry_run or not report.ok:
            out = report.to_dict()
            out["applied"] = False
            return out
        if not self._writer.acquire(blocking=False):
            raise EngineError("concurrent-writer",
                              "another rule application is in progress")
        try:
            new_warehouse, summary = apply_ruleset(self.warehouse, rule_set)
            documents = dict(serialize_warehouse(new_warehouse))
            changed_dim = new_warehouse.model.dimension(summary.dim_id)
            to_commit = {MODEL_FILE: documents[MODEL_FILE],
                         changed_dim.path: documents[changed_dim.path]}
            commit_documents(self.directory, to_commit)
            with self._lock:
                self.warehouse = new_warehouse
                self.report = validate(new_warehouse)
                self.version += 1
                self.log.append({"seq": len(self.log) + 1,
                                 "version": self.version,
                                 "change": summary.to_dict()})
        finally:
            self._writer.release()
        out = report.to_dict()
        out["applied"] = True
        out["change"] = summary.to_dict()
        out["version"] = self.version
        return out

    # -- mining ----------------------------------------------------------------

    def mine(self, task: str, body: Mapping[str, Any]) -> dict:
        if task == "opac":
            return self._mine_opac(body)
        if task == "mca":
            return self._mine_mca(body)
        if task == "rules":
            return self._mine_rules(body)
        raise EngineError("unknown-task",
                          f"mining task {task!r} is not opac, mca or rules", where=task)

    def _mine_opac(self, body: Mapping[str, Any]) -> dict:
        cube, _ = self._fetch(body["cube"])
        dim_id = body["dimension"]
        vectors = clustering.extract_member_vectors(
            cube, dim_id,
            include_descriptors=bool(body.get("include_descriptors", False)),
            descriptor_weight=float(body.get("descriptor_weight", 1.0)))
        dendrogram = clustering.ahc_cluster(
            vectors, body.get("linkage", "ward"),
            normalize=bool(body.get("normalize", True)))
        profile = clustering.quality_profile(dendrogram, vectors)
        out: dict = {
            "dimension": dim_id,
            "linkage": dendrogram.linkage,
            "members": list(dendrogram.leaves),
            "dendrogram": dendrogram.to_json(),
            "quality": [q.to_dict() for q in profile],
        }
        k = body.get("k")
        if k is not None:
            partition = clustering.cut_partition(dendrogram, int(k))
            out["partition"] = [sorted(c) for c in partition.clusters]
            out["partition_quality"] = clustering.partition_quality(
                partition, vectors).to_dict()
            target_level = body.get("target_level")
            if target_level:
                names = body.get("names") or [f"group-{i + 1}"
                                              for i in range(partition.k)]
                rule_set = clustering.partition_to_rules(
                    partition, cube, dim_id, target_level, names,
                    target_attribute=body.get("target_attribute", "group-name"))
                out["ruleset"] = {
                    **_rules_json(rule_set),
                }
        return out

    def _mine_mca(self, body: Mapping[str, Any]) -> dict:
        cube, version = self._fetch(body["cube"])
        variables = [(ax.dim_id, ax.level_id) for ax in cube.axes]
        indicator = factorial.build_indicator_matrix(cube.provenance.warehouse,
                                                     variables)
        result = factorial.mca_axes(indicator)
        table = factorial.test_values(result, indicator)
        before = factorial.homogeneity(cube)
        arranged = factorial.arrange_cube(cube, table)
        after = factorial.homogeneity(arranged)
        arranged_id = self._store(arranged)
        return {
            "eigenvalues": [float(v) for v in result.eigenvalues],
            "test_values": [
                {"dimension": d, "level": lv, "member": m,
                 "values": [float(x) for x in tv]}
                for (d, lv, m), tv in sorted(table.values.items())
            ],
            "untestable": [list(key) for key in sorted(table.untestable)],
            "homogeneity_before": before.to_dict(),
            "homogeneity_after": after.to_dict(),
            "arranged_cube": render_cube(arranged_id, arranged,
                                         stale=version != self.version),
        }

    def _mine_rules(self, body: Mapping[str, Any]) -> dict:
        meta = association.meta_rule_from_json(body["meta"])
        min_support = float(body.get("min_support", 0.1))
        min_confidence = float(body.get("min_confidence", 0.5))
        frequent = association.mine_frequent(self.warehouse, meta, min_support)
        rules = association.derive_rules(frequent, meta, min_confidence)
        return {
            "min_support": min_support,
            "min_confidence": min_confidence,
            "frequent": [
                {"items": [list(i) for i in sorted(itemset)], "support": support}
                for itemset, support in frequent
            ],
            "rules": [association.rule_to_dict(r) for r in rules],
        }

    def log_entries(self) -> list[dict]:
        return list(self.log)


def _rules_json(rule_set) -> dict:
    from .evolution import format_rules, rules_to_json
    return {"json": rules_to_json(rule_set), "text": format_rules(rule_set)}


# ---------------------------------------------------------------------------
# FastAPI application


def create_app(session: Session, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="cubehouse", version="0.1.0")

    _STATUS = {"unknown-cube": 404, "unknown-dimension": 404, "unknown-level": 404,
               "unknown-member": 404, "unknown-measure": 404, "unknown-task": 404,
               "concurrent-writer": 409}

    @app.exception_handler(EngineError)
    async def engine_error_handler(_request: Request, exc: EngineError):
        return JSONResponse(status_code=_STATUS.get(exc.code, 400),
                            content={"error": exc.to_dict()})

    @app.get("/model")
    def get_model():
        return session.model_info()

    @app.post("/cubes")
    async def post_cube(request: Request):
        return session.create_cube(await request.json())

    @app.get("/cubes/{cube_id}")
    def get_cube(cube_id: str, offset: int = 0, limit: int | None = None):
        return session.get_cube(cube_id, offset=offset, limit=limit)

    @app.post("/cubes/{cube_id}/op")
    async def post_op(cube_id: str, request: Request):
        return session.operate(cube_id, await request.json())

    @app.post("/rules/validate")
    async def post_validate(request: Request):
        return session.validate_rules(await request.json())

    @app.post("/rules/apply")
    async def post_apply(request: Request, dry_run: bool = False):
        return session.apply_rules(await request.json(), dry_run=dry_run)

    @app.post("/mine/{task}")
    async def post_mine(task: str, request: Request):
        return session.mine(task, await request.json())

    @app.get("/log")
    def get_log():
        return session.log_entries()

    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
