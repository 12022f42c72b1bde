"""HTTP session service for live labeling.

Exposes the engine's prompt/response protocol to browser and
programmatic clients.  Sessions persist as an initial snapshot plus an
append-only event log (with periodic full snapshots), so a restarted
server restores any session by replaying its recorded inputs.  Calls
within one session are serialized behind a lock; distinct sessions are
independent.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .checks import RuleError, RuleSet, validate_ruleset
from .data import DataError, Dataset, clean, load_csv, make_splits
from .datagen import GENERATORS, generate
from .engine import (
    LabelingTask, ProtocolError, Session, SessionConfig, canonical_json,
    replay_events,
)
from .tree import EFDTClassifier

SNAPSHOT_EVERY = 200
WIRE_VERSION = 1


class DatasetRef(BaseModel):
    generator: Optional[str] = None
    seed: int = 0
    csv: Optional[str] = None
    schema_path: Optional[str] = Field(default=None, alias="schema")

    model_config = {"populate_by_name": True}


class SessionRequest(BaseModel):
    dataset: DatasetRef
    config: dict = Field(default_factory=dict)
    rules: Optional[dict] = None
    pretrain: bool = True
    feed: str = "dataset"  # dataset: server feeds records; client: caller sends them


class LabelRequest(BaseModel):
    label: str
    record: Optional[dict] = None
    stream_index: Optional[int] = None
    idempotency_key: Optional[str] = None


class ResponseRequest(BaseModel):
    response: dict


class GfcPreviewRequest(BaseModel):
    accept_dn: list[int] = Field(default_factory=list)
    accept_pp: list[int] = Field(default_factory=list)


class SessionRuntime:
    """One live session plus its persistence and request bookkeeping."""

    def __init__(self, session_id: str, session: Session, directory: Path,
                 stream: Optional[list] = None):
        self.id = session_id
        self.session = session
        self.directory = directory
        self.stream = stream
        self.lock = threading.Lock()
        self.idempotency: dict = {}
        self.persisted_events = 0

    # -- persistence -----------------------------------------------------

    def persist_new_events(self) -> None:
        events = self.session.events
        if len(events) == self.persisted_events and self.persisted_events:
            return
        with open(self.directory / "events.ndjson", "a", encoding="utf-8") as fh:
            for event in events[self.persisted_events:]:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
        self.persisted_events = len(events)
        if self.persisted_events % SNAPSHOT_EVERY < 2 or self.session.complete:
            self.write_snapshot("snapshot.json")
        self.write_meta()

    def write_snapshot(self, name: str) -> None:
        path = self.directory / name
        path.write_bytes(canonical_json(self.session.snapshot()))

    def write_meta(self) -> None:
        meta = {
            "id": self.id,
            "status": self.session.status,
            "idempotency": self.idempotency,
            "stream": self.stream,
        }
        (self.directory / "meta.json").write_text(
            json.dumps(meta, sort_keys=True), encoding="utf-8")

    @classmethod
    def restore(cls, session_id: str, directory: Path) -> "SessionRuntime":
        base = directory / "snapshot.json"
        if not base.exists():
            base = directory / "initial.json"
        image = json.loads(base.read_text(encoding="utf-8"))
        events = []
        log_path = directory / "events.ndjson"
        if log_path.exists():
            with open(log_path, encoding="utf-8") as fh:
                events = [json.loads(line) for line in fh if line.strip()]
        session = replay_events(image, events)
        meta_path = directory / "meta.json"
        meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else {}
        runtime = cls(session_id, session, directory, stream=meta.get("stream"))
        runtime.idempotency = meta.get("idempotency", {})
        runtime.persisted_events = len(events)
        return runtime

    # -- views -----------------------------------------------------------

    def next_record(self) -> Optional[dict]:
        if self.stream is None:
            return None
        i = len(self.session.records)
        if i < len(self.stream):
            return {"stream_index": i, "record": self.stream[i]}
        return None

    def summary(self) -> dict:
        info = self.session.summary()
        info["pending"] = _enrich_prompt(self.session, info["pending"])
        info.update({
            "version": WIRE_VERSION,
            "id": self.id,
            "next": self.next_record(),
            "feed": "dataset" if self.stream is not None else "client",
            "labels": list(self.session.task.labels),
            "positive_label": self.session.task.positive_label,
            "sensitive_attribute": self.session.task.sensitive_attribute,
        })
        return info


class SessionStore:
    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, SessionRuntime] = {}
        self.lock = threading.Lock()

    def get(self, session_id: str) -> SessionRuntime:
        with self.lock:
            runtime = self.sessions.get(session_id)
            if runtime is None:
                directory = self.root / session_id
                if not (directory / "initial.json").exists():
                    raise HTTPException(404, f"unknown session {session_id!r}")
                runtime = SessionRuntime.restore(session_id, directory)
                self.sessions[session_id] = runtime
            return runtime

    def create(self, session: Session, stream: Optional[list]) -> SessionRuntime:
        session_id = uuid.uuid4().hex[:12]
        directory = self.root / session_id
        directory.mkdir(parents=True)
        runtime = SessionRuntime(session_id, session, directory, stream=stream)
        runtime.write_snapshot("initial.json")
        runtime.persist_new_events()
        with self.lock:
            self.sessions[session_id] = runtime
        return runtime


def _resolve_dataset(ref: DatasetRef) -> tuple[Dataset, RuleSet]:
    if ref.generator:
        if ref.generator not in GENERATORS:
            raise HTTPException(404, f"unknown dataset generator {ref.generator!r}")
        return generate(ref.generator, seed=ref.seed)
    if ref.csv:
        if not Path(ref.csv).exists():
            raise HTTPException(404, f"dataset file not found: {ref.csv}")
        if not ref.schema_path:
            raise HTTPException(422, "csv datasets need a schema description file")
        return clean(load_csv(ref.csv, ref.schema_path)), RuleSet()
    raise HTTPException(422, "dataset reference needs 'generator' or 'csv'")


def _enrich_prompt(session: Session, payload: Optional[dict]) -> Optional[dict]:
    """Attach display data the client must not compute itself: candidate
    records and the model's flip probabilities for fairness reviews."""
    if not payload or payload.get("kind") != "gfc_review":
        return payload
    pos = session.task.positive_label
    pos_col = list(session.model.classes_).index(pos)

    def detail(index, flip_to):
        proba = session.model.predict_proba([session.records[index]])[0]
        probability = proba[pos_col] if flip_to == pos else 1.0 - proba[pos_col]
        return {"index": index, "record": session.records[index],
                "current_label": session.labels[index], "flip_to": flip_to,
                "probability": probability}

    enriched = dict(payload)
    enriched["candidates"] = {
        "dn": [detail(i, pos) for i in payload["plan"]["dn_candidates"]],
        "pp": [detail(i, session.task.negative_label)
               for i in payload["plan"]["pp_candidates"]],
    }
    return enriched


def _outcome_payload(outcome, runtime: SessionRuntime) -> dict:
    payload = outcome.to_dict()
    payload["prompt"] = _enrich_prompt(runtime.session, payload["prompt"])
    payload.update({
        "version": WIRE_VERSION,
        "status": runtime.session.status,
        "next": runtime.next_record(),
    })
    return payload


def create_app(sessions_dir: str = "./sessions") -> FastAPI:
    app = FastAPI(title="colabel session service")
    from fastapi.middleware.cors import CORSMiddleware
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    store = SessionStore(Path(sessions_dir))

    @app.exception_handler(ProtocolError)
    def protocol_error(_, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=409, content={"error": "protocol", "detail": str(exc)})

    @app.exception_handler(DataError)
    def data_error(_, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=422, content={"error": "data", "detail": str(exc)})

    @app.exception_handler(RuleError)
    def rule_error(_, exc):
        from fastapi.responses import JSONResponse
        return JSONResponse(status_code=422, content={"error": "rules", "detail": str(exc)})

    @app.post("/sessions")
    def create_session(request: SessionRequest):
        dataset, ruleset = _resolve_dataset(request.dataset)
        if request.rules is not None:
            ruleset = RuleSet.from_dict(request.rules, dataset.positive_label,
                                        dataset.negative_label)
        problems = validate_ruleset(ruleset, dataset.schema, dataset.sensitive_attribute)
        if problems:
            raise HTTPException(422, {"error": "rules", "violations": problems})
        task = LabelingTask.from_dataset(dataset)
        model = EFDTClassifier(schema=list(task.schema), labels=task.labels)
        reference = []
        stream = None
        config_raw = dict(request.config)
        if request.pretrain and dataset.labels is not None and len(dataset.records) >= 3000:
            splits = make_splits(dataset, seed=config_raw.get("seed", 0))
            model.partial_fit(*splits.pretrain)
            reference = splits.pretrain[0]
            if request.feed == "dataset":
                stream = splits.stream[0]
        elif request.feed == "dataset":
            stream = dataset.records
        if stream is not None:
            config_raw.setdefault("target", len(stream))
        config = SessionConfig.from_dict({**SessionConfig().to_dict(), **config_raw})
        session = Session(config, task, ruleset, model, reference_records=reference)
        runtime = store.create(session, stream)
        return runtime.summary()

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        runtime = store.get(session_id)
        with runtime.lock:
            return runtime.summary()

    @app.post("/sessions/{session_id}/labels")
    def post_label(session_id: str, request: LabelRequest):
        runtime = store.get(session_id)
        with runtime.lock:
            key = request.idempotency_key
            if key and key in runtime.idempotency:
                return runtime.idempotency[key]
            already = len(runtime.session.records)
            if request.stream_index is not None and request.stream_index < already:
                return {
                    "version": WIRE_VERSION, "duplicate": True,
                    "finalized": _finalized_info(runtime.session, request.stream_index),
                    "status": runtime.session.status,
                    "next": runtime.next_record(),
                }
            record = request.record
            if record is None:
                if runtime.stream is None:
                    raise HTTPException(422, "record payload required (client feed)")
                if request.stream_index is None:
                    raise HTTPException(422, "record or stream_index required")
                if request.stream_index != already:
                    raise HTTPException(409, f"expected stream_index {already}")
                record = runtime.stream[request.stream_index]
            outcome = runtime.session.submit_label(record, request.label)
            runtime.persist_new_events()
            payload = _outcome_payload(outcome, runtime)
            if key:
                runtime.idempotency[key] = payload
                runtime.write_meta()
            return payload

    @app.post("/sessions/{session_id}/responses")
    def post_response(session_id: str, request: ResponseRequest):
        runtime = store.get(session_id)
        with runtime.lock:
            outcome = runtime.session.respond(request.response)
            runtime.persist_new_events()
            return _outcome_payload(outcome, runtime)

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str, since: int = 0):
        runtime = store.get(session_id)
        with runtime.lock:
            events = [e for e in runtime.session.events if e["seq"] >= since]
            return {"version": WIRE_VERSION, "events": events,
                    "next": len(runtime.session.events)}

    @app.post("/sessions/{session_id}/gfc-preview")
    def gfc_preview(session_id: str, request: GfcPreviewRequest):
        """Gap before/after a hypothetical selection, without applying it."""
        runtime = store.get(session_id)
        with runtime.lock:
            session = runtime.session
            pending = session.pending
            if pending is None or pending.kind != "gfc_review":
                raise HTTPException(409, "no fairness review is pending")
            plan = pending.plan
            if not set(request.accept_dn) <= set(plan.dn_candidates) or \
                    not set(request.accept_pp) <= set(plan.pp_candidates):
                raise HTTPException(422, "selection outside the plan")
            from .checks import disc, InsufficientGroupData
            labels = list(session.labels)
            for i in request.accept_dn:
                labels[i] = session.task.positive_label
            for i in request.accept_pp:
                labels[i] = session.task.negative_label
            try:
                after = disc(session.records, labels, session.task.sensitive_attribute,
                             session.task.discriminated_value, session.task.positive_label)
            except InsufficientGroupData:
                after = None
            return {"version": WIRE_VERSION, "disc_before": plan.disc_before,
                    "disc_after": after,
                    "flips": len(request.accept_dn) + len(request.accept_pp)}

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        runtime = store.get(session_id)
        with runtime.lock:
            session = runtime.session
            return {
                "version": WIRE_VERSION,
                "labeled": len(session.records),
                "disc": session.current_disc(),
                "unfair_couples": session.current_uc(),
                "stats": dict(session.stats),
                "provenance_counts": session.summary()["provenance_counts"],
            }

    @app.get("/sessions/{session_id}/explanations/latest")
    def latest_explanation(session_id: str):
        runtime = store.get(session_id)
        with runtime.lock:
            for event in reversed(runtime.session.events):
                if event["type"] == "prompt" and \
                        event["prompt"]["kind"] == "slc_suggestion" and \
                        event["prompt"].get("explanation"):
                    return {"version": WIRE_VERSION,
                            "record_index": event["prompt"]["record_index"],
                            "explanation": event["prompt"]["explanation"]}
            raise HTTPException(404, "no explanation shown yet")

    return app


def _finalized_info(session: Session, index: int) -> dict:
    return {
        "index": index,
        "final_label": session.labels[index],
        "provenance": session.provenance[index],
        "user_label": session.user_labels[index],
        "model_label": session.model_labels[index],
    }
