"""HTTP service for the two-stage red-teaming workflow.

Stage one: create a session against a configured system, ask a question,
inspect and edit the retrieved sources.  Stage two: trigger mining and watch
rule events stream back over server-sent events while the run executes on a
background thread.  Sessions live in memory; each one serializes its own
state transitions, and a mining run never blocks on (or dies with) the HTTP
client that started it — the stream is a replayable view of a per-run event
channel, so reconnecting or re-fetching the run summary always works.
"""
from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .errors import ConfigError, RetrievalError, RunFailedError
from .lattice import (
    MiningRun,
    SourceSet,
    event_to_dict,
    mine_rules,
    record_to_dict,
    summary_to_dict,
)
from .oracles import cached
from .retrieval import SourceDoc, edit_source, reset_source, retrieve
from .systems import SystemConfig, load_systems


class SessionState(str, Enum):
    CREATED = "created"
    RETRIEVED = "retrieved"
    MINING = "mining"
    COMPLETE = "complete"
    FAILED = "failed"


class EventChannel:
    """Ordered, replayable event feed for one mining run.

    Publishers append; any number of subscribers iterate from the beginning,
    blocking until more events arrive or the channel closes.  A subscriber
    that connects after the run finished still replays everything.
    """

    def __init__(self) -> None:
        self._items: list[tuple[str, dict]] = []
        self._closed = False
        self._cond = threading.Condition()

    def publish(self, kind: str, data: dict) -> None:
        with self._cond:
            self._items.append((kind, data))
            self._cond.notify_all()

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def subscribe(self) -> Iterator[tuple[str, dict]]:
        index = 0
        while True:
            with self._cond:
                while index >= len(self._items) and not self._closed:
                    self._cond.wait()
                if index < len(self._items):
                    item = self._items[index]
                    index += 1
                else:
                    return
            yield item


@dataclass
class Session:
    id: str
    system: SystemConfig
    state: SessionState = SessionState.CREATED
    question: str | None = None
    sources: list[SourceDoc] = field(default_factory=list)
    safety_enabled: bool = True
    oracle_name: str | None = None
    latest_run: MiningRun | None = None
    channel: EventChannel | None = None
    past_summaries: list[dict] = field(default_factory=list)
    run_counter: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def source_payload(self) -> list[dict]:
        return [
            {
                "id": doc.id,
                "label": f"S{i + 1}",
                "title": doc.title,
                "original_text": doc.original_text,
                "current_text": doc.current_text,
                "edited": doc.edited,
                "score": doc.score,
            }
            for i, doc in enumerate(self.sources)
        ]

    def snapshot(self) -> dict:
        return {
            "session_id": self.id,
            "system_tag": self.system.system_tag,
            "state": self.state.value,
            "question": self.question,
            "safety_enabled": self.safety_enabled,
            "oracle_name": self.oracle_name or self.system.oracle_name,
            "sources": self.source_payload(),
            "latest_run": (
                summary_to_dict(self.latest_run)
                if self.latest_run is not None
                else None
            ),
            "runs_archived": len(self.past_summaries),
        }


class CreateSessionBody(BaseModel):
    system_tag: str


class AskBody(BaseModel):
    question: str


class EditBody(BaseModel):
    source_id: str
    new_text: str


class ResetBody(BaseModel):
    source_id: str


class GenerateBody(BaseModel):
    oracle_name: str | None = None
    safety_enabled: bool | None = None


def _sse(kind: str, data: dict) -> str:
    return f"event: {kind}\ndata: {json.dumps(data, separators=(',', ':'))}\n\n"


def create_app(
    config_dir: str | Path | None = None,
    systems: dict[str, SystemConfig] | None = None,
    snapshot_dir: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    """Build the service app.  Malformed manifests fail here, not at runtime."""
    loaded = systems if systems is not None else load_systems(config_dir)
    snapshots = Path(snapshot_dir) if snapshot_dir is not None else None
    if snapshots is not None:
        snapshots.mkdir(parents=True, exist_ok=True)

    app = FastAPI(title="rule mining service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions
    app.state.systems = loaded

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.get("/api/systems")
    def list_systems() -> list[dict]:
        return [
            {
                "system_tag": system.system_tag,
                "description": system.description,
                "oracles": system.oracle_names(),
                "default_oracle": system.oracle_name,
                "predicate_name": system.predicate_name,
                "retriever_k": system.k,
                "safety_instructions": system.safety.text,
            }
            for system in loaded.values()
        ]

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        system = loaded.get(body.system_tag)
        if system is None:
            raise HTTPException(status_code=404, detail="unknown system_tag")
        session = Session(id=uuid.uuid4().hex, system=system)
        sessions[session.id] = session
        return session.snapshot()

    @app.get("/api/sessions/{session_id}")
    def get_session_state(session_id: str) -> dict:
        return get_session(session_id).snapshot()

    @app.post("/api/sessions/{session_id}/ask")
    def ask(session_id: str, body: AskBody) -> dict:
        session = get_session(session_id)
        with session.lock:
            if session.state is SessionState.MINING:
                raise HTTPException(status_code=409, detail="mining in progress")
            try:
                retrieved = retrieve(body.question, session.system.corpus,
                                     session.system.k)
            except RetrievalError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            if session.latest_run is not None:
                session.past_summaries.append(summary_to_dict(session.latest_run))
                session.latest_run = None
            session.question = body.question
            session.sources = retrieved  # fresh copies: edits cleared
            session.state = SessionState.RETRIEVED
            return session.snapshot()

    def find_source(session: Session, source_id: str) -> SourceDoc:
        for doc in session.sources:
            if doc.id == source_id:
                return doc
        raise HTTPException(status_code=404, detail=f"no source {source_id!r}")

    @app.post("/api/sessions/{session_id}/edit")
    def edit(session_id: str, body: EditBody) -> dict:
        session = get_session(session_id)
        with session.lock:
            if session.state is SessionState.MINING:
                raise HTTPException(status_code=409, detail="mining in progress")
            doc = find_source(session, body.source_id)
            edit_source(doc, body.new_text)
            return session.snapshot()

    @app.post("/api/sessions/{session_id}/reset")
    def reset(session_id: str, body: ResetBody) -> dict:
        session = get_session(session_id)
        with session.lock:
            if session.state is SessionState.MINING:
                raise HTTPException(status_code=409, detail="mining in progress")
            doc = find_source(session, body.source_id)
            reset_source(doc)
            return session.snapshot()

    def write_snapshot(session: Session, run: MiningRun) -> None:
        if snapshots is None:
            return
        path = snapshots / f"{session.id}-run{session.run_counter}.json"
        path.write_text(json.dumps(summary_to_dict(run), indent=2) + "\n")

    @app.post("/api/sessions/{session_id}/generate")
    def generate(session_id: str, body: GenerateBody) -> StreamingResponse:
        session = get_session(session_id)
        with session.lock:
            if session.state is SessionState.MINING:
                raise HTTPException(status_code=409, detail="mining in progress")
            if session.state not in (SessionState.RETRIEVED, SessionState.COMPLETE):
                raise HTTPException(
                    status_code=409,
                    detail=f"cannot generate from state {session.state.value}",
                )
            if body.safety_enabled is not None:
                session.safety_enabled = body.safety_enabled
            oracle_name = body.oracle_name or session.system.oracle_name
            try:
                oracle = cached(session.system.build_oracle(oracle_name))
                predicate = session.system.build_predicate()
            except ConfigError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            session.oracle_name = oracle_name
            if session.latest_run is not None:
                session.past_summaries.append(summary_to_dict(session.latest_run))
                session.latest_run = None
            source_set = SourceSet(
                question=session.question or "",
                sources=tuple(session.sources),
                safety_enabled=session.safety_enabled,
            )
            channel = EventChannel()
            session.channel = channel
            session.state = SessionState.MINING
            session.run_counter += 1

        def sink(event) -> None:
            channel.publish(event.kind.value, event_to_dict(event, source_set))

        def mine() -> None:
            try:
                run = mine_rules(
                    source_set,
                    oracle,
                    predicate,
                    sink=sink,
                    safety=session.system.safety,
                )
            except RunFailedError as exc:
                with session.lock:
                    session.latest_run = exc.partial_run
                    session.state = SessionState.FAILED
                channel.publish(
                    "run_failed",
                    {
                        "message": str(exc),
                        "summary": summary_to_dict(exc.partial_run),
                    },
                )
            except Exception as exc:  # defensive: never leave MINING stuck
                with session.lock:
                    session.state = SessionState.FAILED
                channel.publish("run_failed", {"message": str(exc), "summary": None})
            else:
                with session.lock:
                    session.latest_run = run
                    session.state = SessionState.COMPLETE
                write_snapshot(session, run)
            finally:
                channel.close()

        threading.Thread(target=mine, daemon=True).start()

        def stream() -> Iterator[str]:
            for kind, data in channel.subscribe():
                yield _sse(kind, data)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/api/sessions/{session_id}/run")
    def run_detail(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            run = session.latest_run
            if run is None:
                raise HTTPException(status_code=404, detail="no run yet")
            ordered = sorted(
                run.records.values(),
                key=lambda r: (-r.subset.cardinality, r.subset.bits),
            )
            return {
                "state": session.state.value,
                "completed": run.completed,
                "summary": summary_to_dict(run),
                "records": [
                    record_to_dict(record, run.source_set) for record in ordered
                ],
                "past_summaries": list(session.past_summaries),
            }

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
