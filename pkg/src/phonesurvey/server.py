"""Concurrent session server.

HTTP API: campaign creation, web-call bootstrap, scheduling, reports, and a
newline-delimited frame stream per session. Every frame is appended to the
store before it is acknowledged, and a restarted server reconstructs any
session by replaying its inbound records through the same engine."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse

from . import analytics, outreach, questionnaire as qn, sim as simmod, turntaking
from .adapters import RuleSafety
from .dialog import (
    CallConnected,
    Channel,
    EndCall,
    Hangup,
    InterviewEngine,
    ParticipantUtterance,
    Phase,
    RecordAnswer,
    SafetyFlag,
    Say,
    SessionState,
    Warning as EngineWarning,
    session_progress,
)
from .store import SessionStore
from .turntaking import FloorEffect, TurnTakingConfig

FRAME_KIND_BY_SAY = {
    "greeting": "hello",
    "consent_reask": "consent_prompt",
    "idle": "idle_prompt",
    "encouragement": "encouragement",
}


@dataclass
class LiveSession:
    session_id: str
    campaign_id: str
    contact_id: str
    token: str
    engine: InterviewEngine
    state: SessionState
    floor: turntaking.FloorState
    last_ts: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)
    end_frame: dict | None = None


class SessionServer:
    """All server state; the FastAPI app is a thin routing layer over it."""

    def __init__(
        self,
        data_dir,
        turn_config: TurnTakingConfig | None = None,
        virtual_time: bool = False,
    ):
        self.store = SessionStore(data_dir)
        self.turn_config = turn_config or TurnTakingConfig()
        self.virtual_time = virtual_time
        self.safety = RuleSafety()
        self.sessions: dict[str, LiveSession] = {}
        self._lock = threading.Lock()

    # -- time

    def _next_ts(self, session: LiveSession) -> int:
        if self.virtual_time:
            session.last_ts += 1000
        else:
            session.last_ts = max(int(time.time() * 1000), session.last_ts + 1)
        return session.last_ts

    # -- campaigns

    def create_campaign(self, body: dict) -> dict:
        campaign_id = body["campaign_id"]
        q = qn.from_dict(body["questionnaire"])
        violations = qn.validate(q)
        if violations:
            raise ApiError(
                400,
                "invalid questionnaire: "
                + "; ".join(f"{v.node_id}: {v.reason}" for v in violations),
            )
        result = outreach.ingest_contacts(body.get("contacts_csv", ""), campaign_id)
        doc = {
            "campaign_id": campaign_id,
            "questionnaire": qn.to_dict(q),
            "contacts": [
                {
                    "contact_id": c.contact_id,
                    "first_name": c.first_name,
                    "phone": c.phone,
                    "timezone": c.timezone,
                    "link_token": c.link_token,
                }
                for c in result.contacts
            ],
            "dial_windows": body.get("dial_windows", []),
            "callback_number": body.get("callback_number", ""),
            "attempts": [],
        }
        self.store.save_campaign(campaign_id, doc)
        return {
            "campaign_id": campaign_id,
            "contacts": len(result.contacts),
            "rejected": [
                {"line": r.line_no, "reason": r.reason} for r in result.rejected
            ],
        }

    def _load_campaign(self, campaign_id: str) -> dict:
        doc = self.store.load_campaign(campaign_id)
        if doc is None:
            raise ApiError(404, f"unknown campaign {campaign_id!r}")
        return doc

    def _campaign_from_doc(self, doc: dict) -> outreach.Campaign:
        campaign = outreach.Campaign(
            campaign_id=doc["campaign_id"],
            questionnaire_id=doc["questionnaire"]["id"],
            contacts=[outreach.Contact(**c) for c in doc["contacts"]],
            dial_windows=[outreach.DialWindow.parse(w) for w in doc.get("dial_windows", [])],
            callback_number=doc.get("callback_number", ""),
        )
        return campaign

    def _find_token(self, token: str) -> tuple[dict, dict] | None:
        for campaign_id in self.store.list_campaigns():
            doc = self.store.load_campaign(campaign_id)
            for contact in doc["contacts"]:
                if contact["link_token"] == token:
                    return doc, contact
        return None

    # -- sessions

    def open_web_session(self, token: str) -> dict:
        found = self._find_token(token)
        if found is None:
            raise ApiError(404, "unknown token")
        doc, contact = found
        session_id = f"web-{token}"
        with self._lock:
            session = self._get_session(session_id)
            if session is not None:
                if session.state.phase is Phase.COMPLETED:
                    raise ApiError(409, "already completed")
                # Single active session per contact: rejoin, replaying the
                # outbound history so the client can re-render.
                frames = [
                    self._wire(r)
                    for r in self.store.load_records(session_id)
                    if r["direction"] == "out"
                ]
                return self._bootstrap_payload(session_id, frames)
            engine = InterviewEngine(qn.from_dict(doc["questionnaire"]))
            state = SessionState(
                session_id=session_id,
                contact_id=contact["contact_id"],
                first_name=contact["first_name"],
                channel=Channel.WEB,
            )
            session = LiveSession(
                session_id=session_id,
                campaign_id=doc["campaign_id"],
                contact_id=contact["contact_id"],
                token=token,
                engine=engine,
                state=state,
                floor=turntaking.new_floor(),
            )
            self.sessions[session_id] = session
            self.store.save_meta(
                session_id,
                {
                    "campaign_id": doc["campaign_id"],
                    "contact_id": contact["contact_id"],
                    "token": token,
                    "channel": "web",
                    "first_name": contact["first_name"],
                },
            )
        ts = self._next_ts(session)
        frames = self._process_inbound(
            session, {"ts_ms": ts, "kind": "connected", "payload": {}}, persist=True
        )
        return self._bootstrap_payload(session_id, frames)

    def _bootstrap_payload(self, session_id: str, frames: list[dict]) -> dict:
        return {
            "session_id": session_id,
            "instructions": (
                "You are about to take a short voice survey with an AI interviewer. "
                "Type or speak your answers; you can stop at any time."
            ),
            "stream": f"/stream/{session_id}",
            "frames": frames,
        }

    def _get_session(self, session_id: str) -> LiveSession | None:
        if session_id in self.sessions:
            return self.sessions[session_id]
        meta = self.store.load_meta(session_id)
        if meta is None:
            return None
        return self._rebuild_session(session_id, meta)

    def _rebuild_session(self, session_id: str, meta: dict) -> LiveSession:
        doc = self._load_campaign(meta["campaign_id"])
        engine = InterviewEngine(qn.from_dict(doc["questionnaire"]))
        state = SessionState(
            session_id=session_id,
            contact_id=meta["contact_id"],
            first_name=meta["first_name"],
            channel=Channel(meta["channel"]),
        )
        session = LiveSession(
            session_id=session_id,
            campaign_id=meta["campaign_id"],
            contact_id=meta["contact_id"],
            token=meta["token"],
            engine=engine,
            state=state,
            floor=turntaking.new_floor(),
        )
        for record in self.store.load_records(session_id):
            session.last_ts = max(session.last_ts, record["ts_ms"])
            if record["direction"] == "in":
                self._process_inbound(session, record, persist=False)
            elif record["kind"] == "end":
                session.end_frame = self._wire(record)
        self.sessions[session_id] = session
        return session

    # -- frame processing

    def _wire(self, record: dict) -> dict:
        return {
            "ts_ms": record["ts_ms"],
            "session_id": record["session_id"],
            "type": record["kind"],
            "payload": record["payload"],
        }

    def _emit(
        self, session: LiveSession, ts: int, kind: str, payload: dict, persist: bool
    ) -> dict:
        record = {
            "ts_ms": ts,
            "session_id": session.session_id,
            "direction": "out",
            "kind": kind,
            "payload": payload,
        }
        if persist:
            self.store.append(session.session_id, record)
        frame = self._wire(record)
        if kind == "end":
            session.end_frame = frame
        return frame

    def _process_inbound(
        self, session: LiveSession, record: dict, persist: bool
    ) -> list[dict]:
        """Translate one inbound record into engine/floor events; returns the
        outbound frames. Pure given (session state, record), so replaying the
        log reconstructs the identical state."""
        ts = record["ts_ms"]
        kind = record["kind"]
        payload = record.get("payload", {})
        full = {
            "ts_ms": ts,
            "session_id": session.session_id,
            "direction": "in",
            "kind": kind,
            "payload": payload,
        }
        if persist:
            self.store.append(session.session_id, full)

        out: list[dict] = []

        if kind == "user_word":
            session.floor, effects = turntaking.step(
                session.floor, turntaking.UserWord(ts), self.turn_config
            )
            for effect in effects:
                if effect is FloorEffect.INTERRUPT_AI:
                    out.append(
                        self._emit(session, ts, "agent_say", {"event": "interrupted"}, persist)
                    )
            return out

        if kind == "connected":
            event = CallConnected(ts)
        elif kind == "hangup":
            event = Hangup(ts)
        elif kind == "user_text":
            text = payload.get("text", "")
            verdict = self.safety.classify(text)
            if verdict.flagged:
                event = SafetyFlag(ts, verdict.category)
            else:
                event = ParticipantUtterance(ts, text)
            session.floor, _ = turntaking.step(
                session.floor, turntaking.AISpeechEnd(ts), self.turn_config
            )
        else:
            out.append(
                self._emit(
                    session, ts, "agent_say", {"event": "protocol_error", "got": kind}, persist
                )
            )
            return out

        session.state, actions = session.engine.advance(session.state, event)
        for action in actions:
            ats = self._next_ts(session)
            if isinstance(action, Say):
                frame_kind = FRAME_KIND_BY_SAY.get(action.kind, "agent_say")
                payload_out: dict = {"text": action.text, "kind": action.kind}
                if action.node_id is not None:
                    payload_out["node"] = action.node_id
                if action.milestone is not None:
                    payload_out["milestone"] = action.milestone
                out.append(self._emit(session, ats, frame_kind, payload_out, persist))
                session.floor, _ = turntaking.step(
                    session.floor, turntaking.AISpeechStart(ats), self.turn_config
                )
            elif isinstance(action, RecordAnswer):
                fraction = session_progress(session.engine, session.state)
                out.append(
                    self._emit(session, ats, "progress", {"fraction": fraction}, persist)
                )
            elif isinstance(action, EndCall):
                out.append(
                    self._emit(session, ats, "end", {"reason": action.reason.value}, persist)
                )
            elif isinstance(action, EngineWarning):
                # Absorbing session: idempotent close, re-send the end frame.
                if session.end_frame is not None:
                    out.append(session.end_frame)
        if session.state.phase is Phase.COMPLETED and session.end_frame is None:
            out.append(
                self._emit(
                    session, self._next_ts(session), "end", {"reason": "completed"}, persist
                )
            )
        return out

    def route_frames(self, session_id: str, frames: list[dict]) -> list[dict]:
        session = self._get_session(session_id)
        if session is None:
            raise ApiError(404, f"unknown session {session_id!r}")
        out: list[dict] = []
        with session.lock:
            for frame in frames:
                kind = frame.get("type")
                if kind not in ("user_text", "user_word", "hangup"):
                    out.append(
                        {
                            "ts_ms": session.last_ts,
                            "session_id": session_id,
                            "type": "agent_say",
                            "payload": {"event": "protocol_error", "got": kind},
                        }
                    )
                    continue
                ts = self._next_ts(session)
                record = {"ts_ms": ts, "kind": kind, "payload": frame.get("payload", {})}
                out.extend(self._process_inbound(session, record, persist=True))
        return out

    # -- scheduling

    def schedule(self, token: str, body: dict) -> dict:
        found = self._find_token(token)
        if found is None:
            raise ApiError(404, "unknown token")
        doc, contact_row = found
        campaign = self._campaign_from_doc(doc)
        window = outreach.DialWindow.parse(body["window"])
        now_ms = int(body.get("now_ms", time.time() * 1000))
        try:
            attempt = outreach.schedule_call(
                campaign,
                token,
                body.get("phone", contact_row["phone"]),
                body.get("timezone", contact_row["timezone"]),
                date.fromisoformat(body["date"]),
                window,
                now_ms,
            )
        except outreach.OutreachError as exc:
            raise ApiError(400, str(exc)) from exc
        doc["contacts"] = [
            {
                "contact_id": c.contact_id,
                "first_name": c.first_name,
                "phone": c.phone,
                "timezone": c.timezone,
                "link_token": c.link_token,
            }
            for c in campaign.contacts
        ]
        doc["attempts"].append(
            {
                "attempt_id": attempt.attempt_id,
                "contact_id": attempt.contact_id,
                "method": attempt.method.value,
                "scheduled_at": attempt.scheduled_at,
                "disposition": attempt.disposition.value,
            }
        )
        self.store.save_campaign(doc["campaign_id"], doc)
        contact = campaign.contacts[
            [c.contact_id for c in campaign.contacts].index(attempt.contact_id)
        ]
        return {
            "attempt_id": attempt.attempt_id,
            "scheduled_at": attempt.scheduled_at,
            "phone": contact.phone,
            "timezone": contact.timezone,
        }

    # -- simulation and reports

    def simulate(self, campaign_id: str, body: dict) -> dict:
        doc = self._load_campaign(campaign_id)
        q = qn.from_dict(doc["questionnaire"])
        campaign = self._campaign_from_doc(doc)
        n = body.get("n")
        if n:
            campaign.contacts = simmod.make_contacts(int(n), campaign_id)
        mix = (
            [(simmod.RespondentPersona.from_dict(p), p.get("weight", 1.0)) for p in body["personas"]]
            if body.get("personas")
            else simmod.DEFAULT_PERU_MIX
        )
        method = outreach.Method(body.get("method", "direct_call"))
        out_dir = self.store.campaign_dir(campaign_id) / "sim"
        run = simmod.run_simulation(
            campaign,
            q,
            mix,
            self.turn_config,
            int(body.get("seed", 0)),
            method=method,
            out_dir=out_dir,
        )
        return {"attempts": len(run.attempts), "tally": run.tally()}

    def _sim_dir(self, campaign_id: str):
        return self.store.campaign_dir(campaign_id) / "sim"

    def report_rates(self, campaign_id: str) -> dict:
        outcomes = self._campaign_outcomes(campaign_id)
        try:
            rates = analytics.rates_from_outcomes(outcomes)
        except analytics.AnalyticsError as exc:
            raise ApiError(422, str(exc)) from exc
        return {
            "attempts": rates.attempts,
            "fully_completed": rates.fully_completed,
            "partial_76_plus_cumulative": rates.partial_76_plus_cumulative,
            "rr1": rates.rr1_display(),
            "rr2": rates.rr2_display(),
        }

    def report_funnel(self, campaign_id: str) -> str:
        funnel_path = self._sim_dir(campaign_id) / "funnel.json"
        if funnel_path.exists():
            return funnel_path.read_text(encoding="utf-8")
        outcomes = self._campaign_outcomes(campaign_id)
        if not outcomes:
            raise ApiError(422, "empty campaign")
        return json.dumps(
            analytics.sankey_flow(outcomes).to_json(), ensure_ascii=False, sort_keys=True, indent=2
        ) + "\n"

    def report_summary(self, campaign_id: str) -> dict:
        doc = self._load_campaign(campaign_id)
        q = qn.from_dict(doc["questionnaire"])
        open_ids = {n.id for n in q.nodes if n.kind is qn.Kind.OPEN_ENDED}
        metrics = []
        # Only fully completed interviews enter the summary.
        for events in self._completed_transcripts(campaign_id):
            metrics.append(analytics.conversation_metrics(events, open_ids))
        if not metrics:
            raise ApiError(422, "no completed interviews")
        rows = analytics.summary_table(metrics)
        return {
            "interviews": len(metrics),
            "rows": [row.__dict__ for row in rows],
        }

    def _campaign_outcomes(self, campaign_id: str) -> list[analytics.CallOutcome]:
        self._load_campaign(campaign_id)
        outcomes: list[analytics.CallOutcome] = []
        outcomes_csv = self._sim_dir(campaign_id) / "outcomes.csv"
        if outcomes_csv.exists():
            import csv as _csv

            with open(outcomes_csv, encoding="utf-8") as fh:
                for row in _csv.DictReader(fh):
                    outcomes.append(analytics.CallOutcome(row["outcome"]))
        for session_id in self.store.list_sessions():
            meta = self.store.load_meta(session_id)
            if meta is None or meta["campaign_id"] != campaign_id:
                continue
            session = self._get_session(session_id)
            if session is None or not session.state.is_absorbing():
                continue
            prog = session_progress(session.engine, session.state)
            outcomes.append(
                analytics.classify_outcome(
                    analytics.SessionOutcomeInput(
                        channel=session.state.channel.value,
                        connected=True,
                        progress=prog,
                        completed=session.state.phase is Phase.COMPLETED,
                        consent_declined=(
                            session.state.termination_reason is not None
                            and session.state.termination_reason.value == "consent_declined"
                        ),
                        ended_before_consent=(
                            not session.state.answers
                            and session.state.current_node is None
                            and session.state.phase is not Phase.COMPLETED
                            and session.state.termination_reason is not None
                            and session.state.termination_reason.value != "consent_declined"
                        ),
                    )
                )
            )
        return outcomes

    def _completed_transcripts(self, campaign_id: str) -> list[list[dict]]:
        transcripts = []
        tdir = self._sim_dir(campaign_id) / "transcripts"
        outcomes_csv = self._sim_dir(campaign_id) / "outcomes.csv"
        completed_sessions = set()
        if outcomes_csv.exists():
            import csv as _csv

            with open(outcomes_csv, encoding="utf-8") as fh:
                for row in _csv.DictReader(fh):
                    if row["outcome"] == "fully_completed" and row["session_id"]:
                        completed_sessions.add(row["session_id"])
        if tdir.exists():
            for sid in sorted(completed_sessions):
                path = tdir / f"{sid}.jsonl"
                if path.exists():
                    with open(path, encoding="utf-8") as fh:
                        transcripts.append([json.loads(l) for l in fh if l.strip()])
        for session_id in self.store.list_sessions():
            meta = self.store.load_meta(session_id)
            if meta is None or meta["campaign_id"] != campaign_id:
                continue
            session = self._get_session(session_id)
            if session is not None and session.state.phase is Phase.COMPLETED:
                records = self.store.load_records(session_id)
                transcripts.append(records)
        return transcripts


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def create_app(
    data_dir,
    turn_config: TurnTakingConfig | None = None,
    virtual_time: bool = False,
    static_dir=None,
) -> FastAPI:
    server = SessionServer(data_dir, turn_config, virtual_time)
    app = FastAPI(title="phonesurvey session server")
    app.state.server = server

    static_dir = Path(static_dir) if static_dir else None
    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/static", StaticFiles(directory=static_dir), name="static")

    def _page(request: Request, name: str):
        """Browser navigations get the app shell; API clients get JSON."""
        if static_dir is None:
            return None
        if "text/html" not in request.headers.get("accept", ""):
            return None
        page = static_dir / name
        if not page.exists():
            return None
        return FileResponse(page, media_type="text/html")

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    @app.post("/campaigns")
    async def create_campaign(request: Request):
        return server.create_campaign(await request.json())

    @app.post("/campaigns/{campaign_id}/simulate")
    async def simulate(campaign_id: str, request: Request):
        return server.simulate(campaign_id, await request.json())

    @app.get("/call/{token}")
    async def open_call(token: str, request: Request):
        page = _page(request, "call.html")
        if page is not None:
            return page
        return server.open_web_session(token)

    @app.get("/schedule/{token}")
    async def schedule_page(token: str, request: Request):
        page = _page(request, "schedule.html")
        if page is not None:
            return page
        raise ApiError(404, "scheduling page requires the web bundle")

    @app.post("/schedule/{token}")
    async def schedule(token: str, request: Request):
        return server.schedule(token, await request.json())

    @app.post("/stream/{session_id}")
    async def stream(session_id: str, request: Request):
        body = (await request.body()).decode("utf-8")
        frames = [json.loads(line) for line in body.splitlines() if line.strip()]
        out = server.route_frames(session_id, frames)
        ndjson = "".join(json.dumps(f, ensure_ascii=False, sort_keys=True) + "\n" for f in out)
        return PlainTextResponse(ndjson, media_type="application/x-ndjson")

    @app.get("/reports/{campaign_id}/rates")
    async def rates(campaign_id: str):
        return server.report_rates(campaign_id)

    @app.get("/reports/{campaign_id}/summary")
    async def summary(campaign_id: str):
        return server.report_summary(campaign_id)

    @app.get("/reports/{campaign_id}/funnel")
    async def funnel(campaign_id: str):
        return Response(server.report_funnel(campaign_id), media_type="application/json")

    return app
