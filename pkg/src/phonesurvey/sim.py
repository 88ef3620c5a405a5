"""Seeded campaign simulation against stochastic respondent personas.

Every attempt gets its own RNG stream keyed by (seed, attempt_id), so
attempts are independent, replayable in any order, and a fixed seed yields
byte-identical output files.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import analytics, dialog, outreach, turntaking
from .adapters import MockTts, RuleSafety
from .analytics import CallOutcome, SessionOutcomeInput, classify_outcome
from .dialog import (
    CallConnected,
    Channel,
    EndCall,
    Hangup,
    IdlePromptDue,
    InterviewEngine,
    ParticipantUtterance,
    Phase,
    RecordAnswer,
    Say,
    SessionState,
    SilenceExpired,
    TerminationReason,
    session_progress,
)
from .questionnaire import Kind, Questionnaire
from .turntaking import FloorEffect, SilenceTick, TurnTakingConfig

TICK_MS = 1000
AI_TURN_GAP_MS = 500
REPLY_DELAY_MS = 800
PARTICIPANT_WORD_MS = 400


class SimulationError(Exception):
    pass


@dataclass(frozen=True)
class RespondentPersona:
    name: str = "default"
    answer_prob: float = 1.0  # pickup / click-through probability
    ai_reveal_hangup_prob: float = 0.0
    refusal_prob: float = 0.0
    per_question_dropout_hazard: float = 0.0
    invalid_answer_prob: float = 0.0
    verbosity: float = 12.0  # mean words per open-ended reply
    silence_prob: float = 0.0
    callback_prob: float = 0.0

    def validate(self) -> None:
        probs = {
            "answer_prob": self.answer_prob,
            "ai_reveal_hangup_prob": self.ai_reveal_hangup_prob,
            "refusal_prob": self.refusal_prob,
            "per_question_dropout_hazard": self.per_question_dropout_hazard,
            "invalid_answer_prob": self.invalid_answer_prob,
            "silence_prob": self.silence_prob,
            "callback_prob": self.callback_prob,
        }
        for name, p in probs.items():
            if not 0.0 <= p <= 1.0:
                raise SimulationError(f"persona {self.name}: {name}={p} outside [0,1]")
        if self.verbosity < 1:
            raise SimulationError(f"persona {self.name}: verbosity must be >= 1")

    @staticmethod
    def from_dict(obj: dict) -> "RespondentPersona":
        persona = RespondentPersona(**obj)
        persona.validate()
        return persona


def load_personas(path) -> list[tuple[RespondentPersona, float]]:
    """personas.json: [{"weight": w, ...persona fields}, ...]"""
    with open(path, encoding="utf-8") as fh:
        entries = json.load(fh)
    mix = []
    for entry in entries:
        entry = dict(entry)
        weight = float(entry.pop("weight", 1.0))
        mix.append((RespondentPersona.from_dict(entry), weight))
    return mix


# Tuned so a seeded run over the Peru-scale direct-call volume lands in the
# vicinity of the field campaign's completion counts; demonstration only.
DEFAULT_PERU_MIX = [
    (RespondentPersona(name="unreachable", answer_prob=0.0, callback_prob=0.002), 0.57),
    (
        RespondentPersona(
            name="reluctant",
            answer_prob=0.55,
            ai_reveal_hangup_prob=0.55,
            refusal_prob=0.30,
            per_question_dropout_hazard=0.10,
            verbosity=6,
        ),
        0.37,
    ),
    (
        RespondentPersona(
            name="engaged",
            answer_prob=0.75,
            ai_reveal_hangup_prob=0.08,
            refusal_prob=0.06,
            per_question_dropout_hazard=0.006,
            invalid_answer_prob=0.05,
            verbosity=18,
            silence_prob=0.04,
            callback_prob=0.02,
        ),
        0.06,
    ),
]


# ---------------------------------------------------------------------------
# Respondent behavior

_OPEN_LEXICON = {
    "en": (
        "well the service was really helpful and the support team answered "
        "quickly overall a good experience though sometimes things felt slow "
        "but generally it worked for me and my family liked it too"
    ).split(),
    "es": (
        "bueno el servicio fue muy util y el equipo de soporte respondio "
        "rapido en general una buena experiencia aunque a veces era lento "
        "pero en general me funciono y a mi familia tambien le gusto"
    ).split(),
}

_INVALID_REPLIES = {
    "en": {"yes_no": ["maybe", "i guess so maybe"], "nps": ["eleven", "twelve"]},
    "es": {"yes_no": ["quizas", "tal vez"], "nps": ["once", "doce"]},
}


@dataclass(frozen=True)
class Reply:
    text: str
    delay_ms: int


@dataclass(frozen=True)
class Silence:
    duration_ms: int


@dataclass(frozen=True)
class HangupMove:
    pass


def _lang(language: str) -> str:
    base = language.split("-")[0].lower()
    return base if base in _OPEN_LEXICON else "en"


def _geometric_words(rng: random.Random, mean: float) -> int:
    if mean <= 1:
        return 1
    p = 1.0 / mean
    u = rng.random()
    return 1 + int(math.log(1.0 - u) / math.log(1.0 - p))


def _open_reply(rng: random.Random, persona: RespondentPersona, language: str) -> str:
    lexicon = _OPEN_LEXICON[_lang(language)]
    n = _geometric_words(rng, persona.verbosity)
    words = [rng.choice(lexicon) for _ in range(n)]
    return (" ".join(words)).capitalize() + "."


def respondent_step(
    persona: RespondentPersona,
    rng: random.Random,
    agent_prompt: str,
    node_kind: Kind | None,
    language: str = "en",
    config: TurnTakingConfig | None = None,
    allow_silence: bool = True,
) -> Reply | Silence | HangupMove:
    """One participant move in response to an agent prompt."""
    config = config or TurnTakingConfig()
    lang = _lang(language)
    if allow_silence and rng.random() < persona.silence_prob:
        # Long enough to trigger an idle prompt, short of the hard timeout.
        duration = rng.randint(config.idle_delay_ms, 2 * config.idle_delay_ms)
        return Silence(duration)
    if node_kind in (Kind.YES_NO, Kind.NPS, Kind.LIKERT) and rng.random() < persona.invalid_answer_prob:
        pool = _INVALID_REPLIES[lang].get(
            node_kind.value, _INVALID_REPLIES[lang]["nps"]
        )
        return Reply(rng.choice(pool), REPLY_DELAY_MS)
    if node_kind is Kind.YES_NO:
        if lang == "es":
            text = "sí" if rng.random() < 0.5 else "no"
        else:
            text = "yes" if rng.random() < 0.5 else "no"
    elif node_kind is Kind.NPS:
        text = str(rng.randint(0, 10))
    elif node_kind is Kind.LIKERT:
        # Upper bound filled in by the caller via prompt context; the engine
        # validates against the node's real range, so sample generously.
        text = str(rng.randint(1, 5))
    else:
        text = _open_reply(rng, persona, language)
    return Reply(text, REPLY_DELAY_MS)


# ---------------------------------------------------------------------------
# Single-session simulation


@dataclass
class SimulatedSession:
    state: SessionState
    events: list[dict]
    ended_before_consent: bool


class _SessionSim:
    def __init__(
        self,
        engine: InterviewEngine,
        persona: RespondentPersona,
        rng: random.Random,
        config: TurnTakingConfig,
        session_id: str,
        channel: Channel,
        contact_id: str,
        first_name: str,
        start_ms: int = 0,
    ):
        self.engine = engine
        self.persona = persona
        self.rng = rng
        self.config = config
        self.tts = MockTts()
        self.safety = RuleSafety()
        self.clock = start_ms
        self.events: list[dict] = []
        self.floor = turntaking.new_floor(start_ms)
        self.state = SessionState(
            session_id=session_id,
            contact_id=contact_id,
            first_name=first_name,
            channel=channel,
            started_at=start_ms,
        )
        self.ended_before_consent = False

    def _log(self, direction: str, kind: str, payload: dict) -> None:
        self.events.append(
            {
                "ts_ms": self.clock,
                "session_id": self.state.session_id,
                "direction": direction,
                "kind": kind,
                "payload": payload,
            }
        )

    def _apply_actions(self, actions: list[dialog.AgentAction]) -> None:
        for action in actions:
            if isinstance(action, Say):
                self._log("out", action.kind, {"text": action.text, "node": action.node_id})
                self.floor, _ = turntaking.step(
                    self.floor, turntaking.AISpeechStart(self.clock), self.config
                )
                self.clock += self.tts.synthesize(action.text).duration_ms
                self.floor, _ = turntaking.step(
                    self.floor, turntaking.AISpeechEnd(self.clock), self.config
                )
                self.clock += AI_TURN_GAP_MS
            elif isinstance(action, RecordAnswer):
                self._log(
                    "out",
                    "answer_recorded",
                    {"node": action.node_id, "answer": action.answer.to_json()},
                )
                self._log(
                    "out",
                    "progress",
                    {"fraction": session_progress(self.engine, self.state)},
                )
            elif isinstance(action, EndCall):
                self._log("out", "end", {"reason": action.reason.value})

    def _advance(self, event) -> None:
        self.state, actions = self.engine.advance(self.state, event)
        self._apply_actions(actions)

    def _phase_before_consent(self) -> bool:
        return self.state.phase in (Phase.GREETING, Phase.CONSENT)

    def _hangup(self) -> None:
        if self._phase_before_consent():
            self.ended_before_consent = True
        self._log("in", "hangup", {})
        self._advance(Hangup(self.clock))

    def _silence_episode(self, duration_ms: int) -> bool:
        """Advance ticks through a silence span; True if the call survived."""
        deadline = self.clock + duration_ms
        while self.clock < deadline:
            self.clock = min(self.clock + TICK_MS, deadline)
            self.floor, effects = turntaking.step(
                self.floor, SilenceTick(self.clock), self.config
            )
            for effect in effects:
                if effect is FloorEffect.EMIT_IDLE_PROMPT:
                    self._advance(IdlePromptDue(self.clock))
                elif effect is FloorEffect.END_CALL_SILENCE:
                    self._advance(SilenceExpired(self.clock))
                    return False
        return True

    def _speak(self, text: str) -> None:
        self.clock += REPLY_DELAY_MS
        words = text.split()
        for word in words:
            self.floor, _ = turntaking.step(
                self.floor, turntaking.UserWord(self.clock), self.config
            )
            self.clock += PARTICIPANT_WORD_MS
        node = self.state.current_node if self.state.phase in (Phase.ASKING, Phase.CLARIFYING) else None
        self._log("in", "user_text", {"text": text, "node": node})
        verdict = self.safety.classify(text)
        if verdict.flagged:
            self._advance(dialog.SafetyFlag(self.clock, verdict.category))
        else:
            self._advance(ParticipantUtterance(self.clock, text))

    def run(self) -> SimulatedSession:
        language = self.engine.language
        self._log("in", "connected", {})
        self._advance(CallConnected(self.clock))

        # Hearing it's an AI: possible immediate hangup at the greeting.
        if self.rng.random() < self.persona.ai_reveal_hangup_prob:
            self._hangup()
            return self._finish()

        # Consent gate.
        if self.state.phase is Phase.CONSENT:
            if self.rng.random() < self.persona.refusal_prob:
                self._speak("no")
            else:
                self._speak("sí" if _lang(language) == "es" else "yes")

        guard = 40 * (len(self.engine.questionnaire.nodes) + 4)
        while not self.state.is_absorbing() and guard > 0:
            guard -= 1
            node = self.engine.questionnaire.node(self.state.current_node)
            move = respondent_step(
                self.persona, self.rng, node.prompt, node.kind, language, self.config
            )
            if isinstance(move, Silence):
                if not self._silence_episode(move.duration_ms):
                    break
                move = respondent_step(
                    self.persona,
                    self.rng,
                    node.prompt,
                    node.kind,
                    language,
                    self.config,
                    allow_silence=False,
                )
            if isinstance(move, HangupMove):
                self._hangup()
                break
            answered_before = len(self.state.answers)
            self._speak(move.text)
            answered_now = len(self.state.answers) > answered_before
            if (
                answered_now
                and not self.state.is_absorbing()
                and self.rng.random() < self.persona.per_question_dropout_hazard
            ):
                self._hangup()
                break
        return self._finish()

    def _finish(self) -> SimulatedSession:
        if not self.state.is_absorbing():
            # Guard tripped; close the session out as a system error.
            self.state, actions = self.engine._terminate(
                self.state, self.clock, TerminationReason.SYSTEM_ERROR
            )
            self._apply_actions(actions)
        return SimulatedSession(self.state, self.events, self.ended_before_consent)


def simulate_session(
    engine: InterviewEngine,
    persona: RespondentPersona,
    rng: random.Random,
    config: TurnTakingConfig,
    session_id: str,
    channel: Channel = Channel.PHONE,
    contact_id: str = "c0001",
    first_name: str = "Ana",
    start_ms: int = 0,
) -> SimulatedSession:
    sim = _SessionSim(
        engine, persona, rng, config, session_id, channel, contact_id, first_name, start_ms
    )
    return sim.run()


# ---------------------------------------------------------------------------
# Campaign-level simulation


@dataclass
class AttemptResult:
    attempt_id: str
    contact_id: str
    method: outreach.Method
    outcome: CallOutcome
    progress: float
    session_id: str | None
    callback: bool


@dataclass
class SimulationRun:
    seed: int
    attempts: list[AttemptResult]
    transcripts: dict[str, list[dict]] = field(default_factory=dict)
    session_states: dict[str, SessionState] = field(default_factory=dict)
    funnel: analytics.Funnel | None = None

    def outcomes(self) -> list[CallOutcome]:
        return [a.outcome for a in self.attempts]

    def tally(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for a in self.attempts:
            counts[a.outcome.value] = counts.get(a.outcome.value, 0) + 1
        return dict(sorted(counts.items()))


def _pick_persona(
    mix: list[tuple[RespondentPersona, float]], rng: random.Random
) -> RespondentPersona:
    personas = [p for p, _ in mix]
    weights = [w for _, w in mix]
    return rng.choices(personas, weights=weights, k=1)[0]


def run_simulation(
    campaign: outreach.Campaign,
    questionnaire: Questionnaire,
    persona_mix: list[tuple[RespondentPersona, float]],
    config: TurnTakingConfig,
    seed: int,
    method: outreach.Method | None = None,
    out_dir: str | Path | None = None,
    templates: dialog.PromptTemplates | None = None,
) -> SimulationRun:
    for persona, _ in persona_mix:
        persona.validate()
    total_weight = sum(w for _, w in persona_mix)
    if not math.isclose(total_weight, 1.0, rel_tol=1e-9):
        raise SimulationError(f"persona weights must sum to 1 (got {total_weight})")

    if method is None:
        method = (
            outreach.Method.DIRECT_CALL
            if outreach.Method.DIRECT_CALL in campaign.methods
            else outreach.Method.WEBCALL_INVITE
        )
    channel = Channel.WEB if method is outreach.Method.WEBCALL_INVITE else Channel.PHONE

    engine = InterviewEngine(questionnaire, templates=templates)
    outbox = outreach.Outbox()
    run = SimulationRun(seed=seed, attempts=[])

    for contact in campaign.contacts:
        attempt_id = f"{method.value}-{contact.contact_id}"
        rng = random.Random(f"{seed}:{attempt_id}")
        persona = _pick_persona(persona_mix, rng)

        connected = rng.random() < persona.answer_prob
        callback = False
        if not connected and method is outreach.Method.DIRECT_CALL:
            voicemail = engine.templates.voicemail.format(
                assistant_name=engine.assistant_name,
                client_name=questionnaire.client_name,
                service_name=questionnaire.service_name,
                callback_number=campaign.callback_number or "this number",
            )
            outbox.send(0, "voicemail", contact.phone, voicemail)
            if rng.random() < persona.callback_prob:
                connected = True
                callback = True

        if not connected:
            run.attempts.append(
                AttemptResult(
                    attempt_id=attempt_id,
                    contact_id=contact.contact_id,
                    method=method,
                    outcome=classify_outcome(
                        SessionOutcomeInput(channel=channel.value, connected=False)
                    ),
                    progress=0.0,
                    session_id=None,
                    callback=False,
                )
            )
            continue

        session_id = f"s-{attempt_id}"
        sim = simulate_session(
            engine,
            persona,
            rng,
            config,
            session_id,
            channel=channel,
            contact_id=contact.contact_id,
            first_name=contact.first_name,
        )
        state = sim.state
        prog = session_progress(engine, state)
        outcome = classify_outcome(
            SessionOutcomeInput(
                channel=channel.value,
                connected=True,
                progress=prog,
                completed=state.phase is Phase.COMPLETED,
                consent_declined=state.termination_reason
                is TerminationReason.CONSENT_DECLINED,
                ended_before_consent=sim.ended_before_consent,
            )
        )
        run.transcripts[session_id] = sim.events
        run.session_states[session_id] = state
        run.attempts.append(
            AttemptResult(
                attempt_id=attempt_id,
                contact_id=contact.contact_id,
                method=method,
                outcome=outcome,
                progress=prog,
                session_id=session_id,
                callback=callback,
            )
        )

    run.attempts.sort(key=lambda a: a.attempt_id)
    run.funnel = analytics.sankey_flow(run.outcomes())

    if out_dir is not None:
        persist_run(run, outbox, Path(out_dir))
    return run


def persist_run(run: SimulationRun, outbox: outreach.Outbox, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    transcripts_dir = out_dir / "transcripts"
    transcripts_dir.mkdir(exist_ok=True)
    for session_id in sorted(run.transcripts):
        with open(transcripts_dir / f"{session_id}.jsonl", "w", encoding="utf-8") as fh:
            for event in run.transcripts[session_id]:
                fh.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")
    with open(out_dir / "outcomes.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["attempt_id", "contact_id", "method", "outcome", "progress", "session_id", "callback"]
        )
        for a in run.attempts:
            writer.writerow(
                [
                    a.attempt_id,
                    a.contact_id,
                    a.method.value,
                    a.outcome.value,
                    f"{a.progress:.6f}",
                    a.session_id or "",
                    "1" if a.callback else "0",
                ]
            )
    with open(out_dir / "funnel.json", "w", encoding="utf-8") as fh:
        json.dump(run.funnel.to_json(), fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")
    outbox.write_jsonl(out_dir / "outbox.jsonl")


def make_contacts(n: int, campaign_id: str = "sim") -> list[outreach.Contact]:
    """Synthetic contact list for desk-scale simulations."""
    contacts = []
    for i in range(1, n + 1):
        phone = f"+519{i:08d}"
        contacts.append(
            outreach.Contact(
                contact_id=f"c{i:05d}",
                first_name=f"P{i:05d}",
                phone=phone,
                timezone="America/Lima",
                link_token=f"tok{i:05d}",
            )
        )
    return contacts
