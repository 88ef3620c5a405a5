"""Per-session interview state machine.

Greeting, deterministic consent gate, disclosure, the question loop with
clarification re-prompts, web-channel encouragement milestones, safety
escalation, and termination. ``InterviewEngine.advance`` is deterministic
given (state, event, templates, questionnaire), so a recorded event log
replays to the identical action log.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from . import questionnaire as qn
from .questionnaire import (
    Answer,
    ContractViolation,
    Kind,
    ParseStatus,
    Questionnaire,
    classify_yes_no,
    END,
)

MAX_CLARIFY_ATTEMPTS = 2
MILESTONES = (25, 50, 75)


class Channel(str, Enum):
    WEB = "web"
    PHONE = "phone"


class Phase(str, Enum):
    GREETING = "greeting"
    CONSENT = "consent"
    DISCLOSURE = "disclosure"
    ASKING = "asking"
    CLARIFYING = "clarifying"
    COMPLETED = "completed"
    TERMINATED = "terminated"


class TerminationReason(str, Enum):
    CONSENT_DECLINED = "consent_declined"
    SILENCE_TIMEOUT = "silence_timeout"
    SAFETY_STOP = "safety_stop"
    PARTICIPANT_HANGUP = "participant_hangup"
    SYSTEM_ERROR = "system_error"


ABSORBING = (Phase.COMPLETED, Phase.TERMINATED)


# ---------------------------------------------------------------------------
# Events


@dataclass(frozen=True)
class CallConnected:
    ts_ms: int


@dataclass(frozen=True)
class ParticipantUtterance:
    ts_ms: int
    text: str


@dataclass(frozen=True)
class IdlePromptDue:
    ts_ms: int


@dataclass(frozen=True)
class SilenceExpired:
    ts_ms: int


@dataclass(frozen=True)
class Hangup:
    ts_ms: int


@dataclass(frozen=True)
class SafetyFlag:
    ts_ms: int
    category: str


SessionEvent = (
    CallConnected | ParticipantUtterance | IdlePromptDue | SilenceExpired | Hangup | SafetyFlag
)


# ---------------------------------------------------------------------------
# Actions


@dataclass(frozen=True)
class Say:
    text: str
    kind: str  # greeting/disclosure/question/statement/clarification/...
    node_id: str | None = None
    milestone: int | None = None  # set on encouragement messages


@dataclass(frozen=True)
class EndCall:
    reason: TerminationReason


@dataclass(frozen=True)
class RecordAnswer:
    node_id: str
    answer: Answer


@dataclass(frozen=True)
class Warning:
    message: str


AgentAction = Say | EndCall | RecordAnswer | Warning


# ---------------------------------------------------------------------------
# Templates


@dataclass(frozen=True)
class PromptTemplates:
    greeting: str
    disclosure: str
    consent_reask: str
    consent_ack_decline: str
    clarification: dict[str, str]  # per node kind
    idle_message: str
    encouragement: dict[int, str]  # per milestone
    safety_redirect: str
    thanks: str
    voicemail: str
    silence_goodbye: str


# Consent is asked inside the greeting; the ask is phrased imperatively so
# that "?"-terminated AI sentences track scripted survey questions.
DEFAULT_TEMPLATES = {
    "en": PromptTemplates(
        greeting=(
            "Hi {first_name}, I'm {assistant_name}, an AI virtual researcher. "
            "I'm conducting research on behalf of {client_name} with their "
            "{service_name} customers to get to know them and get their feedback. "
            "Please let me know if you have {duration} minutes to talk to me."
        ),
        disclosure=(
            "Before we begin: your answers will be shared with {client_name} in "
            "aggregate form and used only to improve {service_name}. "
            "Let's get started."
        ),
        consent_reask=(
            "This is a short survey about {service_name} that takes about "
            "{duration} minutes, and you can stop at any time. "
            "Please say yes if you would like to continue, or no if not."
        ),
        consent_ack_decline="Thank you for your time, have a great day.",
        clarification={
            "yes_no": "Sorry, I didn't catch that. Please answer yes or no.",
            "nps": (
                "Sorry, I need a number between 0 and 10, where 0 is not at all "
                "likely and 10 is extremely likely."
            ),
            "likert": "Sorry, I need a number between 1 and {point_count}.",
            "open_ended": "Sorry, could you say that again.",
        },
        idle_message="I'm still here with you. Take your time, I'm listening.",
        encouragement={
            25: "Great, you're a quarter of the way through.",
            50: "Nice, we're halfway there.",
            75: "Almost done, just a few questions left.",
        },
        safety_redirect=(
            "Let's keep our conversation focused on the survey. "
            "Back to the question."
        ),
        thanks="That was the last question. Thank you so much for your time, goodbye.",
        voicemail=(
            "Hello, this is {assistant_name}, an AI virtual researcher calling on "
            "behalf of {client_name} about {service_name}. We missed you today. "
            "You can call this same number back any time to take the survey. "
            "Callback number: {callback_number}."
        ),
        silence_goodbye="It seems now is not a good time. Thank you, goodbye.",
    ),
    "es": PromptTemplates(
        greeting=(
            "Hola {first_name}, soy {assistant_name}, un investigador virtual de "
            "inteligencia artificial. Estoy realizando una investigación en nombre "
            "de {client_name} con sus clientes de {service_name} para conocerlos y "
            "obtener su opinión. Por favor dime si tienes {duration} minutos para "
            "hablar conmigo."
        ),
        disclosure=(
            "Antes de empezar: tus respuestas se compartirán con {client_name} de "
            "forma agregada y se usarán solo para mejorar {service_name}. "
            "Comencemos."
        ),
        consent_reask=(
            "Es una encuesta corta sobre {service_name} que toma unos {duration} "
            "minutos, y puedes parar en cualquier momento. Por favor di sí si "
            "quieres continuar, o no si prefieres no hacerlo."
        ),
        consent_ack_decline="Gracias por tu tiempo, que tengas un buen día.",
        clarification={
            "yes_no": "Perdón, no te entendí. Por favor responde sí o no.",
            "nps": (
                "Perdón, necesito un número entre 0 y 10, donde 0 es nada probable "
                "y 10 es muy probable."
            ),
            "likert": "Perdón, necesito un número entre 1 y {point_count}.",
            "open_ended": "Perdón, repítelo por favor.",
        },
        idle_message="Sigues ahí. Tómate tu tiempo, te escucho.",
        encouragement={
            25: "Muy bien, ya completaste un cuarto de la encuesta.",
            50: "Excelente, vamos por la mitad.",
            75: "Ya casi terminamos, quedan pocas preguntas.",
        },
        safety_redirect=(
            "Mantengamos la conversación enfocada en la encuesta. "
            "Volvamos a la pregunta."
        ),
        thanks="Esa fue la última pregunta. Muchas gracias por tu tiempo, adiós.",
        voicemail=(
            "Hola, soy {assistant_name}, un investigador virtual llamando en nombre "
            "de {client_name} sobre {service_name}. No pudimos encontrarte hoy. "
            "Puedes devolver la llamada a este mismo número cuando quieras para "
            "hacer la encuesta. Número: {callback_number}."
        ),
        silence_goodbye="Parece que no es un buen momento. Gracias, adiós.",
    ),
}


def default_templates(language: str) -> PromptTemplates:
    base = language.split("-")[0].lower()
    return DEFAULT_TEMPLATES.get(base, DEFAULT_TEMPLATES["en"])


# ---------------------------------------------------------------------------
# Session state


@dataclass
class SessionState:
    session_id: str
    contact_id: str
    first_name: str
    channel: Channel
    phase: Phase = Phase.GREETING
    current_node: str | None = None
    clarify_attempt: int = 0
    consent_reasks: int = 0
    safety_flags: int = 0
    answers: dict[str, Answer] = field(default_factory=dict)
    milestones_emitted: set[int] = field(default_factory=set)
    started_at: int | None = None
    answered_at: int | None = None
    ended_at: int | None = None
    termination_reason: TerminationReason | None = None

    def is_absorbing(self) -> bool:
        return self.phase in ABSORBING


# ---------------------------------------------------------------------------
# Standalone policy functions


ConsentVerdict = str  # "consented" | "declined" | "unclear"


def handle_consent(utterance: str, language: str) -> ConsentVerdict:
    verdict = classify_yes_no(utterance, language)
    if verdict is True:
        return "consented"
    if verdict is False:
        return "declined"
    return "unclear"


def encouragement_check(
    progress_before: float,
    progress_after: float,
    channel: Channel,
    milestones_emitted: set[int],
) -> int | None:
    """Lowest un-emitted milestone strictly crossed; web channel only."""
    if channel is not Channel.WEB:
        return None
    for milestone in MILESTONES:
        frac = milestone / 100.0
        if milestone in milestones_emitted:
            continue
        if progress_before < frac <= progress_after:
            return milestone
    return None


def apply_safety(flagged: bool, safety_flags_so_far: int) -> str:
    """'proceed' | 'steer' | 'end' given the verdict and prior flag count."""
    if not flagged:
        return "proceed"
    return "steer" if safety_flags_so_far == 0 else "end"


# ---------------------------------------------------------------------------
# Engine


class InterviewEngine:
    """Drives one session's state machine over a fixed questionnaire."""

    def __init__(
        self,
        questionnaire: Questionnaire,
        templates: PromptTemplates | None = None,
        assistant_name: str = "Nova",
        max_clarify_attempts: int = MAX_CLARIFY_ATTEMPTS,
    ):
        self.questionnaire = questionnaire
        self.templates = templates or default_templates(questionnaire.language)
        self.assistant_name = assistant_name
        self.max_clarify_attempts = max_clarify_attempts
        self.language = questionnaire.language

    # -- template rendering

    def _slots(self, state: SessionState) -> dict:
        return {
            "first_name": state.first_name,
            "assistant_name": self.assistant_name,
            "client_name": self.questionnaire.client_name,
            "service_name": self.questionnaire.service_name,
            "duration": self.questionnaire.expected_duration_min,
        }

    def render(self, template: str, state: SessionState, **extra) -> str:
        return template.format(**{**self._slots(state), **extra})

    # -- main transition function

    def advance(
        self, state: SessionState, event: SessionEvent
    ) -> tuple[SessionState, list[AgentAction]]:
        if state.is_absorbing():
            return state, [Warning(f"event ignored: session is {state.phase.value}")]

        if isinstance(event, Hangup):
            return self._terminate(state, event.ts_ms, TerminationReason.PARTICIPANT_HANGUP)

        if isinstance(event, SilenceExpired):
            actions: list[AgentAction] = [
                Say(self.render(self.templates.silence_goodbye, state), "silence_goodbye")
            ]
            state, end_actions = self._terminate(
                state, event.ts_ms, TerminationReason.SILENCE_TIMEOUT
            )
            return state, actions + end_actions

        if isinstance(event, IdlePromptDue):
            return state, [Say(self.render(self.templates.idle_message, state), "idle")]

        if isinstance(event, SafetyFlag):
            decision = apply_safety(True, state.safety_flags)
            state.safety_flags += 1
            if decision == "steer":
                return state, [
                    Say(self.render(self.templates.safety_redirect, state), "safety_redirect")
                ]
            actions = [Say(self.render(self.templates.consent_ack_decline, state), "goodbye")]
            state, end_actions = self._terminate(
                state, event.ts_ms, TerminationReason.SAFETY_STOP
            )
            return state, actions + end_actions

        if isinstance(event, CallConnected):
            if state.phase is not Phase.GREETING:
                return state, [Warning("call already connected")]
            state.answered_at = event.ts_ms
            if state.started_at is None:
                state.started_at = event.ts_ms
            state.phase = Phase.CONSENT
            return state, [Say(self.render(self.templates.greeting, state), "greeting")]

        if isinstance(event, ParticipantUtterance):
            if state.phase is Phase.CONSENT:
                return self._on_consent_reply(state, event)
            if state.phase in (Phase.ASKING, Phase.CLARIFYING):
                return self._on_answer_reply(state, event)
            return state, [Warning(f"unexpected utterance in phase {state.phase.value}")]

        raise ContractViolation(f"unknown event {event!r}")

    # -- phase handlers

    def _on_consent_reply(
        self, state: SessionState, event: ParticipantUtterance
    ) -> tuple[SessionState, list[AgentAction]]:
        verdict = handle_consent(event.text, self.language)
        if verdict == "consented":
            actions: list[AgentAction] = [
                Say(self.render(self.templates.disclosure, state), "disclosure")
            ]
            state, ask_actions = self._ask_from(state, self.questionnaire.entry_node)
            return state, actions + ask_actions
        if verdict == "unclear" and state.consent_reasks == 0:
            state.consent_reasks += 1
            return state, [
                Say(self.render(self.templates.consent_reask, state), "consent_reask")
            ]
        # Explicit decline, or a second unclear reply treated as decline.
        actions = [
            Say(self.render(self.templates.consent_ack_decline, state), "consent_ack")
        ]
        state, end_actions = self._terminate(
            state, event.ts_ms, TerminationReason.CONSENT_DECLINED
        )
        return state, actions + end_actions

    def _on_answer_reply(
        self, state: SessionState, event: ParticipantUtterance
    ) -> tuple[SessionState, list[AgentAction]]:
        node = self.questionnaire.node(state.current_node)
        result = qn.parse_answer(node, event.text, self.language)
        if result.status is ParseStatus.PARSED:
            return self._record_and_continue(state, node, result.answer)
        if state.phase is Phase.CLARIFYING and state.clarify_attempt >= self.max_clarify_attempts:
            # Never stall: keep the raw utterance verbatim and move on.
            fallback = Answer.free_text(event.text if event.text.strip() else "(unintelligible)")
            return self._record_and_continue(state, node, fallback)
        state.clarify_attempt = state.clarify_attempt + 1 if state.phase is Phase.CLARIFYING else 1
        state.phase = Phase.CLARIFYING
        template = self.templates.clarification.get(
            node.kind.value, self.templates.clarification["open_ended"]
        )
        text = self.render(template, state, point_count=node.point_count or 0)
        return state, [Say(text, "clarification", node_id=node.id)]

    def _record_and_continue(
        self, state: SessionState, node, answer: Answer
    ) -> tuple[SessionState, list[AgentAction]]:
        progress_before = qn.progress(self.questionnaire, state.answers, node.id)
        state.answers[node.id] = answer
        next_id = qn.next_node(self.questionnaire, node.id, answer)
        progress_after = qn.progress(self.questionnaire, state.answers, next_id)
        actions: list[AgentAction] = [RecordAnswer(node.id, answer)]
        milestone = encouragement_check(
            progress_before, progress_after, state.channel, state.milestones_emitted
        )
        if milestone is not None:
            state.milestones_emitted.add(milestone)
            actions.append(
                Say(
                    self.render(self.templates.encouragement[milestone], state),
                    "encouragement",
                    milestone=milestone,
                )
            )
        state.clarify_attempt = 0
        state, ask_actions = self._ask_from(state, next_id)
        return state, actions + ask_actions

    def _ask_from(
        self, state: SessionState, node_id: str
    ) -> tuple[SessionState, list[AgentAction]]:
        """Walk statements, then either pose the next question or finish."""
        actions: list[AgentAction] = []
        while node_id != END:
            node = self.questionnaire.node(node_id)
            if node.kind is Kind.STATEMENT:
                actions.append(Say(self.render(node.prompt, state), "statement", node_id=node.id))
                node_id = node.default_next
                continue
            actions.append(Say(self.render(node.prompt, state), "question", node_id=node.id))
            state.phase = Phase.ASKING
            state.current_node = node_id
            return state, actions
        actions.append(Say(self.render(self.templates.thanks, state), "thanks"))
        state.phase = Phase.COMPLETED
        state.current_node = None
        return state, actions

    def _terminate(
        self, state: SessionState, ts_ms: int, reason: TerminationReason
    ) -> tuple[SessionState, list[AgentAction]]:
        state.phase = Phase.TERMINATED
        state.termination_reason = reason
        state.ended_at = ts_ms
        return state, [EndCall(reason)]


def session_progress(engine: InterviewEngine, state: SessionState) -> float:
    """Completion fraction of a live or terminal session."""
    if state.phase is Phase.COMPLETED:
        return 1.0
    current = state.current_node if state.current_node is not None else None
    if current is None:
        # Never reached the question loop (or already past it).
        if state.answers:
            return qn.progress(engine.questionnaire, state.answers, END)
        entry_counts = any(n.counts_toward_progress for n in engine.questionnaire.nodes)
        return 0.0 if entry_counts else 1.0
    return qn.progress(engine.questionnaire, state.answers, current)
