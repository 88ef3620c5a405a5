"""Evaluation suite: call outcomes, RR1/RR2, dialog metrics, readability,
quartile summaries, and funnel flows.

All operations are pure over transcript event lists (the dialog log schema:
``{ts_ms, session_id, direction, kind, payload}``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class AnalyticsError(Exception):
    pass


# ---------------------------------------------------------------------------
# Outcome classification


class CallOutcome(str, Enum):
    NOT_PICKED_UP = "not_picked_up"
    NOT_CLICKED_THROUGH = "not_clicked_through"
    HUNG_UP_AT_AI_REVEAL = "hung_up_at_ai_reveal"
    EXPLICIT_REFUSAL = "explicit_refusal"
    BUCKET_11_25 = "bucket_11_25"
    BUCKET_26_50 = "bucket_26_50"
    BUCKET_51_75 = "bucket_51_75"
    BUCKET_76_99 = "bucket_76_99"
    FULLY_COMPLETED = "fully_completed"


NOT_CONNECTED = (CallOutcome.NOT_PICKED_UP, CallOutcome.NOT_CLICKED_THROUGH)
BUCKETS = (
    CallOutcome.BUCKET_11_25,
    CallOutcome.BUCKET_26_50,
    CallOutcome.BUCKET_51_75,
    CallOutcome.BUCKET_76_99,
)


@dataclass(frozen=True)
class SessionOutcomeInput:
    """Terminal facts about one attempt needed for classification."""

    channel: str  # "web" | "phone"
    connected: bool
    progress: float = 0.0
    completed: bool = False
    consent_declined: bool = False
    ended_before_consent: bool = False  # hangup during greeting/consent


def classify_outcome(info: SessionOutcomeInput) -> CallOutcome:
    if not info.connected:
        return (
            CallOutcome.NOT_CLICKED_THROUGH
            if info.channel == "web"
            else CallOutcome.NOT_PICKED_UP
        )
    if info.completed or info.progress >= 1.0:
        return CallOutcome.FULLY_COMPLETED
    if info.progress <= 0.10:
        if info.consent_declined:
            return CallOutcome.EXPLICIT_REFUSAL
        if info.ended_before_consent:
            return CallOutcome.HUNG_UP_AT_AI_REVEAL
        # Post-consent terminations this early fall into the lowest bucket.
        return CallOutcome.BUCKET_11_25
    if info.progress <= 0.25:
        return CallOutcome.BUCKET_11_25
    if info.progress <= 0.50:
        return CallOutcome.BUCKET_26_50
    if info.progress <= 0.75:
        return CallOutcome.BUCKET_51_75
    return CallOutcome.BUCKET_76_99


# ---------------------------------------------------------------------------
# Response rates


@dataclass(frozen=True)
class ResponseRates:
    attempts: int
    fully_completed: int
    partial_76_plus_cumulative: int  # >= 76% completion, including 100%
    rr1: float
    rr2: float

    def rr1_display(self) -> str:
        return f"{round(self.rr1 * 1000) / 10:.1f}%"

    def rr2_display(self) -> str:
        return f"{round(self.rr2 * 1000) / 10:.1f}%"


def response_rates(
    attempts: int, fully_completed: int, partial_76_plus_cumulative: int
) -> ResponseRates:
    if attempts <= 0:
        raise AnalyticsError("empty campaign")
    if not 0 <= fully_completed <= partial_76_plus_cumulative <= attempts:
        raise AnalyticsError(
            "counts must satisfy 0 <= fully <= cumulative(>=76%) <= attempts"
        )
    return ResponseRates(
        attempts=attempts,
        fully_completed=fully_completed,
        partial_76_plus_cumulative=partial_76_plus_cumulative,
        rr1=fully_completed / attempts,
        rr2=partial_76_plus_cumulative / attempts,
    )


def rates_from_outcomes(outcomes: list[CallOutcome]) -> ResponseRates:
    fully = sum(1 for o in outcomes if o is CallOutcome.FULLY_COMPLETED)
    cumulative = fully + sum(1 for o in outcomes if o is CallOutcome.BUCKET_76_99)
    return response_rates(len(outcomes), fully, cumulative)


# ---------------------------------------------------------------------------
# Sentence / word helpers

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")
_WORD_RE = re.compile(r"\w", re.UNICODE)


def split_sentences(text: str) -> list[str]:
    """Terminator-based segmentation; abbreviations are not special-cased."""
    parts = _SENTENCE_SPLIT.split(text.strip())
    return [p for p in parts if _WORD_RE.search(p)]


def count_words(text: str) -> int:
    return len(text.split())


def is_question(sentence: str) -> bool:
    return sentence.rstrip().endswith("?")


# ---------------------------------------------------------------------------
# Flesch Reading Ease

_EN_VOWEL_GROUPS = re.compile(r"[aeiouy]+")
_ES_VOWEL_GROUPS = re.compile(r"[aeiouáéíóúü]+")


def count_syllables(word: str, language: str = "en") -> int:
    w = re.sub(r"[^\wáéíóúüñ']", "", word.lower())
    if not w:
        return 0
    lang = language.split("-")[0].lower()
    if lang == "es":
        groups = _ES_VOWEL_GROUPS.findall(w)
        return max(1, len(groups))
    groups = _EN_VOWEL_GROUPS.findall(w)
    count = len(groups)
    # Silent final e ("cake"), except when it is the only vowel sound.
    if w.endswith("e") and not w.endswith(("le", "ee", "ye")) and count > 1:
        count -= 1
    return max(1, count)


def flesch_reading_ease(text: str, language: str = "en") -> float:
    sentences = split_sentences(text)
    words = [w for s in sentences for w in s.split() if _WORD_RE.search(w)]
    if not words or not sentences:
        raise AnalyticsError("no words")
    syllables = sum(count_syllables(w, language) for w in words)
    asl = len(words) / len(sentences)
    asw = syllables / len(words)
    return 206.835 - 1.015 * asl - 84.6 * asw


# ---------------------------------------------------------------------------
# Conversation metrics

AI_UTTERANCE_KINDS = {
    "greeting",
    "disclosure",
    "consent_reask",
    "consent_ack",
    "question",
    "statement",
    "clarification",
    "idle",
    "encouragement",
    "safety_redirect",
    "thanks",
    "goodbye",
    "silence_goodbye",
}


@dataclass(frozen=True)
class ConversationMetrics:
    total_turns: int
    duration_ms: int
    user_ai_turn_ratio: float
    flesch_reading_ease: float
    ai_turns: int
    ai_sentences: int
    ai_questions: int
    words_per_ai_turn: float
    participant_turns: int
    participant_sentences: int
    participant_questions: int
    words_per_participant_turn_overall: float
    words_per_participant_turn_open_ended: float


def _ai_texts(events: list[dict]) -> list[str]:
    return [
        e["payload"]["text"]
        for e in events
        if e["direction"] == "out" and e["kind"] in AI_UTTERANCE_KINDS
    ]


def _participant_events(events: list[dict]) -> list[dict]:
    return [
        e
        for e in events
        if e["direction"] == "in"
        and e["kind"] == "user_text"
        and (e["payload"].get("text") or "").strip()
    ]


def transcript_duration_ms(events: list[dict]) -> int:
    """From the connect event (participant answered) to the final event."""
    if not events:
        return 0
    start = next(
        (e["ts_ms"] for e in events if e["kind"] == "connected"), events[0]["ts_ms"]
    )
    return events[-1]["ts_ms"] - start


def conversation_metrics(
    events: list[dict], open_ended_node_ids: set[str] | None = None
) -> ConversationMetrics:
    open_ended_node_ids = open_ended_node_ids or set()
    ai_texts = _ai_texts(events)
    if not ai_texts:
        raise AnalyticsError("transcript has no AI turns; turn ratio undefined")
    participant = _participant_events(events)
    participant_texts = [e["payload"]["text"] for e in participant]

    ai_sentences = [s for t in ai_texts for s in split_sentences(t)]
    part_sentences = [s for t in participant_texts for s in split_sentences(t)]

    open_ended_words = [
        count_words(e["payload"]["text"])
        for e in participant
        if e["payload"].get("node") in open_ended_node_ids
    ]

    ai_turns = len(ai_texts)
    participant_turns = len(participant_texts)
    full_text = " ".join(ai_texts + participant_texts)

    return ConversationMetrics(
        total_turns=ai_turns + participant_turns,
        duration_ms=transcript_duration_ms(events),
        user_ai_turn_ratio=participant_turns / ai_turns,
        flesch_reading_ease=flesch_reading_ease(full_text) if full_text.strip() else 0.0,
        ai_turns=ai_turns,
        ai_sentences=len(ai_sentences),
        ai_questions=sum(1 for s in ai_sentences if is_question(s)),
        words_per_ai_turn=sum(count_words(t) for t in ai_texts) / ai_turns,
        participant_turns=participant_turns,
        participant_sentences=len(part_sentences),
        participant_questions=sum(1 for s in part_sentences if is_question(s)),
        words_per_participant_turn_overall=(
            sum(count_words(t) for t in participant_texts) / participant_turns
            if participant_turns
            else 0.0
        ),
        words_per_participant_turn_open_ended=(
            sum(open_ended_words) / len(open_ended_words) if open_ended_words else 0.0
        ),
    )


def select_longest_call(transcripts: list[list[dict]]) -> list[dict]:
    """Maximal-duration transcript; ties broken by earliest start."""
    if not transcripts:
        raise AnalyticsError("no calls to select from")
    return min(
        transcripts,
        key=lambda t: (-transcript_duration_ms(t), t[0]["ts_ms"] if t else 0),
    )


# ---------------------------------------------------------------------------
# Quartile summaries (R-7 linear interpolation)


@dataclass(frozen=True)
class SummaryRow:
    metric: str
    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float


def _quantile_r7(sorted_values: list[float], q: float) -> float:
    n = len(sorted_values)
    if n == 1:
        return sorted_values[0]
    h = (n - 1) * q
    lo = int(h)
    hi = min(lo + 1, n - 1)
    return sorted_values[lo] + (h - lo) * (sorted_values[hi] - sorted_values[lo])


def summarize(metric: str, values: list[float]) -> SummaryRow:
    if not values:
        raise AnalyticsError(f"no values to summarize for {metric!r}")
    ordered = sorted(values)
    return SummaryRow(
        metric=metric,
        min=ordered[0],
        q1=_quantile_r7(ordered, 0.25),
        median=_quantile_r7(ordered, 0.5),
        mean=sum(ordered) / len(ordered),
        q3=_quantile_r7(ordered, 0.75),
        max=ordered[-1],
    )


SUMMARY_METRICS: list[tuple[str, str]] = [
    ("Total turns per conversation", "total_turns"),
    ("Duration of conversation", "duration_ms"),
    ("User-AI turn ratio", "user_ai_turn_ratio"),
    ("Overall Flesch Reading Ease", "flesch_reading_ease"),
    ("Number of AI conversational turns", "ai_turns"),
    ("Total AI sentences", "ai_sentences"),
    ("Number of AI questions", "ai_questions"),
    ("Words per AI turn", "words_per_ai_turn"),
    ("Number of participant conversational turns", "participant_turns"),
    ("Total participant sentences", "participant_sentences"),
    ("Number of participant questions", "participant_questions"),
    ("Words per participant turn (overall)", "words_per_participant_turn_overall"),
    ("Words per participant turn (open-ended)", "words_per_participant_turn_open_ended"),
]


def summary_table(metrics: list[ConversationMetrics]) -> list[SummaryRow]:
    """One SummaryRow per conversation metric, over completed interviews."""
    if not metrics:
        raise AnalyticsError("no completed interviews to summarize")
    rows = []
    for label, attr in SUMMARY_METRICS:
        values = [float(getattr(m, attr)) for m in metrics]
        if attr == "duration_ms":
            values = [v / 60000.0 for v in values]  # minutes for readability
            label = "Duration of conversation (min)"
        rows.append(summarize(label, values))
    return rows


def format_summary_table(rows: list[SummaryRow]) -> str:
    header = f"{'Metric':<46}{'Min':>9}{'Q1':>9}{'Median':>9}{'Mean':>9}{'Q3':>9}{'Max':>9}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.metric:<46}"
            f"{r.min:>9.2f}{r.q1:>9.2f}{r.median:>9.2f}{r.mean:>9.2f}{r.q3:>9.2f}{r.max:>9.2f}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Funnel (Sankey) flow


@dataclass(frozen=True)
class Funnel:
    nodes: list[dict]  # {id, count}
    edges: list[dict]  # {from, to, count}

    def to_json(self) -> dict:
        return {"nodes": self.nodes, "edges": self.edges}


_FUNNEL_LABEL = {
    CallOutcome.NOT_PICKED_UP: "NotPickedUp",
    CallOutcome.NOT_CLICKED_THROUGH: "NotClickedThrough",
    CallOutcome.HUNG_UP_AT_AI_REVEAL: "HungUpAtAIReveal",
    CallOutcome.EXPLICIT_REFUSAL: "ExplicitRefusal",
    CallOutcome.BUCKET_11_25: "Progress11-25",
    CallOutcome.BUCKET_26_50: "Progress26-50",
    CallOutcome.BUCKET_51_75: "Progress51-75",
}


def sankey_flow(outcomes: list[CallOutcome]) -> Funnel:
    """Stage-by-stage attempt flow with conserved counts at every node."""
    if not outcomes:
        raise AnalyticsError("empty campaign")
    total = len(outcomes)
    count = {o: outcomes.count(o) for o in CallOutcome}

    connected = total - count[CallOutcome.NOT_PICKED_UP] - count[CallOutcome.NOT_CLICKED_THROUGH]
    consented = (
        connected
        - count[CallOutcome.HUNG_UP_AT_AI_REVEAL]
        - count[CallOutcome.EXPLICIT_REFUSAL]
    )
    reached_76 = count[CallOutcome.BUCKET_76_99] + count[CallOutcome.FULLY_COMPLETED]

    nodes = [("Attempted", total), ("Connected", connected), ("Consented", consented)]
    edges = [("Attempted", "Connected", connected)]
    for outcome in NOT_CONNECTED:
        if count[outcome]:
            nodes.append((_FUNNEL_LABEL[outcome], count[outcome]))
            edges.append(("Attempted", _FUNNEL_LABEL[outcome], count[outcome]))
    edges.append(("Connected", "Consented", consented))
    for outcome in (CallOutcome.HUNG_UP_AT_AI_REVEAL, CallOutcome.EXPLICIT_REFUSAL):
        if count[outcome]:
            nodes.append((_FUNNEL_LABEL[outcome], count[outcome]))
            edges.append(("Connected", _FUNNEL_LABEL[outcome], count[outcome]))
    for outcome in (
        CallOutcome.BUCKET_11_25,
        CallOutcome.BUCKET_26_50,
        CallOutcome.BUCKET_51_75,
    ):
        if count[outcome]:
            nodes.append((_FUNNEL_LABEL[outcome], count[outcome]))
            edges.append(("Consented", _FUNNEL_LABEL[outcome], count[outcome]))
    if reached_76:
        nodes.append(("Progress76-100", reached_76))
        edges.append(("Consented", "Progress76-100", reached_76))
        if count[CallOutcome.FULLY_COMPLETED]:
            nodes.append(("FullyCompleted", count[CallOutcome.FULLY_COMPLETED]))
            edges.append(
                ("Progress76-100", "FullyCompleted", count[CallOutcome.FULLY_COMPLETED])
            )
        if count[CallOutcome.BUCKET_76_99]:
            nodes.append(("Partial76-99", count[CallOutcome.BUCKET_76_99]))
            edges.append(("Progress76-100", "Partial76-99", count[CallOutcome.BUCKET_76_99]))

    funnel = Funnel(
        nodes=[{"id": n, "count": c} for n, c in nodes],
        edges=[{"from": a, "to": b, "count": c} for a, b, c in edges],
    )
    _check_conservation(funnel)
    return funnel


def _check_conservation(funnel: Funnel) -> None:
    incoming: dict[str, int] = {}
    outgoing: dict[str, int] = {}
    for edge in funnel.edges:
        incoming[edge["to"]] = incoming.get(edge["to"], 0) + edge["count"]
        outgoing[edge["from"]] = outgoing.get(edge["from"], 0) + edge["count"]
    counts = {n["id"]: n["count"] for n in funnel.nodes}
    for node_id, node_count in counts.items():
        if node_id in incoming and incoming[node_id] != node_count:
            raise AnalyticsError(f"funnel node {node_id}: inflow != count")
        if node_id in outgoing and outgoing[node_id] != node_count:
            raise AnalyticsError(f"funnel node {node_id}: outflow != count")


def duration_histogram(durations_ms: list[int], bin_minutes: float = 1.0) -> list[dict]:
    """Completed-interview duration histogram rows (bin start minute, count)."""
    if not durations_ms:
        return []
    bins: dict[int, int] = {}
    for d in durations_ms:
        b = int((d / 60000.0) // bin_minutes)
        bins[b] = bins.get(b, 0) + 1
    return [
        {"minute_bin_start": b * bin_minutes, "count": bins[b]} for b in sorted(bins)
    ]
