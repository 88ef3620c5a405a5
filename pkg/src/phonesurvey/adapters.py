"""Ports for STT, response generation, TTS, and safety classification.

Only deterministic mock implementations live here: the media plane is
abstracted to text plus timing, so every control-flow behavior of the live
system is reproducible offline. Real model backends plug in behind the same
port surfaces.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Protocol


# ---------------------------------------------------------------------------
# Port surfaces


@dataclass(frozen=True)
class WordEvent:
    word: str
    ts_ms: int


@dataclass(frozen=True)
class FinalUtterance:
    text: str
    ts_ms: int


class SttPort(Protocol):
    def feed(self, chunk: str, start_ms: int) -> Iterable[WordEvent | FinalUtterance]: ...


class GenPort(Protocol):
    def generate(self, history: list[str], intent_text: str) -> str: ...


class TtsPort(Protocol):
    def synthesize(self, text: str) -> "SpeechHandle": ...


@dataclass(frozen=True)
class SpeechHandle:
    text: str
    duration_ms: int


@dataclass(frozen=True)
class SafetyVerdict:
    flagged: bool
    category: str | None = None  # offensive | prompt_injection | other

    @staticmethod
    def safe() -> "SafetyVerdict":
        return SafetyVerdict(False)


class SafetyPort(Protocol):
    def classify(self, text: str) -> SafetyVerdict: ...


# ---------------------------------------------------------------------------
# Mock STT: scripted word streams

WORD_TIMING_RE = re.compile(r"^(?P<word>.+?)@(?P<ms>\d+)$")
DEFAULT_WORD_GAP_MS = 300


class ScriptedStt:
    """Turns scripted text into a deterministic timed word-event stream.

    Script lines are one participant turn each; words may carry explicit
    offsets as ``word@ms``, otherwise they are spaced DEFAULT_WORD_GAP_MS
    apart from the turn's start.
    """

    def __init__(self, word_gap_ms: int = DEFAULT_WORD_GAP_MS):
        self.word_gap_ms = word_gap_ms

    def feed(self, chunk: str, start_ms: int = 0) -> list[WordEvent | FinalUtterance]:
        events: list[WordEvent | FinalUtterance] = []
        words: list[str] = []
        ts = start_ms
        for i, raw in enumerate(chunk.split()):
            match = WORD_TIMING_RE.match(raw)
            if match:
                word = match.group("word")
                ts = start_ms + int(match.group("ms"))
            else:
                word = raw
                ts = start_ms + i * self.word_gap_ms
            words.append(word)
            events.append(WordEvent(word, ts))
        events.append(FinalUtterance(" ".join(words), ts))
        return events

    def feed_script(self, lines: Iterable[str], start_ms: int = 0, turn_gap_ms: int = 1000):
        """Stream a whole scripted respondent file, one turn per line."""
        ts = start_ms
        for line in lines:
            line = line.strip()
            if not line:
                continue
            events = self.feed(line, ts)
            yield from events
            ts = events[-1].ts_ms + turn_gap_ms


def load_script(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# Mock generation


class ScriptedGen:
    """Emits the requested template text verbatim."""

    def generate(self, history: list[str], intent_text: str) -> str:
        return intent_text


class ParaphrasingGen:
    """Deterministic paraphrase mock: prefixes the template.

    Exists to exercise transcript analytics against non-verbatim agent text.
    """

    def __init__(self, prefix: str = "Alright."):
        self.prefix = prefix

    def generate(self, history: list[str], intent_text: str) -> str:
        return f"{self.prefix} {intent_text}"


# ---------------------------------------------------------------------------
# Mock TTS

DEFAULT_SPEAKING_RATE_WPM = 150


def mock_tts_duration(text: str, speaking_rate_wpm: int = DEFAULT_SPEAKING_RATE_WPM) -> int:
    """Speech duration in ms at a fixed speaking rate; empty text is 0."""
    if speaking_rate_wpm <= 0:
        raise ValueError("speaking_rate_wpm must be positive")
    words = len(text.split())
    return round(words / speaking_rate_wpm * 60000)


class MockTts:
    def __init__(self, speaking_rate_wpm: int = DEFAULT_SPEAKING_RATE_WPM):
        self.speaking_rate_wpm = speaking_rate_wpm

    def synthesize(self, text: str) -> SpeechHandle:
        return SpeechHandle(text, mock_tts_duration(text, self.speaking_rate_wpm))


# ---------------------------------------------------------------------------
# Mock safety classifier

DEFAULT_OFFENSIVE_TERMS = (
    "idiot",
    "stupid",
    "moron",
    "imbecil",
    "estupido",
    "idiota",
)

INJECTION_PATTERNS = (
    re.compile(r"ignore (all )?(previous|prior) instructions", re.IGNORECASE),
    re.compile(r"disregard (the )?(system|your) prompt", re.IGNORECASE),
    re.compile(r"you are now", re.IGNORECASE),
    re.compile(r"pretend (to be|you are)", re.IGNORECASE),
    re.compile(r"reveal (your|the) (system )?prompt", re.IGNORECASE),
)


class RuleSafety:
    """Blocklist + injection-pattern filter standing in for the safety model."""

    def __init__(self, offensive_terms: Iterable[str] = DEFAULT_OFFENSIVE_TERMS):
        self.offensive_terms = tuple(t.lower() for t in offensive_terms)

    def classify(self, text: str) -> SafetyVerdict:
        lowered = text.lower()
        for pattern in INJECTION_PATTERNS:
            if pattern.search(lowered):
                return SafetyVerdict(True, "prompt_injection")
        tokens = set(re.findall(r"[\w']+", lowered))
        for term in self.offensive_terms:
            if term in tokens:
                return SafetyVerdict(True, "offensive")
        return SafetyVerdict.safe()
