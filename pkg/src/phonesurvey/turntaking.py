"""Full-duplex floor control.

Barge-in fires once per AI utterance when the participant has spoken a
configured number of words over it; idle prompts nudge a silent participant;
a hard timeout ends the call after continuous participant silence. ``step``
is a pure transition function, so identical traces yield identical effects.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum


@dataclass(frozen=True)
class TurnTakingConfig:
    barge_in_word_threshold: int = 3
    idle_delay_ms: int = 6000
    max_idle_messages: int = 2
    silence_timeout_ms: int = 30000

    def __post_init__(self):
        if min(
            self.barge_in_word_threshold,
            self.idle_delay_ms,
            self.max_idle_messages,
            self.silence_timeout_ms,
        ) <= 0:
            raise ValueError("all turn-taking parameters must be positive")
        if self.idle_delay_ms >= self.silence_timeout_ms:
            raise ValueError("idle_delay_ms must be below silence_timeout_ms")


class Mode(str, Enum):
    AI_SPEAKING = "ai_speaking"
    LISTENING = "listening"
    PARTICIPANT_SPEAKING = "participant_speaking"


@dataclass(frozen=True)
class FloorState:
    mode: Mode = Mode.LISTENING
    words_during_ai_speech: int = 0
    interrupt_emitted: bool = False
    silence_since_ms: int = 0  # last activity of any kind (idle clock)
    participant_silent_since_ms: int = 0  # last participant word (timeout clock)
    idle_messages_sent: int = 0
    ended: bool = False


# Events


@dataclass(frozen=True)
class AISpeechStart:
    ts_ms: int


@dataclass(frozen=True)
class AISpeechEnd:
    ts_ms: int


@dataclass(frozen=True)
class UserWord:
    ts_ms: int


@dataclass(frozen=True)
class SilenceTick:
    ts_ms: int


FloorEvent = AISpeechStart | AISpeechEnd | UserWord | SilenceTick


class FloorEffect(str, Enum):
    INTERRUPT_AI = "interrupt_ai"
    EMIT_IDLE_PROMPT = "emit_idle_prompt"
    END_CALL_SILENCE = "end_call_silence"


def step(
    floor: FloorState, event: FloorEvent, config: TurnTakingConfig
) -> tuple[FloorState, list[FloorEffect]]:
    effects: list[FloorEffect] = []
    if floor.ended:
        return floor, effects

    if isinstance(event, AISpeechStart):
        floor = replace(
            floor,
            mode=Mode.AI_SPEAKING,
            words_during_ai_speech=0,
            interrupt_emitted=False,
            silence_since_ms=event.ts_ms,
        )
        return floor, effects

    if isinstance(event, AISpeechEnd):
        floor = replace(floor, mode=Mode.LISTENING, silence_since_ms=event.ts_ms)
        return floor, effects

    if isinstance(event, UserWord):
        # Each participant word opens a new silence episode.
        floor = replace(
            floor,
            silence_since_ms=event.ts_ms,
            participant_silent_since_ms=event.ts_ms,
            idle_messages_sent=0,
        )
        if floor.mode is Mode.AI_SPEAKING:
            floor = replace(floor, words_during_ai_speech=floor.words_during_ai_speech + 1)
            if (
                floor.words_during_ai_speech >= config.barge_in_word_threshold
                and not floor.interrupt_emitted
            ):
                effects.append(FloorEffect.INTERRUPT_AI)
                floor = replace(
                    floor, interrupt_emitted=True, mode=Mode.PARTICIPANT_SPEAKING
                )
        else:
            floor = replace(floor, mode=Mode.PARTICIPANT_SPEAKING)
        return floor, effects

    if isinstance(event, SilenceTick):
        now = event.ts_ms
        if now - floor.participant_silent_since_ms >= config.silence_timeout_ms:
            effects.append(FloorEffect.END_CALL_SILENCE)
            return replace(floor, ended=True), effects
        if (
            floor.mode is Mode.LISTENING
            and floor.idle_messages_sent < config.max_idle_messages
            and now - floor.silence_since_ms >= config.idle_delay_ms
        ):
            effects.append(FloorEffect.EMIT_IDLE_PROMPT)
            # Reset the idle clock (the prompt itself is AI activity) but not
            # the participant-silence clock.
            floor = replace(
                floor,
                idle_messages_sent=floor.idle_messages_sent + 1,
                silence_since_ms=now,
            )
        return floor, effects

    raise TypeError(f"unknown floor event {event!r}")


def new_floor(ts_ms: int = 0) -> FloorState:
    return FloorState(silence_since_ms=ts_ms, participant_silent_since_ms=ts_ms)
