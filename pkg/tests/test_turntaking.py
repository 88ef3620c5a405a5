"""Floor control: barge-in threshold, idle prompts, hard silence timeout."""

from __future__ import annotations

import dataclasses
import random

import pytest
from hypothesis import given, settings, strategies as st

from phonesurvey.turntaking import (
    AISpeechEnd,
    AISpeechStart,
    FloorEffect,
    FloorState,
    Mode,
    SilenceTick,
    TurnTakingConfig,
    UserWord,
    new_floor,
    step,
)

CFG = TurnTakingConfig()  # 3 words / 6000 ms idle / 2 prompts / 30000 ms timeout


def run(events, config=CFG, floor=None):
    floor = floor or new_floor(0)
    effects = []
    for event in events:
        floor, out = step(floor, event, config)
        effects += out
    return floor, effects


# ---------------------------------------------------------------------------
# Barge-in


def test_barge_in_below_threshold_is_noop():
    _, effects = run([
        AISpeechStart(0),
        UserWord(100),
        UserWord(200),  # threshold - 1 words
    ])
    assert effects == []


def test_barge_in_fires_exactly_at_threshold_word():
    floor, effects = run([
        AISpeechStart(0),
        UserWord(100),
        UserWord(200),
        UserWord(300),
    ])
    assert effects == [FloorEffect.INTERRUPT_AI]
    assert floor.mode is Mode.PARTICIPANT_SPEAKING


def test_barge_in_fires_once_per_ai_utterance():
    _, effects = run([AISpeechStart(0)] + [UserWord(100 * i) for i in range(1, 9)])
    assert effects == [FloorEffect.INTERRUPT_AI]


def test_barge_in_rearms_on_next_ai_utterance():
    events = [AISpeechStart(0), UserWord(1), UserWord(2), UserWord(3),
              AISpeechEnd(4),
              AISpeechStart(5), UserWord(6), UserWord(7), UserWord(8)]
    _, effects = run(events)
    assert effects == [FloorEffect.INTERRUPT_AI, FloorEffect.INTERRUPT_AI]


def test_words_while_listening_do_not_interrupt():
    _, effects = run([UserWord(i * 100) for i in range(10)])
    assert effects == []


def test_custom_threshold():
    config = TurnTakingConfig(barge_in_word_threshold=1)
    _, effects = run([AISpeechStart(0), UserWord(10)], config)
    assert effects == [FloorEffect.INTERRUPT_AI]


# ---------------------------------------------------------------------------
# Idle prompts


def test_idle_prompt_exact_boundary():
    floor, _ = run([AISpeechStart(0), AISpeechEnd(1000)])
    floor, effects = step(floor, SilenceTick(1000 + CFG.idle_delay_ms - 1), CFG)
    assert effects == []
    floor, effects = step(floor, SilenceTick(1000 + CFG.idle_delay_ms), CFG)
    assert effects == [FloorEffect.EMIT_IDLE_PROMPT]


def test_idle_prompt_cap_per_silence_episode():
    floor, _ = run([AISpeechEnd(0)])
    effects = []
    for ts in range(0, 29_000, 500):
        floor, out = step(floor, SilenceTick(ts), CFG)
        effects += out
    assert effects.count(FloorEffect.EMIT_IDLE_PROMPT) == CFG.max_idle_messages


def test_idle_prompt_resets_own_clock_only():
    # The prompt itself is activity for the idle clock but not for the
    # participant-silence clock.
    floor, _ = run([AISpeechEnd(0)])
    floor, out = step(floor, SilenceTick(6000), CFG)
    assert out == [FloorEffect.EMIT_IDLE_PROMPT]
    floor, out = step(floor, SilenceTick(11_999), CFG)
    assert out == []
    floor, out = step(floor, SilenceTick(12_000), CFG)
    assert out == [FloorEffect.EMIT_IDLE_PROMPT]
    assert floor.participant_silent_since_ms == 0


def test_user_word_opens_new_idle_episode():
    floor, _ = run([AISpeechEnd(0), SilenceTick(6000), SilenceTick(12_000)])
    assert floor.idle_messages_sent == 2
    floor, _ = step(floor, UserWord(13_000), CFG)
    assert floor.idle_messages_sent == 0
    # Agent replies; the next silent stretch gets fresh prompts.
    floor, _ = run([AISpeechStart(13_500), AISpeechEnd(14_000)], floor=floor)
    floor, out = step(floor, SilenceTick(20_000), CFG)
    assert out == [FloorEffect.EMIT_IDLE_PROMPT]


def test_no_idle_prompt_while_ai_speaking():
    floor, _ = run([AISpeechStart(0)])
    floor, out = step(floor, SilenceTick(20_000), CFG)
    assert out == []


# ---------------------------------------------------------------------------
# Hard silence timeout


def test_timeout_exact_boundary():
    floor = new_floor(0)
    floor, out = step(floor, SilenceTick(CFG.silence_timeout_ms - 1), CFG)
    assert FloorEffect.END_CALL_SILENCE not in out
    floor, out = step(floor, SilenceTick(CFG.silence_timeout_ms), CFG)
    assert out == [FloorEffect.END_CALL_SILENCE]
    assert floor.ended


def test_idle_prompts_do_not_defer_timeout():
    floor, effects = run(
        [AISpeechEnd(0)] + [SilenceTick(ts) for ts in range(1000, 31_000, 1000)]
    )
    assert effects[-1] is FloorEffect.END_CALL_SILENCE
    assert FloorEffect.EMIT_IDLE_PROMPT in effects


def test_user_word_resets_timeout():
    floor, _ = run([SilenceTick(29_000), UserWord(29_500)])
    floor, out = step(floor, SilenceTick(59_499), CFG)
    assert out == []
    floor, out = step(floor, SilenceTick(59_500), CFG)
    assert out == [FloorEffect.END_CALL_SILENCE]


def test_ended_floor_is_absorbing():
    floor, _ = run([SilenceTick(30_000)])
    assert floor.ended
    for event in (UserWord(31_000), AISpeechStart(31_001), SilenceTick(99_999)):
        floor, out = step(floor, event, CFG)
        assert out == []
        assert floor.ended


# ---------------------------------------------------------------------------
# Config validation and purity


@pytest.mark.parametrize(
    "kwargs",
    [
        {"barge_in_word_threshold": 0},
        {"idle_delay_ms": 0},
        {"max_idle_messages": 0},
        {"silence_timeout_ms": -1},
        {"idle_delay_ms": 30_000},  # >= timeout
    ],
)
def test_invalid_config_rejected(kwargs):
    with pytest.raises(ValueError):
        TurnTakingConfig(**kwargs)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6), st.integers(min_value=1, max_value=60))
def test_step_is_deterministic_and_pure(seed, length):
    rng = random.Random(seed)
    events = []
    ts = 0
    for _ in range(length):
        ts += rng.randint(1, 5000)
        events.append(
            rng.choice([AISpeechStart, AISpeechEnd, UserWord, SilenceTick])(ts)
        )
    first = run(events)
    frozen = dataclasses.replace(first[0])
    second = run(events)
    assert first == second
    assert frozen == first[0]
    # Clocks never run ahead of the last event time.
    assert first[0].silence_since_ms <= ts
    assert first[0].participant_silent_since_ms <= ts
