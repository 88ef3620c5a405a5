"""Contacts, invites, scheduling, dial queues, and voicemail handling."""

from __future__ import annotations

import hashlib
from datetime import date, datetime, time, timezone
from zoneinfo import ZoneInfo

import pytest
from hypothesis import given, settings, strategies as st

from phonesurvey import outreach
from phonesurvey.outreach import (
    Campaign,
    DialWindow,
    Disposition,
    Method,
    Outbox,
    OutreachAttempt,
    OutreachError,
    generate_invites,
    handle_no_answer,
    ingest_contacts,
    match_inbound,
    next_window_instant,
    normalize_phone,
    plan_dial_queue,
    schedule_call,
    send_primers,
)

CSV = (
    "first_name,phone,timezone\n"
    "Ana,+51 912 345 678,America/Lima\n"
    "Luis,0051 987 654 321,America/Lima\n"
    "Maya,+1 (415) 555-0100,America/New_York\n"
    "Ana,+51912345678,America/Lima\n"
    ",+51911111111,America/Lima\n"
    "Pia,12345,America/Lima\n"
    "Teo,+51922222222,Mars/Olympus\n"
)


def make_campaign(**overrides) -> Campaign:
    result = ingest_contacts(CSV, "camp1")
    base = dict(
        campaign_id="camp1",
        questionnaire_id="q1",
        contacts=result.contacts,
        dial_windows=[DialWindow.parse("09:00-12:00"), DialWindow.parse("14:00-18:00")],
        callback_number="+51999999999",
        base_url="https://survey.example",
    )
    base.update(overrides)
    return Campaign(**base)


# ---------------------------------------------------------------------------
# Phone normalization


@pytest.mark.parametrize(
    "raw,expected",
    [
        ("+51 912 345 678", "+51912345678"),
        ("0051987654321", "+51987654321"),
        ("(415) 555-0100", None),  # no country code
        ("+1 (415) 555-0100", "+14155550100"),
        ("+1.415.555.0100", "+14155550100"),
        ("+0123456789", None),  # leading zero country code
        ("+123", None),  # too short
        ("+123456789012345678", None),  # too long
        ("hello", None),
        ("", None),
    ],
)
def test_normalize_phone(raw, expected):
    assert normalize_phone(raw) == expected


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=30))
def test_normalize_phone_idempotent(raw):
    normalized = normalize_phone(raw)
    if normalized is not None:
        assert normalize_phone(normalized) == normalized


# ---------------------------------------------------------------------------
# Ingest


def test_ingest_accepts_and_rejects():
    result = ingest_contacts(CSV, "camp1")
    assert [c.first_name for c in result.contacts] == ["Ana", "Luis", "Maya"]
    reasons = [r.reason for r in result.rejected]
    assert any("duplicate phone" in r for r in reasons)
    assert any("missing first_name" in r for r in reasons)
    assert any("malformed phone" in r for r in reasons)
    assert any("unknown timezone" in r for r in reasons)
    # Maya's parenthesized number normalizes once prefixed correctly.
    maya = result.contacts[2]
    assert maya.phone == "+14155550100"


def test_ingest_tokens_are_deterministic_sha256_prefixes():
    result = ingest_contacts(CSV, "camp1")
    for contact in result.contacts:
        digest = hashlib.sha256(f"camp1:{contact.phone}".encode()).hexdigest()
        assert contact.link_token == digest[:16]
    again = ingest_contacts(CSV, "camp1")
    assert [c.link_token for c in again.contacts] == [c.link_token for c in result.contacts]
    other = ingest_contacts(CSV, "camp2")
    assert [c.link_token for c in other.contacts] != [c.link_token for c in result.contacts]


def test_ingest_empty_warns():
    result = ingest_contacts("first_name,phone,timezone\n", "camp1")
    assert result.contacts == []
    assert result.warnings


# ---------------------------------------------------------------------------
# Invites


def test_invites_carry_both_links_and_ai_disclosure():
    campaign = make_campaign()
    outbox = Outbox()
    bodies = generate_invites(campaign, outbox, language="en")
    assert len(bodies) == len(campaign.contacts) == len(outbox.messages)
    for contact, body in zip(campaign.contacts, bodies):
        assert f"https://survey.example/call/{contact.link_token}" in body
        assert f"https://survey.example/schedule/{contact.link_token}" in body
        assert "talking to an AI" in body


# ---------------------------------------------------------------------------
# Dial windows and scheduling


def test_dial_window_parse():
    window = DialWindow.parse("09:30-17:00")
    assert window.start == time(9, 30)
    assert window.end == time(17, 0)


@pytest.mark.parametrize("spec", ["12:00-09:00", "12:00", "25:00-26:00", "a-b"])
def test_dial_window_parse_rejects(spec):
    with pytest.raises(OutreachError):
        DialWindow.parse(spec)


def _utc_ms(dt: datetime) -> int:
    return int(dt.astimezone(timezone.utc).timestamp() * 1000)


def test_schedule_call_converts_local_slot_to_utc():
    campaign = make_campaign()
    contact = campaign.contacts[0]  # America/Lima, UTC-5 year-round
    window = DialWindow.parse("10:00-12:00")
    now_ms = _utc_ms(datetime(2026, 8, 24, 0, 0, tzinfo=timezone.utc))
    attempt = schedule_call(
        campaign, contact.link_token, contact.phone, contact.timezone,
        date(2026, 8, 25), window, now_ms,
    )
    expected = _utc_ms(datetime(2026, 8, 25, 10, 0, tzinfo=ZoneInfo("America/Lima")))
    assert attempt.scheduled_at == expected
    assert attempt.method is Method.SCHEDULED_CALL


def test_schedule_call_rejects_past_slot():
    campaign = make_campaign()
    contact = campaign.contacts[0]
    window = DialWindow.parse("10:00-12:00")
    late = _utc_ms(datetime(2026, 8, 26, 0, 0, tzinfo=timezone.utc))
    with pytest.raises(OutreachError, match="slot in past"):
        schedule_call(
            campaign, contact.link_token, contact.phone, contact.timezone,
            date(2026, 8, 25), window, late,
        )


def test_schedule_call_rejects_unknown_token():
    campaign = make_campaign()
    with pytest.raises(OutreachError, match="unknown token"):
        schedule_call(
            campaign, "deadbeef", "+51911111111", "America/Lima",
            date(2026, 8, 25), DialWindow.parse("10:00-12:00"), 0,
        )


def test_schedule_call_persists_edited_phone_and_timezone():
    campaign = make_campaign()
    token = campaign.contacts[0].link_token
    schedule_call(
        campaign, token, "+51 933 333 333", "America/Bogota",
        date(2026, 8, 25), DialWindow.parse("10:00-12:00"), 0,
    )
    updated = campaign.contact_by_token(token)
    assert updated.phone == "+51933333333"
    assert updated.timezone == "America/Bogota"


def test_next_window_instant_same_day_and_rollover():
    windows = [DialWindow.parse("09:00-12:00")]
    lima = ZoneInfo("America/Lima")
    inside = _utc_ms(datetime(2026, 8, 24, 10, 30, tzinfo=lima))
    assert next_window_instant(windows, "America/Lima", inside) == inside
    before = _utc_ms(datetime(2026, 8, 24, 7, 0, tzinfo=lima))
    assert next_window_instant(windows, "America/Lima", before) == _utc_ms(
        datetime(2026, 8, 24, 9, 0, tzinfo=lima)
    )
    after = _utc_ms(datetime(2026, 8, 24, 13, 0, tzinfo=lima))
    assert next_window_instant(windows, "America/Lima", after) == _utc_ms(
        datetime(2026, 8, 25, 9, 0, tzinfo=lima)
    )


def test_plan_dial_queue_sets_primer_and_sorts():
    campaign = make_campaign()
    now_ms = _utc_ms(datetime(2026, 8, 24, 2, 0, tzinfo=timezone.utc))
    attempts = plan_dial_queue(campaign, now_ms)
    assert len(attempts) == len(campaign.contacts)
    assert attempts == sorted(attempts, key=lambda a: (a.scheduled_at, a.contact_id))
    for attempt in attempts:
        assert attempt.primer_at == attempt.scheduled_at - campaign.primer_lead_days * 86_400_000


def test_plan_dial_queue_skips_completed_contacts():
    campaign = make_campaign()
    done = {campaign.contacts[0].contact_id}
    attempts = plan_dial_queue(campaign, 0, completed_contact_ids=done)
    assert {a.contact_id for a in attempts} == {
        c.contact_id for c in campaign.contacts[1:]
    }


def test_plan_dial_queue_requires_windows():
    campaign = make_campaign(dial_windows=[])
    with pytest.raises(OutreachError):
        plan_dial_queue(campaign, 0)


def test_send_primers_addresses_contacts():
    campaign = make_campaign()
    attempts = plan_dial_queue(campaign, 0)
    outbox = Outbox()
    send_primers(campaign, attempts, outbox)
    assert len(outbox.messages) == len(attempts)
    for message, attempt in zip(outbox.messages, attempts):
        assert message["channel"] == "sms"
        assert message["ts"] == attempt.primer_at
        assert "+51999999999" in message["body"]


# ---------------------------------------------------------------------------
# Voicemail and inbound matching


def test_voicemail_single_deposit():
    campaign = make_campaign()
    attempt = OutreachAttempt("a1", campaign.contacts[0].contact_id, Method.DIRECT_CALL, 0)
    outbox = Outbox()
    handle_no_answer(campaign, attempt, outbox, "voicemail text", 10)
    handle_no_answer(campaign, attempt, outbox, "voicemail text", 20)
    assert attempt.disposition is Disposition.NO_ANSWER_VOICEMAIL_LEFT
    assert len(outbox.messages) == 1
    assert outbox.messages[0]["channel"] == "voicemail"


def test_voicemail_requires_direct_call():
    campaign = make_campaign()
    attempt = OutreachAttempt("a1", campaign.contacts[0].contact_id, Method.WEBCALL_INVITE, 0)
    with pytest.raises(OutreachError):
        handle_no_answer(campaign, attempt, Outbox(), "text", 0)


def test_match_inbound_normalizes_caller_id():
    campaign = make_campaign()
    assert match_inbound(campaign, "+51 912-345-678") == campaign.contacts[0]
    assert match_inbound(campaign, "+51900000000") is None
    assert match_inbound(campaign, None) is None
    assert match_inbound(campaign, "not a number") is None


def test_outbox_jsonl_round_trip(tmp_path):
    import json

    outbox = Outbox()
    outbox.send(1, "sms", "+51911111111", "hola")
    outbox.send(2, "voicemail", "+51922222222", "hello")
    path = tmp_path / "outbox.jsonl"
    outbox.write_jsonl(path)
    lines = [json.loads(l) for l in path.read_text(encoding="utf-8").splitlines()]
    assert lines == outbox.messages
