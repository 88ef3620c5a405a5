"""Campaign lifecycle: contacts, invites, scheduling, dial queues, voicemail.

Message delivery is stubbed to an outbox (JSONL); real provider clients sit
behind the same rendering. Phone numbers are normalized to E.164 on the way
in so inbound caller-id matching is a plain lookup.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from enum import Enum
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError


class OutreachError(Exception):
    pass


# ---------------------------------------------------------------------------
# Phone normalization

_E164_RE = re.compile(r"^\+[1-9]\d{7,14}$")


def normalize_phone(raw: str) -> str | None:
    """E.164-normalized number, or None when the input can't be one."""
    cleaned = re.sub(r"[\s().\-]", "", raw.strip())
    if cleaned.startswith("00"):
        cleaned = "+" + cleaned[2:]
    if _E164_RE.match(cleaned):
        return cleaned
    return None


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class Contact:
    contact_id: str
    first_name: str
    phone: str  # E.164
    timezone: str  # IANA name
    link_token: str


class Method(str, Enum):
    WEBCALL_INVITE = "webcall_invite"
    SCHEDULED_CALL = "scheduled_call"
    DIRECT_CALL = "direct_call"
    INBOUND_CALLBACK = "inbound_callback"


class Disposition(str, Enum):
    PENDING = "pending"
    CONNECTED = "connected"
    NO_ANSWER_VOICEMAIL_LEFT = "no_answer_voicemail_left"
    NOT_CLICKED_THROUGH = "not_clicked_through"
    DECLINED = "declined"


@dataclass
class OutreachAttempt:
    attempt_id: str
    contact_id: str
    method: Method
    scheduled_at: int  # unix ms, UTC
    disposition: Disposition = Disposition.PENDING
    session_id: str | None = None
    primer_at: int | None = None


@dataclass(frozen=True)
class DialWindow:
    start: time  # contact-local
    end: time

    @staticmethod
    def parse(spec: str) -> "DialWindow":
        try:
            start_s, end_s = spec.split("-")
            start = time.fromisoformat(start_s.strip())
            end = time.fromisoformat(end_s.strip())
        except ValueError as exc:
            raise OutreachError(f"bad dial window {spec!r}: {exc}") from exc
        if start >= end:
            raise OutreachError(f"dial window start must precede end: {spec!r}")
        return DialWindow(start, end)


@dataclass
class Campaign:
    campaign_id: str
    questionnaire_id: str
    contacts: list[Contact] = field(default_factory=list)
    dial_windows: list[DialWindow] = field(default_factory=list)
    primer_lead_days: int = 1
    methods: set[Method] = field(
        default_factory=lambda: {Method.WEBCALL_INVITE, Method.SCHEDULED_CALL, Method.DIRECT_CALL}
    )
    callback_number: str = ""
    base_url: str = ""

    def contact_by_token(self, token: str) -> Contact | None:
        for contact in self.contacts:
            if contact.link_token == token:
                return contact
        return None


@dataclass(frozen=True)
class RejectedRow:
    line_no: int
    row: dict
    reason: str


@dataclass(frozen=True)
class IngestResult:
    contacts: list[Contact]
    rejected: list[RejectedRow]
    warnings: list[str]


def _token_for(campaign_id: str, phone: str) -> str:
    digest = hashlib.sha256(f"{campaign_id}:{phone}".encode()).digest()
    # URL-safe, short enough for SMS, deterministic for reproducible runs.
    return digest.hex()[:16]


def ingest_contacts(csv_text: str, campaign_id: str) -> IngestResult:
    """Parse a contacts CSV (header: first_name,phone,timezone)."""
    reader = csv.DictReader(io.StringIO(csv_text))
    contacts: list[Contact] = []
    rejected: list[RejectedRow] = []
    warnings: list[str] = []
    seen_phones: set[str] = set()
    rows = list(reader)
    if not rows:
        warnings.append("no contact rows in input")
    for i, row in enumerate(rows, start=2):  # header is line 1
        first_name = (row.get("first_name") or "").strip()
        phone = normalize_phone(row.get("phone") or "")
        tz_name = (row.get("timezone") or "").strip()
        if not first_name:
            rejected.append(RejectedRow(i, row, "missing first_name"))
            continue
        if phone is None:
            rejected.append(RejectedRow(i, row, f"malformed phone {row.get('phone')!r}"))
            continue
        if phone in seen_phones:
            rejected.append(RejectedRow(i, row, f"duplicate phone {phone}"))
            continue
        try:
            ZoneInfo(tz_name)
        except (ZoneInfoNotFoundError, ValueError, KeyError):
            rejected.append(RejectedRow(i, row, f"unknown timezone {tz_name!r}"))
            continue
        seen_phones.add(phone)
        contacts.append(
            Contact(
                contact_id=f"c{len(contacts) + 1:04d}",
                first_name=first_name,
                phone=phone,
                timezone=tz_name,
                link_token=_token_for(campaign_id, phone),
            )
        )
    return IngestResult(contacts, rejected, warnings)


# ---------------------------------------------------------------------------
# Outbox


@dataclass
class Outbox:
    """Delivery stub: every rendered message is appended here."""

    messages: list[dict] = field(default_factory=list)

    def send(self, ts_ms: int, channel: str, to: str, body: str) -> None:
        self.messages.append({"ts": ts_ms, "channel": channel, "to": to, "body": body})

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for msg in self.messages:
                fh.write(json.dumps(msg, ensure_ascii=False, sort_keys=True) + "\n")


INVITE_TEMPLATE = {
    "en": (
        "Hi {first_name}! {client_hint}We'd love your feedback in a short survey. "
        "You would be talking to an AI interviewer. "
        "Start a call right in your browser: {base_url}/call/{token} "
        "or schedule a call for later: {base_url}/schedule/{token}"
    ),
    "es": (
        "Hola {first_name}. {client_hint}Nos encantaría conocer tu opinión en una "
        "encuesta corta. Estarías hablando con un entrevistador de inteligencia "
        "artificial (talking to an AI). "
        "Inicia una llamada en tu navegador: {base_url}/call/{token} "
        "o agenda una llamada para más tarde: {base_url}/schedule/{token}"
    ),
}

PRIMER_TEMPLATE = {
    "en": (
        "Hi {first_name}, tomorrow you will receive a call from {callback_number} "
        "to give feedback. Thanks!"
    ),
    "es": (
        "Hola {first_name}, mañana recibirás una llamada del número "
        "{callback_number} para dar tu opinión. ¡Gracias!"
    ),
}


def generate_invites(
    campaign: Campaign, outbox: Outbox, language: str = "en", ts_ms: int = 0
) -> list[str]:
    """Render the two-link WhatsApp invite per contact into the outbox."""
    lang = language.split("-")[0].lower()
    template = INVITE_TEMPLATE.get(lang, INVITE_TEMPLATE["en"])
    bodies = []
    for contact in campaign.contacts:
        body = template.format(
            first_name=contact.first_name,
            client_hint="",
            base_url=campaign.base_url,
            token=contact.link_token,
        )
        outbox.send(ts_ms, "whatsapp", contact.phone, body)
        bodies.append(body)
    return bodies


# ---------------------------------------------------------------------------
# Scheduling and dial planning


def _to_utc_ms(dt: datetime) -> int:
    return int(dt.astimezone(timezone.utc).timestamp() * 1000)


def schedule_call(
    campaign: Campaign,
    token: str,
    phone: str,
    tz_name: str,
    slot_date: date,
    window: DialWindow,
    now_ms: int,
) -> OutreachAttempt:
    """Create a scheduled-call attempt at the slot start (UTC-converted)."""
    contact = campaign.contact_by_token(token)
    if contact is None:
        raise OutreachError("unknown token")
    normalized = normalize_phone(phone)
    if normalized is None:
        raise OutreachError(f"malformed phone {phone!r}")
    try:
        tz = ZoneInfo(tz_name)
    except (ZoneInfoNotFoundError, ValueError, KeyError):
        raise OutreachError(f"unknown timezone {tz_name!r}") from None
    start_local = datetime.combine(slot_date, window.start, tzinfo=tz)
    scheduled_at = _to_utc_ms(start_local)
    if scheduled_at <= now_ms:
        raise OutreachError("slot in past")
    if normalized != contact.phone or tz_name != contact.timezone:
        # Prefilled values are editable; persist the corrections.
        idx = campaign.contacts.index(contact)
        contact = Contact(
            contact.contact_id, contact.first_name, normalized, tz_name, contact.link_token
        )
        campaign.contacts[idx] = contact
    return OutreachAttempt(
        attempt_id=f"sched-{token}",
        contact_id=contact.contact_id,
        method=Method.SCHEDULED_CALL,
        scheduled_at=scheduled_at,
    )


def next_window_instant(
    windows: list[DialWindow], tz_name: str, now_ms: int
) -> int:
    """Earliest instant >= now inside any dial window, contact-local."""
    tz = ZoneInfo(tz_name)
    now_local = datetime.fromtimestamp(now_ms / 1000, tz)
    for day_offset in range(0, 8):
        day = now_local.date() + timedelta(days=day_offset)
        candidates = []
        for window in sorted(windows, key=lambda w: w.start):
            start = datetime.combine(day, window.start, tzinfo=tz)
            end = datetime.combine(day, window.end, tzinfo=tz)
            if now_local >= end:
                continue
            candidates.append(max(start, now_local))
        if candidates:
            return _to_utc_ms(min(candidates))
    raise OutreachError("no dial window found within 8 days")


def plan_dial_queue(
    campaign: Campaign,
    now_ms: int,
    completed_contact_ids: set[str] | None = None,
) -> list[OutreachAttempt]:
    """Direct-call attempts at each contact's earliest in-window instant."""
    if Method.DIRECT_CALL not in campaign.methods:
        raise OutreachError("direct calls not enabled for this campaign")
    if not campaign.dial_windows:
        raise OutreachError("direct calls require at least one dial window")
    completed = completed_contact_ids or set()
    attempts = []
    for contact in campaign.contacts:
        if contact.contact_id in completed:
            continue
        at = next_window_instant(campaign.dial_windows, contact.timezone, now_ms)
        attempts.append(
            OutreachAttempt(
                attempt_id=f"dial-{contact.contact_id}",
                contact_id=contact.contact_id,
                method=Method.DIRECT_CALL,
                scheduled_at=at,
                primer_at=at - campaign.primer_lead_days * 86_400_000,
            )
        )
    attempts.sort(key=lambda a: (a.scheduled_at, a.contact_id))
    return attempts


def send_primers(
    campaign: Campaign, attempts: list[OutreachAttempt], outbox: Outbox, language: str = "en"
) -> None:
    lang = language.split("-")[0].lower()
    template = PRIMER_TEMPLATE.get(lang, PRIMER_TEMPLATE["en"])
    contacts = {c.contact_id: c for c in campaign.contacts}
    for attempt in attempts:
        if attempt.primer_at is None:
            continue
        contact = contacts[attempt.contact_id]
        outbox.send(
            attempt.primer_at,
            "sms",
            contact.phone,
            template.format(
                first_name=contact.first_name, callback_number=campaign.callback_number
            ),
        )


# ---------------------------------------------------------------------------
# No-answer and inbound handling


def handle_no_answer(
    campaign: Campaign,
    attempt: OutreachAttempt,
    outbox: Outbox,
    voicemail_text: str,
    ts_ms: int,
) -> OutreachAttempt:
    """Mark no-pickup and deposit exactly one voicemail for this attempt."""
    if attempt.method is not Method.DIRECT_CALL:
        raise OutreachError("voicemail applies to direct calls only")
    if attempt.disposition is Disposition.NO_ANSWER_VOICEMAIL_LEFT:
        return attempt  # single deposit per attempt
    contact = next(c for c in campaign.contacts if c.contact_id == attempt.contact_id)
    attempt.disposition = Disposition.NO_ANSWER_VOICEMAIL_LEFT
    outbox.send(ts_ms, "voicemail", contact.phone, voicemail_text)
    return attempt


def match_inbound(campaign: Campaign, caller_number: str | None) -> Contact | None:
    """Known contact for a callback, or None for an unknown caller."""
    if not caller_number:
        return None
    normalized = normalize_phone(caller_number)
    if normalized is None:
        return None
    for contact in campaign.contacts:
        if contact.phone == normalized:
            return contact
    return None
