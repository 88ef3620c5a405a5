"""Event-sourced persistence: append-only JSONL per session plus campaign
documents. Crash recovery replays a session's inbound records through the
same transition functions to an identical state."""

from __future__ import annotations

import json
from pathlib import Path


class SessionStore:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        self.sessions_dir = self.root / "sessions"
        self.campaigns_dir = self.root / "campaigns"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self.campaigns_dir.mkdir(parents=True, exist_ok=True)

    # -- session logs (write-ahead, append-only)

    def _session_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.jsonl"

    def append(self, session_id: str, record: dict) -> None:
        with open(self._session_path(session_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()

    def load_records(self, session_id: str) -> list[dict]:
        path = self._session_path(session_id)
        if not path.exists():
            return []
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def session_exists(self, session_id: str) -> bool:
        return self._session_path(session_id).exists() or self._meta_path(session_id).exists()

    def list_sessions(self) -> list[str]:
        return sorted(p.stem for p in self.sessions_dir.glob("*.jsonl"))

    # -- session metadata (who/what the session is bound to)

    def _meta_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.meta.json"

    def save_meta(self, session_id: str, meta: dict) -> None:
        with open(self._meta_path(session_id), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, ensure_ascii=False, sort_keys=True)

    def load_meta(self, session_id: str) -> dict | None:
        path = self._meta_path(session_id)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    # -- campaign documents

    def campaign_dir(self, campaign_id: str) -> Path:
        return self.campaigns_dir / campaign_id

    def save_campaign(self, campaign_id: str, doc: dict) -> None:
        cdir = self.campaign_dir(campaign_id)
        cdir.mkdir(parents=True, exist_ok=True)
        with open(cdir / "campaign.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, ensure_ascii=False, sort_keys=True, indent=2)

    def load_campaign(self, campaign_id: str) -> dict | None:
        path = self.campaign_dir(campaign_id) / "campaign.json"
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    def list_campaigns(self) -> list[str]:
        return sorted(p.name for p in self.campaigns_dir.iterdir() if p.is_dir())
