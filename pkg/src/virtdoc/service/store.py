"""Durable session storage: an append-only JSON-lines journal per session
plus an index file, fsync'd before any transition is acknowledged.

Replaying a journal (last complete snapshot line wins) reproduces the exact
in-memory state, so a killed service resumes every session where it stopped.
A partially written trailing line from a crash is ignored.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from ..anamnesis import Session
from ..errors import SessionNotFoundError


def _append_fsync(path: Path, line: str) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(line + "\n")
        fh.flush()
        os.fsync(fh.fileno())


class SessionStore:
    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.sessions_dir = self.data_dir / "sessions"
        self.index_path = self.data_dir / "index.jsonl"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._global = threading.Lock()
        self._load()

    def _journal_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.jsonl"

    def _load(self) -> None:
        if not self.index_path.exists():
            return
        for raw in self.index_path.read_text(encoding="utf-8").splitlines():
            try:
                session_id = json.loads(raw)["session_id"]
            except (json.JSONDecodeError, KeyError):
                continue  # torn index write
            session = self._replay(session_id)
            if session is not None:
                self._sessions[session_id] = session

    def _replay(self, session_id: str) -> Session | None:
        path = self._journal_path(session_id)
        if not path.exists():
            return None
        last = None
        for raw in path.read_text(encoding="utf-8").splitlines():
            try:
                last = json.loads(raw)
            except json.JSONDecodeError:
                continue  # torn journal write
        return Session.from_dict(last) if last else None

    def lock(self, session_id: str) -> threading.Lock:
        """Per-session lock; inputs to one session are strictly serialized."""
        with self._global:
            if session_id not in self._locks:
                self._locks[session_id] = threading.Lock()
            return self._locks[session_id]

    def create(self, session: Session) -> None:
        with self._global:
            if session.id in self._sessions:
                raise ValueError(f"session id {session.id} already exists")
            _append_fsync(self.index_path, json.dumps({"session_id": session.id}))
            self._persist(session)

    def save(self, session: Session) -> None:
        """Journal the new state; callers hold the session lock."""
        if session.id not in self._sessions:
            raise SessionNotFoundError(f"session {session.id} not found")
        self._persist(session)

    def _persist(self, session: Session) -> None:
        _append_fsync(
            self._journal_path(session.id),
            json.dumps(session.to_dict(), sort_keys=True),
        )
        self._sessions[session.id] = session

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFoundError(f"session {session_id} not found")
        return session

    def __len__(self) -> int:
        return len(self._sessions)
