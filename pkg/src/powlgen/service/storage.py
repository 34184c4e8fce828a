"""On-disk session persistence: one JSON file per session, atomic writes."""

from __future__ import annotations

import json
import os
import threading
import uuid
from pathlib import Path


class SessionStore:
    """Session records as individual JSON files in a data directory.

    Writes go through a temp file in the same directory followed by an atomic
    rename, so a crash never leaves a truncated record. File IO is serialized
    by a short-lived store lock; long operations (provider calls) must use the
    per-session operation lock instead and never hold the IO lock.
    """

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._io_lock = threading.Lock()
        self._registry_lock = threading.Lock()
        self._op_locks: dict[str, threading.Lock] = {}

    def path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.json"

    def new_id(self) -> str:
        while True:
            session_id = uuid.uuid4().hex[:12]
            if not self.path(session_id).exists():
                return session_id

    def operation_lock(self, session_id: str) -> threading.Lock:
        """The lock serializing all mutating operations on one session."""
        with self._registry_lock:
            return self._op_locks.setdefault(session_id, threading.Lock())

    def exists(self, session_id: str) -> bool:
        return self.path(session_id).exists()

    def save(self, session_id: str, record: dict) -> None:
        target = self.path(session_id)
        tmp = target.with_suffix(".json.tmp")
        with self._io_lock:
            with tmp.open("w", encoding="utf-8") as handle:
                json.dump(record, handle, indent=2)
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(tmp, target)

    def load(self, session_id: str) -> dict | None:
        target = self.path(session_id)
        with self._io_lock:
            if not target.exists():
                return None
            return json.loads(target.read_text(encoding="utf-8"))

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.data_dir.glob("*.json"))
