"""Content-addressed append-only store.

Payloads live as flat files keyed by their SHA-256 digest; an index log
records one line per write with the record kind and the ids it
references. Nothing is ever overwritten or deleted: putting the same
bytes twice is a no-op that returns the existing key, and a changed
record (a task transition, an edited graph) is simply a new payload
with a new key. State views are rebuilt by replaying the index.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from ..canonical import canonical_text, loads_document
from ..errors import NotFound, SkgError

KINDS = ("case", "graph", "trace", "bench", "report", "task")


class DigestMismatch(SkgError):
    """Stored bytes no longer hash to their key (corruption)."""


@dataclass(frozen=True)
class StoreRecord:
    key: str
    kind: str
    payload: bytes
    written_at: str


@dataclass(frozen=True)
class IndexEntry:
    seq: int
    key: str
    kind: str
    written_at: str
    refs: tuple[str, ...]


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class ContentStore:
    def __init__(self, root):
        self.root = Path(root)
        self.objects = self.root / "objects"
        self.index_path = self.root / "index.log"
        self.assets = self.root / "assets"
        self.objects.mkdir(parents=True, exist_ok=True)
        self.assets.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._entries: list[IndexEntry] = []
        self._kinds: dict[str, str] = {}
        self._load_index()

    def _load_index(self):
        if not self.index_path.exists():
            return
        with self.index_path.open(encoding="utf-8") as fp:
            for line in fp:
                line = line.strip()
                if not line:
                    continue
                doc = loads_document(line)
                entry = IndexEntry(
                    seq=doc["seq"],
                    key=doc["key"],
                    kind=doc["kind"],
                    written_at=doc["written_at"],
                    refs=tuple(doc.get("refs", [])),
                )
                self._entries.append(entry)
                self._kinds[entry.key] = entry.kind

    def put(self, payload: bytes, kind: str, refs=()) -> str:
        """Store bytes; idempotent for identical payloads."""
        if kind not in KINDS:
            raise ValueError(f"unknown record kind {kind!r}")
        key = hashlib.sha256(payload).hexdigest()
        with self._lock:
            path = self.objects / key
            if path.exists():
                return key
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(payload)
            tmp.rename(path)
            entry = IndexEntry(
                seq=len(self._entries),
                key=key,
                kind=kind,
                written_at=_now(),
                refs=tuple(refs),
            )
            with self.index_path.open("a", encoding="utf-8") as fp:
                fp.write(
                    canonical_text(
                        {
                            "seq": entry.seq,
                            "key": entry.key,
                            "kind": entry.kind,
                            "written_at": entry.written_at,
                            "refs": list(entry.refs),
                        }
                    )
                )
                fp.write("\n")
            self._entries.append(entry)
            self._kinds[key] = kind
        return key

    def get(self, key: str) -> StoreRecord:
        path = self.objects / key
        if not path.exists():
            raise NotFound(f"no record with key {key}")
        payload = path.read_bytes()
        if hashlib.sha256(payload).hexdigest() != key:
            raise DigestMismatch(f"record {key} fails digest recomputation")
        kind = self._kinds.get(key, "")
        written = next((e.written_at for e in self._entries if e.key == key), "")
        return StoreRecord(key=key, kind=kind, payload=payload, written_at=written)

    def exists(self, key: str) -> bool:
        return (self.objects / key).exists()

    def entries(self, kind: str | None = None, ref: str | None = None) -> list[IndexEntry]:
        """Index entries in write order, optionally filtered."""
        out = self._entries
        if kind is not None:
            out = [e for e in out if e.kind == kind]
        if ref is not None:
            out = [e for e in out if ref in e.refs]
        return list(out)

    def latest_by_ref(self, kind: str, ref: str) -> StoreRecord | None:
        entries = self.entries(kind=kind, ref=ref)
        if not entries:
            return None
        return self.get(entries[-1].key)

    def __len__(self) -> int:
        return len(self._entries)

    # -- asset sidecar files (raw evidence bytes, keyed by integrity hash) --

    def put_asset(self, payload: bytes) -> str:
        digest = hashlib.sha256(payload).hexdigest()
        path = self.assets / digest
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(payload)
            tmp.rename(path)
        return digest

    def get_asset(self, digest: str) -> bytes:
        path = self.assets / digest
        if not path.exists():
            raise NotFound(f"no asset {digest}")
        return path.read_bytes()
