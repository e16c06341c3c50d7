"""Append-only history documents with attribute promotion and a change feed."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .errors import (
    ConflictingAttribute,
    CorruptLog,
    DuplicateEventName,
    DuplicateHistoryId,
    InvalidEvent,
    LedgerError,
    NonMonotonicTime,
    UnknownHistory,
)

Scalar = Union[str, int, float, bool]
BY, TIME = "$by", "$time"


def _check_scalar(key: str, value) -> None:
    if not isinstance(value, (str, int, float, bool)):
        raise InvalidEvent(f"attribute {key!r} must be a scalar, got {type(value).__name__}")


def _check_key(key: str) -> None:
    if not isinstance(key, str) or not key or key[0] in "$_":
        raise InvalidEvent(f"invalid attribute name {key!r}")


@dataclass(frozen=True)
class EventRecord:
    name: str
    by: str
    time: int
    attrs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name or self.name[0] in "$_":
            raise InvalidEvent(f"invalid event name {self.name!r}")
        if not isinstance(self.by, str) or not self.by:
            raise InvalidEvent(f"event {self.name} needs a reporting agent")
        if isinstance(self.time, bool) or not isinstance(self.time, int) or self.time < 0:
            raise InvalidEvent(f"event {self.name} needs a non-negative integer time")
        for k, v in self.attrs.items():
            _check_key(k)
            _check_scalar(k, v)

    def to_json(self) -> dict:
        return {BY: self.by, **self.attrs, TIME: self.time}

    @classmethod
    def from_json(cls, name: str, body: dict) -> "EventRecord":
        if not isinstance(body, dict) or BY not in body or TIME not in body:
            raise InvalidEvent(f"event {name!r} must carry {BY} and {TIME}")
        attrs = {k: v for k, v in body.items() if k not in (BY, TIME)}
        return cls(name, body[BY], body[TIME], attrs)


@dataclass(frozen=True)
class HistoryDoc:
    """Immutable snapshot of one history; updates produce a new instance."""

    id: str
    attrs: dict
    events: dict
    seq: int = 0

    def max_time(self) -> Optional[int]:
        return max((e.time for e in self.events.values()), default=None)

    def to_json(self) -> dict:
        doc = {"_id": self.id, **self.attrs}
        for name, ev in self.events.items():
            doc[name] = ev.to_json()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "HistoryDoc":
        attrs, events = {}, {}
        for k, v in doc.items():
            if k.startswith("_"):
                continue
            if isinstance(v, dict):
                events[k] = EventRecord.from_json(k, v)
            else:
                attrs[k] = v
        return cls(str(doc.get("_id", "")), attrs, events, len(events))


@dataclass(frozen=True)
class ChangeFeedEntry:
    seq: int
    history_id: str
    event_name: Optional[str]


class LedgerStore:
    """A set of mutually independent histories.

    Writes are serialized by an internal lock; readers get immutable
    :class:`HistoryDoc` snapshots and may run concurrently.
    """

    def __init__(self):
        self._docs: dict[str, HistoryDoc] = {}
        self._feed: list[ChangeFeedEntry] = []
        self._log: list[dict] = []
        self._headers: dict[str, dict] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._docs)

    def __contains__(self, history_id: str) -> bool:
        return history_id in self._docs

    @property
    def seq(self) -> int:
        return len(self._feed)

    def get(self, history_id: str) -> HistoryDoc:
        try:
            return self._docs[history_id]
        except KeyError:
            raise UnknownHistory(f"no history {history_id!r}") from None

    def ids(self) -> list[str]:
        return list(self._docs)

    def docs(self) -> list[HistoryDoc]:
        return list(self._docs.values())

    def create_history(
        self,
        history_id: str,
        roles: Optional[dict] = None,
        attrs: Optional[dict] = None,
    ) -> HistoryDoc:
        if not isinstance(history_id, str) or not history_id:
            raise InvalidEvent("history id must be a non-empty string")
        merged: dict = {}
        for source in (roles or {}, attrs or {}):
            for k, v in source.items():
                _check_key(k)
                _check_scalar(k, v)
                if k in merged and merged[k] != v:
                    raise ConflictingAttribute(k, merged[k], v)
                merged[k] = v
        with self._lock:
            if history_id in self._docs:
                raise DuplicateHistoryId(f"history {history_id!r} already exists")
            doc = HistoryDoc(history_id, merged, {}, 0)
            self._docs[history_id] = doc
            self._headers[history_id] = merged
            self._feed.append(ChangeFeedEntry(len(self._feed) + 1, history_id, None))
            self._log.append({"create": doc.to_json()})
            return doc

    def submit_event(self, history_id: str, ev: EventRecord) -> HistoryDoc:
        with self._lock:
            doc = self._docs.get(history_id)
            if doc is None:
                raise UnknownHistory(f"no history {history_id!r}")
            if ev.name in doc.events:
                raise DuplicateEventName(f"history {history_id!r} already has a {ev.name} event")
            if ev.name in doc.attrs:
                raise ConflictingAttribute(ev.name, doc.attrs[ev.name], "<event>")
            promoted = {}
            for k, v in ev.attrs.items():
                if k in doc.events:
                    raise ConflictingAttribute(k, "<event>", v)
                if k in doc.attrs:
                    if doc.attrs[k] != v:
                        raise ConflictingAttribute(k, doc.attrs[k], v)
                else:
                    promoted[k] = v
            latest = doc.max_time()
            if latest is not None and ev.time <= latest:
                raise NonMonotonicTime(
                    f"event {ev.name} at time {ev.time} is not after {latest} in {history_id!r}"
                )
            new = HistoryDoc(
                doc.id,
                {**doc.attrs, **promoted},
                {**doc.events, ev.name: ev},
                doc.seq + 1,
            )
            self._docs[history_id] = new
            self._feed.append(ChangeFeedEntry(len(self._feed) + 1, history_id, ev.name))
            self._log.append({"event": {"historyId": history_id, ev.name: ev.to_json()}})
            return new

    def changes_since(self, seq: int) -> list[ChangeFeedEntry]:
        if seq < 0 or seq > len(self._feed):
            raise ValueError(f"sequence {seq} outside 0..{len(self._feed)}")
        return self._feed[seq:]

    # -- persistence --

    def log_lines(self, since: int = 0) -> Iterable[str]:
        for record in self._log[since:]:
            yield json.dumps(record, ensure_ascii=False)

    def persist(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.log_lines():
                fh.write(line + "\n")

    def append_to(self, path, since: int) -> None:
        """Append log records after feed position ``since`` to an existing file."""
        with open(path, "a", encoding="utf-8") as fh:
            for line in self.log_lines(since):
                fh.write(line + "\n")

    def apply_record(self, record: dict) -> None:
        if not isinstance(record, dict) or len(record) != 1:
            raise InvalidEvent("record must be an object with one key")
        if "create" in record:
            header = dict(record["create"])
            history_id = header.pop("_id", None)
            self.create_history(history_id, attrs=header)
        elif "event" in record:
            body = dict(record["event"])
            history_id = body.pop("historyId", None)
            if len(body) != 1:
                raise InvalidEvent("event record must hold exactly one event")
            (name, ev), = body.items()
            self.submit_event(history_id, EventRecord.from_json(name, ev))
        else:
            raise InvalidEvent(f"unknown record type {next(iter(record))!r}")

    @classmethod
    def load(cls, path) -> "LedgerStore":
        store = cls()
        path = Path(path)
        if not path.exists():
            return store
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    store.apply_record(record)
                except (json.JSONDecodeError, LedgerError, TypeError, AttributeError) as exc:
                    raise CorruptLog(line_no, str(exc)) from exc
        return store

    @classmethod
    def replay(cls, source: "LedgerStore") -> "LedgerStore":
        """Rebuild a store by applying ``source``'s change feed to an empty one."""
        store = cls()
        for entry in source.changes_since(0):
            if entry.event_name is None:
                store.create_history(entry.history_id, attrs=source._headers[entry.history_id])
            else:
                ev = source.get(entry.history_id).events[entry.event_name]
                store.submit_event(entry.history_id, ev)
        return store
