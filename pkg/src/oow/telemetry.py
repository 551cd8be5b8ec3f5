"""Append-only session event log and the ten performance measures.

Logs are JSON Lines (`*.session.jsonl`), one event per line, schema
version 1. Event kinds and their payload fields:

    trial_start   config (TrialConfig dict), schema
    collision     body_a, body_b
    grapple       dist, angle, quality
    dock          dist, angle, quality
    camera_switch index
    latch         (no payload)
    unlatch       (no payload)
    trial_end     reason (docked|timeout|disconnect|aborted), final_score

Every event carries `time` (seconds from trial start, non-decreasing).
"""
from __future__ import annotations

from dataclasses import dataclass, field
import json
import math
from pathlib import Path
from typing import IO

from .mission import (COLLISION_PENALTY, START_POINTS, TIME_PENALTY,
                      TIME_PENALTY_PERIOD, TrialConfig)

SCHEMA_VERSION = 1

EVENT_KINDS = ("trial_start", "collision", "grapple", "dock", "camera_switch",
               "latch", "unlatch", "trial_end")

_REQUIRED_FIELDS = {
    "trial_start": ("config",),
    "collision": ("body_a", "body_b"),
    "grapple": ("dist", "angle", "quality"),
    "dock": ("dist", "angle", "quality"),
    "camera_switch": ("index",),
    "latch": (),
    "unlatch": (),
    "trial_end": ("reason", "final_score"),
}


class LogError(ValueError):
    """Ordering or lifecycle violation while appending."""


class LogParseError(ValueError):
    """Malformed serialized log; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class SessionEvent:
    time: float
    kind: str
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        missing = [f for f in _REQUIRED_FIELDS[self.kind] if f not in self.payload]
        if missing:
            raise ValueError(f"{self.kind} event missing fields {missing}")

    def to_json(self) -> str:
        return json.dumps({"time": self.time, "kind": self.kind, **self.payload},
                          sort_keys=True)


class EventLog:
    """Single-trial append-only log, optionally flushed to a file sink."""

    def __init__(self, sink: IO[str] | None = None):
        self.events: list[SessionEvent] = []
        self._sink = sink

    def append(self, event: SessionEvent) -> "EventLog":
        if self.events:
            if event.time < self.events[-1].time:
                raise LogError(
                    f"time regression: {event.time} after {self.events[-1].time}")
            if self.events[-1].kind == "trial_end":
                raise LogError("events after trial_end")
            if event.kind == "trial_start":
                raise LogError("duplicate trial_start")
        elif event.kind != "trial_start":
            raise LogError("first event must be trial_start")
        self.events.append(event)
        if self._sink is not None:
            self._sink.write(event.to_json() + "\n")
            self._sink.flush()
        return self

    def __len__(self) -> int:
        return len(self.events)

    def __eq__(self, other) -> bool:
        return isinstance(other, EventLog) and self.events == other.events

    def __iter__(self):
        return iter(self.events)


def start_event(config: TrialConfig, time: float = 0.0) -> SessionEvent:
    return SessionEvent(time, "trial_start",
                        {"config": config.to_dict(), "schema": SCHEMA_VERSION})


def export_log(log: EventLog) -> str:
    return "".join(e.to_json() + "\n" for e in log.events)


def import_log(text: str | bytes) -> EventLog:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    log = EventLog()
    for ln, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise LogParseError(f"invalid JSON: {exc.msg}", ln) from exc
        if not isinstance(record, dict) or "kind" not in record or "time" not in record:
            raise LogParseError("record needs 'time' and 'kind'", ln)
        kind = record.pop("kind")
        time = record.pop("time")
        if kind not in EVENT_KINDS:
            raise LogParseError(f"unknown event kind {kind!r}", ln)
        try:
            log.append(SessionEvent(float(time), kind, record))
        except (ValueError, LogError) as exc:
            raise LogParseError(str(exc), ln) from exc
    if log.events and log.events[-1].kind != "trial_end":
        raise LogParseError("log truncated: missing trial_end", len(text.splitlines()))
    return log


def write_log(log: EventLog, path: str | Path) -> None:
    Path(path).write_text(export_log(log))


def read_log(path: str | Path) -> EventLog:
    return import_log(Path(path).read_text())


@dataclass
class PerformanceRecord:
    """The ten simulator-defined measures (absent subtasks stay None)."""

    grasp_time: float | None = None     # efficiency
    dock_time: float | None = None
    grasp_distance: float | None = None  # precision
    grasp_angle: float | None = None
    dock_distance: float | None = None
    dock_angle: float | None = None
    grasp_score: float | None = None    # score category
    dock_score: float | None = None
    final_score: float | None = None
    n_collisions: int = 0               # collision category

    def as_dict(self) -> dict:
        return dict(self.__dict__)

    MEASURES = ("grasp_time", "dock_time", "grasp_distance", "grasp_angle",
                "dock_distance", "dock_angle", "grasp_score", "dock_score",
                "final_score", "n_collisions")


def _score_at(time: float, collisions_so_far: int, quality_so_far: float) -> float:
    return (START_POINTS
            - TIME_PENALTY * math.floor(time / TIME_PENALTY_PERIOD)
            - COLLISION_PENALTY * collisions_so_far
            + quality_so_far)


def extract_performance(log: EventLog) -> PerformanceRecord:
    """Compute the measures from a completed trial log.

    grasp_time is measured from trial start; dock_time from the grapple.
    grasp_score is the cumulative score right after the grapple bonus;
    dock_score is the score change from grapple to dock.
    """
    if not log.events or log.events[0].kind != "trial_start":
        raise LogParseError("log does not begin with trial_start", 1)
    t0 = log.events[0].time
    rec = PerformanceRecord()
    collisions = 0
    quality = 0.0
    grapple_time = None
    score_at_grapple = None
    for ev in log.events:
        if ev.kind == "collision":
            collisions += 1
        elif ev.kind == "grapple":
            grapple_time = ev.time
            quality += ev.payload["quality"]
            rec.grasp_time = ev.time - t0
            rec.grasp_distance = ev.payload["dist"]
            rec.grasp_angle = ev.payload["angle"]
            score_at_grapple = _score_at(ev.time - t0, collisions, quality)
            rec.grasp_score = score_at_grapple
        elif ev.kind == "dock":
            quality += ev.payload["quality"]
            rec.dock_time = ev.time - grapple_time
            rec.dock_distance = ev.payload["dist"]
            rec.dock_angle = ev.payload["angle"]
            rec.dock_score = _score_at(ev.time - t0, collisions, quality) - score_at_grapple
        elif ev.kind == "trial_end":
            rec.final_score = ev.payload["final_score"]
    rec.n_collisions = collisions
    return rec


def verify_score_consistency(log: EventLog, tol: float = 1e-9) -> bool:
    """Check trial_end.final_score against the ledger recomputed from events."""
    end = next((e for e in log.events if e.kind == "trial_end"), None)
    if end is None:
        return False
    collisions = sum(1 for e in log.events if e.kind == "collision")
    quality = sum(e.payload["quality"] for e in log.events
                  if e.kind in ("grapple", "dock"))
    t0 = log.events[0].time
    expected = _score_at(end.time - t0, collisions, quality)
    return abs(expected - end.payload["final_score"]) <= tol
