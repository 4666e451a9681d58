"""News-viewer backend: ratio-bar composition, extremeness sorting, read-event log, analytics."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

from .corpus import SIDES, TopicBundle
from .errors import IntegrityError, ParseError

# level -> (conservative count, liberal count); level 1 is most conservative
RATIO_TABLE = {1: (10, 0), 2: (7, 3), 3: (5, 5), 4: (3, 7), 5: (0, 10)}

READ_KINDS = ("thumbnail_view", "article_open", "scroll_complete")


def apply_ratio(bundle: TopicBundle, level: int) -> list[str]:
    """The 10 article ids a ratio level selects from a bundle.

    Within each side, high-band articles are taken before moderate ones;
    inside a band, higher extremeness wins and ties break by id. Output lists
    the conservative block before the liberal block.
    """
    if level not in RATIO_TABLE:
        raise ValueError(f"ratio level must be 1..5, got {level!r}")
    want = dict(zip(SIDES, RATIO_TABLE[level]))
    out: list[str] = []
    for side in SIDES:
        ranked = []
        for band in (bundle.high[side], bundle.moderate[side]):
            ranked.extend(sorted(band, key=lambda i: (-bundle.extremeness[i], i)))
        out.extend(ranked[: want[side]])
    return out


def sort_extremeness(articles, order: str = "desc"):
    """Stable sort of predicted articles by extremeness value."""
    if order not in ("asc", "desc"):
        raise ValueError(f"order must be 'asc' or 'desc', got {order!r}")
    for a in articles:
        if a.prediction is None:
            raise ValueError(f"article {a.id} has no prediction attached")
    return sorted(articles, key=lambda a: a.prediction.extremeness, reverse=(order == "desc"))


# ---------------------------------------------------------------------------
# read-event log


@dataclass(frozen=True)
class ReadEvent:
    session_id: str
    article_id: str
    topic_id: str
    timestamp_ms: int
    kind: str

    def __post_init__(self):
        if self.kind not in READ_KINDS:
            raise IntegrityError(f"unknown read-event kind {self.kind!r}")

    def to_json(self) -> dict:
        return {
            "session": self.session_id,
            "article": self.article_id,
            "topic": self.topic_id,
            "ts": self.timestamp_ms,
            "kind": self.kind,
        }

    @classmethod
    def from_json(cls, obj, line_no=None) -> "ReadEvent":
        try:
            return cls(
                session_id=str(obj["session"]),
                article_id=str(obj["article"]),
                topic_id=str(obj["topic"]),
                timestamp_ms=int(obj["ts"]),
                kind=str(obj["kind"]),
            )
        except (KeyError, TypeError, ValueError, IntegrityError) as exc:
            raise ParseError(f"bad read event: {exc}", line_no) from exc


class ReadEventLog:
    """Append-only JSONL event log, durable before acknowledgment.

    `known_articles`, when given, rejects events for articles that do not
    exist. Timestamps must be non-decreasing per session.
    """

    def __init__(self, path, known_articles=None):
        self.path = Path(path)
        self.known_articles = set(known_articles) if known_articles is not None else None
        self._last_ts: dict[str, int] = {}
        if self.path.exists():
            for ev in self.read_all():
                self._last_ts[ev.session_id] = ev.timestamp_ms

    def append(self, event: ReadEvent) -> None:
        if self.known_articles is not None and event.article_id not in self.known_articles:
            raise IntegrityError(f"unknown article {event.article_id!r}")
        last = self._last_ts.get(event.session_id)
        if last is not None and event.timestamp_ms < last:
            raise IntegrityError(
                f"session {event.session_id}: timestamp {event.timestamp_ms} precedes {last}"
            )
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event.to_json()) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._last_ts[event.session_id] = event.timestamp_ms

    def read_all(self) -> list[ReadEvent]:
        if not self.path.exists():
            return []
        events = []
        with self.path.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
                events.append(ReadEvent.from_json(obj, line_no))
        return events

    def __len__(self):
        return len(self.read_all())


# ---------------------------------------------------------------------------
# consumption analytics


@dataclass
class SessionConsumption:
    own_reads: int
    opposing_reads: int
    articles_read: int
    stance: str | None

    @property
    def ratio(self):
        total = self.own_reads + self.opposing_reads
        if total == 0:
            return None
        return (self.own_reads / total, self.opposing_reads / total)


@dataclass
class ConsumptionReport:
    per_session: dict[str, SessionConsumption]
    own_reads: int
    opposing_reads: int
    articles_read_mean: float
    articles_read_sd: float
    count_kind: str

    @property
    def undefined_ratio(self) -> bool:
        return (self.own_reads + self.opposing_reads) == 0

    @property
    def ratio(self):
        if self.undefined_ratio:
            return None
        total = self.own_reads + self.opposing_reads
        return (self.own_reads / total, self.opposing_reads / total)

    def to_json(self) -> dict:
        return {
            "count_kind": self.count_kind,
            "own_reads": self.own_reads,
            "opposing_reads": self.opposing_reads,
            "ratio": list(self.ratio) if self.ratio is not None else None,
            "undefined_ratio": self.undefined_ratio,
            "articles_read_mean": self.articles_read_mean,
            "articles_read_sd": self.articles_read_sd,
            "sessions": {
                sid: {
                    "stance": sc.stance,
                    "own_reads": sc.own_reads,
                    "opposing_reads": sc.opposing_reads,
                    "articles_read": sc.articles_read,
                    "ratio": list(sc.ratio) if sc.ratio is not None else None,
                }
                for sid, sc in sorted(self.per_session.items())
            },
        }


def consumption_report(
    events,
    session_stances: dict[str, str | None],
    article_stances: dict[str, str],
    count_kind: str = "article_open",
) -> ConsumptionReport:
    """Own-vs-opposing read counts plus per-session reading statistics.

    `session_stances` maps sessions to 'conservative', 'liberal', or
    'moderate'/None; moderate sessions are excluded from the own/opposing
    ratio but still count toward the articles-read mean and sd. Events whose
    kind differs from `count_kind` are ignored. Repeated reads count toward
    the ratio; the articles-read statistics use distinct articles.
    """
    if count_kind not in READ_KINDS:
        raise ValueError(f"count_kind must be one of {READ_KINDS}")
    opened: dict[str, set[str]] = {sid: set() for sid in session_stances}
    own: dict[str, int] = {sid: 0 for sid in session_stances}
    opp: dict[str, int] = {sid: 0 for sid in session_stances}
    for ev in events:
        if ev.kind != count_kind or ev.session_id not in session_stances:
            continue
        opened[ev.session_id].add(ev.article_id)
        stance = session_stances[ev.session_id]
        if stance in SIDES:
            art_stance = article_stances.get(ev.article_id)
            if art_stance == stance:
                own[ev.session_id] += 1
            else:
                opp[ev.session_id] += 1

    per_session = {
        sid: SessionConsumption(
            own_reads=own[sid],
            opposing_reads=opp[sid],
            articles_read=len(opened[sid]),
            stance=session_stances[sid],
        )
        for sid in session_stances
    }
    counts = [len(opened[sid]) for sid in session_stances]
    if counts:
        mean = sum(counts) / len(counts)
        sd = math.sqrt(sum((c - mean) ** 2 for c in counts) / len(counts))
    else:
        mean, sd = 0.0, 0.0
    return ConsumptionReport(
        per_session=per_session,
        own_reads=sum(own.values()),
        opposing_reads=sum(opp.values()),
        articles_read_mean=mean,
        articles_read_sd=sd,
        count_kind=count_kind,
    )
