"""Parse the incoming post stream into validated Post records.

Entities are preferred pre-extracted; when only raw text is present a
heuristic extractor pulls lowercase tokens, drops stopwords and short
tokens, and applies naive plural stemming.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import EmptyEntitySet, MalformedRecord

__all__ = ["Post", "RawRecord", "extract_entities", "parse_post", "iter_records", "StreamStats"]

_TOKEN_SPLIT = re.compile(r"[^a-z0-9]+")

# Compact English stopword list; enough to strip glue words from post text.
STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are aren as at be
    because been before being below between both but by can cannot could
    couldn did didn do does doesn doing don down during each few for from
    further had hadn has hasn have haven having he her here hers herself him
    himself his how i if in into is isn it its itself just ll me more most my
    myself no nor not now of off on once only or other our ours ourselves out
    over own re same she should shouldn so some such than that the their
    theirs them themselves then there these they this those through to too
    under until up very was wasn we were weren what when where which while
    who whom why will with won would wouldn you your yours yourself
    yourselves
    """.split()
)


@dataclass(frozen=True)
class Post:
    """The stream unit: an entity set, a timestamp and an author.

    ``timestamp`` is in raw integer ticks; the network maps it to a window
    moment. ``moment`` is filled in when the post enters an engine.
    """

    id: str
    entities: frozenset[str]
    timestamp: int
    author: str = ""
    moment: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        if not self.entities:
            raise EmptyEntitySet(f"post {self.id!r} has no entities")
        if any(not e for e in self.entities):
            raise MalformedRecord(f"post {self.id!r} has empty entity strings")
        if self.timestamp < 0:
            raise MalformedRecord(f"post {self.id!r} has negative timestamp")

    def at_moment(self, moment: int) -> "Post":
        return Post(self.id, self.entities, self.timestamp, self.author, moment)


@dataclass(frozen=True)
class RawRecord:
    """One line of the input stream before validation."""

    id: str | None = None
    timestamp: int | None = None
    author: str = ""
    entities: tuple[str, ...] | None = None
    text: str | None = None

    FIELDS = frozenset({"id", "timestamp", "author", "entities", "text"})

    @classmethod
    def from_dict(cls, obj: dict) -> "RawRecord":
        if not isinstance(obj, dict):
            raise MalformedRecord("record is not an object")
        unknown = set(obj) - cls.FIELDS
        if unknown:
            raise MalformedRecord(f"unknown fields: {sorted(unknown)}")
        entities = obj.get("entities")
        if entities is not None:
            if not isinstance(entities, (list, tuple)) or any(
                not isinstance(e, str) for e in entities
            ):
                raise MalformedRecord("entities must be an array of strings")
            entities = tuple(entities)
        text = obj.get("text")
        if text is not None and not isinstance(text, str):
            raise MalformedRecord("text must be a string")
        return cls(
            id=obj.get("id"),
            timestamp=obj.get("timestamp"),
            author=obj.get("author") or "",
            entities=entities,
            text=text,
        )


def _stem(token: str) -> str:
    if token.endswith("ies"):
        return token[:-3] + "y"
    if token.endswith("s") and len(token) > 3:
        return token[:-1]
    return token


def extract_entities(text: str) -> set[str]:
    """Heuristic fallback extractor for posts arriving without entities.

    Lowercases, splits on non-alphanumerics, removes stopwords and tokens
    shorter than 2 chars, applies naive plural stemming, deduplicates.
    """
    out: set[str] = set()
    for token in _TOKEN_SPLIT.split(text.lower()):
        if len(token) < 2 or token in STOPWORDS:
            continue
        token = _stem(token)
        if len(token) >= 2:
            out.add(token)
    return out


def parse_post(record: RawRecord, strict_entities: bool = False) -> Post:
    """Validate a raw record into a Post.

    Raises MalformedRecord when id/timestamp are missing or both entities and
    text are absent (also when strict_entities demands explicit entities),
    and EmptyEntitySet when nothing survives extraction.
    """
    if record.id is None or record.id == "":
        raise MalformedRecord("missing id")
    if record.timestamp is None or isinstance(record.timestamp, bool):
        raise MalformedRecord("missing timestamp")
    try:
        timestamp = int(record.timestamp)
    except (TypeError, ValueError):
        raise MalformedRecord(f"timestamp {record.timestamp!r} is not an integer") from None
    if float(record.timestamp) != timestamp:
        raise MalformedRecord(f"timestamp {record.timestamp!r} is not an integer")
    if timestamp < 0:
        raise MalformedRecord("timestamp must be non-negative")

    if record.entities is not None:
        entities = frozenset(e.strip().lower() for e in record.entities if e.strip())
    elif record.text is not None:
        if strict_entities:
            raise MalformedRecord("explicit entities required in strict mode")
        entities = frozenset(extract_entities(record.text))
    else:
        raise MalformedRecord("record has neither entities nor text")

    if not entities:
        raise EmptyEntitySet(f"post {record.id!r} has no entities after extraction")
    return Post(id=str(record.id), entities=entities, timestamp=timestamp, author=record.author)


@dataclass
class StreamStats:
    """Counters reported at end of run."""

    parsed: int = 0
    skipped_malformed: int = 0
    skipped_empty: int = 0

    @property
    def skipped(self) -> int:
        return self.skipped_malformed + self.skipped_empty


def iter_records(
    lines: Iterable[str], stats: StreamStats | None = None, strict_entities: bool = False
) -> Iterator[Post]:
    """Yield Posts from line-delimited JSON records, skipping invalid lines.

    Skips (and counts) lines that fail to parse, records that are malformed,
    and posts whose entity set comes up empty.
    """
    stats = stats if stats is not None else StreamStats()
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            post = parse_post(RawRecord.from_dict(obj), strict_entities=strict_entities)
        except EmptyEntitySet:
            stats.skipped_empty += 1
            continue
        except (MalformedRecord, json.JSONDecodeError):
            stats.skipped_malformed += 1
            continue
        stats.parsed += 1
        yield post
