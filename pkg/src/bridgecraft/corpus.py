"""Corpus ingestion: domain-alignment tables, user alignment inference,
and per-post diversity/alignment labels.

Engagement-labelled posts are built in one exclusive ingest phase; the
resulting records are immutable and safe for concurrent reads.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

logger = logging.getLogger(__name__)

ALIGNMENT_MIN = -2.0
ALIGNMENT_MAX = 2.0

#: Minimum number of scored domain shares needed to classify a user, and
#: minimum number of classified retweeters needed to admit a post.
MIN_SCORED_DOMAINS = 3
MIN_CLASSIFIED_RETWEETERS = 3


class CorpusError(Exception):
    """Malformed or invalid ingest input."""


class InsufficientData(CorpusError):
    """Too few scored observations to produce an estimate."""


class Leaning(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    UNCLASSIFIED = "unclassified"


class Tier(str, Enum):
    DIRECT_FOLLOWER = "direct_follower"
    FOLLOWER_OF_FOLLOWER = "follower_of_follower"


def registered_domain(url: str) -> str:
    """Reduce a URL or hostname to its lowercased registered domain.

    Strips the scheme, a leading ``www.``, any port, and the path/query.
    """
    s = url.strip().lower()
    if "://" in s:
        s = s.split("://", 1)[1]
    for sep in ("/", "?", "#"):
        s = s.split(sep, 1)[0]
    if "@" in s:  # userinfo
        s = s.rsplit("@", 1)[1]
    s = s.split(":", 1)[0]
    if s.startswith("www."):
        s = s[len("www."):]
    return s


@dataclass(frozen=True)
class DomainAlignmentTable:
    """Registered domain -> political alignment score in [-2, +2]."""

    entries: Mapping[str, float]

    def __post_init__(self) -> None:
        if not self.entries:
            raise CorpusError("domain alignment table is empty")

    def score(self, domain: str) -> float | None:
        return self.entries.get(registered_domain(domain))


def load_domain_alignments(path: str | Path) -> DomainAlignmentTable:
    """Load a ``domain,score`` CSV into a DomainAlignmentTable.

    Raises CorpusError with the offending line number on malformed rows,
    out-of-range scores, or duplicate domains.
    """
    entries: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header[:2]] != ["domain", "score"]:
            raise CorpusError(f"{path}: expected header 'domain,score', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise CorpusError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            domain = registered_domain(row[0])
            if not domain:
                raise CorpusError(f"{path}:{lineno}: empty domain")
            try:
                score = float(row[1])
            except ValueError:
                raise CorpusError(f"{path}:{lineno}: non-numeric score {row[1]!r}") from None
            if not math.isfinite(score) or not ALIGNMENT_MIN <= score <= ALIGNMENT_MAX:
                raise CorpusError(
                    f"{path}:{lineno}: score {score} outside [{ALIGNMENT_MIN}, {ALIGNMENT_MAX}]"
                )
            if domain in entries:
                raise CorpusError(f"{path}:{lineno}: duplicate domain {domain!r}")
            entries[domain] = score
    return DomainAlignmentTable(entries)


def infer_user_alignment(
    domains_shared: Sequence[str], table: DomainAlignmentTable
) -> tuple[float, Leaning]:
    """Mean alignment of the scored domains a user shared, plus leaning.

    Each share counts once, even when the same domain repeats (multiset).
    Raises InsufficientData when fewer than three shares have a score.
    """
    scores = [s for s in (table.score(d) for d in domains_shared) if s is not None]
    if len(scores) < MIN_SCORED_DOMAINS:
        raise InsufficientData(
            f"only {len(scores)} scored domain shares, need {MIN_SCORED_DOMAINS}"
        )
    alignment = sum(scores) / len(scores)
    return alignment, leaning_of(alignment)


def leaning_of(alignment: float) -> Leaning:
    """Classify by sign; an exact zero is unclassified."""
    if alignment < 0:
        return Leaning.LEFT
    if alignment > 0:
        return Leaning.RIGHT
    return Leaning.UNCLASSIFIED


def entropy_of_shares(p_left: float) -> float:
    """Binary entropy of a (p_left, 1 - p_left) split, in bits.

    Endpoints return 0 by the 0*log(0) = 0 convention.
    """
    if not 0.0 <= p_left <= 1.0:
        raise ValueError(f"p_left must lie in [0, 1], got {p_left}")
    if p_left in (0.0, 1.0):
        return 0.0
    p_right = 1.0 - p_left
    return -p_left * math.log2(p_left) - p_right * math.log2(p_right)


def audience_diversity(n_left: int, n_right: int) -> float:
    """Entropy of the Laplace-smoothed left/right engagement shares.

    A pseudocount of one goes to each side, so (3, 0) and (100, 0) get
    distinguishable scores even though both are one-sided.
    """
    if n_left < 0 or n_right < 0:
        raise ValueError("engagement counts must be non-negative")
    p_left = (n_left + 1) / (n_left + n_right + 2)
    return entropy_of_shares(p_left)


@dataclass(frozen=True)
class Covariates:
    """Balance-check covariates carried on every user profile."""

    posts: int
    likes: int
    followers: int
    friends: int
    tenure_days: float
    alignment_value: float


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    shared_domains: tuple[str, ...]
    alignment: float | None
    leaning: Leaning
    covariates: Covariates
    tier: Tier


@dataclass(frozen=True)
class Post:
    tweet_id: str
    outlet: str
    timestamp: float
    text: str


@dataclass(frozen=True)
class EngagementEvent:
    tweet_id: str
    user_id: str
    kind: str  # "retweet" | "quote"


@dataclass(frozen=True)
class TweetRecord:
    """A promotional post with its engagement-derived labels."""

    tweet_id: str
    outlet: str
    timestamp: float
    text: str
    n_left: int
    n_right: int
    diversity: float
    mean_alignment: float


@dataclass
class IngestReport:
    posts_total: int = 0
    admitted: int = 0
    dropped_insufficient_retweeters: int = 0
    events_total: int = 0
    events_quote_excluded: int = 0
    events_duplicate: int = 0
    events_dangling_post: int = 0
    events_dangling_user: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def build_user_profile(raw: Mapping, table: DomainAlignmentTable) -> UserProfile:
    """Profile a raw user record, inferring alignment where computable."""
    domains = tuple(raw.get("domains", ()))
    try:
        alignment, leaning = infer_user_alignment(domains, table)
    except InsufficientData:
        alignment, leaning = None, Leaning.UNCLASSIFIED
    return UserProfile(
        user_id=str(raw["user_id"]),
        shared_domains=domains,
        alignment=alignment,
        leaning=leaning,
        covariates=Covariates(
            posts=int(raw.get("posts", 0)),
            likes=int(raw.get("likes", 0)),
            followers=int(raw.get("followers", 0)),
            friends=int(raw.get("friends", 0)),
            tenure_days=float(raw.get("tenure_days", 0.0)),
            alignment_value=float(alignment if alignment is not None else 0.0),
        ),
        tier=Tier(raw.get("tier", Tier.DIRECT_FOLLOWER)),
    )


def build_labeled_corpus(
    posts: Iterable[Post],
    events: Iterable[EngagementEvent],
    users: Mapping[str, UserProfile],
) -> tuple[list[TweetRecord], IngestReport]:
    """Join posts with retweet events and emit labelled records.

    Quote tweets are excluded, duplicate (user, tweet) retweets count
    once, and posts with fewer than three classified retweeters are
    dropped. Dangling references are skipped with a warning and counted
    in the report.
    """
    report = IngestReport()
    by_id: dict[str, Post] = {}
    for post in posts:
        if post.tweet_id in by_id:
            raise CorpusError(f"duplicate post id {post.tweet_id!r}")
        by_id[post.tweet_id] = post
    report.posts_total = len(by_id)

    retweeters: dict[str, set[str]] = {pid: set() for pid in by_id}
    for event in events:
        report.events_total += 1
        if event.kind == "quote":
            report.events_quote_excluded += 1
            continue
        if event.kind != "retweet":
            raise CorpusError(f"unknown engagement kind {event.kind!r}")
        if event.tweet_id not in by_id:
            logger.warning("engagement for unknown post %s skipped", event.tweet_id)
            report.events_dangling_post += 1
            continue
        if event.user_id not in users:
            logger.warning("engagement by unknown user %s skipped", event.user_id)
            report.events_dangling_user += 1
            continue
        seen = retweeters[event.tweet_id]
        if event.user_id in seen:
            report.events_duplicate += 1
            continue
        seen.add(event.user_id)

    records: list[TweetRecord] = []
    for tweet_id, post in by_id.items():
        alignments = []
        n_left = n_right = 0
        for uid in retweeters[tweet_id]:
            user = users[uid]
            if user.leaning is Leaning.LEFT:
                n_left += 1
            elif user.leaning is Leaning.RIGHT:
                n_right += 1
            else:
                continue
            alignments.append(user.alignment)
        if n_left + n_right < MIN_CLASSIFIED_RETWEETERS:
            report.dropped_insufficient_retweeters += 1
            continue
        records.append(
            TweetRecord(
                tweet_id=tweet_id,
                outlet=post.outlet,
                timestamp=post.timestamp,
                text=post.text,
                n_left=n_left,
                n_right=n_right,
                diversity=audience_diversity(n_left, n_right),
                mean_alignment=sum(alignments) / len(alignments),
            )
        )
        report.admitted += 1
    return records, report


# ---------------------------------------------------------------------------
# File interfaces (JSON-lines in, JSON-lines out)

def _read_jsonl(path: str | Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc})") from None


def read_posts_jsonl(path: str | Path) -> list[Post]:
    posts = []
    for lineno, obj in _read_jsonl(path):
        try:
            posts.append(
                Post(
                    tweet_id=str(obj["tweet_id"]),
                    outlet=str(obj["outlet"]),
                    timestamp=float(obj["timestamp"]),
                    text=str(obj["text"]),
                )
            )
        except KeyError as exc:
            raise CorpusError(f"{path}:{lineno}: missing field {exc}") from None
    return posts


def read_events_jsonl(path: str | Path) -> list[EngagementEvent]:
    events = []
    for lineno, obj in _read_jsonl(path):
        try:
            events.append(
                EngagementEvent(
                    tweet_id=str(obj["tweet_id"]),
                    user_id=str(obj["user_id"]),
                    kind=str(obj["kind"]),
                )
            )
        except KeyError as exc:
            raise CorpusError(f"{path}:{lineno}: missing field {exc}") from None
    return events


def read_users_jsonl(path: str | Path, table: DomainAlignmentTable) -> dict[str, UserProfile]:
    users: dict[str, UserProfile] = {}
    for lineno, obj in _read_jsonl(path):
        try:
            profile = build_user_profile(obj, table)
        except (KeyError, ValueError) as exc:
            raise CorpusError(f"{path}:{lineno}: bad user record ({exc})") from None
        if profile.user_id in users:
            raise CorpusError(f"{path}:{lineno}: duplicate user {profile.user_id!r}")
        users[profile.user_id] = profile
    return users


def write_corpus_jsonl(records: Sequence[TweetRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.__dict__, sort_keys=True) + "\n")


def read_corpus_jsonl(path: str | Path) -> list[TweetRecord]:
    records = []
    for lineno, obj in _read_jsonl(path):
        try:
            records.append(TweetRecord(**obj))
        except TypeError as exc:
            raise CorpusError(f"{path}:{lineno}: bad record ({exc})") from None
    return records
