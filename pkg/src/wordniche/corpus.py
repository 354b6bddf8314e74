"""Corpus ingestion, tokenization, and half-year windowing.

Input corpora are line-delimited JSON records, one post per line, with
fields ``post_id``, ``user_id``, ``thread_id``, ``timestamp`` (ISO-8601)
and ``body``. Posts are normalized to lowercase token sequences and
partitioned into fixed-length, non-overlapping time windows.
"""

from __future__ import annotations

import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

SECONDS_PER_DAY = 86_400
DEFAULT_WINDOW_DAYS = 182

# Validity range for post timestamps.
MIN_TIMESTAMP = int(datetime(1980, 1, 1, tzinfo=timezone.utc).timestamp())

# Fraction of malformed (unparseable/invalid) lines above which ingestion
# aborts instead of skipping records.
MALFORMED_FAILURE_RATIO = 0.10

REQUIRED_FIELDS = ("post_id", "user_id", "thread_id", "timestamp", "body")

_TOKEN_RUN = re.compile(r"[a-z0-9'\-]+")
_HAS_ALNUM = re.compile(r"[a-z0-9]")


class IngestError(Exception):
    """Raised when an input stream is unusable as a corpus."""


def parse_timestamp(value: str) -> int:
    """Parse an ISO-8601 timestamp into UTC epoch seconds."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_timestamp(ts: int) -> str:
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Post:
    post_id: str
    user_id: str
    thread_id: str
    timestamp: int  # UTC epoch seconds
    body: str


@dataclass(frozen=True)
class TokenizerConfig:
    strip_quoted: bool = True


DEFAULT_TOKENIZER = TokenizerConfig()


@dataclass(frozen=True)
class TokenizedPost:
    post: Post
    tokens: tuple[str, ...]

    @property
    def timestamp(self) -> int:
        return self.post.timestamp

    @property
    def user_id(self) -> str:
        return self.post.user_id

    @property
    def thread_id(self) -> str:
        return self.post.thread_id


@dataclass(frozen=True)
class Window:
    """Half-open time interval [start, end) with a stable index."""

    index: int
    start: int
    end: int

    @property
    def center(self) -> int:
        return self.start + (self.end - self.start) // 2


@dataclass
class WindowSlice:
    window: Window
    posts: list[TokenizedPost]

    @property
    def n_posts(self) -> int:
        return len(self.posts)


@dataclass
class IngestReport:
    accepted: int = 0
    rejected: int = 0
    reasons: Counter = field(default_factory=Counter)
    errors: list[tuple[int, str]] = field(default_factory=list)

    def reject(self, line_no: int, reason: str) -> None:
        self.rejected += 1
        self.reasons[reason] += 1
        if len(self.errors) < 100:
            self.errors.append((line_no, reason))

    def as_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "reasons": dict(sorted(self.reasons.items())),
        }


@dataclass
class Corpus:
    posts: list[Post]
    report: IngestReport

    @property
    def n_users(self) -> int:
        return len({p.user_id for p in self.posts})

    @property
    def n_threads(self) -> int:
        return len({p.thread_id for p in self.posts})


def _validate_record(rec: dict, now: int) -> Post:
    for name in REQUIRED_FIELDS:
        if name not in rec:
            raise ValueError(f"missing field: {name}")
    for name in ("post_id", "user_id", "thread_id"):
        if not isinstance(rec[name], str) or not rec[name]:
            raise ValueError(f"empty field: {name}")
    try:
        ts = parse_timestamp(str(rec["timestamp"]))
    except (ValueError, TypeError) as exc:
        raise ValueError("bad timestamp") from exc
    if ts < MIN_TIMESTAMP or ts > now:
        raise ValueError("timestamp out of range")
    body = rec["body"]
    if not isinstance(body, str):
        raise ValueError("body not text")
    return Post(rec["post_id"], rec["user_id"], rec["thread_id"], ts, body)


def ingest(source: str | Path | Iterable[str]) -> Corpus:
    """Read a line-delimited record stream into a corpus.

    Malformed lines are collected and skipped; more than 10% malformed is a
    hard failure. Duplicate post ids are rejections, not malformed input,
    so they do not count toward the failure ratio.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as handle:
            return ingest(handle)

    now = int(datetime.now(tz=timezone.utc).timestamp()) + SECONDS_PER_DAY
    report = IngestReport()
    posts: list[Post] = []
    seen: set[str] = set()
    n_lines = 0
    n_malformed = 0

    for line_no, line in enumerate(source, start=1):
        if not line.strip():
            continue
        n_lines += 1
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            n_malformed += 1
            report.reject(line_no, "invalid json")
            continue
        try:
            if not isinstance(rec, dict):
                raise ValueError("record not an object")
            post = _validate_record(rec, now)
        except ValueError as exc:
            n_malformed += 1
            report.reject(line_no, str(exc))
            continue
        if post.post_id in seen:
            report.reject(line_no, "duplicate id")
            continue
        seen.add(post.post_id)
        posts.append(post)
        report.accepted += 1

    if n_lines and n_malformed / n_lines > MALFORMED_FAILURE_RATIO:
        summary = ", ".join(f"{k}: {v}" for k, v in sorted(report.reasons.items()))
        raise IngestError(
            f"{n_malformed}/{n_lines} malformed lines exceeds "
            f"{MALFORMED_FAILURE_RATIO:.0%} ({summary})"
        )
    return Corpus(posts, report)


def tokenize(body: str, config: TokenizerConfig = DEFAULT_TOKENIZER) -> list[str]:
    """Normalize raw post text to a lowercase token list.

    Tokens are maximal runs of ``[a-z0-9'-]`` containing at least one
    alphanumeric character, with leading/trailing apostrophes and hyphens
    stripped. Quoted-reply lines (first non-blank character '>') are dropped
    when ``strip_quoted`` is set. Non-ASCII text is folded to ASCII.
    """
    if not body:
        return []
    if config.strip_quoted and ">" in body:
        kept = [ln for ln in body.split("\n") if not ln.lstrip().startswith(">")]
        body = " ".join(kept)
    text = unicodedata.normalize("NFKD", body)
    text = text.encode("ascii", "ignore").decode("ascii").lower()
    tokens = []
    for run in _TOKEN_RUN.findall(text):
        token = run.strip("'-")
        if token and _HAS_ALNUM.search(token):
            tokens.append(token)
    return tokens


def tokenize_corpus(
    corpus: Corpus, config: TokenizerConfig = DEFAULT_TOKENIZER
) -> list[TokenizedPost]:
    return [TokenizedPost(p, tuple(tokenize(p.body, config))) for p in corpus.posts]


def snap_epoch(ts: int) -> int:
    """Round a timestamp down to the nearest January 1 or July 1 (UTC)."""
    dt = datetime.fromtimestamp(ts, tz=timezone.utc)
    month = 7 if dt.month >= 7 else 1
    return int(datetime(dt.year, month, 1, tzinfo=timezone.utc).timestamp())


def partition_windows(
    posts: Iterable[TokenizedPost],
    window_days: int = DEFAULT_WINDOW_DAYS,
    epoch: int | None = None,
) -> list[WindowSlice]:
    """Assign every post to exactly one window of ``window_days`` days.

    Windows are half-open [start, end); empty windows between the first and
    last post are retained so that fixed-lag index arithmetic stays uniform.
    """
    posts = list(posts)
    if not posts:
        raise ValueError("no posts")
    earliest = min(p.timestamp for p in posts)
    latest = max(p.timestamp for p in posts)
    if epoch is None:
        epoch = snap_epoch(earliest)
    elif epoch > earliest:
        raise ValueError("epoch after earliest post")

    length = window_days * SECONDS_PER_DAY
    n_windows = (latest - epoch) // length + 1
    slices = [
        WindowSlice(Window(i, epoch + i * length, epoch + (i + 1) * length), [])
        for i in range(n_windows)
    ]
    for post in posts:
        slices[(post.timestamp - epoch) // length].posts.append(post)
    for sl in slices:
        sl.posts.sort(key=lambda p: p.timestamp)
    return slices


def load_windows(
    source: str | Path | Iterable[str],
    config: TokenizerConfig = DEFAULT_TOKENIZER,
    window_days: int = DEFAULT_WINDOW_DAYS,
    epoch: int | None = None,
) -> list[WindowSlice]:
    """Ingest, tokenize, and window a record stream in one step."""
    corpus = ingest(source)
    return partition_windows(tokenize_corpus(corpus, config), window_days, epoch)
