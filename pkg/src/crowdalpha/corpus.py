"""Posts, authors and corpus ingestion from line-delimited JSON."""

from __future__ import annotations

import enum
import json
import logging
import re
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

logger = logging.getLogger(__name__)

TICKER_RE = re.compile(r"[A-Z][A-Z0-9.\-]{0,9}")
MESSAGE_MAX_CHARS = 140
MARKET_SYMBOL = "*"


class Kind(str, enum.Enum):
    ARTICLE = "article"
    MESSAGE = "message"


class Label(str, enum.Enum):
    BULLISH = "bullish"
    BEARISH = "bearish"

    @property
    def sign(self) -> int:
        return 1 if self is Label.BULLISH else -1


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Post:
    post_id: str
    author_id: str
    published_at: int
    kind: Kind
    text: str
    symbols: tuple[str, ...] = ()
    label: Optional[Label] = None
    comment_count: int = 0

    @property
    def day(self) -> date:
        return utc_date(self.published_at)


@dataclass(frozen=True)
class Author:
    author_id: str
    display_name: str = ""
    follower_count: int = 0


@dataclass(frozen=True)
class Reject:
    line_no: int
    reason: str


@dataclass(frozen=True)
class Corpus:
    posts: tuple[Post, ...]
    authors: dict[str, Author] = field(default_factory=dict)
    rejects: tuple[Reject, ...] = ()

    @property
    def span(self) -> Optional[tuple[int, int]]:
        if not self.posts:
            return None
        stamps = [p.published_at for p in self.posts]
        return min(stamps), max(stamps)

    def __len__(self) -> int:
        return len(self.posts)

    def __iter__(self):
        return iter(self.posts)

    def by_id(self) -> dict[str, Post]:
        return {p.post_id: p for p in self.posts}


def utc_date(ts: int) -> date:
    return datetime.fromtimestamp(ts, tz=timezone.utc).date()


def utc_timestamp(d: date) -> int:
    return int(datetime(d.year, d.month, d.day, tzinfo=timezone.utc).timestamp())


def year_bounds(year: int) -> tuple[int, int]:
    """[start, end) epoch seconds for a UTC calendar year."""
    return utc_timestamp(date(year, 1, 1)), utc_timestamp(date(year + 1, 1, 1))


def normalize_symbols(raw: Iterable[str]) -> tuple[str, ...]:
    """Uppercase, strip a leading CashTag ``$``, drop repeats (file order kept)."""
    seen: dict[str, None] = {}
    for s in raw:
        if not isinstance(s, str):
            raise CorpusError(f"symbol is not a string: {s!r}")
        t = s.strip().lstrip("$").upper()
        if not TICKER_RE.fullmatch(t):
            raise CorpusError(f"bad ticker {s!r}")
        seen.setdefault(t, None)
    return tuple(seen)


def parse_record(obj: dict) -> Post:
    """Validate one decoded record and build a :class:`Post`."""
    if not isinstance(obj, dict):
        raise CorpusError("record is not an object")
    for key in ("id", "author", "ts", "kind", "text"):
        if key not in obj:
            raise CorpusError(f"missing key {key!r}")
    ts = obj["ts"]
    if isinstance(ts, bool) or not isinstance(ts, (int, float)) or ts != int(ts):
        raise CorpusError(f"ts must be integer epoch seconds, got {ts!r}")
    try:
        kind = Kind(str(obj["kind"]).lower())
    except ValueError:
        raise CorpusError(f"unknown kind {obj['kind']!r}") from None
    text = obj["text"]
    if not isinstance(text, str):
        raise CorpusError("text is not a string")
    if kind is Kind.MESSAGE and len(text) > MESSAGE_MAX_CHARS:
        raise CorpusError(f"message longer than {MESSAGE_MAX_CHARS} characters")
    symbols = normalize_symbols(obj.get("symbols") or [])
    label = None
    raw_label = obj.get("label")
    if raw_label is not None:
        try:
            label = Label(str(raw_label).lower())
        except ValueError:
            raise CorpusError(f"unknown label {raw_label!r}") from None
        if kind is not Kind.MESSAGE:
            raise CorpusError("label is only allowed on messages")
    comments = obj.get("comments", 0)
    if isinstance(comments, bool) or not isinstance(comments, int) or comments < 0:
        raise CorpusError(f"comments must be a non-negative integer, got {comments!r}")
    return Post(
        post_id=str(obj["id"]),
        author_id=str(obj["author"]),
        published_at=int(ts),
        kind=kind,
        text=text,
        symbols=symbols,
        label=label,
        comment_count=comments,
    )


def post_to_record(post: Post) -> dict:
    rec = {
        "id": post.post_id,
        "author": post.author_id,
        "ts": post.published_at,
        "kind": post.kind.value,
        "text": post.text,
        "symbols": list(post.symbols),
    }
    if post.label is not None:
        rec["label"] = post.label.value
    rec["comments"] = post.comment_count
    return rec


def build_corpus(posts: Iterable[Post], authors: Optional[dict[str, Author]] = None) -> Corpus:
    """Assemble a corpus; authors missing from ``authors`` get default records."""
    posts = tuple(posts)
    ids = set()
    for p in posts:
        if p.post_id in ids:
            raise CorpusError(f"duplicate post id {p.post_id!r}")
        ids.add(p.post_id)
    table = dict(authors or {})
    for p in posts:
        if p.author_id not in table:
            table[p.author_id] = Author(p.author_id, p.author_id)
    used = {p.author_id for p in posts}
    return Corpus(posts, {a: table[a] for a in sorted(used)})


def load_corpus(
    path,
    kind_filter: Optional[Kind] = None,
    comments_path=None,
    write_rejects: bool = True,
) -> Corpus:
    """Read a JSONL corpus.

    Malformed lines are collected in ``Corpus.rejects`` and, when any exist,
    written to ``<path>.rejects`` as ``line_no<TAB>reason``. A comments file
    (``post_id<TAB>count``) overrides per-post comment counts.
    """
    path = Path(path)
    posts: list[Post] = []
    rejects: list[Reject] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                post = parse_record(json.loads(line))
            except json.JSONDecodeError as exc:
                rejects.append(Reject(line_no, f"invalid JSON: {exc.msg}"))
                continue
            except CorpusError as exc:
                rejects.append(Reject(line_no, str(exc)))
                continue
            if post.post_id in seen:
                rejects.append(Reject(line_no, f"duplicate post id {post.post_id!r}"))
                continue
            seen.add(post.post_id)
            if kind_filter is not None and post.kind is not kind_filter:
                continue
            posts.append(post)

    if comments_path is not None:
        counts = load_comment_counts(comments_path)
        posts = [replace(p, comment_count=counts[p.post_id]) if p.post_id in counts else p for p in posts]

    if rejects:
        logger.warning("%s: %d malformed line(s) rejected", path, len(rejects))
        if write_rejects:
            report = Path(str(path) + ".rejects")
            report.write_text("".join(f"{r.line_no}\t{r.reason}\n" for r in rejects), encoding="utf-8")

    corpus = build_corpus(posts)
    return replace(corpus, rejects=tuple(rejects))


def load_comment_counts(path) -> dict[str, int]:
    counts = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[1].isdigit():
                raise CorpusError(f"{path}:{line_no}: expected post_id<TAB>count")
            counts[parts[0]] = int(parts[1])
    return counts


def dump_corpus(corpus: Corpus, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for post in corpus.posts:
            fh.write(json.dumps(post_to_record(post), ensure_ascii=False, sort_keys=True) + "\n")


def filter_by_period(corpus: Corpus, start: int, end: int) -> Corpus:
    """Posts with ``start <= published_at < end``; authors trimmed to match."""
    if not start < end:
        raise ValueError(f"empty period [{start}, {end})")
    kept = tuple(p for p in corpus.posts if start <= p.published_at < end)
    used = {p.author_id for p in kept}
    return Corpus(kept, {a: v for a, v in corpus.authors.items() if a in used}, corpus.rejects)


def split_by_year(corpus: Corpus) -> dict[int, Corpus]:
    years = sorted({p.day.year for p in corpus.posts})
    return {y: filter_by_period(corpus, *year_bounds(y)) for y in years}
