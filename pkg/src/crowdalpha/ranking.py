"""Author ranking by past hypothetical returns or by comments received."""

from __future__ import annotations

import csv
import enum
from collections import defaultdict
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Optional, Sequence

from .corpus import Corpus, filter_by_period, utc_date, utc_timestamp, year_bounds
from .correlation import article_return
from .market import PriceStore
from .sentiment import Polarity, StockSentiment

CSV_FIELDS = ["rank", "author", "metric", "value", "posts", "comments"]


class Metric(str, enum.Enum):
    PER_ARTICLE = "PerA"
    PER_STOCK = "PerS"
    ALL_COMMENTS = "AllCom"
    AVG_COMMENTS = "AvgCom"

    @property
    def needs_prices(self) -> bool:
        return self in (Metric.PER_ARTICLE, Metric.PER_STOCK)


class RankingError(ValueError):
    pass


@dataclass(frozen=True)
class RankingConfig:
    metric: Metric = Metric.PER_ARTICLE
    period: tuple[int, int] = (0, 2**62)
    horizon: int = 7
    min_posts: int = 5
    universe_size: int = 500

    def __post_init__(self):
        if self.universe_size < 1:
            raise ValueError("universe_size must be >= 1")
        if self.min_posts < 1:
            raise ValueError("min_posts must be >= 1")
        if not self.period[0] < self.period[1]:
            raise ValueError("ranking period is empty")


@dataclass(frozen=True)
class RankEntry:
    author_id: str
    value: float
    post_count: int
    comments: int


@dataclass(frozen=True)
class AuthorRanking:
    entries: tuple[RankEntry, ...]
    config: RankingConfig

    def top(self, k: int) -> list[str]:
        return [e.author_id for e in self.entries[:k]]


@dataclass(frozen=True)
class Universe:
    members: tuple[tuple[str, tuple[str, ...]], ...]  # (ticker, sponsoring authors)
    requested: int

    @property
    def short(self) -> bool:
        return len(self.members) < self.requested

    @property
    def tickers(self) -> list[str]:
        return [t for t, _ in self.members]

    def sponsors(self) -> dict[str, tuple[str, ...]]:
        return dict(self.members)


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)


def rank_authors(
    corpus: Corpus,
    sentiments: Sequence[StockSentiment],
    prices: Optional[PriceStore],
    config: RankingConfig,
) -> AuthorRanking:
    """Score every author with at least ``min_posts`` posts in the period.

    PerA averages the return over the author's (post, symbol) pairs; PerS
    averages within each stock first and then across stocks. Comment metrics
    use the per-post comment counts.
    """
    period = filter_by_period(corpus, *config.period)
    posts_by_author: dict[str, list] = defaultdict(list)
    for p in period.posts:
        posts_by_author[p.author_id].append(p)

    returns: dict[str, list[tuple[str, float]]] = defaultdict(list)
    if config.metric.needs_prices:
        if prices is None:
            raise RankingError(f"{config.metric.value} ranking needs prices")
        in_period = {p.post_id for p in period.posts}
        for s in sentiments:
            if s.post_id not in in_period or s.polarity == Polarity.NEUTRAL:
                continue
            r = article_return(s, prices, config.horizon)
            if r is not None:
                returns[s.author_id].append((s.symbol, r.r))

    entries = []
    for author, posts in posts_by_author.items():
        if len(posts) < config.min_posts:
            continue
        comments = sum(p.comment_count for p in posts)
        m = config.metric
        if m is Metric.ALL_COMMENTS:
            value = float(comments)
        elif m is Metric.AVG_COMMENTS:
            value = comments / len(posts)
        else:
            rs = returns.get(author)
            if not rs:
                continue
            if m is Metric.PER_ARTICLE:
                value = _mean([r for _, r in rs])
            else:
                per_stock: dict[str, list[float]] = defaultdict(list)
                for sym, r in rs:
                    per_stock[sym].append(r)
                value = _mean([_mean(v) for v in per_stock.values()])
        entries.append(RankEntry(author, value, len(posts), comments))

    if not entries:
        raise RankingError(
            f"no eligible authors for {config.metric.value}: {len(posts_by_author)} authors posted "
            f"in the period, none with >= {config.min_posts} posts"
            + (" and a computable return" if config.metric.needs_prices else "")
        )
    entries.sort(key=lambda e: (-e.value, e.author_id))
    return AuthorRanking(tuple(entries), config)


def select_universe(ranking: AuthorRanking, corpus: Corpus, period: tuple[int, int], size: Optional[int] = None) -> Universe:
    """Walk authors in rank order collecting the symbols they wrote about.

    Stops once ``size`` symbols are collected; the author who fills the last
    slot still sponsors any already-selected symbols they covered.
    """
    if not ranking.entries:
        raise RankingError("empty ranking")
    size = size or ranking.config.universe_size
    posts_by_author = defaultdict(list)
    for p in filter_by_period(corpus, *period).posts:
        posts_by_author[p.author_id].append(p)
    chosen: dict[str, list[str]] = {}
    for entry in ranking.entries:
        posts = sorted(posts_by_author.get(entry.author_id, ()), key=lambda p: (p.published_at, p.post_id))
        for p in posts:
            for sym in p.symbols:
                if sym in chosen:
                    if entry.author_id not in chosen[sym]:
                        chosen[sym].append(entry.author_id)
                elif len(chosen) < size:
                    chosen[sym] = [entry.author_id]
        if len(chosen) >= size:
            break
    return Universe(tuple((t, tuple(a)) for t, a in chosen.items()), size)


def yearly_rerank_schedule(span: Optional[tuple[int, int]]) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """(ranking period, trading period) pairs: rank on year Y-1, trade year Y."""
    if span is None:
        raise RankingError("empty corpus has no schedule")
    first, last = utc_date(span[0]).year, utc_date(span[1]).year
    if last - first < 1:
        raise RankingError(f"data covers only {first}; yearly re-ranking needs at least two calendar years")
    return [(year_bounds(y - 1), year_bounds(y)) for y in range(first + 1, last + 1)]


def write_ranking_csv(ranking: AuthorRanking, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for i, e in enumerate(ranking.entries, start=1):
            w.writerow([i, e.author_id, ranking.config.metric.value, repr(e.value), e.post_count, e.comments])


def write_universe_csv(universe: Universe, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ticker", "sponsors"])
        for t, sponsors in universe.members:
            w.writerow([t, ";".join(sponsors)])


def read_universe_csv(path) -> Universe:
    members = []
    with Path(path).open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            sponsors = tuple(a for a in row["sponsors"].split(";") if a)
            members.append((row["ticker"], sponsors))
    return Universe(tuple(members), len(members))


def period_of_dates(start: date, end: date) -> tuple[int, int]:
    return utc_timestamp(start), utc_timestamp(end)
