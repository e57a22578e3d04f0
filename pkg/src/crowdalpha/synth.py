"""Synthetic corpora and price paths with planted author skill.

Every post is about one stock and carries a polarity. With probability equal
to its author's accuracy, the stock then moves in the stated direction by
``signal_bump`` (in log space, spread evenly over the next ``signal_days``);
otherwise it moves the opposite way. Posts on the same stock are spaced so
their forward windows never overlap, which keeps the planted agreement
recoverable from prices at every horizon up to ``guard_days``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import Corpus, Kind, Label, Post, build_corpus, dump_corpus, utc_timestamp
from .graph import write_edges
from .market import PriceBar, PriceSeries, PriceStore, write_price_csv

BENCHMARK = "IDX"

_POSITIVE = [
    "{name} delivered strong growth this quarter.",
    "Margins improved and the outlook looks robust.",
    "Management sees a clear opportunity to expand.",
    "We expect the stock to outperform its peers.",
    "The balance sheet remains solid with low risk.",
    "Demand is strong and revenue gains look durable.",
    "We do not see any decline in the core business.",
    "Analysts upgrade the shares after record profit.",
]
_NEGATIVE = [
    "{name} reported weak results this quarter.",
    "Margins declined and the outlook looks poor.",
    "Management faces a difficult slowdown ahead.",
    "We expect the stock to underperform its peers.",
    "The balance sheet carries high debt and litigation risk.",
    "Demand is weak and losses keep piling up.",
    "This is not a good setup for shareholders.",
    "Analysts downgrade the shares after a costly miss.",
]
_FILLER = [
    "The company reports again next month.",
    "Shares traded on the exchange this week.",
    "The sector includes several large companies.",
    "Investors will watch the next conference call.",
]
_MSG_POS = ["strong", "breakout", "rally", "buying", "upside", "beat", "gains", "moon"]
_MSG_NEG = ["weak", "breakdown", "drop", "selling", "downside", "miss", "losses", "dump"]
_MSG_FILLER = ["today", "chart", "volume", "watching", "looks", "setup", "into", "close"]


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    n_authors: int = 20
    n_stocks: int = 150
    posts_per_author: int = 60
    n_planted: int = 4
    p_good: float = 0.9
    p_bg: float = 0.5
    drift: float = 0.0
    daily_vol: float = 0.001
    signal_bump: float = 0.05
    signal_days: int = 7
    guard_days: int = 30
    start: date = date(2013, 1, 1)
    end: date = date(2013, 12, 31)
    comment_base: float = 5.0
    comment_multiplier: float = 1.0
    kind: Kind = Kind.ARTICLE
    label_fraction: float = 1.0
    n_readers: int = 0

    def __post_init__(self):
        if not 0.5 <= self.p_good <= 1.0:
            raise ValueError("p_good must lie in [0.5, 1]")
        if not 0.0 <= self.p_bg <= 1.0:
            raise ValueError("p_bg must lie in [0, 1]")
        if not self.signal_bump > 0:
            raise ValueError("signal_bump must be positive")
        if not 0 <= self.n_planted <= self.n_authors:
            raise ValueError("n_planted must be between 0 and n_authors")
        if self.guard_days < self.signal_days:
            raise ValueError("guard_days must cover signal_days")
        if not self.start < self.end:
            raise ValueError("empty period")


@dataclass(frozen=True)
class TruthRow:
    post_id: str
    symbol: str
    author_id: str
    planted: bool
    polarity: int
    direction: int
    day: date

    @property
    def agree(self) -> bool:
        return self.polarity == self.direction


@dataclass
class SynthBundle:
    corpus: Corpus
    prices: PriceStore
    planted: frozenset[str]
    truth: list[TruthRow]
    edges: list[tuple[str, str]] = field(default_factory=list)
    config: Optional[SynthConfig] = None


def _tickers(n: int) -> list[str]:
    width = max(3, len(str(n - 1)))
    return [f"Q{i:0{width}d}" for i in range(n)]


def _next_weekday(d: date) -> date:
    while d.weekday() >= 5:
        d += timedelta(days=1)
    return d


def _article(rng: np.random.Generator, name: str, polarity: int) -> str:
    pool = _POSITIVE if polarity > 0 else _NEGATIVE
    picks = rng.choice(len(pool), size=3, replace=False)
    sentences = [pool[0].format(name=name)] + [pool[int(i)].format(name=name) for i in picks if i != 0][:2]
    for i in rng.choice(len(_FILLER), size=int(rng.integers(1, 3)), replace=False):
        sentences.insert(int(rng.integers(1, len(sentences) + 1)), _FILLER[int(i)])
    return " ".join(sentences)


def _message(rng: np.random.Generator, ticker: str, polarity: int) -> str:
    pool = _MSG_POS if polarity > 0 else _MSG_NEG
    words = [pool[int(i)] for i in rng.choice(len(pool), size=2, replace=False)]
    words += [_MSG_FILLER[int(i)] for i in rng.choice(len(_MSG_FILLER), size=2, replace=False)]
    order = rng.permutation(len(words))
    return f"${ticker} " + " ".join(words[int(i)] for i in order)


def generate(config: SynthConfig) -> SynthBundle:
    rng = np.random.default_rng(config.seed)
    tickers = _tickers(config.n_stocks)
    authors = [f"author{i:03d}" for i in range(config.n_authors)]
    planted_idx = set(rng.choice(config.n_authors, size=config.n_planted, replace=False).tolist())
    planted = frozenset(authors[i] for i in planted_idx)
    n_days = (config.end - config.start).days + 1

    # non-overlapping slots per stock
    slot = config.guard_days + 7
    slots = []
    for s in range(config.n_stocks):
        first = int(rng.integers(0, slot))
        for off in range(first, n_days, slot):
            day = _next_weekday(config.start + timedelta(days=off))
            if (day - config.start).days + config.guard_days + 3 < n_days:
                slots.append((s, day))
    n_posts = config.n_authors * config.posts_per_author
    if n_posts > len(slots):
        raise ValueError(
            f"{n_posts} posts requested but only {len(slots)} non-overlapping slots fit "
            f"{config.n_stocks} stocks over {n_days} days; add stocks or lengthen the period"
        )
    chosen = rng.choice(len(slots), size=n_posts, replace=False)

    increments = rng.normal(config.drift, config.daily_vol, size=(config.n_stocks, n_days))
    per_day = config.signal_bump / config.signal_days
    posts: list[Post] = []
    truth: list[TruthRow] = []
    for k, slot_i in enumerate(chosen.tolist()):
        a = k % config.n_authors
        author = authors[a]
        s, day = slots[slot_i]
        ticker = tickers[s]
        is_planted = a in planted_idx
        accuracy = config.p_good if is_planted else config.p_bg
        polarity = 1 if rng.random() < 0.5 else -1
        direction = polarity if rng.random() < accuracy else -polarity
        d0 = (day - config.start).days
        increments[s, d0 + 1 : d0 + 1 + config.signal_days] += direction * per_day

        mean_comments = config.comment_base * (config.comment_multiplier if is_planted else 1.0)
        comments = int(rng.negative_binomial(2, 2.0 / (2.0 + mean_comments)))
        ts = utc_timestamp(day) + 9 * 3600 + int(rng.integers(0, 8 * 3600))
        post_id = f"p{k:06d}"
        if config.kind is Kind.ARTICLE:
            text = _article(rng, f"Company {ticker}", polarity)
            label = None
        else:
            text = _message(rng, ticker, polarity)
            labelled = rng.random() < config.label_fraction
            label = (Label.BULLISH if polarity > 0 else Label.BEARISH) if labelled else None
        posts.append(Post(post_id, author, ts, config.kind, text, (ticker,), label, comments))
        truth.append(TruthRow(post_id, ticker, author, is_planted, polarity, direction, day))

    # calendar-day log prices, sampled on weekdays
    base = np.exp(rng.uniform(math.log(20.0), math.log(200.0), size=config.n_stocks))
    logp = np.log(base)[:, None] + np.cumsum(increments, axis=1)
    days = [config.start + timedelta(days=i) for i in range(n_days)]
    trading = [i for i, d in enumerate(days) if d.weekday() < 5]
    store = PriceStore()
    for s, t in enumerate(tickers):
        store.series[t] = _series(rng, t, days, trading, np.exp(logp[s]))
    index_log = np.log(100.0) + np.cumsum(increments.mean(axis=0))
    store.benchmark = _series(rng, BENCHMARK, days, trading, np.exp(index_log))
    store.series[BENCHMARK] = store.benchmark

    posts.sort(key=lambda p: (p.published_at, p.post_id))
    corpus = build_corpus(posts)
    edges = _follower_edges(rng, authors, config.n_readers or 5 * config.n_authors)
    return SynthBundle(corpus, store, planted, truth, edges, config)


def _series(rng, symbol, days, trading, path) -> PriceSeries:
    bars = []
    prev = None
    for i in trading:
        close = round(float(path[i]), 4)
        open_ = close if prev is None else prev
        wiggle = abs(float(rng.normal(0.0, 0.002)))
        high = round(max(open_, close) * (1.0 + wiggle), 4)
        low = round(min(open_, close) * (1.0 - wiggle), 4)
        bars.append(PriceBar(days[i], open_, high, low, close, int(rng.integers(10_000, 1_000_000))))
        prev = close
    return PriceSeries(symbol, bars)


def _follower_edges(rng, authors: list[str], n_readers: int) -> list[tuple[str, str]]:
    """Readers follow a few authors, popular ones more often; readers rarely
    follow each other. Yields a hub-and-spoke graph."""
    weights = rng.pareto(1.5, size=len(authors)) + 1.0
    weights /= weights.sum()
    edges = []
    readers = [f"reader{i:05d}" for i in range(n_readers)]
    for r in readers:
        k = int(rng.integers(1, min(5, len(authors)) + 1))
        for a in rng.choice(len(authors), size=k, replace=False, p=weights):
            edges.append((r, authors[int(a)]))
        if rng.random() < 0.1 and n_readers > 1:
            other = readers[int(rng.integers(0, n_readers))]
            if other != r:
                edges.append((r, other))
    return edges


def write_bundle(bundle: SynthBundle, out_dir) -> None:
    """Emit corpus.jsonl, prices/<TICKER>.csv, edges.tsv and ground_truth.csv."""
    out = Path(out_dir)
    (out / "prices").mkdir(parents=True, exist_ok=True)
    dump_corpus(bundle.corpus, out / "corpus.jsonl")
    for t in sorted(bundle.prices.series):
        write_price_csv(bundle.prices.series[t], out / "prices" / f"{t}.csv")
    write_edges(bundle.edges, out / "edges.tsv")
    with (out / "ground_truth.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["post_id", "symbol", "author", "planted", "polarity", "direction", "agree", "date"])
        for r in bundle.truth:
            w.writerow([r.post_id, r.symbol, r.author_id, int(r.planted), r.polarity, r.direction, int(r.agree), r.day.isoformat()])
