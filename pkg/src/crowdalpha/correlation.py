"""Binary sentiment vs. forward price-move correlation, and per-post returns."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .corpus import MARKET_SYMBOL
from .market import PriceStore, forward_move
from .sentiment import Polarity, StockSentiment

DEFAULT_HORIZONS = (1, 7, 30)
CSV_FIELDS = ["year", "horizon", "rho", "n", "dropped_neutral", "dropped_zero", "dropped_missing"]


class UndefinedCorrelation(ValueError):
    """Fewer than two pairs, or one of the variables never varies."""


@dataclass(frozen=True)
class SignedPair:
    s: int
    p: int
    symbol: str
    post_id: str
    year: int


@dataclass
class DropCounts:
    neutral: int = 0
    zero: int = 0
    missing: int = 0


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    n: int
    horizon: int
    year: Optional[int] = None


@dataclass(frozen=True)
class CorrelationCell:
    year: int
    horizon: int
    rho: Optional[float]  # None when undefined
    n: int
    dropped_neutral: int
    dropped_zero: int
    dropped_missing: int


@dataclass(frozen=True)
class ArticleReturn:
    post_id: str
    symbol: str
    horizon: int
    r: float


def make_pairs(
    sentiments: Iterable[StockSentiment],
    prices: PriceStore,
    horizon: int,
    drops: Optional[DropCounts] = None,
) -> list[SignedPair]:
    """(sentiment sign, move sign) per (post, symbol).

    Neutral sentiments, zero moves and missing prices are skipped and tallied
    in ``drops``. Market-wide sentiments (symbol ``*``) are ignored.
    """
    drops = drops if drops is not None else DropCounts()
    out = []
    for s in sentiments:
        if s.symbol == MARKET_SYMBOL:
            continue
        if s.polarity == Polarity.NEUTRAL:
            drops.neutral += 1
            continue
        series = prices.get(s.symbol)
        move = forward_move(series, s.day, horizon) if series is not None else None
        if move is None:
            drops.missing += 1
            continue
        if move == 0:
            drops.zero += 1
            continue
        out.append(SignedPair(int(s.polarity), 1 if move > 0 else -1, s.symbol, s.post_id, s.day.year))
    return out


def pearson_binary(pairs: Sequence[SignedPair], horizon: int = 0, year: Optional[int] = None) -> CorrelationResult:
    """Pearson correlation of two +/-1 variables from running sums."""
    n = len(pairs)
    if n < 2:
        raise UndefinedCorrelation(f"need at least 2 pairs, got {n}")
    sx = sy = sxy = 0
    for pr in pairs:
        sx += pr.s
        sy += pr.p
        sxy += pr.s * pr.p
    # x^2 = y^2 = 1, so n * sum(x^2) = n^2
    vx = n * n - sx * sx
    vy = n * n - sy * sy
    if vx == 0 or vy == 0:
        raise UndefinedCorrelation("constant sentiment or constant price direction")
    rho = (n * sxy - sx * sy) / math.sqrt(vx * vy)
    return CorrelationResult(max(-1.0, min(1.0, rho)), n, horizon, year)


def correlate_by_year_horizon(
    sentiments: Sequence[StockSentiment],
    prices: PriceStore,
    horizons: Sequence[int] = DEFAULT_HORIZONS,
) -> list[CorrelationCell]:
    """One cell per (publication year, horizon); undefined cells keep rho=None."""
    by_year: dict[int, list[StockSentiment]] = defaultdict(list)
    for s in sentiments:
        if s.symbol != MARKET_SYMBOL:
            by_year[s.day.year].append(s)
    cells = []
    for year in sorted(by_year):
        for h in horizons:
            drops = DropCounts()
            pairs = make_pairs(by_year[year], prices, h, drops)
            try:
                rho: Optional[float] = pearson_binary(pairs, h, year).rho
            except UndefinedCorrelation:
                rho = None
            cells.append(CorrelationCell(year, h, rho, len(pairs), drops.neutral, drops.zero, drops.missing))
    return cells


def write_correlation_csv(cells: Iterable[CorrelationCell], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for c in cells:
            rho = "undefined" if c.rho is None else repr(c.rho)
            w.writerow([c.year, c.horizon, rho, c.n, c.dropped_neutral, c.dropped_zero, c.dropped_missing])


def article_return(sentiment: StockSentiment, prices: PriceStore, horizon: int) -> Optional[ArticleReturn]:
    """Hypothetical return of acting on one post: long if positive, short if negative."""
    if sentiment.polarity == Polarity.NEUTRAL:
        raise ValueError(f"post {sentiment.post_id}: neutral sentiment has no return")
    series = prices.get(sentiment.symbol)
    if series is None:
        return None
    move = forward_move(series, sentiment.day, horizon)
    if move is None:
        return None
    r = move if sentiment.polarity == Polarity.POSITIVE else -move
    return ArticleReturn(sentiment.post_id, sentiment.symbol, horizon, r)
