"""Sentiment-driven trading simulations.

Four strategies share two engines:

* a single-asset engine for the index strategy and buy-and-hold on a
  benchmark series;
* a per-stock bucket engine for the long and long/short strategies (and for
  equal-weight buy-and-hold on a universe). Each stock trades out of its own
  cash bucket; buckets never fund each other.

Decisions are taken every ``K`` calendar days from the run start, using the
sentiment posted in the preceding ``K`` days, and executed at the first close
on or after the boundary. Fees, dividends and borrow costs are ignored.
"""

from __future__ import annotations

import csv
import enum
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .corpus import MARKET_SYMBOL, Corpus, utc_date
from .market import MAX_SLIP_DAYS, PriceSeries, PriceStore
from .ranking import RankingConfig, rank_authors, select_universe, yearly_rerank_schedule
from .sentiment import Polarity, StockSentiment

ONE_DAY = timedelta(days=1)


class StrategyKind(str, enum.Enum):
    INDEX = "index"
    LONG = "long"
    LONG_SHORT = "longshort"
    BUY_AND_HOLD = "hold"


class Scope(str, enum.Enum):
    ALL = "all"
    UNIVERSE = "universe"


class Signal(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NO_SIGNAL = "none"


class Side(str, enum.Enum):
    LONG = "long"
    SHORT = "short"
    FLAT = "flat"


class BacktestError(ValueError):
    pass


@dataclass(frozen=True)
class StrategyConfig:
    kind: StrategyKind = StrategyKind.INDEX
    K: int = 7
    universe: tuple[tuple[str, tuple[str, ...]], ...] = ()
    initial_capital: float = 1.0
    scope: Scope = Scope.ALL
    start: Optional[date] = None
    end: Optional[date] = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be a positive number of days")
        if not self.initial_capital > 0:
            raise ValueError("initial_capital must be positive")


@dataclass(frozen=True)
class Trade:
    date: date
    symbol: str
    action: str  # BUY, SELL, SHORT, COVER, STOP, DELIST
    shares: float
    price: float


@dataclass
class Position:
    """One stock's bucket: its own cash plus any long or short shares."""

    symbol: str
    allocated_capital: float
    cash: float
    shares: float = 0.0
    side: Side = Side.FLAT
    active: bool = True
    sponsors: tuple[str, ...] = ()

    def value(self, price: Optional[float]) -> float:
        if self.side is Side.FLAT or price is None:
            return self.cash
        if self.side is Side.LONG:
            return self.cash + self.shares * price
        return self.cash - self.shares * price

    def cumulative_pnl(self, price: Optional[float]) -> float:
        return self.value(price) - self.allocated_capital


@dataclass(frozen=True)
class Summary:
    total_return_pct: float
    max_drawdown_pct: float
    trade_count: int


@dataclass
class BacktestResult:
    equity_curve: list[tuple[date, float]]
    trades: list[Trade]
    summary: Summary
    positions: list[Position] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    label: str = ""


# -- sentiment aggregation -------------------------------------------------------

SymbolFilter = Union[str, Iterable[str]]


class SentimentBook:
    """Non-neutral polarities indexed by UTC day, and by (symbol, day)."""

    def __init__(self, sentiments: Iterable[StockSentiment]):
        self.by_day: dict[date, list[tuple[str, str, int]]] = defaultdict(list)
        self.by_symbol: dict[str, dict[date, list[tuple[str, int]]]] = defaultdict(lambda: defaultdict(list))
        for s in sentiments:
            if s.polarity == Polarity.NEUTRAL:
                continue
            d = s.day
            pol = int(s.polarity)
            self.by_day[d].append((s.symbol, s.author_id, pol))
            self.by_symbol[s.symbol][d].append((s.author_id, pol))

    def _day_total(self, d: date, flt, authors) -> tuple[int, int]:
        if isinstance(flt, str) and flt != MARKET_SYMBOL:
            rows = self.by_symbol.get(flt, {}).get(d, ())
            pols = [p for a, p in rows if authors is None or a in authors]
        else:
            rows = self.by_day.get(d, ())
            pols = [
                p
                for sym, a, p in rows
                if (flt == MARKET_SYMBOL or sym in flt) and (authors is None or a in authors)
            ]
        return sum(pols), len(pols)

    def signal(self, start: date, end: date, flt: SymbolFilter = MARKET_SYMBOL, authors=None) -> Signal:
        """Majority vote of net-positive vs net-negative days in ``[start, end)``."""
        if not start < end:
            raise ValueError("window start must precede its end")
        if not isinstance(flt, str):
            flt = frozenset(flt)
        if authors is not None:
            authors = frozenset(authors)
        up = down = 0
        d = start
        while d < end:
            total, count = self._day_total(d, flt, authors)
            # sign of the daily mean is the sign of the integer total
            if count and total > 0:
                up += 1
            elif count and total < 0:
                down += 1
            d += ONE_DAY
        if up > down:
            return Signal.POSITIVE
        if down > up:
            return Signal.NEGATIVE
        return Signal.NO_SIGNAL


def aggregate_window_sentiment(
    sentiments: Iterable[StockSentiment],
    window: tuple[date, date],
    flt: SymbolFilter = MARKET_SYMBOL,
    authors=None,
) -> Signal:
    """Window signal from daily mean polarities.

    ``flt`` is ``"*"`` for every sentiment, a ticker, or a collection of
    tickers; ``authors`` optionally restricts whose posts count.
    """
    return SentimentBook(sentiments).signal(window[0], window[1], flt, authors)


# -- helpers -----------------------------------------------------------------

def _boundaries(start: date, last: date, K: int) -> list[date]:
    out = []
    b = start + timedelta(days=K)
    while b <= last:
        out.append(b)
        b += timedelta(days=K)
    return out


def _summarize(curve: list[tuple[date, float]], trades: list[Trade]) -> Summary:
    peak = curve[0][1]
    worst = 0.0
    for _, v in curve:
        peak = max(peak, v)
        if peak > 0:
            worst = min(worst, v / peak - 1.0)
    return Summary((curve[-1][1] - 1.0) * 100.0, -worst * 100.0, len(trades))


def _normalize(raw: list[tuple[date, float]]) -> list[tuple[date, float]]:
    base = raw[0][1]
    if not base > 0:
        raise BacktestError("portfolio has no value at inception")
    return [(d, v / base) for d, v in raw]


def _window_dates(series: PriceSeries, start: Optional[date], end: Optional[date]) -> tuple[int, int]:
    lo = series.index_on_or_after(start) if start else 0
    hi = series.index_on_or_before(end) + 1 if end else len(series)
    return lo, hi


# -- single-asset engine --------------------------------------------------------

def _run_single(
    series: PriceSeries,
    config: StrategyConfig,
    book: Optional[SentimentBook],
    flt: SymbolFilter,
    label: str,
) -> BacktestResult:
    lo, hi = _window_dates(series, config.start, config.end)
    if hi - lo < 1:
        raise BacktestError(f"{series.symbol}: no bars in the run period")
    dates = series.dates[lo:hi]
    closes = series.closes[lo:hi]
    start = config.start or dates[0]

    due: dict[int, list[date]] = defaultdict(list)
    if book is not None:
        j = 0
        for b in _boundaries(start, dates[-1], config.K):
            while dates[j] < b:
                j += 1
            due[j].append(b)

    cash = config.initial_capital
    shares = cash / closes[0]
    cash = 0.0
    trades = [Trade(dates[0], series.symbol, "BUY", shares, closes[0])]
    raw = []
    for i, (d, px) in enumerate(zip(dates, closes)):
        for b in due.get(i, ()):
            sig = book.signal(b - timedelta(days=config.K), b, flt)
            if sig is Signal.NEGATIVE and shares > 0:
                trades.append(Trade(d, series.symbol, "SELL", shares, px))
                cash = shares * px
                shares = 0.0
            elif sig is Signal.POSITIVE and shares == 0:
                shares = cash / px
                cash = 0.0
                trades.append(Trade(d, series.symbol, "BUY", shares, px))
        raw.append((d, cash + shares * px))
    curve = _normalize(raw)
    return BacktestResult(curve, trades, _summarize(curve, trades), label=label)


def run_index_strategy(sentiments: Iterable[StockSentiment], benchmark: PriceSeries, config: StrategyConfig) -> BacktestResult:
    """Trade the benchmark on aggregated sentiment.

    Starts fully invested. At each boundary a Negative window sells the whole
    position, a Positive window buys it back, and NoSignal holds.
    """
    if config.scope is Scope.UNIVERSE:
        if not config.universe:
            raise BacktestError("universe scope requested without a universe")
        flt: SymbolFilter = frozenset(t for t, _ in config.universe)
    else:
        flt = MARKET_SYMBOL
    return _run_single(benchmark, config, SentimentBook(sentiments), flt, f"index-K{config.K}-{config.scope.value}")


# -- bucket engine ---------------------------------------------------------------

def _run_buckets(
    universe: Sequence[tuple[str, tuple[str, ...]]],
    prices: PriceStore,
    config: StrategyConfig,
    book: Optional[SentimentBook],
    allow_short: bool,
    label: str,
) -> BacktestResult:
    if not universe:
        raise BacktestError("empty universe")
    n = len(universe)
    alloc = config.initial_capital / n
    flags: list[str] = []

    series: dict[str, Optional[PriceSeries]] = {}
    spans: dict[str, tuple[int, int]] = {}
    cal: set[date] = set()
    for t, _ in universe:
        s = prices.get(t)
        if s is None or not len(s):
            flags.append(f"{t}: no price data, bucket stays in cash")
            series[t] = None
            continue
        lo, hi = _window_dates(s, config.start, config.end)
        if hi <= lo:
            flags.append(f"{t}: no bars in run period, bucket stays in cash")
            series[t] = None
            continue
        series[t] = s
        spans[t] = (lo, hi)
        cal.update(s.dates[lo:hi])
    if not cal:
        raise BacktestError("no price data for any universe member in the run period")
    calendar = sorted(cal)
    start = config.start or calendar[0]
    for t, s in series.items():
        if s is not None and s.dates[spans[t][0]] > start + timedelta(days=MAX_SLIP_DAYS):
            flags.append(f"{t}: no price at run start, bucket stays in cash")
            series[t] = None

    positions = [Position(t, alloc, alloc, sponsors=tuple(sp)) for t, sp in universe]
    cursor = {t: spans[t][0] for t in spans if series[t] is not None}
    last_px: dict[str, Optional[float]] = {t: None for t, _ in universe}
    delisted: set[str] = set()
    pending: dict[str, tuple[date, Signal]] = {}
    trades: list[Trade] = []
    raw: list[tuple[date, float]] = []
    boundaries = _boundaries(start, calendar[-1], config.K)
    bi = 0
    started: set[str] = set()

    for d in calendar:
        # bars printing today
        today: dict[str, float] = {}
        for pos in positions:
            s = series[pos.symbol]
            if s is None:
                continue
            i = cursor[pos.symbol]
            if i < spans[pos.symbol][1] and s.dates[i] == d:
                today[pos.symbol] = s.closes[i]
                last_px[pos.symbol] = s.closes[i]
                cursor[pos.symbol] = i + 1

        # synchronisation point: total value at today's marks
        total = sum(p.value(last_px[p.symbol]) for p in positions)

        while bi < len(boundaries) and boundaries[bi] <= d:
            b = boundaries[bi]
            bi += 1
            if book is None:
                continue
            for pos in positions:
                if pos.active and series[pos.symbol] is not None:
                    sig = book.signal(b - timedelta(days=config.K), b, pos.symbol, pos.sponsors)
                    pending[pos.symbol] = (b, sig)

        for pos in positions:
            t = pos.symbol
            px = today.get(t)
            if px is None or not pos.active:
                continue
            if t not in started:
                started.add(t)
                pos.shares = pos.cash / px
                pos.cash = 0.0
                pos.side = Side.LONG
                trades.append(Trade(d, t, "BUY", pos.shares, px))
                continue
            if t in pending:
                _, sig = pending.pop(t)
                if pos.side is Side.SHORT:
                    trades.append(Trade(d, t, "COVER", pos.shares, px))
                    pos.cash -= pos.shares * px
                    pos.shares = 0.0
                    pos.side = Side.FLAT
                if sig is Signal.NEGATIVE:
                    if pos.side is Side.LONG:
                        trades.append(Trade(d, t, "SELL", pos.shares, px))
                        pos.cash += pos.shares * px
                        pos.shares = 0.0
                        pos.side = Side.FLAT
                    if allow_short:
                        notional = total / n
                        if notional > 0:
                            pos.shares = notional / px
                            pos.cash += notional
                            pos.side = Side.SHORT
                            trades.append(Trade(d, t, "SHORT", pos.shares, px))
                elif pos.side is Side.FLAT and pos.cash > 0:
                    pos.shares = pos.cash / px
                    pos.cash = 0.0
                    pos.side = Side.LONG
                    trades.append(Trade(d, t, "BUY", pos.shares, px))
            if pos.side is Side.SHORT and pos.value(px) <= 0.0:
                # lost the whole initial allocation: close and drop the stock
                trades.append(Trade(d, t, "STOP", pos.shares, px))
                pos.cash -= pos.shares * px
                pos.shares = 0.0
                pos.side = Side.FLAT
                pos.active = False
                pending.pop(t, None)
                flags.append(f"{t}: stopped out on {d.isoformat()}")

        # delisted stocks: liquidate at their final close
        for pos in positions:
            t = pos.symbol
            s = series[t]
            if s is None or t in delisted or pos.side is Side.FLAT:
                continue
            if s.dates[spans[t][1] - 1] < d and spans[t][1] == len(s):
                px = s.closes[-1]
                trades.append(Trade(d, t, "DELIST", pos.shares, px))
                pos.cash = pos.value(px)
                pos.shares = 0.0
                pos.side = Side.FLAT
                pos.active = False
                delisted.add(t)
                flags.append(f"{t}: delisted after {s.dates[-1].isoformat()}, liquidated at last close")

        raw.append((d, sum(p.value(last_px[p.symbol]) for p in positions)))

    curve = _normalize(raw)
    return BacktestResult(curve, trades, _summarize(curve, trades), positions, flags, label)


def run_long_strategy(sentiments: Iterable[StockSentiment], prices: PriceStore, config: StrategyConfig) -> BacktestResult:
    """Equal split across the universe; each stock sells on a Negative window
    of its sponsors' sentiment and is held (or bought back) otherwise."""
    return _run_buckets(config.universe, prices, config, SentimentBook(sentiments), False, f"long-K{config.K}")


def run_long_short_strategy(sentiments: Iterable[StockSentiment], prices: PriceStore, config: StrategyConfig) -> BacktestResult:
    """Long strategy plus a one-period short, sized at 1/N of the total
    portfolio, on every Negative window. A bucket that loses its whole
    initial allocation is closed for good."""
    return _run_buckets(config.universe, prices, config, SentimentBook(sentiments), True, f"longshort-K{config.K}")


def run_buy_and_hold(prices: Union[PriceSeries, PriceStore], config: StrategyConfig) -> BacktestResult:
    """Buy at the first close and mark to market; equal-weight over a universe."""
    if isinstance(prices, PriceSeries):
        return _run_single(prices, config, None, MARKET_SYMBOL, "hold")
    return _run_buckets(config.universe, prices, config, None, False, "hold")


def run_strategy(sentiments, prices: PriceStore, config: StrategyConfig) -> BacktestResult:
    kind = config.kind
    if kind is StrategyKind.INDEX:
        return run_index_strategy(sentiments, prices.require_benchmark(), config)
    if kind is StrategyKind.LONG:
        return run_long_strategy(sentiments, prices, config)
    if kind is StrategyKind.LONG_SHORT:
        return run_long_short_strategy(sentiments, prices, config)
    if config.universe:
        return run_buy_and_hold(prices, config)
    return run_buy_and_hold(prices.require_benchmark(), config)


def run_reranked(
    corpus: Corpus,
    sentiments: Sequence[StockSentiment],
    prices: PriceStore,
    ranking: RankingConfig,
    config: StrategyConfig,
) -> BacktestResult:
    """Yearly cycle: rank authors on year Y-1, trade their stocks through year Y.

    Each year starts from the previous year's closing value; positions are
    marked out at the last close of the year and rebuilt on the first.
    """
    schedule = yearly_rerank_schedule(corpus.span)
    book_sents = list(sentiments)
    curve: list[tuple[date, float]] = []
    trades: list[Trade] = []
    flags: list[str] = []
    positions: list[Position] = []
    mult = 1.0
    for rank_period, trade_period in schedule:
        year = utc_date(trade_period[0]).year
        try:
            rk = rank_authors(corpus, book_sents, prices, replace(ranking, period=rank_period))
        except ValueError as exc:
            flags.append(f"{year}: skipped ({exc})")
            continue
        uni = select_universe(rk, corpus, rank_period, ranking.universe_size)
        if uni.short:
            flags.append(f"{year}: universe has {len(uni.members)} of {uni.requested} stocks")
        cfg = replace(
            config,
            universe=uni.members,
            initial_capital=config.initial_capital * mult,
            start=date(year, 1, 1),
            end=date(year, 12, 31),
        )
        try:
            seg = run_strategy(book_sents, prices, cfg)
        except BacktestError as exc:
            flags.append(f"{year}: skipped ({exc})")
            continue
        curve.extend((d, mult * v) for d, v in seg.equity_curve)
        mult = curve[-1][1]
        trades.extend(seg.trades)
        flags.extend(f"{year}: {f}" for f in seg.flags)
        positions = seg.positions
    if not curve:
        raise BacktestError("no tradable year in the re-ranking schedule")
    return BacktestResult(curve, trades, _summarize(curve, trades), positions, flags, f"{config.kind.value}-reranked")


# -- output ----------------------------------------------------------------------

def write_result(result: BacktestResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "equity.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "value"])
        for d, v in result.equity_curve:
            w.writerow([d.isoformat(), repr(v)])
    with (out / "trades.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "symbol", "action", "shares", "price"])
        for t in result.trades:
            w.writerow([t.date.isoformat(), t.symbol, t.action, repr(t.shares), repr(t.price)])
    with (out / "summary.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "start", "end", "total_return_pct", "max_drawdown_pct", "trades"])
        s = result.summary
        w.writerow(
            [
                result.label,
                result.equity_curve[0][0].isoformat(),
                result.equity_curve[-1][0].isoformat(),
                repr(s.total_return_pct),
                repr(s.max_drawdown_pct),
                s.trade_count,
            ]
        )
    if result.flags:
        (out / "flags.txt").write_text("".join(f + "\n" for f in result.flags), encoding="utf-8")
