"""Daily price bars per symbol, loaded from one CSV per ticker."""

from __future__ import annotations

import bisect
import csv
import logging
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Optional

logger = logging.getLogger(__name__)

CSV_HEADER = ["Date", "Open", "High", "Low", "Close", "Volume"]
MAX_SLIP_DAYS = 5


class PriceError(ValueError):
    pass


@dataclass(frozen=True)
class PriceBar:
    date: date
    open: float
    high: float
    low: float
    close: float
    volume: int = 0

    def __post_init__(self):
        if min(self.open, self.high, self.low, self.close) <= 0:
            raise PriceError("prices must be positive")
        if self.high < self.low:
            raise PriceError("high below low")
        if self.low > min(self.open, self.close) or self.high < max(self.open, self.close):
            raise PriceError("open/close outside the high-low range")
        if self.volume < 0:
            raise PriceError("negative volume")


class PriceSeries:
    """Date-ascending bars for one symbol with on-or-after lookups."""

    def __init__(self, symbol: str, bars: Iterable[PriceBar]):
        self.symbol = symbol
        self.bars = tuple(bars)
        self.dates = [b.date for b in self.bars]
        self.closes = [b.close for b in self.bars]
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise PriceError(f"{symbol}: dates not strictly increasing at {b}")

    @classmethod
    def from_closes(cls, symbol: str, dates: Iterable[date], closes: Iterable[float]) -> "PriceSeries":
        return cls(symbol, [PriceBar(d, c, c, c, c, 0) for d, c in zip(dates, closes)])

    def __len__(self) -> int:
        return len(self.bars)

    def __repr__(self) -> str:
        span = f"{self.dates[0]}..{self.dates[-1]}" if self.dates else "empty"
        return f"PriceSeries({self.symbol!r}, {len(self)} bars, {span})"

    @property
    def first_date(self) -> Optional[date]:
        return self.dates[0] if self.dates else None

    @property
    def last_date(self) -> Optional[date]:
        return self.dates[-1] if self.dates else None

    def index_on_or_after(self, d: date) -> int:
        return bisect.bisect_left(self.dates, d)

    def index_on_or_before(self, d: date) -> int:
        """Index of the last bar dated ``<= d``, or -1."""
        return bisect.bisect_right(self.dates, d) - 1


@dataclass
class Reject:
    symbol: str
    line_no: int
    reason: str


@dataclass
class PriceStore:
    series: dict[str, PriceSeries] = field(default_factory=dict)
    benchmark: Optional[PriceSeries] = None
    rejects: list[Reject] = field(default_factory=list)

    def __getitem__(self, symbol: str) -> PriceSeries:
        return self.series[symbol]

    def __contains__(self, symbol: str) -> bool:
        return symbol in self.series

    def get(self, symbol: str) -> Optional[PriceSeries]:
        return self.series.get(symbol)

    def require_benchmark(self) -> PriceSeries:
        if self.benchmark is None:
            raise PriceError("no benchmark series loaded")
        return self.benchmark


def read_price_csv(path, symbol: Optional[str] = None) -> tuple[PriceSeries, list[Reject]]:
    """Parse one ``Date,Open,High,Low,Close,Volume`` file.

    Bad rows and repeated dates are rejected (first occurrence wins); rows are
    sorted by date afterwards.
    """
    path = Path(path)
    symbol = symbol or path.stem.upper()
    rejects = []
    rows: dict[date, PriceBar] = {}
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if not row or not "".join(row).strip():
                continue
            if line_no == 1 and row[0].strip().lower() == "date":
                continue
            try:
                if len(row) < 5:
                    raise PriceError(f"expected 6 columns, got {len(row)}")
                d = date.fromisoformat(row[0].strip())
                o, h, lo, c = (float(x) for x in row[1:5])
                vol = int(float(row[5])) if len(row) > 5 and row[5].strip() else 0
                bar = PriceBar(d, o, h, lo, c, vol)
            except (ValueError, PriceError) as exc:
                rejects.append(Reject(symbol, line_no, str(exc)))
                continue
            if d in rows:
                rejects.append(Reject(symbol, line_no, f"duplicate date {d}"))
                continue
            rows[d] = bar
    return PriceSeries(symbol, [rows[d] for d in sorted(rows)]), rejects


def load_prices(directory, benchmark: Optional[str] = None) -> PriceStore:
    """Load every ``<TICKER>.csv`` in ``directory``.

    ``benchmark`` names the ticker whose series doubles as the index.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise PriceError(f"{directory} is not a directory")
    store = PriceStore()
    for path in sorted(directory.glob("*.csv")):
        series, rejects = read_price_csv(path)
        store.rejects.extend(rejects)
        for r in rejects:
            logger.warning("%s line %d rejected: %s", r.symbol, r.line_no, r.reason)
        if not len(series):
            logger.warning("%s: no usable bars, symbol skipped", path.name)
            continue
        store.series[series.symbol] = series
    if benchmark is not None:
        store.benchmark = store.series.get(benchmark.upper())
        if store.benchmark is None:
            raise PriceError(f"benchmark {benchmark!r} not found in {directory}")
    return store


def write_price_csv(series: PriceSeries, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for b in series.bars:
            w.writerow([b.date.isoformat(), repr(b.open), repr(b.high), repr(b.low), repr(b.close), b.volume])


def close_on_or_after(series: PriceSeries, d: date, max_slip: int = MAX_SLIP_DAYS) -> Optional[tuple[date, float]]:
    """First bar dated within ``[d, d + max_slip]``."""
    i = series.index_on_or_after(d)
    if i < len(series.dates) and series.dates[i] <= d + timedelta(days=max_slip):
        return series.dates[i], series.closes[i]
    return None


def forward_move(series: PriceSeries, d: date, horizon: int, max_slip: int = MAX_SLIP_DAYS) -> Optional[float]:
    """Relative close-to-close change from ``d`` to ``d + horizon`` calendar days."""
    if horizon < 1:
        raise ValueError("horizon must be at least one day")
    start = close_on_or_after(series, d, max_slip)
    end = close_on_or_after(series, d + timedelta(days=horizon), max_slip)
    if start is None or end is None:
        return None
    return (end[1] - start[1]) / start[1]
