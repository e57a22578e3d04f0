from datetime import date, timedelta

import pytest

from crowdalpha.corpus import Kind, Label, Post, utc_timestamp
from crowdalpha.market import PriceSeries, PriceStore
from crowdalpha.sentiment import Polarity, StockSentiment

D0 = date(2013, 1, 7)  # a Monday


def days(n, start=D0):
    return [start + timedelta(days=i) for i in range(n)]


def series(symbol, closes, start=D0):
    """Bars on consecutive calendar days (weekends included) for easy arithmetic."""
    return PriceSeries.from_closes(symbol, days(len(closes), start), closes)


def store(*ss, benchmark=None):
    st = PriceStore()
    for s in ss:
        st.series[s.symbol] = s
    if benchmark is not None:
        st.benchmark = st.series[benchmark]
    return st


def sent(symbol, day, polarity, author="a", post_id=None):
    pol = Polarity(polarity)
    return StockSentiment(
        post_id or f"{symbol}-{day.isoformat()}-{author}",
        symbol,
        float(polarity),
        int(polarity > 0),
        int(polarity < 0),
        pol,
        author,
        utc_timestamp(day) + 3600,
    )


def article(post_id, text, symbols=(), author="a", day=D0, comments=0):
    return Post(post_id, author, utc_timestamp(day) + 3600, Kind.ARTICLE, text, tuple(symbols), None, comments)


def message(post_id, text, label=None, symbols=(), author="a", day=D0):
    lab = None if label is None else (Label.BULLISH if label > 0 else Label.BEARISH)
    return Post(post_id, author, utc_timestamp(day) + 3600, Kind.MESSAGE, text, tuple(symbols), lab, 0)


@pytest.fixture
def tmp_corpus(tmp_path):
    def write(lines, name="corpus.jsonl"):
        p = tmp_path / name
        p.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return p

    return write


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        title, ok, dt, budget, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}  [{dt:.2f}s / {budget:g}s]  {detail}")
