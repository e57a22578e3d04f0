import math
from datetime import date, timedelta

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import series
from crowdalpha.market import (
    PriceBar,
    PriceError,
    PriceSeries,
    close_on_or_after,
    forward_move,
    load_prices,
    read_price_csv,
    write_price_csv,
)

HEADER = "Date,Open,High,Low,Close,Volume\n"


def test_single_row(tmp_path):
    (tmp_path / "AAPL.csv").write_text(HEADER + "2013-01-02,100,101,99,100.5,10000\n")
    s = load_prices(tmp_path)["AAPL"]
    assert len(s) == 1 and s.closes == [100.5]


def test_duplicate_date_second_rejected(tmp_path):
    p = tmp_path / "X.csv"
    p.write_text(HEADER + "2013-01-02,1,1,1,1,0\n2013-01-02,2,2,2,2,0\n")
    s, rejects = read_price_csv(p)
    assert s.closes == [1.0]
    assert [r.line_no for r in rejects] == [3]


def test_high_below_low_rejected_and_empty_file_skipped(tmp_path):
    (tmp_path / "X.csv").write_text(HEADER + "2013-01-02,1,0.5,2,1,0\n2013-01-03,1,1,1,1,0\n")
    (tmp_path / "EMPTY.csv").write_text("")
    store = load_prices(tmp_path)
    assert "EMPTY" not in store and store["X"].closes == [1.0]
    assert len(store.rejects) == 1 and "high" in store.rejects[0].reason


def test_missing_symbol_is_a_lookup_error_downstream(tmp_path):
    (tmp_path / "X.csv").write_text(HEADER + "2013-01-02,1,1,1,1,0\n")
    store = load_prices(tmp_path)
    assert store.get("NOPE") is None
    with pytest.raises(KeyError):
        store["NOPE"]


def test_bar_invariants():
    with pytest.raises(PriceError):
        PriceBar(date(2013, 1, 1), 1, 2, 0.5, 3)
    with pytest.raises(PriceError):
        PriceSeries.from_closes("X", [date(2013, 1, 2), date(2013, 1, 1)], [1, 1])


def test_csv_round_trip(tmp_path):
    s = series("X", [1.25, 1.5, 1.75])
    write_price_csv(s, tmp_path / "X.csv")
    again, rejects = read_price_csv(tmp_path / "X.csv")
    assert not rejects and again.bars == s.bars


def test_close_on_or_after():
    fri = date(2013, 1, 4)
    mon = date(2013, 1, 7)
    s = PriceSeries.from_closes("X", [fri, mon], [10.0, 11.0])
    assert close_on_or_after(s, date(2013, 1, 5)) == (mon, 11.0)
    assert close_on_or_after(s, fri) == (fri, 10.0)
    assert close_on_or_after(s, date(2013, 1, 8)) is None
    assert close_on_or_after(s, date(2012, 12, 20)) is None  # beyond slip


def test_forward_move_examples():
    s = series("X", [100.0] + [105.0] * 6 + [110.0, 100.0])
    d = s.dates[0]
    assert forward_move(s, d, 7) == pytest.approx(0.10)
    assert forward_move(s, d, 8) == 0.0
    assert forward_move(s, d, 30) is None


closes = st.lists(st.floats(min_value=1.0, max_value=1000.0, allow_nan=False), min_size=9, max_size=9)


@given(closes)
def test_reverse_moves_are_consistent(cs):
    s = series("X", cs)
    fwd = forward_move(s, s.dates[0], 4)
    back = (cs[0] - cs[4]) / cs[4]
    assert (1 + fwd) * (1 + back) == pytest.approx(1.0, rel=1e-12)


@given(closes)
def test_log_moves_telescope(cs):
    s = series("X", cs)
    d = s.dates[0]
    whole = math.log(1 + forward_move(s, d, 8))
    parts = math.log(1 + forward_move(s, d, 4)) + math.log(1 + forward_move(s, d + timedelta(days=4), 4))
    assert whole == pytest.approx(parts, abs=1e-12)
