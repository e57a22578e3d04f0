from datetime import timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import D0, days, sent, series, store
from crowdalpha.backtest import (
    BacktestError,
    Scope,
    Signal,
    StrategyConfig,
    StrategyKind,
    aggregate_window_sentiment,
    run_buy_and_hold,
    run_index_strategy,
    run_long_short_strategy,
    run_long_strategy,
    run_strategy,
    write_result,
)

HOLD = StrategyKind.BUY_AND_HOLD


def daily(symbol, n, polarity, start=D0, author="a"):
    return [sent(symbol, d, polarity, author) for d in days(n, start)]


def wavy(symbol, n, seed=1):
    return series(symbol, [100.0 + ((i * 37 + seed * 11) % 23) - (i % 5) for i in range(n)])


# -- window aggregation ---------------------------------------------------------

def test_window_majority():
    d1, d2, d3 = days(3)
    rows = (
        [sent("X", d1, 1, f"u{i}") for i in range(3)] + [sent("X", d1, -1, f"v{i}") for i in range(2)]
        + [sent("X", d2, 1, f"u{i}") for i in range(11)] + [sent("X", d2, -1, f"v{i}") for i in range(9)]
        + [sent("X", d3, -1, f"u{i}") for i in range(13)] + [sent("X", d3, 1, f"v{i}") for i in range(7)]
    )
    assert aggregate_window_sentiment(rows, (d1, d3 + timedelta(days=1))) is Signal.POSITIVE
    assert aggregate_window_sentiment([], (d1, d3)) is Signal.NO_SIGNAL
    tie = [sent("X", d1, 1), sent("X", d2, -1)]
    assert aggregate_window_sentiment(tie, (d1, d3)) is Signal.NO_SIGNAL
    # zero-mean days are not counted
    zero = [sent("X", d1, 1, "a"), sent("X", d1, -1, "b"), sent("X", d2, -1)]
    assert aggregate_window_sentiment(zero, (d1, d3)) is Signal.NEGATIVE
    with pytest.raises(ValueError):
        aggregate_window_sentiment(rows, (d2, d1))


def test_window_filters():
    d1, d2 = days(2)
    rows = [sent("X", d1, 1, "a"), sent("Y", d1, -1, "b"), sent("Y", d1, -1, "c")]
    assert aggregate_window_sentiment(rows, (d1, d2)) is Signal.NEGATIVE
    assert aggregate_window_sentiment(rows, (d1, d2), "X") is Signal.POSITIVE
    assert aggregate_window_sentiment(rows, (d1, d2), ["X"]) is Signal.POSITIVE
    assert aggregate_window_sentiment(rows, (d1, d2), "Y", authors={"a"}) is Signal.NO_SIGNAL


# -- index strategy -------------------------------------------------------------

def test_all_positive_index_is_buy_and_hold():
    bench = wavy("IDX", 60)
    cfg = StrategyConfig(StrategyKind.INDEX, 7)
    idx = run_index_strategy(daily("Q", 60, 1), bench, cfg)
    bh = run_buy_and_hold(bench, StrategyConfig(HOLD))
    assert idx.equity_curve == bh.equity_curve


def test_all_negative_index_freezes_after_first_sale():
    bench = wavy("IDX", 40)
    r = run_index_strategy(daily("Q", 40, -1), bench, StrategyConfig(StrategyKind.INDEX, 7))
    sale = bench.closes[7] / bench.closes[0]
    assert [t.action for t in r.trades] == ["BUY", "SELL"]
    assert all(v == pytest.approx(sale, abs=1e-15) for _, v in r.equity_curve[7:])


def crisis():
    closes = [100.0] * 15 + [100.0 - 50.0 * k / 7 for k in range(1, 8)] + [50.0] * 20
    bench = series("IDX", closes)
    sents = daily("Q", 7, -1, D0 + timedelta(days=7)) + daily("Q", 7, 1, D0 + timedelta(days=21))
    return bench, sents


def test_crisis_avoidance():
    bench, sents = crisis()
    idx = run_index_strategy(sents, bench, StrategyConfig(StrategyKind.INDEX, 7))
    bh = run_buy_and_hold(bench, StrategyConfig(HOLD))
    assert idx.summary.total_return_pct == pytest.approx(0.0, abs=1e-12)
    assert bh.summary.total_return_pct == pytest.approx(-50.0, abs=1e-12)
    assert [t.action for t in idx.trades] == ["BUY", "SELL", "BUY"]


def test_universe_scope_uses_only_universe_sentiment():
    bench = wavy("IDX", 30)
    sents = daily("IN", 30, 1) + [s for s in daily("OUT", 30, -1)] + daily("OUT2", 30, -1)
    uni = (("IN", ("a",)),)
    all_ = run_index_strategy(sents, bench, StrategyConfig(StrategyKind.INDEX, 7))
    only = run_index_strategy(sents, bench, StrategyConfig(StrategyKind.INDEX, 7, uni, scope=Scope.UNIVERSE))
    assert "SELL" in [t.action for t in all_.trades]
    assert only.equity_curve == run_buy_and_hold(bench, StrategyConfig(HOLD)).equity_curve
    with pytest.raises(BacktestError):
        run_index_strategy(sents, bench, StrategyConfig(StrategyKind.INDEX, 7, scope=Scope.UNIVERSE))


@pytest.mark.parametrize("kind", [StrategyKind.INDEX, StrategyKind.LONG, StrategyKind.LONG_SHORT])
def test_k_sweep_coincides_under_constant_positive_sentiment(kind):
    a, b = wavy("A", 90, 1), wavy("B", 90, 2)
    prices = store(a, b, benchmark="A")
    uni = (("A", ("a",)), ("B", ("a",)))
    sents = daily("A", 90, 1) + daily("B", 90, 1)
    curves = [run_strategy(sents, prices, StrategyConfig(kind, K, uni)).equity_curve for K in (1, 7, 30)]
    assert curves[0] == curves[1] == curves[2]


# -- bucket strategies ----------------------------------------------------------

def test_single_stock_long_equals_buy_and_hold():
    a = wavy("A", 50)
    uni = (("A", ("a",)),)
    long_ = run_long_strategy(daily("A", 50, 1), store(a), StrategyConfig(StrategyKind.LONG, 7, uni))
    bh = run_buy_and_hold(a, StrategyConfig(HOLD))
    assert long_.equity_curve == bh.equity_curve


def test_negative_stock_bucket_freezes():
    a, b = wavy("A", 50, 1), wavy("B", 50, 2)
    uni = (("A", ("a",)), ("B", ("a",)))
    sents = daily("B", 50, -1)
    r = run_long_strategy(sents, store(a, b), StrategyConfig(StrategyKind.LONG, 7, uni))
    frozen = 0.5 * b.closes[7] / b.closes[0]
    for i, (d, v) in enumerate(r.equity_curve):
        if i >= 7:
            assert v == pytest.approx(frozen + 0.5 * a.closes[i] / a.closes[0], abs=1e-12)
    assert r.positions[1].cash == pytest.approx(frozen)


def test_no_sentiment_is_equal_weight_buy_and_hold():
    a, b = wavy("A", 50, 1), wavy("B", 50, 2)
    uni = (("A", ()), ("B", ()))
    cfg = StrategyConfig(StrategyKind.LONG, 7, uni)
    assert run_long_strategy([], store(a, b), cfg).equity_curve == run_buy_and_hold(store(a, b), cfg).equity_curve


def test_buy_and_hold_examples():
    assert run_buy_and_hold(series("X", [100.0, 120.0, 147.8]), StrategyConfig(HOLD)).summary.total_return_pct == pytest.approx(47.8)
    assert run_buy_and_hold(series("X", [5.0] * 9), StrategyConfig(HOLD)).summary.total_return_pct == 0.0
    two = store(series("U", [100.0, 110.0]), series("D", [100.0, 90.0]))
    cfg = StrategyConfig(HOLD, universe=(("U", ()), ("D", ())))
    assert run_buy_and_hold(two, cfg).summary.total_return_pct == pytest.approx(0.0, abs=1e-12)


def short_week_fixture(final):
    a = series("A", [100.0] * 30)
    b = series("B", [100.0] * 8 + [100.0 + (final - 100.0) * k / 5 for k in range(1, 6)] + [final] * 17)
    uni = (("A", ("a",)), ("B", ("a",)))
    return store(a, b), uni, daily("B", 7, -1)


def test_short_week_gain():
    prices, uni, sents = short_week_fixture(90.0)
    r = run_long_short_strategy(sents, prices, StrategyConfig(StrategyKind.LONG_SHORT, 7, uni))
    assert [t.action for t in r.trades if t.symbol == "B"] == ["BUY", "SELL", "SHORT", "COVER", "BUY"]
    # 10% fall on a short sized at total/N = 0.5
    assert r.equity_curve[-1][1] == pytest.approx(1.0 + 0.10 * 0.5, abs=1e-12)


def test_stop_out_removes_stock():
    prices, uni, sents = short_week_fixture(250.0)
    later = daily("B", 15, 1, D0 + timedelta(days=15))
    r = run_long_short_strategy(sents + later, prices, StrategyConfig(StrategyKind.LONG_SHORT, 7, uni))
    b_trades = [t.action for t in r.trades if t.symbol == "B"]
    assert b_trades == ["BUY", "SELL", "SHORT", "STOP"]
    pos = r.positions[1]
    stop = [t for t in r.trades if t.action == "STOP"][0]
    assert stop.price == pytest.approx(220.0) and stop.date == D0 + timedelta(days=11)
    assert not pos.active and pos.cumulative_pnl(250.0) <= -pos.allocated_capital
    assert any("stopped out" in f for f in r.flags)
    # the stopped bucket stays frozen; the other bucket is untouched
    assert r.equity_curve[-1][1] == pytest.approx(0.5 + pos.cash, abs=1e-12)


def test_identity_b_no_negative_windows(tmp_path):
    a, b = wavy("A", 60, 1), wavy("B", 60, 2)
    uni = (("A", ("a",)), ("B", ("a",)))
    sents = daily("A", 60, 1)
    long_ = run_long_strategy(sents, store(a, b), StrategyConfig(StrategyKind.LONG, 7, uni))
    ls = run_long_short_strategy(sents, store(a, b), StrategyConfig(StrategyKind.LONG_SHORT, 7, uni))
    assert ls.trades == long_.trades and ls.equity_curve == long_.equity_curve
    ls.label = long_.label
    write_result(long_, tmp_path / "l")
    write_result(ls, tmp_path / "s")
    for name in ("equity.csv", "trades.csv", "summary.csv"):
        assert (tmp_path / "l" / name).read_bytes() == (tmp_path / "s" / name).read_bytes()


def test_delisting_liquidates_at_last_close():
    a = series("A", [100.0] * 30)
    b = series("B", [100.0] * 10 + [80.0] * 5)
    uni = (("A", ()), ("B", ()))
    r = run_long_strategy([], store(a, b), StrategyConfig(StrategyKind.LONG, 7, uni))
    last = [t for t in r.trades if t.symbol == "B"][-1]
    assert last.action == "DELIST" and last.price == 80.0
    assert r.equity_curve[-1][1] == pytest.approx(0.5 + 0.4)
    assert any("delisted" in f for f in r.flags)


def test_missing_prices_keep_bucket_in_cash():
    a = series("A", [100.0, 110.0])
    late = series("L", [10.0, 10.0], D0 + timedelta(days=30))
    uni = (("A", ()), ("GONE", ()), ("L", ()))
    r = run_long_strategy([], store(a, late), StrategyConfig(StrategyKind.LONG, 7, uni, end=D0 + timedelta(days=1)))
    assert r.equity_curve[-1][1] == pytest.approx((1.1 + 1 + 1) / 3)
    assert len(r.flags) == 2


def test_config_validation():
    with pytest.raises(ValueError):
        StrategyConfig(K=0)
    with pytest.raises(ValueError):
        StrategyConfig(initial_capital=0)
    with pytest.raises(BacktestError):
        run_long_strategy([], store(), StrategyConfig(StrategyKind.LONG))


# -- properties -----------------------------------------------------------------

paths = st.lists(st.floats(50.0, 150.0), min_size=20, max_size=40)
pols = st.lists(st.sampled_from([-1, 0, 1]), min_size=20, max_size=40)


@settings(max_examples=60, deadline=None)
@given(paths, paths, pols, pols, st.sampled_from([1, 3, 7]), st.booleans())
def test_accounting_and_normalization(pa, pb, sa, sb, K, short):
    a, b = series("A", pa), series("B", pb)
    uni = (("A", ("a",)), ("B", ("a",)))
    sents = [sent("A", d, p) for d, p in zip(days(len(sa)), sa) if p] + [sent("B", d, p) for d, p in zip(days(len(sb)), sb) if p]
    kind = StrategyKind.LONG_SHORT if short else StrategyKind.LONG
    r = run_strategy(sents, store(a, b), StrategyConfig(kind, K, uni))
    assert r.equity_curve[0][1] == 1.0
    assert r.summary.total_return_pct == pytest.approx((r.equity_curve[-1][1] - 1.0) * 100.0)
    final = {"A": pa[-1], "B": pb[-1]}
    total = sum(p.value(final[p.symbol]) for p in r.positions)
    assert r.equity_curve[-1][1] == pytest.approx(total, rel=1e-12)
    for p in r.positions:
        assert (p.shares == 0) == (p.side.value == "flat")
        if not short:
            assert p.cash >= 0
    # an inactive stock never trades after it is stopped or delisted
    for p in r.positions:
        if not p.active:
            ends = [i for i, t in enumerate(r.trades) if t.symbol == p.symbol and t.action in ("STOP", "DELIST")]
            assert ends and all(t.symbol != p.symbol for t in r.trades[ends[0] + 1 :])


@settings(max_examples=40, deadline=None)
@given(paths, pols, st.sampled_from([1, 7, 30]))
def test_index_curve_starts_at_one(pa, sa, K):
    bench = series("IDX", pa)
    sents = [sent("Q", d, p) for d, p in zip(days(len(sa)), sa) if p]
    r = run_index_strategy(sents, bench, StrategyConfig(StrategyKind.INDEX, K))
    assert r.equity_curve[0][1] == 1.0
    assert len(r.equity_curve) == len(pa)
