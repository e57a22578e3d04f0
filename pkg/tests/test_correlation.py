import random
from datetime import date, timedelta

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import D0, sent, series, store
from crowdalpha.correlation import (
    DropCounts,
    SignedPair,
    UndefinedCorrelation,
    article_return,
    correlate_by_year_horizon,
    make_pairs,
    pearson_binary,
    write_correlation_csv,
)
from crowdalpha.sentiment import Polarity


def pairs_from(counts):
    """counts = {(s, p): n}"""
    out = []
    for (s, p), n in counts.items():
        out += [SignedPair(s, p, "X", "p", 2013)] * n
    return out


def phi_from_table(pairs):
    """Brute-force phi from the 2x2 contingency table."""
    a = sum(1 for x in pairs if x.s == 1 and x.p == 1)
    b = sum(1 for x in pairs if x.s == 1 and x.p == -1)
    c = sum(1 for x in pairs if x.s == -1 and x.p == 1)
    d = sum(1 for x in pairs if x.s == -1 and x.p == -1)
    return (a * d - b * c) / ((a + b) * (c + d) * (a + c) * (b + d)) ** 0.5


def test_examples():
    assert pearson_binary(pairs_from({(1, 1): 5, (-1, -1): 5})).rho == 1.0
    assert pearson_binary(pairs_from({(1, 1): 30, (1, -1): 10, (-1, 1): 10, (-1, -1): 30})).rho == 0.5
    assert pearson_binary(pairs_from({(1, 1): 7, (1, -1): 7, (-1, 1): 7, (-1, -1): 7})).rho == 0.0


def test_undefined_cases():
    with pytest.raises(UndefinedCorrelation):
        pearson_binary(pairs_from({(1, 1): 3, (1, -1): 3}))
    with pytest.raises(UndefinedCorrelation):
        pearson_binary(pairs_from({(1, 1): 1}))


@st.composite
def tables(draw):
    pairs = draw(st.lists(st.tuples(st.sampled_from([1, -1]), st.sampled_from([1, -1])), min_size=2, max_size=300))
    return [SignedPair(s, p, "X", "q", 2013) for s, p in pairs]


@given(tables())
def test_matches_contingency_phi_and_symmetries(pairs):
    try:
        r = pearson_binary(pairs).rho
    except UndefinedCorrelation:
        assert len({x.s for x in pairs}) == 1 or len({x.p for x in pairs}) == 1
        return
    assert abs(r - phi_from_table(pairs)) <= 1e-12
    both = [SignedPair(-x.s, -x.p, "X", "q", 2013) for x in pairs]
    only_s = [SignedPair(-x.s, x.p, "X", "q", 2013) for x in pairs]
    assert pearson_binary(both).rho == r
    assert pearson_binary(only_s).rho == -r
    assert -1.0 <= r <= 1.0


@given(st.integers(1, 50), st.integers(0, 50))
def test_balanced_marginals_identity(n, agree_half):
    agree = min(agree_half, n)
    # each S value has n rows, agree of them matching P; P is balanced too
    pairs = pairs_from({(1, 1): agree, (1, -1): n - agree, (-1, -1): agree, (-1, 1): n - agree})
    r = pearson_binary(pairs).rho
    assert r == pytest.approx(2 * agree / n - 1, abs=1e-12)


def test_make_pairs_rules():
    up = series("UP", [100.0, 102.0, 102.0])
    flat = series("FLAT", [100.0, 100.0, 100.0])
    st_ = store(up, flat)
    sents = [
        sent("UP", D0, 1),
        sent("FLAT", D0, 1),
        sent("UP", D0, 0),
        sent("GONE", D0, 1),
        sent("*", D0, 1),
    ]
    drops = DropCounts()
    pairs = make_pairs(sents, st_, 1, drops)
    assert [(p.s, p.p, p.symbol) for p in pairs] == [(1, 1, "UP")]
    assert (drops.neutral, drops.zero, drops.missing) == (1, 1, 1)


def test_two_symbol_post_gives_two_pairs():
    st_ = store(series("A", [1.0, 2.0]), series("B", [2.0, 1.0]))
    pairs = make_pairs([sent("A", D0, 1, post_id="p"), sent("B", D0, 1, post_id="p")], st_, 1)
    assert len(pairs) == 2


def test_article_return_examples():
    st_ = store(series("UP", [100.0, 110.0]), series("DN", [100.0, 90.0]))
    assert article_return(sent("UP", D0, 1), st_, 1).r == pytest.approx(0.10)
    assert article_return(sent("UP", D0, -1), st_, 1).r == pytest.approx(-0.10)
    assert article_return(sent("DN", D0, -1), st_, 1).r == pytest.approx(0.10)
    assert article_return(sent("NONE", D0, 1), st_, 1) is None
    with pytest.raises(ValueError):
        article_return(sent("UP", D0, 0), st_, 1)


@given(st.lists(st.floats(1.0, 500.0), min_size=2, max_size=2), st.sampled_from([1, -1]))
def test_article_return_flips_with_polarity(cs, pol):
    st_ = store(series("X", cs))
    a = article_return(sent("X", D0, pol), st_, 1).r
    b = article_return(sent("X", D0, -pol), st_, 1).r
    assert a == -b


def test_year_horizon_table(tmp_path):
    rng = random.Random(0)
    ss, sents = [], []
    start = date(2012, 6, 1)
    for i in range(40):
        direction = 1 if i % 2 else -1
        closes = [100.0] + [100.0 * (1 + 0.01 * direction)] * 40
        ss.append(series(f"S{i}", closes, start + timedelta(days=200 * (i % 3))))
        d = ss[-1].dates[0]
        pol = direction if rng.random() < 0.9 else -direction
        sents.append(sent(f"S{i}", d, pol))
    cells = correlate_by_year_horizon(sents, store(*ss), [1, 7])
    years = sorted({c.year for c in cells})
    assert years == [2012, 2013]
    assert all(c.rho is not None for c in cells)
    # constant sentiment -> undefined cell, flagged not fabricated
    const = [sent("S1", ss[1].dates[0], 1), sent("S3", ss[3].dates[0], 1)]
    (cell,) = correlate_by_year_horizon(const, store(*ss), [1])
    assert cell.rho is None
    write_correlation_csv([cell], tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[1].split(",")[2] == "undefined"
