import csv
import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from crowdalpha.cli import main

SYNTH = ["--stocks", "120", "--posts-per-author", "40", "--planted", "4", "--comment-multiplier", "5",
         "--start", "2013-01-01", "--end", "2014-12-31", "--seed", "11"]


def run(*argv):
    return main([str(a) for a in argv])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def snapshot(root):
    root = Path(root)
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    base = tmp_path_factory.mktemp("world")
    assert run("synth", *SYNTH, "--out", base / "synth") == 0
    assert run("sentiment", "--corpus", base / "synth" / "corpus.jsonl", "--out", base / "sent") == 0
    return base


def test_synth_and_manifest(world):
    man = (world / "synth" / "manifest.txt").read_text().splitlines()
    assert man[1] == "subcommand = synth" and "seed = 11" in man
    assert any(line.startswith("option.p_good = ") for line in man)
    assert (world / "synth" / "ground_truth.csv").exists()


def test_sentiment_rows(world):
    table = rows(world / "sent" / "sentiments.csv")
    assert table[0][:4] == ["post_id", "symbol", "score", "polarity"]
    assert len(table) - 1 == 20 * 40


def test_sentiment_empty_and_mixed(tmp_path, tmp_corpus):
    empty = tmp_corpus([], "empty.jsonl")
    assert run("sentiment", "--corpus", empty, "--out", tmp_path / "e") == 0
    assert len(rows(tmp_path / "e" / "sentiments.csv")) == 1
    mixed = tmp_corpus(
        [
            json.dumps({"id": "a1", "author": "x", "ts": 1357560000, "kind": "article", "text": "AAPL posted a strong gain.", "symbols": ["AAPL"]}),
            json.dumps({"id": "m1", "author": "y", "ts": 1357560000, "kind": "message", "text": "$MSFT dumping", "symbols": ["MSFT"], "label": "bearish"}),
        ],
        "mixed.jsonl",
    )
    assert run("sentiment", "--corpus", mixed, "--out", tmp_path / "m") == 0
    got = {(r[0], r[1], r[3]) for r in rows(tmp_path / "m" / "sentiments.csv")[1:]}
    assert got == {("a1", "AAPL", "1"), ("m1", "MSFT", "-1")}


def test_unknown_kind_is_fatal_with_one_line(tmp_path, tmp_corpus, capsys):
    bad = tmp_corpus([json.dumps({"id": "z", "author": "x", "ts": 1, "kind": "video", "text": "t"})])
    assert run("sentiment", "--corpus", bad, "--out", tmp_path / "o") == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("crowdalpha: error: sentiment: CliError:") and "unknown kind" in err[0]


def test_unlabelled_message_needs_model(tmp_path, tmp_corpus, capsys):
    c = tmp_corpus([json.dumps({"id": "m", "author": "x", "ts": 1, "kind": "message", "text": "$A up"})])
    assert run("sentiment", "--corpus", c, "--out", tmp_path / "o") == 1
    assert "--model" in capsys.readouterr().err


def test_train_then_label_messages(tmp_path):
    assert run("synth", "--kind", "message", "--stocks", "60", "--posts-per-author", "15", "--label-fraction", "0.8", "--out", tmp_path / "s") == 0
    corpus = tmp_path / "s" / "corpus.jsonl"
    assert run("train", "--corpus", corpus, "--min-count", "3", "--folds", "5", "--out", tmp_path / "t") == 0
    cv = rows(tmp_path / "t" / "cv.csv")
    assert cv[-1][0] == "mean" and float(cv[-1][1]) >= 0.95
    assert rows(tmp_path / "t" / "confusion.csv")[0] == ["true", "pred_bullish", "pred_bearish"]
    assert run("sentiment", "--corpus", corpus, "--model", tmp_path / "t" / "model.json", "--out", tmp_path / "l") == 0
    assert len(rows(tmp_path / "l" / "sentiments.csv")) - 1 == 20 * 15


def test_correlate(world, tmp_path):
    assert run("correlate", "--sentiments", world / "sent" / "sentiments.csv", "--prices", world / "synth" / "prices",
               "--horizons", "1,7", "--out", tmp_path) == 0
    body = rows(tmp_path / "correlation.csv")[1:]
    assert {(r[0], r[1]) for r in body} == {("2013", "1"), ("2013", "7"), ("2014", "1"), ("2014", "7")}


def test_rank_metrics(world, tmp_path):
    truth = rows(world / "synth" / "ground_truth.csv")[1:]
    planted = {r[2] for r in truth if r[3] == "1"}
    for metric in ("PerA", "AllCom"):
        out = tmp_path / metric
        assert run("rank", "--corpus", world / "synth" / "corpus.jsonl", "--sentiments", world / "sent" / "sentiments.csv",
                   "--prices", world / "synth" / "prices", "--metric", metric, "--out", out) == 0
        ranked = [r[1] for r in rows(out / "ranking.csv")[1:]]
        assert set(ranked[: len(planted)]) == planted
        assert rows(out / "universe.csv")[0][0] == "ticker"


def test_backtest_hold_index_sweep_and_rerank(world, tmp_path):
    prices = world / "synth" / "prices"
    sents = world / "sent" / "sentiments.csv"
    assert run("backtest", "--strategy", "hold", "--prices", prices, "--benchmark", "IDX", "--out", tmp_path / "h") == 0
    eq = rows(tmp_path / "h" / "equity.csv")
    assert eq[1][1] == "1.0"
    assert run("backtest", "--strategy", "index", "--prices", prices, "--benchmark", "IDX", "--sentiments", sents,
               "--K", "1,7,30", "--out", tmp_path / "sweep") == 0
    assert sorted(p.name for p in (tmp_path / "sweep").iterdir() if p.is_dir()) == ["K1", "K30", "K7", "baseline"]
    assert run("backtest", "--strategy", "long", "--prices", prices, "--benchmark", "IDX", "--sentiments", sents,
               "--corpus", world / "synth" / "corpus.jsonl", "--universe-size", "20", "--min-posts", "3", "--out", tmp_path / "r") == 0
    assert rows(tmp_path / "r" / "equity.csv")[1][0].startswith("2014-01")
    assert rows(tmp_path / "r" / "baseline" / "equity.csv")[1][0] == rows(tmp_path / "r" / "equity.csv")[1][0]


def test_backtest_argument_errors(world, tmp_path, capsys):
    assert run("backtest", "--strategy", "long", "--rerank", "none", "--prices", world / "synth" / "prices", "--out", tmp_path) == 1
    assert "--universe" in capsys.readouterr().err


def test_graphstats(world, tmp_path):
    assert run("graphstats", "--edges", world / "synth" / "edges.tsv", "--out", tmp_path) == 0
    head, row = rows(tmp_path / "graphstats.csv")
    assert head[0] == "nodes" and int(row[0]) > 20 and float(row[5]) < 0


def test_config_file_env_and_flag_override(world, tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# graph run\nedges = {world / 'synth' / 'edges.tsv'}\npath-samples = 7\nout = {tmp_path / 'c'}\n")
    assert run("--config", cfg, "graphstats") == 0
    assert rows(tmp_path / "c" / "graphstats.csv")[1][6] == "7"
    assert "config = " + str(cfg) in (tmp_path / "c" / "manifest.txt").read_text()
    monkeypatch.setenv("CROWDALPHA_CONFIG", str(cfg))
    assert run("graphstats", "--path-samples", "9", "--out", tmp_path / "d") == 0
    assert rows(tmp_path / "d" / "graphstats.csv")[1][6] == "9"


def test_bad_config_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no equals sign here\n")
    assert run("--config", cfg, "graphstats", "--edges", "x", "--out", tmp_path) == 1
    assert "key = value" in capsys.readouterr().err


def test_replay_is_byte_identical(world, tmp_path):
    runs = [
        ("graphstats", "--edges", world / "synth" / "edges.tsv", "--path-samples", "5", "--seed", "3"),
        ("backtest", "--strategy", "index", "--prices", world / "synth" / "prices", "--benchmark", "IDX",
         "--sentiments", world / "sent" / "sentiments.csv", "--K", "7,30"),
    ]
    for i, argv in enumerate(runs):
        out = tmp_path / f"run{i}"
        assert run(*argv, "--out", out) == 0
        before = snapshot(out)
        manifest = tmp_path / f"manifest{i}.txt"
        manifest.write_bytes(before["manifest.txt"])
        shutil.rmtree(out)
        assert run("replay", manifest) == 0
        assert snapshot(out) == before


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "crowdalpha.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("crowdalpha ")


def test_pure_python_fallback_is_selectable():
    env = dict(os.environ, CROWDALPHA_PURE_PYTHON="1")
    code = "import crowdalpha; print(crowdalpha.BACKEND)"
    assert subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True).stdout.strip() == "python"
