"""Command-line entry point.

Every subcommand writes into an output directory and leaves a
``manifest.txt`` there with all resolved options, so ``crowdalpha replay
<manifest>`` reproduces the run. Options may also come from a config file of
``key = value`` lines (``--config`` or ``$CROWDALPHA_CONFIG``); command-line
flags win over the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from datetime import date
from pathlib import Path
from typing import Optional, Sequence

from . import __version__

CONFIG_ENV = "CROWDALPHA_CONFIG"
MANIFEST = "manifest.txt"

logger = logging.getLogger("crowdalpha")


class CliError(Exception):
    pass


def _csv_ints(text: str) -> list[int]:
    try:
        vals = [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _iso_date(text: str) -> str:
    date.fromisoformat(text)
    return text


# -- subcommand implementations ------------------------------------------------------

def cmd_sentiment(a, out: Path) -> list[str]:
    from .classifier import load_model, label_corpus
    from .corpus import Kind, load_corpus
    from .lexicon import analyze_article, default_company_names, default_lexicon, load_company_names, load_lexicon
    from .sentiment import write_sentiments

    corpus = load_corpus(a.corpus)
    unknown = [r for r in corpus.rejects if r.reason.startswith("unknown kind")]
    if unknown:
        raise CliError(f"{a.corpus}:{unknown[0].line_no}: {unknown[0].reason}")
    lexicon = load_lexicon(a.lexicon, a.phrases) if a.lexicon else default_lexicon()
    names = load_company_names(a.names) if a.names else default_company_names()
    model = fs = None
    if a.model:
        model, fs = load_model(a.model)
    rows = []
    for post in corpus.posts:
        if post.kind is Kind.ARTICLE:
            rows.extend(analyze_article(post, lexicon, names, a.negation_window))
        else:
            if model is None and post.label is None:
                raise CliError(f"post {post.post_id}: unlabelled message and no --model given")
            rows.extend(label_corpus(model, fs, [post]))
    write_sentiments(rows, out / "sentiments.csv")
    return [str(a.corpus)] + [p for p in (a.lexicon, a.phrases, a.names, a.model) if p]


def cmd_train(a, out: Path) -> list[str]:
    from .classifier import (
        TrainConfig,
        build_features,
        cross_validate,
        excluded_terms,
        load_stopwords,
        save_model,
        train_posts,
    )
    from .corpus import Kind, load_corpus
    from .lexicon import load_company_names

    corpus = load_corpus(a.corpus, kind_filter=Kind.MESSAGE)
    posts = [p for p in corpus.posts if p.label is not None]
    if not posts:
        raise CliError(f"{a.corpus}: no labelled messages")
    stop = load_stopwords(a.stopwords)
    names = load_company_names(a.names) if a.names else {}
    excl = excluded_terms(corpus.posts, names)
    cfg = TrainConfig(a.epochs, a.lr, a.reg, a.seed)
    with (out / "cv.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fold", "accuracy"])
        if a.folds >= 2:
            rep = cross_validate(posts, a.folds, cfg, a.min_count, stop, excl)
            for i, acc in enumerate(rep.fold_accuracies):
                w.writerow([i, repr(acc)])
            w.writerow(["mean", repr(rep.mean_accuracy)])
            (out / "confusion.csv").write_text(
                "true,pred_bullish,pred_bearish\n"
                f"bullish,{rep.confusion[0][0]},{rep.confusion[0][1]}\n"
                f"bearish,{rep.confusion[1][0]},{rep.confusion[1][1]}\n",
                encoding="utf-8",
            )
    fs = build_features(posts, a.min_count, stop, excl)
    model = train_posts(posts, fs, cfg)
    save_model(model, fs, out / "model.json")
    return [str(a.corpus)] + [p for p in (a.stopwords, a.names) if p]


def cmd_correlate(a, out: Path) -> list[str]:
    from .correlation import correlate_by_year_horizon, write_correlation_csv
    from .market import load_prices
    from .sentiment import read_sentiments

    cells = correlate_by_year_horizon(read_sentiments(a.sentiments), load_prices(a.prices), a.horizons)
    write_correlation_csv(cells, out / "correlation.csv")
    return [str(a.sentiments), str(a.prices)]


def _period(a):
    from .corpus import year_bounds

    if a.year is not None:
        return year_bounds(a.year)
    return (0, 2**62)


def cmd_rank(a, out: Path) -> list[str]:
    from .corpus import load_corpus
    from .market import load_prices
    from .ranking import Metric, RankingConfig, rank_authors, select_universe, write_ranking_csv, write_universe_csv
    from .sentiment import read_sentiments

    metric = Metric(a.metric)
    corpus = load_corpus(a.corpus)
    sents = read_sentiments(a.sentiments) if a.sentiments else []
    prices = load_prices(a.prices) if a.prices else None
    cfg = RankingConfig(metric, _period(a), a.horizon, a.min_posts, a.universe_size)
    ranking = rank_authors(corpus, sents, prices, cfg)
    write_ranking_csv(ranking, out / "ranking.csv")
    write_universe_csv(select_universe(ranking, corpus, cfg.period), out / "universe.csv")
    return [str(p) for p in (a.corpus, a.sentiments, a.prices) if p]


def cmd_backtest(a, out: Path) -> list[str]:
    from .backtest import (
        Scope,
        StrategyConfig,
        StrategyKind,
        run_buy_and_hold,
        run_reranked,
        run_strategy,
        write_result,
    )
    from .corpus import load_corpus
    from .market import load_prices
    from .ranking import Metric, RankingConfig, read_universe_csv
    from .sentiment import read_sentiments

    kind = StrategyKind(a.strategy)
    prices = load_prices(a.prices, a.benchmark)
    sents = read_sentiments(a.sentiments) if a.sentiments else []
    universe = read_universe_csv(a.universe).members if a.universe else ()
    start = date.fromisoformat(a.start) if a.start else None
    end = date.fromisoformat(a.end) if a.end else None
    inputs = [str(p) for p in (a.prices, a.sentiments, a.universe, a.corpus) if p]

    if kind in (StrategyKind.INDEX, StrategyKind.BUY_AND_HOLD) and a.benchmark is None and not universe:
        raise CliError(f"--strategy {kind.value} needs --benchmark")
    if kind is StrategyKind.INDEX and not sents:
        raise CliError("--strategy index needs --sentiments")

    rerank = a.rerank == "yearly" and kind in (StrategyKind.LONG, StrategyKind.LONG_SHORT)
    if kind in (StrategyKind.LONG, StrategyKind.LONG_SHORT) and not rerank and not universe:
        raise CliError(f"--strategy {kind.value} needs --universe or --rerank yearly")
    if rerank and not a.corpus:
        raise CliError("--rerank yearly needs --corpus")
    corpus = load_corpus(a.corpus) if rerank else None

    span = None
    for K in a.K:
        cfg = StrategyConfig(kind, K, tuple(universe), a.capital, Scope(a.scope), start, end)
        if rerank:
            rcfg = RankingConfig(Metric(a.metric), (0, 2**62), a.horizon, a.min_posts, a.universe_size)
            result = run_reranked(corpus, sents, prices, rcfg, cfg)
        else:
            result = run_strategy(sents, prices, cfg)
        write_result(result, out / f"K{K}" if len(a.K) > 1 else out)
        span = (result.equity_curve[0][0], result.equity_curve[-1][0])

    if a.baseline and prices.benchmark is not None and kind is not StrategyKind.BUY_AND_HOLD:
        # benchmark buy-and-hold over the span the strategy actually traded
        cfg = StrategyConfig(StrategyKind.BUY_AND_HOLD, a.K[0], (), a.capital, Scope.ALL, *span)
        write_result(run_buy_and_hold(prices.benchmark, cfg), out / "baseline")
    return inputs


def cmd_graphstats(a, out: Path) -> list[str]:
    from .graph import compute_stats, load_edges, write_stats_csv

    g = load_edges(a.edges, a.directed)
    stats = compute_stats(g, a.path_samples, a.seed, a.include_low_degree)
    write_stats_csv(stats, out / "graphstats.csv")
    if g.self_loops_dropped or g.duplicates_dropped or stats.notes:
        lines = [f"self_loops_dropped\t{g.self_loops_dropped}", f"duplicates_dropped\t{g.duplicates_dropped}"]
        lines += [f"note\t{n}" for n in stats.notes]
        (out / "graphstats.notes").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [str(a.edges)]


def cmd_synth(a, out: Path) -> list[str]:
    from .corpus import Kind
    from .synth import SynthConfig, generate, write_bundle

    cfg = SynthConfig(
        seed=a.seed,
        n_authors=a.authors,
        n_stocks=a.stocks,
        posts_per_author=a.posts_per_author,
        n_planted=a.planted,
        p_good=a.p_good,
        p_bg=a.p_bg,
        daily_vol=a.vol,
        signal_bump=a.bump,
        signal_days=a.signal_days,
        start=date.fromisoformat(a.start),
        end=date.fromisoformat(a.end),
        comment_multiplier=a.comment_multiplier,
        kind=Kind(a.kind),
        label_fraction=a.label_fraction,
    )
    write_bundle(generate(cfg), out)
    return []


COMMANDS = {
    "sentiment": cmd_sentiment,
    "train": cmd_train,
    "correlate": cmd_correlate,
    "rank": cmd_rank,
    "backtest": cmd_backtest,
    "graphstats": cmd_graphstats,
    "synth": cmd_synth,
}


# -- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crowdalpha", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"crowdalpha {__version__}")
    p.add_argument("--config", help=f"key = value options file (default: ${CONFIG_ENV})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sentiment", help="per-stock sentiment for every post")
    s.add_argument("--corpus", required=True)
    s.add_argument("--lexicon", help="term<TAB>pos|neg|negation file (default: shipped mini lexicon)")
    s.add_argument("--phrases", help="phrase<TAB>pos|neg file")
    s.add_argument("--names", help="ticker<TAB>company name file")
    s.add_argument("--model", help="message classifier from `train`")
    s.add_argument("--negation-window", type=int, default=3)
    s.add_argument("--out", required=True)

    s = sub.add_parser("train", help="train and cross-validate the message classifier")
    s.add_argument("--corpus", required=True)
    s.add_argument("--min-count", type=int, default=300)
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--epochs", type=int, default=20)
    s.add_argument("--lr", type=float, default=0.1)
    s.add_argument("--reg", type=float, default=1e-4)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stopwords")
    s.add_argument("--names")
    s.add_argument("--out", required=True)

    s = sub.add_parser("correlate", help="per-year, per-horizon sentiment/price correlation")
    s.add_argument("--sentiments", required=True)
    s.add_argument("--prices", required=True)
    s.add_argument("--horizons", type=_csv_ints, default=[1, 7, 30])
    s.add_argument("--out", required=True)

    s = sub.add_parser("rank", help="rank authors for a period")
    s.add_argument("--corpus", required=True)
    s.add_argument("--sentiments")
    s.add_argument("--prices")
    s.add_argument("--metric", choices=["PerA", "PerS", "AllCom", "AvgCom"], default="PerA")
    s.add_argument("--year", type=int)
    s.add_argument("--horizon", type=int, default=7)
    s.add_argument("--min-posts", type=int, default=5)
    s.add_argument("--universe-size", type=int, default=500)
    s.add_argument("--out", required=True)

    s = sub.add_parser("backtest", help="run a trading strategy")
    s.add_argument("--strategy", choices=["index", "long", "longshort", "hold"], default="index")
    s.add_argument("--prices", required=True)
    s.add_argument("--benchmark")
    s.add_argument("--sentiments")
    s.add_argument("--corpus")
    s.add_argument("--universe", help="ticker,sponsors CSV (from `rank`)")
    s.add_argument("--K", type=_csv_ints, default=[7], help="window days; a list runs a sweep")
    s.add_argument("--scope", choices=["all", "universe"], default="all")
    s.add_argument("--rerank", choices=["yearly", "none"], default="yearly")
    s.add_argument("--metric", choices=["PerA", "PerS", "AllCom", "AvgCom"], default="PerA")
    s.add_argument("--horizon", type=int, default=7)
    s.add_argument("--min-posts", type=int, default=5)
    s.add_argument("--universe-size", type=int, default=500)
    s.add_argument("--start", type=_iso_date)
    s.add_argument("--end", type=_iso_date)
    s.add_argument("--capital", type=float, default=1.0)
    s.add_argument("--baseline", action=argparse.BooleanOptionalAction, default=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("graphstats", help="social graph metrics")
    s.add_argument("--edges", required=True)
    s.add_argument("--directed", action="store_true")
    s.add_argument("--path-samples", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--include-low-degree", action="store_true")
    s.add_argument("--out", required=True)

    s = sub.add_parser("synth", help="generate a synthetic corpus with planted signal")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--authors", type=int, default=20)
    s.add_argument("--stocks", type=int, default=150)
    s.add_argument("--posts-per-author", type=int, default=60)
    s.add_argument("--planted", type=int, default=4)
    s.add_argument("--p-good", type=float, default=0.9)
    s.add_argument("--p-bg", type=float, default=0.5)
    s.add_argument("--vol", type=float, default=0.001)
    s.add_argument("--bump", type=float, default=0.05)
    s.add_argument("--signal-days", type=int, default=7)
    s.add_argument("--start", type=_iso_date, default="2013-01-01")
    s.add_argument("--end", type=_iso_date, default="2013-12-31")
    s.add_argument("--comment-multiplier", type=float, default=1.0)
    s.add_argument("--kind", choices=["article", "message"], default="article")
    s.add_argument("--label-fraction", type=float, default=1.0)
    s.add_argument("--out", required=True)

    s = sub.add_parser("replay", help="re-run a recorded manifest")
    s.add_argument("manifest")
    s.add_argument("--out", help="output directory (default: the recorded one)")
    return p


def read_config(path) -> dict[str, str]:
    opts = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{path}:{line_no}: expected key = value")
        key, value = line.split("=", 1)
        opts[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return opts


def apply_config(parser: argparse.ArgumentParser, config_path: str, command: str) -> None:
    """Install config-file values as subcommand defaults so flags still win."""
    values = read_config(config_path)
    subparser = parser._subparsers._group_actions[0].choices[command]  # argparse has no public accessor
    known = {act.dest: act for act in subparser._actions}
    defaults = {}
    for key, raw in values.items():
        act = known.get(key)
        if act is None or key == "help":
            continue
        if isinstance(act, (argparse._StoreTrueAction, argparse.BooleanOptionalAction)):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif act.type is not None:
            defaults[key] = act.type(raw)
        else:
            defaults[key] = raw
        act.required = False
    subparser.set_defaults(**defaults)


# -- manifests -------------------------------------------------------------------------------

def write_manifest(out: Path, command: str, options: dict, config: Optional[str], inputs: list[str]) -> None:
    lines = [
        f"tool = crowdalpha {__version__}",
        f"subcommand = {command}",
        f"config = {config or '-'}",
        f"out = {out}",
        f"seed = {options.get('seed', '-')}",
        f"inputs = {json.dumps(inputs)}",
    ]
    for key in sorted(options):
        if key in ("out", "command", "config", "verbose"):
            continue
        lines.append(f"option.{key} = {json.dumps(options[key])}")
    (out / MANIFEST).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path) -> tuple[str, dict, Optional[str], str]:
    command = None
    config = None
    out = None
    options = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if " = " not in line:
            continue
        key, value = line.split(" = ", 1)
        if key == "subcommand":
            command = value
        elif key == "config":
            config = None if value == "-" else value
        elif key == "out":
            out = value
        elif key.startswith("option."):
            options[key[len("option.") :]] = json.loads(value)
    if command not in COMMANDS:
        raise CliError(f"{path}: unknown or missing subcommand {command!r}")
    return command, options, config, out


def execute(command: str, options: dict, out: Path, config: Optional[str] = None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    ns = argparse.Namespace(**options, out=str(out))
    inputs = COMMANDS[command](ns, out)
    write_manifest(out, command, options, config, inputs)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    config = pre.parse_known_args(argv)[0].config or os.environ.get(CONFIG_ENV)
    command = next((t for t in argv if t in COMMANDS or t == "replay"), None)

    def fail(exc: Exception, verbose: bool = False) -> int:
        msg = " ".join(str(exc).split())
        print(f"crowdalpha: error: {command}: {type(exc).__name__}: {msg}", file=sys.stderr)
        if verbose:
            logger.exception("run failed")
        return 1

    if config and command in COMMANDS:
        try:
            apply_config(parser, config, command)
        except Exception as exc:
            return fail(exc)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            command, options, config, recorded_out = read_manifest(args.manifest)
            execute(command, options, Path(args.out or recorded_out), config)
            return 0
        options = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose", "out")}
        execute(args.command, options, Path(args.out), config)
    except Exception as exc:  # one-line machine-readable failure
        return fail(exc, args.verbose)
    return 0


if __name__ == "__main__":
    sys.exit(main())
