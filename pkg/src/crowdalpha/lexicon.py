"""Dictionary sentiment for long-form articles.

Articles that discuss several stocks are sliced: every sentence goes to the
nearest mention of a ticker or company name, and each stock is scored on its
own sentences with ``ln((1 + positives) / (1 + negatives))``.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from .corpus import MARKET_SYMBOL, Kind, Post
from .sentiment import Polarity, StockSentiment

NEGATION_WINDOW = 3

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:['’][a-z]+)?")
_BOUNDARY_RE = re.compile(r"([.!?]+)\s+")
_WORD_BEFORE_RE = re.compile(r"([A-Za-z][A-Za-z.]*)$")

# words whose trailing period does not end a sentence
ABBREVIATIONS = frozenset(
    "inc corp co ltd llc plc vs mr mrs ms dr st jr sr u.s e.g i.e approx est".split()
)


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class Lexicon:
    positive_words: frozenset[str]
    negative_words: frozenset[str]
    phrase_overrides: Mapping[tuple[str, ...], int] = field(default_factory=dict)
    negation_words: frozenset[str] = frozenset()

    def __post_init__(self):
        both = self.positive_words & self.negative_words
        if both:
            raise LexiconError(f"terms listed as both positive and negative: {sorted(both)[:5]}")
        for phrase, pol in self.phrase_overrides.items():
            if not 2 <= len(phrase) <= 4:
                raise LexiconError(f"phrase {' '.join(phrase)!r} must have 2-4 tokens")
            if pol not in (1, -1):
                raise LexiconError(f"phrase polarity must be +1 or -1, got {pol!r}")

    @property
    def max_phrase_len(self) -> int:
        return max((len(p) for p in self.phrase_overrides), default=0)

    def swapped(self) -> "Lexicon":
        """Same lexicon with positive and negative roles exchanged."""
        return Lexicon(
            self.negative_words,
            self.positive_words,
            {k: -v for k, v in self.phrase_overrides.items()},
            self.negation_words,
        )


class Landmark(NamedTuple):
    symbol: str
    offset: int


class SentenceAssignment(NamedTuple):
    sentence_index: int
    symbol: str
    landmark_char_offset: int


class SegmentScore(NamedTuple):
    pos_count: int
    neg_count: int
    score: float


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def sentiment_score(pos: int, neg: int) -> float:
    """``ln((1 + pos) / (1 + neg))``, written as a difference of logs so that
    swapping the counts negates the result exactly."""
    return math.log(1 + pos) - math.log(1 + neg)


# -- resources ---------------------------------------------------------------

def _read_tsv(path) -> Iterable[tuple[int, str, str]]:
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise LexiconError(f"{path}:{line_no}: expected two tab-separated columns")
            yield line_no, parts[0].strip(), parts[1].strip()


def load_lexicon(path, phrase_path=None) -> Lexicon:
    """Load ``term<TAB>pos|neg|negation`` lines; multi-token terms become phrases."""
    pos, neg, negation = set(), set(), set()
    phrases: dict[tuple[str, ...], int] = {}
    sources = [path] + ([phrase_path] if phrase_path else [])
    for src in sources:
        for line_no, term, pol in _read_tsv(src):
            toks = tuple(tokenize(term))
            if not toks:
                raise LexiconError(f"{src}:{line_no}: empty term")
            if pol not in ("pos", "neg", "negation"):
                raise LexiconError(f"{src}:{line_no}: unknown polarity {pol!r}")
            if len(toks) > 1:
                if pol == "negation":
                    raise LexiconError(f"{src}:{line_no}: negation terms must be single words")
                phrases[toks] = 1 if pol == "pos" else -1
            elif pol == "pos":
                pos.add(toks[0])
            elif pol == "neg":
                neg.add(toks[0])
            else:
                negation.add(toks[0])
    return Lexicon(frozenset(pos), frozenset(neg), phrases, frozenset(negation))


def load_company_names(path) -> dict[str, list[str]]:
    names: dict[str, list[str]] = {}
    for _, ticker, name in _read_tsv(path):
        names.setdefault(ticker.upper(), []).append(name)
    return names


def _data_path(name: str):
    return resources.files("crowdalpha").joinpath("data", name)


def default_lexicon() -> Lexicon:
    """The miniature lexicon shipped with the package."""
    with resources.as_file(_data_path("lexicon.tsv")) as words, resources.as_file(
        _data_path("phrases.tsv")
    ) as phrases:
        return load_lexicon(words, phrases)


def default_company_names() -> dict[str, list[str]]:
    with resources.as_file(_data_path("company_names.tsv")) as p:
        return load_company_names(p)


# -- slicing -----------------------------------------------------------------

def segment_sentences(text: str, abbreviations=ABBREVIATIONS) -> list[tuple[str, int]]:
    """Split on ``.``, ``!`` or ``?`` followed by whitespace.

    Returns ``(sentence, char_offset)`` pairs. Dots inside numbers or tickers
    (``3.5``, ``BRK.B``) never split because no whitespace follows them, and a
    period after a known abbreviation (``Inc.``) is not a boundary.
    """
    out = []
    pos = len(text) - len(text.lstrip())
    for m in _BOUNDARY_RE.finditer(text):
        if m.start() < pos:
            continue
        if m.group(1) == ".":
            prev = _WORD_BEFORE_RE.search(text, pos, m.start())
            if prev and prev.group(1).lower() in abbreviations:
                continue
        end = m.start() + len(m.group(1))
        sentence = text[pos:end]
        if sentence.strip():
            out.append((sentence, pos))
        pos = m.end()
    tail = text[pos:].rstrip()
    if tail:
        out.append((tail, pos))
    return out


def find_landmarks(
    text: str,
    symbols: Sequence[str],
    company_names: Optional[Mapping[str, Sequence[str]]] = None,
) -> list[Landmark]:
    """Every case-insensitive mention of a ticker or one of its company names.

    A symbol never mentioned in the text gets one synthetic landmark at 0.
    Result is ordered by offset, then by the symbol's position in ``symbols``.
    """
    if not symbols:
        raise ValueError("find_landmarks needs at least one symbol")
    company_names = company_names or {}
    found: list[tuple[int, int, str]] = []
    for order, sym in enumerate(symbols):
        terms = [sym, *company_names.get(sym, ())]
        pattern = "|".join(re.escape(t) for t in sorted(set(terms), key=len, reverse=True))
        rx = re.compile(rf"(?<![A-Za-z0-9])(?:{pattern})(?![A-Za-z0-9])", re.IGNORECASE)
        offsets = sorted({m.start() for m in rx.finditer(text)})
        if not offsets:
            offsets = [0]
        found.extend((off, order, sym) for off in offsets)
    found.sort()
    return [Landmark(sym, off) for off, _, sym in found]


def slice_article(sentences: Sequence[tuple[str, int]], landmarks: Sequence[Landmark]) -> list[SentenceAssignment]:
    """Assign each sentence to the landmark nearest its start offset.

    ``landmarks`` must be sorted by offset; on equal distance the earlier
    landmark wins.
    """
    if not landmarks:
        raise ValueError("slice_article needs at least one landmark")
    out = []
    for i, (_, start) in enumerate(sentences):
        best = landmarks[0]
        best_d = abs(start - best.offset)
        for lm in landmarks[1:]:
            d = abs(start - lm.offset)
            if d < best_d:
                best, best_d = lm, d
        out.append(SentenceAssignment(i, best.symbol, best.offset))
    return out


# -- scoring -----------------------------------------------------------------

def _sentence_hits(tokens: list[str], lexicon: Lexicon, window: int) -> tuple[int, int]:
    pos = neg = 0
    max_len = lexicon.max_phrase_len
    i = 0
    n = len(tokens)
    while i < n:
        polarity = 0
        width = 1
        for k in range(min(max_len, n - i), 1, -1):
            hit = lexicon.phrase_overrides.get(tuple(tokens[i : i + k]))
            if hit is not None:
                polarity, width = hit, k
                break
        else:
            tok = tokens[i]
            if tok in lexicon.positive_words:
                polarity = 1
            elif tok in lexicon.negative_words:
                polarity = -1
        if polarity:
            flips = sum(1 for t in tokens[max(0, i - window) : i] if t in lexicon.negation_words)
            if flips % 2:
                polarity = -polarity
            if polarity > 0:
                pos += 1
            else:
                neg += 1
        i += width
    return pos, neg


def score_segment(sentences: Iterable[str], lexicon: Lexicon, negation_window: int = NEGATION_WINDOW) -> SegmentScore:
    """Count positive/negative words and phrases over the given sentences.

    Phrases are matched first (longest, non-overlapping). A hit preceded by a
    negation word within ``negation_window`` tokens of the same sentence is
    flipped; two negations cancel.
    """
    pos = neg = 0
    for sentence in sentences:
        p, n = _sentence_hits(tokenize(sentence), lexicon, negation_window)
        pos += p
        neg += n
    return SegmentScore(pos, neg, sentiment_score(pos, neg))


def analyze_article(
    post: Post,
    lexicon: Lexicon,
    names: Optional[Mapping[str, Sequence[str]]] = None,
    negation_window: int = NEGATION_WINDOW,
) -> list[StockSentiment]:
    if post.kind is not Kind.ARTICLE:
        raise ValueError(f"post {post.post_id} is a {post.kind.value}, not an article")
    sentences = segment_sentences(post.text)
    if not post.symbols:
        groups = {MARKET_SYMBOL: [s for s, _ in sentences]}
    else:
        groups = {sym: [] for sym in post.symbols}
        if sentences:
            landmarks = find_landmarks(post.text, post.symbols, names)
            for a in slice_article(sentences, landmarks):
                groups[a.symbol].append(sentences[a.sentence_index][0])
    out = []
    for sym, texts in groups.items():
        seg = score_segment(texts, lexicon, negation_window)
        out.append(
            StockSentiment(
                post_id=post.post_id,
                symbol=sym,
                score=seg.score,
                pos_count=seg.pos_count,
                neg_count=seg.neg_count,
                polarity=Polarity.of(seg.score),
                author_id=post.author_id,
                published_at=post.published_at,
            )
        )
    return out


def frequent_phrases(
    texts: Iterable[str],
    min_fraction: float = 0.01,
    lengths: Sequence[int] = (2, 3, 4),
    stopwords: Iterable[str] = (),
) -> list[tuple[str, float]]:
    """Candidate phrases for manual polarity labelling.

    Returns n-grams found in more than ``min_fraction`` of the documents,
    most frequent first. N-grams that start or end with a stopword are skipped.
    """
    stop = set(stopwords)
    docs = 0
    df: Counter[tuple[str, ...]] = Counter()
    for text in texts:
        docs += 1
        toks = tokenize(text)
        grams = set()
        for k in lengths:
            for i in range(len(toks) - k + 1):
                g = tuple(toks[i : i + k])
                if g[0] in stop or g[-1] in stop:
                    continue
                grams.add(g)
        df.update(grams)
    if not docs:
        return []
    rows = [(" ".join(g), c / docs) for g, c in df.items() if c / docs > min_fraction]
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows
