"""Bullish/bearish classifier for short messages.

Unigram-presence features, a linear max-margin model trained by stochastic
subgradient descent on the hinge loss, and stratified k-fold evaluation.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .corpus import MARKET_SYMBOL, Kind, Post
from .sentiment import Polarity, StockSentiment

DEFAULT_MIN_COUNT = 300
MODEL_FORMAT = "crowdalpha-linear-model"
MODEL_VERSION = 1

_SPLIT_RE = re.compile(r"[^a-z0-9]+")


class ClassifierError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop tokens shorter than 2."""
    return [t for t in _SPLIT_RE.split(text.lower()) if len(t) >= 2]


def load_stopwords(path=None) -> frozenset[str]:
    if path is None:
        text = resources.files("crowdalpha").joinpath("data", "stopwords.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip() and not w.startswith("#"))


def excluded_terms(posts: Iterable[Post], company_names=None) -> frozenset[str]:
    """Ticker and company-name tokens, which must not become features."""
    out = set()
    for p in posts:
        for s in p.symbols:
            out.update(tokenize(s))
    for names in (company_names or {}).values():
        for n in names:
            out.update(tokenize(n))
    return frozenset(out)


@dataclass(frozen=True)
class FeatureSpace:
    vocabulary: dict[str, int]
    min_token_count: int
    stopwords: frozenset[str] = frozenset()
    excluded: frozenset[str] = frozenset()

    def __len__(self) -> int:
        return len(self.vocabulary)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    learning_rate: float = 0.1
    regularization: float = 1e-4
    seed: int = 0


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    config: TrainConfig = field(default_factory=TrainConfig)

    def decision(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.weights.shape:
            raise ClassifierError(f"vector has dimension {x.shape}, model expects {self.weights.shape}")
        return float(np.dot(self.weights, x) + self.bias)


@dataclass
class CvReport:
    fold_accuracies: list[float]
    mean_accuracy: float
    # rows: true bullish/bearish, columns: predicted bullish/bearish
    confusion: list[list[int]]
    models: list[tuple[LinearModel, FeatureSpace]] = field(default_factory=list, repr=False)


def _labelled(posts: Sequence[Post]) -> None:
    for p in posts:
        if p.label is None:
            raise ClassifierError(f"post {p.post_id} has no label")


def build_features(
    posts: Sequence[Post],
    min_count: int = DEFAULT_MIN_COUNT,
    stopwords: Iterable[str] = (),
    excluded: Iterable[str] = (),
) -> FeatureSpace:
    """Vocabulary of tokens occurring at least ``min_count`` times in total."""
    if not posts:
        raise ClassifierError("no training posts")
    _labelled(posts)
    stop = frozenset(stopwords)
    excl = frozenset(excluded)
    counts = Counter()
    for p in posts:
        counts.update(tokenize(p.text))
    vocab = sorted(t for t, c in counts.items() if c >= min_count and t not in stop and t not in excl)
    if not vocab:
        raise ClassifierError(
            f"empty vocabulary: no token reaches min_count={min_count} "
            f"after removing {len(stop)} stopwords and {len(excl)} excluded terms "
            f"({len(counts)} distinct tokens, {len(posts)} posts)"
        )
    return FeatureSpace({t: i for i, t in enumerate(vocab)}, min_count, stop, excl)


def feature_indices(text: str, fs: FeatureSpace) -> list[int]:
    return sorted({fs.vocabulary[t] for t in tokenize(text) if t in fs.vocabulary})


def vectorize(post: Post, fs: FeatureSpace) -> np.ndarray:
    v = np.zeros(len(fs), dtype=np.float64)
    v[feature_indices(post.text, fs)] = 1.0
    return v


def _csr(posts: Sequence[Post], fs: FeatureSpace) -> tuple[np.ndarray, np.ndarray]:
    indptr = [0]
    indices: list[int] = []
    for p in posts:
        indices.extend(feature_indices(p.text, fs))
        indptr.append(len(indices))
    return np.asarray(indptr, dtype=np.int64), np.asarray(indices, dtype=np.int64)


def _visit_order(n: int, config: TrainConfig) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    return np.concatenate([rng.permutation(n) for _ in range(config.epochs)]) if n else np.empty(0, np.int64)


def train_sparse(indptr, indices, labels, dim: int, config: TrainConfig = TrainConfig(), backend=None) -> LinearModel:
    labels = np.asarray(labels, dtype=np.float64)
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ClassifierError("labels must be +1 or -1")
    npos = int(np.sum(labels > 0))
    nneg = len(labels) - npos
    if npos < 1 or nneg < 1:
        raise ClassifierError(f"single-class training set: {npos} bullish / {nneg} bearish")
    if not 0 < config.learning_rate * config.regularization < 1:
        raise ClassifierError("learning_rate * regularization must lie in (0, 1)")
    order = _visit_order(len(labels), config)
    w, b = kernels.hinge_sgd(
        indptr, indices, labels, order, config.learning_rate, config.regularization, dim, backend=backend
    )
    return LinearModel(w, float(b), config)


def train(vectors, labels, config: TrainConfig = TrainConfig(), backend=None) -> LinearModel:
    """Fit on dense binary vectors (rows of ``vectors``); labels are +1/-1."""
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2:
        raise ClassifierError("vectors must be a 2-d array")
    indptr = [0]
    indices: list[int] = []
    for row in X:
        indices.extend(np.flatnonzero(row).tolist())
        indptr.append(len(indices))
    return train_sparse(np.asarray(indptr), np.asarray(indices), labels, X.shape[1], config, backend)


def train_posts(posts: Sequence[Post], fs: FeatureSpace, config: TrainConfig = TrainConfig()) -> LinearModel:
    _labelled(posts)
    indptr, indices = _csr(posts, fs)
    labels = [p.label.sign for p in posts]
    return train_sparse(indptr, indices, labels, len(fs), config)


def predict(model: LinearModel, vector) -> int:
    """+1 bullish, -1 bearish; a decision value of exactly 0 counts as bullish."""
    return 1 if model.decision(vector) >= 0 else -1


def _predict_sparse(model: LinearModel, idx: Sequence[int]) -> int:
    value = float(np.sum(model.weights[list(idx)])) + model.bias if idx else model.bias
    return 1 if value >= 0 else -1


def stratified_folds(labels: Sequence[int], k: int, seed: int) -> list[np.ndarray]:
    """Deal each class's shuffled indices round-robin into ``k`` folds."""
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels)
    folds: list[list[int]] = [[] for _ in range(k)]
    slot = 0
    for cls in (1, -1):
        members = np.flatnonzero(labels == cls)
        for i in rng.permutation(members):
            folds[slot % k].append(int(i))
            slot += 1
    return [np.asarray(sorted(f), dtype=np.int64) for f in folds]


def cross_validate(
    posts: Sequence[Post],
    k: int = 10,
    config: TrainConfig = TrainConfig(),
    min_count: int = DEFAULT_MIN_COUNT,
    stopwords: Iterable[str] = (),
    excluded: Iterable[str] = (),
    keep_models: bool = False,
) -> CvReport:
    """Stratified k-fold accuracy; features are rebuilt on each training split."""
    if k < 2:
        raise ClassifierError("k must be at least 2")
    if len(posts) < k:
        raise ClassifierError(f"{len(posts)} labelled posts is fewer than k={k}")
    _labelled(posts)
    labels = [p.label.sign for p in posts]
    stop = frozenset(stopwords)
    excl = frozenset(excluded)
    accs = []
    confusion = [[0, 0], [0, 0]]
    models = []
    for f, test_idx in enumerate(stratified_folds(labels, k, config.seed)):
        test_set = set(test_idx.tolist())
        train_posts_ = [p for i, p in enumerate(posts) if i not in test_set]
        train_labels = {p.label.sign for p in train_posts_}
        if train_labels != {1, -1}:
            raise ClassifierError(f"fold {f}: training split lacks a class")
        fs = build_features(train_posts_, min_count, stop, excl)
        model = train_posts(train_posts_, fs, config)
        if keep_models:
            models.append((model, fs))
        correct = 0
        for i in test_idx.tolist():
            truth = labels[i]
            guess = _predict_sparse(model, feature_indices(posts[i].text, fs))
            correct += truth == guess
            confusion[0 if truth > 0 else 1][0 if guess > 0 else 1] += 1
        accs.append(correct / len(test_idx) if len(test_idx) else 0.0)
    return CvReport(accs, float(np.mean(accs)), confusion, models)


def label_corpus(model: LinearModel, fs: FeatureSpace, posts: Iterable[Post]) -> list[StockSentiment]:
    """Polarity for every message; author-supplied labels win over predictions."""
    out = []
    for p in posts:
        if p.kind is not Kind.MESSAGE:
            continue
        if p.label is not None:
            sign = p.label.sign
        else:
            sign = _predict_sparse(model, feature_indices(p.text, fs))
        for sym in p.symbols or (MARKET_SYMBOL,):
            out.append(
                StockSentiment(
                    post_id=p.post_id,
                    symbol=sym,
                    score=float(sign),
                    pos_count=0,
                    neg_count=0,
                    polarity=Polarity(sign),
                    author_id=p.author_id,
                    published_at=p.published_at,
                )
            )
    return out


def save_model(model: LinearModel, fs: FeatureSpace, path) -> None:
    vocab = sorted(fs.vocabulary, key=fs.vocabulary.__getitem__)
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "vocabulary": vocab,
        "weights": [float(w) for w in model.weights],
        "bias": model.bias,
        "config": asdict(model.config),
        "min_token_count": fs.min_token_count,
        "stopwords": sorted(fs.stopwords),
        "excluded": sorted(fs.excluded),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_model(path) -> tuple[LinearModel, FeatureSpace]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise ClassifierError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise ClassifierError(f"{path}: unsupported model version {doc.get('version')}")
    vocab = doc["vocabulary"]
    weights = np.asarray(doc["weights"], dtype=np.float64)
    if len(weights) != len(vocab):
        raise ClassifierError(f"{path}: {len(weights)} weights for {len(vocab)} features")
    fs = FeatureSpace(
        {t: i for i, t in enumerate(vocab)},
        int(doc["min_token_count"]),
        frozenset(doc.get("stopwords", ())),
        frozenset(doc.get("excluded", ())),
    )
    return LinearModel(weights, float(doc["bias"]), TrainConfig(**doc["config"])), fs
