"""Per-stock sentiment records shared by both extractors, plus CSV I/O."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable

from .corpus import utc_date

CSV_FIELDS = ["post_id", "symbol", "score", "polarity", "author", "ts"]


class Polarity(enum.IntEnum):
    NEGATIVE = -1
    NEUTRAL = 0
    POSITIVE = 1

    @classmethod
    def of(cls, score: float) -> "Polarity":
        if score > 0:
            return cls.POSITIVE
        if score < 0:
            return cls.NEGATIVE
        return cls.NEUTRAL


@dataclass(frozen=True)
class StockSentiment:
    post_id: str
    symbol: str
    score: float
    pos_count: int
    neg_count: int
    polarity: Polarity
    author_id: str = ""
    published_at: int = 0

    @property
    def day(self) -> date:
        return utc_date(self.published_at)


def write_sentiments(rows: Iterable[StockSentiment], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for s in rows:
            w.writerow([s.post_id, s.symbol, repr(float(s.score)), int(s.polarity), s.author_id, s.published_at])


def read_sentiments(path) -> list[StockSentiment]:
    out = []
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_FIELDS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: sentiment CSV missing columns {sorted(missing)}")
        for row in reader:
            out.append(
                StockSentiment(
                    post_id=row["post_id"],
                    symbol=row["symbol"],
                    score=float(row["score"]),
                    pos_count=0,
                    neg_count=0,
                    polarity=Polarity(int(row["polarity"])),
                    author_id=row["author"],
                    published_at=int(row["ts"]),
                )
            )
    return out
