"""Labeled polarity corpora: CSV ingestion, emotion mapping, dedup and stats."""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import IntEnum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence


class Polarity(IntEnum):
    # value order doubles as the fixed tie-break order
    POSITIVE = 0
    NEUTRAL = 1
    NEGATIVE = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> "Polarity":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown polarity label {text!r}") from None


POLARITIES = tuple(Polarity)

# Published class counts of the five evaluation corpora: (positive, neutral, negative)
REFERENCE_DISTRIBUTIONS = {
    "API": (890, 3136, 496),
    "APP": (186, 25, 130),
    "GitHub": (2013, 3022, 2087),
    "JIRA": (290, 3058, 626),
    "StackOverflow": (1527, 1694, 1202),
}

SHORT_NAMES = {
    "API": "API",
    "APP": "APP",
    "GitHub": "G",
    "JIRA": "J",
    "StackOverflow": "SO",
}


class CorpusError(ValueError):
    """Base class for ingestion diagnostics."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class MalformedRowError(CorpusError):
    pass


class UnknownLabelError(CorpusError):
    pass


class DuplicateIdError(CorpusError):
    pass


class EmptyTextError(CorpusError):
    pass


class UnmappedEmotionError(CorpusError):
    def __init__(self, emotion: str, row: int | None = None):
        self.emotion = emotion
        super().__init__(f"no polarity mapping for emotion {emotion!r}", row)


class DistributionMismatchError(CorpusError):
    pass


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    label: Polarity


@dataclass(frozen=True)
class EmotionDocument:
    id: str
    text: str
    emotion: str


@dataclass(frozen=True)
class Corpus:
    name: str
    documents: tuple[Document, ...]
    distribution: Mapping[Polarity, int] = field(init=False, compare=False)

    def __post_init__(self):
        docs = tuple(self.documents)
        object.__setattr__(self, "documents", docs)
        seen = set()
        for i, doc in enumerate(docs, start=1):
            if doc.id in seen:
                raise DuplicateIdError(f"duplicate id {doc.id!r}", i)
            if not doc.text.strip():
                raise EmptyTextError(f"empty text for id {doc.id!r}", i)
            seen.add(doc.id)
        counts = Counter(doc.label for doc in docs)
        object.__setattr__(self, "distribution", {p: counts.get(p, 0) for p in POLARITIES})

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    @property
    def labels(self) -> list[Polarity]:
        return [d.label for d in self.documents]


@dataclass(frozen=True)
class EmotionCorpus:
    name: str
    documents: tuple[EmotionDocument, ...]


def _read_rows(path, columns: Sequence[str]):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"corpus file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRowError("file is empty, expected header " + ",".join(columns), 0)
        if [h.strip().lower() for h in header] != list(columns):
            raise MalformedRowError(
                f"expected header {','.join(columns)!r}, got {','.join(header)!r}", 0
            )
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(columns):
                raise MalformedRowError(
                    f"expected {len(columns)} columns, got {len(row)}", row_no
                )
            yield row_no, row


def _check_row(row_no, doc_id, text, seen):
    if not doc_id.strip():
        raise MalformedRowError("empty id", row_no)
    if doc_id in seen:
        raise DuplicateIdError(f"duplicate id {doc_id!r}", row_no)
    if not text.strip():
        raise EmptyTextError(f"empty text for id {doc_id!r}", row_no)
    seen.add(doc_id)


def load_corpus(path, name: str | None = None) -> Corpus:
    """Read an ``id,text,label`` CSV file into a :class:`Corpus`.

    Row numbers in diagnostics count data rows from 1 (the header is row 0).
    """
    docs = []
    seen: set[str] = set()
    for row_no, (doc_id, text, label) in _read_rows(path, ("id", "text", "label")):
        _check_row(row_no, doc_id, text, seen)
        try:
            polarity = Polarity.parse(label)
        except ValueError:
            raise UnknownLabelError(f"unknown label {label!r}", row_no) from None
        docs.append(Document(doc_id, text, polarity))
    return Corpus(name or Path(path).stem, tuple(docs))


def load_emotion_corpus(path, name: str | None = None) -> EmotionCorpus:
    docs = []
    seen: set[str] = set()
    for row_no, (doc_id, text, emotion) in _read_rows(path, ("id", "text", "emotion")):
        _check_row(row_no, doc_id, text, seen)
        if not emotion.strip():
            raise MalformedRowError(f"empty emotion for id {doc_id!r}", row_no)
        docs.append(EmotionDocument(doc_id, text, emotion.strip().lower()))
    return EmotionCorpus(name or Path(path).stem, tuple(docs))


def sniff_header(path) -> list[str]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [h.strip().lower() for h in next(csv.reader(fh), [])]


def write_corpus(corpus: Corpus, path) -> None:
    """Write ``corpus`` in the canonical CSV dialect read by :func:`load_corpus`."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "text", "label"])
        for doc in corpus.documents:
            writer.writerow([doc.id, doc.text, doc.label.label])


# -- emotion mapping ---------------------------------------------------------

def parse_emotion_mapping(lines: Iterable[str]) -> dict[str, Polarity]:
    mapping = {}
    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"mapping line {line_no}: expected emotion=polarity, got {raw.strip()!r}")
        emotion, polarity = (part.strip() for part in line.split("=", 1))
        try:
            mapping[emotion.lower()] = Polarity.parse(polarity)
        except ValueError as exc:
            raise ValueError(f"mapping line {line_no}: {exc}") from None
    return mapping


def load_emotion_mapping(path=None) -> dict[str, Polarity]:
    """Load an ``emotion=polarity`` file; the shipped default when ``path`` is None."""
    if path is None:
        text = resources.files("polarvote.data").joinpath("emotion_map.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_emotion_mapping(text.splitlines())


def map_emotions(raw: EmotionCorpus, mapping: Mapping[str, Polarity]) -> Corpus:
    docs = []
    for row_no, doc in enumerate(raw.documents, start=1):
        emotion = doc.emotion.lower()
        if emotion not in mapping:
            raise UnmappedEmotionError(doc.emotion, row_no)
        docs.append(Document(doc.id, doc.text, mapping[emotion]))
    return Corpus(raw.name, tuple(docs))


# -- dedup -------------------------------------------------------------------

_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    return _WS.sub(" ", text.lower()).strip()


def deduplicate(corpus: Corpus) -> Corpus:
    """Collapse documents with equal normalized text.

    The first occurrence of each group survives, relabelled with the group's
    plurality label; groups whose labels tie are dropped entirely.
    """
    groups: dict[str, list[Document]] = {}
    for doc in corpus.documents:
        groups.setdefault(normalize_text(doc.text), []).append(doc)
    kept = []
    for members in groups.values():
        counts = Counter(d.label for d in members).most_common()
        if len(counts) > 1 and counts[0][1] == counts[1][1]:
            continue
        first = members[0]
        label = counts[0][0]
        kept.append(first if first.label == label else Document(first.id, first.text, label))
    # dict preserves first-occurrence order of groups
    return Corpus(corpus.name, tuple(kept))


# -- distribution ------------------------------------------------------------

def _percent(count: int, total: int) -> Decimal:
    if total == 0:
        return Decimal("0.0")
    return (Decimal(100 * count) / Decimal(total)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class DistributionReport:
    name: str
    total: int
    counts: Mapping[Polarity, int]
    percentages: Mapping[Polarity, Decimal]

    def cell(self, polarity: Polarity) -> str:
        return f"{self.counts[polarity]} ({self.percentages[polarity]}%)"

    def row(self) -> str:
        cells = " | ".join(self.cell(p) for p in POLARITIES)
        return f"| {self.name} | {self.total} | {cells} |"

    def as_text(self) -> str:
        header = "| Data set | #Docs | #Positive (%) | #Neutral (%) | #Negative (%) |"
        return "\n".join([header, "|---|---|---|---|---|", self.row()])


def distribution_report(corpus: Corpus) -> DistributionReport:
    total = len(corpus)
    counts = dict(corpus.distribution)
    return DistributionReport(
        corpus.name, total, counts, {p: _percent(counts[p], total) for p in POLARITIES}
    )


def check_distribution(corpus: Corpus, expected: Sequence[int]) -> None:
    """Raise :class:`DistributionMismatchError` unless counts equal ``expected``.

    ``expected`` is ``(positive, neutral, negative)``.
    """
    actual = tuple(corpus.distribution[p] for p in POLARITIES)
    if actual != tuple(expected):
        raise DistributionMismatchError(
            f"corpus {corpus.name!r}: class counts (pos, neu, neg) = {actual}, "
            f"expected {tuple(expected)} (total {len(corpus)} vs {sum(expected)})"
        )


def resolve_expected(spec) -> tuple[int, int, int] | None:
    """Turn a config ``expect`` value into counts: a reference corpus name or a triple."""
    if spec is None:
        return None
    if isinstance(spec, str):
        if spec not in REFERENCE_DISTRIBUTIONS:
            raise ValueError(
                f"unknown reference distribution {spec!r}; known: {sorted(REFERENCE_DISTRIBUTIONS)}"
            )
        return REFERENCE_DISTRIBUTIONS[spec]
    counts = tuple(int(c) for c in spec)
    if len(counts) != 3:
        raise ValueError(f"expected three class counts, got {spec!r}")
    return counts


def short_name(name: str) -> str:
    return SHORT_NAMES.get(name, name)
