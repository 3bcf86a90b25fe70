"""Tokenization and bag-of-words vectors over a training vocabulary."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Document

# letters/digits, optionally joined by intra-word apostrophes ("don't")
_TOKEN = re.compile(r"[^\W_]+(?:'[^\W_]+)*")
_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "`": "'"})


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower().translate(_APOSTROPHES))


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    doc_freq: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})
        if len(self.index) != len(self.tokens):
            raise ValueError("vocabulary tokens must be unique")
        if len(self.doc_freq) != len(self.tokens):
            raise ValueError("doc_freq length must match tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token) -> bool:
        return token in self.index

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for i, (tok, df) in enumerate(zip(self.tokens, self.doc_freq)):
                fh.write(f"{i}\t{tok}\t{df}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        tokens, dfs = [], []
        for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line:
                continue
            idx, tok, df = line.split("\t")
            if int(idx) != len(tokens):
                raise ValueError(f"{path}:{line_no}: non-dense index {idx}")
            tokens.append(tok)
            dfs.append(int(df))
        return cls(tuple(tokens), tuple(dfs))


def build_vocabulary(train_docs: Sequence[Document], min_df: int = 1) -> Vocabulary:
    """Vocabulary of tokens occurring in at least ``min_df`` training documents.

    Token indices follow first appearance in ``train_docs``.
    """
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    if not train_docs:
        raise ValueError("cannot build a vocabulary from an empty training set")
    df: dict[str, int] = {}
    for doc in train_docs:
        for tok in dict.fromkeys(tokenize(doc.text)):
            df[tok] = df.get(tok, 0) + 1
    kept = [(t, n) for t, n in df.items() if n >= min_df]
    return Vocabulary(tuple(t for t, _ in kept), tuple(n for _, n in kept))


def vectorize(doc: Document | str, vocab: Vocabulary) -> dict[int, int]:
    text = doc if isinstance(doc, str) else doc.text
    counts: dict[int, int] = {}
    for tok in tokenize(text):
        i = vocab.index.get(tok)
        if i is not None:
            counts[i] = counts.get(i, 0) + 1
    return counts


def vectorize_arrays(doc: Document | str, vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    """Sparse vector as parallel ``(indices, counts)`` arrays, indices ascending."""
    counts = vectorize(doc, vocab)
    idx = np.fromiter(sorted(counts), dtype=np.intp, count=len(counts))
    return idx, np.array([counts[i] for i in idx], dtype=np.float64)


def oov_rate(docs: Iterable[Document], vocab: Vocabulary) -> float:
    total = oov = 0
    for doc in docs:
        for tok in tokenize(doc.text):
            total += 1
            oov += tok not in vocab.index
    return oov / total if total else 0.0
