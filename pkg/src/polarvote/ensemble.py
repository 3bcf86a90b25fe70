"""Majority-vote ensembles with seeded random tie-breaking.

Randomness comes from numpy ``Generator`` objects (PCG64). Whole-corpus
prediction gives document ``i`` its own stream derived from
``SeedSequence(seed, spawn_key=(i,))``, so results do not depend on the
order or lane in which documents are processed.
"""

from __future__ import annotations

import csv
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classifiers import ClassifierModel, ClassifierSpec
from .corpus import POLARITIES, Document, Polarity

_RUN_ID = re.compile(r"^\d+\.\d+$")


class EnsembleError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleSpec:
    id: str
    members: tuple[ClassifierSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        check_member_count(len(self.members))
        if not _RUN_ID.match(self.id):
            raise EnsembleError(f"run id {self.id!r} must look like '<grid-id>.<usage>'")


@dataclass(frozen=True)
class EnsemblePrediction:
    votes: tuple[Polarity, ...]
    final: Polarity
    tie_broken_randomly: bool

    @property
    def all_disagree(self) -> bool:
        return len(set(self.votes)) == len(self.votes)


def check_member_count(n: int) -> None:
    if n < 3 or n % 2 == 0:
        raise EnsembleError(f"an ensemble needs an odd number of at least 3 members, got {n}")


def doc_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def majority_vote(labels: Sequence[Polarity], rng: np.random.Generator) -> tuple[Polarity, bool]:
    """Plurality label, or a uniform draw among the tied leaders.

    Returns ``(label, tie_broken)``.
    """
    if not labels or len(labels) % 2 == 0:
        raise EnsembleError(f"majority_vote needs a non-empty odd-length label list, got {len(labels)}")
    counts = [labels.count(p) for p in POLARITIES]
    top = max(counts)
    leaders = [p for p, c in zip(POLARITIES, counts) if c == top]
    if len(leaders) == 1:
        return leaders[0], False
    return leaders[int(rng.integers(len(leaders)))], True


def ensemble_predict(models: Sequence[ClassifierModel], doc: Document | str,
                     rng: np.random.Generator) -> EnsemblePrediction:
    check_member_count(len(models))
    votes = tuple(m.predict(doc) for m in models)
    final, tie = majority_vote(votes, rng)
    return EnsemblePrediction(votes, final, tie)


class VotingEnsemble:
    """Odd-sized committee of trained base classifiers."""

    def __init__(self, models: Sequence[ClassifierModel], spec: EnsembleSpec | None = None):
        check_member_count(len(models))
        self.models = tuple(models)
        self.spec = spec

    def predict(self, doc, rng) -> EnsemblePrediction:
        return ensemble_predict(self.models, doc, rng)

    def predict_corpus(self, docs: Sequence[Document], seed: int,
                       workers: int = 1) -> list[EnsemblePrediction]:
        """Predict every document; bit-identical for any ``workers`` count."""
        member_votes = [m.predict_batch(docs) for m in self.models]

        def lane(i):
            votes = tuple(v[i] for v in member_votes)
            final, tie = majority_vote(votes, doc_rng(seed, i))
            return EnsemblePrediction(votes, final, tie)

        if workers <= 1:
            return [lane(i) for i in range(len(docs))]
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lane, range(len(docs))))


def disagreement_rate(predictions: Sequence[EnsemblePrediction]) -> float:
    if not predictions:
        raise EnsembleError("disagreement rate of an empty prediction list")
    return sum(p.all_disagree for p in predictions) / len(predictions)


def format_percent(fraction: float) -> str:
    return f"{100 * fraction:.1f}%"


def write_vote_log(dest, docs: Sequence[Document], predictions: Sequence[EnsemblePrediction]) -> None:
    """Per-document votes as ``doc_id,member1..n,final,tie`` CSV; ``dest`` is a path or text stream."""
    if not hasattr(dest, "write"):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            return write_vote_log(fh, docs, predictions)
    n = len(predictions[0].votes) if predictions else 3
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(["doc_id", *(f"member{i + 1}" for i in range(n)), "final", "tie"])
    for doc, pred in zip(docs, predictions):
        writer.writerow([doc.id, *(v.label for v in pred.votes), pred.final.label,
                         str(pred.tie_broken_randomly).lower()])
