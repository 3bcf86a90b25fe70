"""Stratified folds, classification metrics and Fleiss' kappa."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .corpus import POLARITIES, Corpus, Document, Polarity
from .ensemble import EnsemblePrediction

N_CLASSES = len(POLARITIES)


# -- folds -------------------------------------------------------------------

@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    assignments: dict[str, int]

    def fold_of(self, doc_id: str) -> int:
        return self.assignments[doc_id]

    def split(self, corpus: Corpus, fold: int) -> tuple[list[Document], list[Document]]:
        """``(train, test)`` for ``fold``, each in corpus order."""
        train, test = [], []
        for doc in corpus.documents:
            (test if self.assignments[doc.id] == fold else train).append(doc)
        return train, test

    def fold_sizes(self) -> list[int]:
        return np.bincount(list(self.assignments.values()), minlength=self.k).tolist()


def stratified_kfold(corpus: Corpus, k: int, seed: int) -> FoldPlan:
    """Shuffle each class with ``seed``, then deal classes round-robin onto folds.

    The deal continues across classes from where the previous class stopped,
    so per-class fold counts differ by at most one and so do fold sizes.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > len(corpus):
        raise ValueError(f"k={k} exceeds the {len(corpus)} documents of {corpus.name!r}")
    rng = np.random.default_rng(seed)
    assignments: dict[str, int] = {}
    cursor = 0
    for polarity in POLARITIES:
        ids = [d.id for d in corpus.documents if d.label is polarity]
        for pos in rng.permutation(len(ids)):
            assignments[ids[pos]] = cursor % k
            cursor += 1
    return FoldPlan(k, seed, assignments)


# -- metrics -----------------------------------------------------------------

@dataclass(frozen=True)
class MetricsReport:
    confusion: np.ndarray  # [gold][predicted]
    accuracy: float
    precision: tuple[float, float, float]
    recall: tuple[float, float, float]
    f1: tuple[float, float, float]
    macro_f1: float

    def as_text(self) -> str:
        names = [p.label for p in POLARITIES]
        lines = [f"accuracy  {self.accuracy:.4f}", f"macro-F1  {self.macro_f1:.4f}", "",
                 f"{'class':<10}{'precision':>10}{'recall':>10}{'F1':>10}"]
        for i, name in enumerate(names):
            lines.append(f"{name:<10}{self.precision[i]:>10.4f}{self.recall[i]:>10.4f}{self.f1[i]:>10.4f}")
        lines += ["", confusion_table(self.confusion)]
        return "\n".join(lines)

    def as_row(self) -> dict[str, float]:
        row = {"accuracy": self.accuracy, "macro_f1": self.macro_f1}
        for i, p in enumerate(POLARITIES):
            row[f"precision_{p.label}"] = self.precision[i]
            row[f"recall_{p.label}"] = self.recall[i]
            row[f"f1_{p.label}"] = self.f1[i]
        return row


def confusion_table(confusion: np.ndarray) -> str:
    names = [p.label for p in POLARITIES]
    width = max(10, *(len(str(v)) + 2 for v in confusion.ravel()))
    lines = ["gold \\ pred".ljust(12) + "".join(n.rjust(width) for n in names)]
    for i, name in enumerate(names):
        lines.append(name.ljust(12) + "".join(str(v).rjust(width) for v in confusion[i]))
    return "\n".join(lines)


def _ratio(num, den) -> Fraction:
    return Fraction(int(num), int(den)) if den else Fraction(0)


def evaluate(predicted: Sequence[Polarity], gold: Sequence[Polarity]) -> MetricsReport:
    """Accuracy and per-class / macro scores. Undefined ratios count as 0.

    Scores are computed exactly from the counts and rounded once, so each
    reported float is the nearest double to the true value.
    """
    if len(predicted) != len(gold):
        raise ValueError(f"length mismatch: {len(predicted)} predictions vs {len(gold)} gold labels")
    if not gold:
        raise ValueError("cannot evaluate an empty prediction list")
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for g, p in zip(gold, predicted):
        confusion[int(g), int(p)] += 1
    tp = np.diag(confusion)
    precision, recall, f1 = [], [], []
    for c in range(N_CLASSES):
        pr = _ratio(tp[c], confusion[:, c].sum())
        rc = _ratio(tp[c], confusion[c, :].sum())
        precision.append(pr)
        recall.append(rc)
        f1.append(2 * pr * rc / (pr + rc) if pr + rc else Fraction(0))
    return MetricsReport(
        confusion,
        float(_ratio(tp.sum(), confusion.sum())),
        tuple(map(float, precision)), tuple(map(float, recall)), tuple(map(float, f1)),
        float(sum(f1) / N_CLASSES),
    )


# -- agreement ---------------------------------------------------------------

class Band(str, Enum):
    POOR = "Poor"
    SLIGHT = "Slight"
    FAIR = "Fair"
    MODERATE = "Moderate"
    SUBSTANTIAL = "Substantial"
    ALMOST_PERFECT = "AlmostPerfect"


# closed upper bounds
_BANDS = ((0.20, Band.SLIGHT), (0.40, Band.FAIR), (0.60, Band.MODERATE),
          (0.80, Band.SUBSTANTIAL), (1.00, Band.ALMOST_PERFECT))
_EPS = 1e-12


def landis_koch_band(kappa: float) -> Band:
    if not -1.0 - _EPS <= kappa <= 1.0 + _EPS:
        raise ValueError(f"kappa {kappa} outside [-1, 1]")
    if kappa < 0:
        return Band.POOR
    for upper, band in _BANDS:
        if kappa <= upper:
            return band
    return Band.ALMOST_PERFECT


@dataclass(frozen=True)
class AgreementReport:
    kappa: float
    band: Band
    mean_agreement: float  # P-bar
    expected_agreement: float  # P-bar-e
    degenerate: bool = False  # every rating fell into one category

    def as_text(self) -> str:
        flag = " (degenerate: single category)" if self.degenerate else ""
        return (f"Fleiss kappa {self.kappa:.4f} [{self.band.value}]{flag}\n"
                f"observed agreement {self.mean_agreement:.4f}, "
                f"expected agreement {self.expected_agreement:.4f}")


def _as_rating_matrix(matrix) -> np.ndarray:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] < 2:
        raise ValueError("rating matrix must be 2-dimensional with at least two subjects")
    if (m < 0).any() or not np.array_equal(m, np.round(m)):
        raise ValueError("rating matrix entries must be non-negative integer counts")
    m = m.astype(np.int64)
    sums = m.sum(axis=1)
    if (sums != sums[0]).any():
        bad = int(np.flatnonzero(sums != sums[0])[0])
        raise ValueError(f"subject {bad} has {sums[bad]} ratings, expected {sums[0]} like subject 0")
    if sums[0] < 2:
        raise ValueError("Fleiss' kappa needs at least 2 raters per subject")
    return m


def fleiss_kappa(matrix) -> AgreementReport:
    """Fleiss' kappa for an N x k matrix of per-category rating counts."""
    m = _as_rating_matrix(matrix)
    n_subjects = m.shape[0]
    n = int(m[0].sum())
    per_subject = ((m * m).sum(axis=1) - n) / (n * (n - 1))
    p_bar = float(per_subject.mean())
    p_j = m.sum(axis=0) / (n_subjects * n)
    p_e = float((p_j * p_j).sum())
    if p_e >= 1.0 - _EPS:
        return AgreementReport(1.0, Band.ALMOST_PERFECT, p_bar, p_e, degenerate=True)
    kappa = (p_bar - p_e) / (1.0 - p_e)
    return AgreementReport(kappa, landis_koch_band(kappa), p_bar, p_e)


def ratings_from_votes(predictions: Sequence[EnsemblePrediction]) -> np.ndarray:
    if not predictions:
        raise ValueError("no predictions")
    n = len(predictions[0].votes)
    matrix = np.zeros((len(predictions), N_CLASSES), dtype=np.int64)
    for i, pred in enumerate(predictions):
        if len(pred.votes) != n:
            raise ValueError(f"prediction {i} has {len(pred.votes)} votes, expected {n}")
        for v in pred.votes:
            matrix[i, int(v)] += 1
    return matrix
