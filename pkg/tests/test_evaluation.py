from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarvote.corpus import Corpus, Document, Polarity
from polarvote.ensemble import EnsemblePrediction
from polarvote.evaluation import (Band, evaluate, fleiss_kappa, landis_koch_band,
                                  ratings_from_votes, stratified_kfold)

from conftest import N, P, U


def labelled(counts, prefix="d"):
    docs, i = [], 0
    for label, n in zip(Polarity, counts):
        for _ in range(n):
            docs.append(Document(f"{prefix}{i}", f"text {i}", label))
            i += 1
    return Corpus(prefix, tuple(docs))


# -- folds -------------------------------------------------------------------

def test_exact_divisibility():
    plan = stratified_kfold(labelled((5, 0, 5)), 5, seed=1)
    c = labelled((5, 0, 5))
    for f in range(5):
        _, test = plan.split(c, f)
        assert sorted(d.label for d in test) == [P, N]


def test_github_sized_fold_sizes():
    plan = stratified_kfold(labelled((2013, 3022, 2087)), 5, seed=0)
    assert sorted(set(plan.fold_sizes())) == [1424, 1425]
    assert sum(plan.fold_sizes()) == 7122


def test_fold_determinism_and_seed_sensitivity():
    c = labelled((40, 30, 20))
    assert stratified_kfold(c, 5, 3) == stratified_kfold(c, 5, 3)
    assert stratified_kfold(c, 5, 3) != stratified_kfold(c, 5, 4)


def test_fold_errors():
    with pytest.raises(ValueError):
        stratified_kfold(labelled((1, 1, 1)), 4, 0)
    with pytest.raises(ValueError):
        stratified_kfold(labelled((5, 5, 5)), 1, 0)


def test_small_class_round_robin():
    c = labelled((2, 10, 1))
    plan = stratified_kfold(c, 5, 0)
    for p, n in zip(Polarity, (2, 10, 1)):
        per_fold = [sum(1 for d in c if d.label is p and plan.fold_of(d.id) == f) for f in range(5)]
        assert all(abs(x - n // 5) <= 1 for x in per_fold)


def test_split_is_disjoint_and_ordered():
    c = labelled((7, 8, 9))
    plan = stratified_kfold(c, 3, 0)
    train, test = plan.split(c, 1)
    assert not {d.id for d in train} & {d.id for d in test}
    assert len(train) + len(test) == len(c)
    order = {d.id: i for i, d in enumerate(c)}
    assert [order[d.id] for d in test] == sorted(order[d.id] for d in test)


# -- metrics -----------------------------------------------------------------

def hand_metrics(pred, gold):
    """Exact rational metrics by direct counting."""
    out = {"accuracy": Fraction(sum(p == g for p, g in zip(pred, gold)), len(gold))}
    f1s = []
    for c in Polarity:
        tp = sum(p == c and g == c for p, g in zip(pred, gold))
        npred = sum(p == c for p in pred)
        ngold = sum(g == c for g in gold)
        prec = Fraction(tp, npred) if npred else Fraction(0)
        rec = Fraction(tp, ngold) if ngold else Fraction(0)
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else Fraction(0)
        out[c] = (prec, rec, f1)
        f1s.append(f1)
    out["macro_f1"] = sum(f1s) / 3
    return out


def test_worked_example():
    r = evaluate([P, N, N, U], [P, P, N, U])
    assert r.accuracy == 0.75
    assert r.f1 == pytest.approx((2 / 3, 1.0, 2 / 3), abs=1e-15)
    assert r.macro_f1 == pytest.approx(7 / 9, abs=1e-15)
    assert r.confusion.tolist() == [[1, 0, 1], [0, 1, 0], [0, 0, 1]]


def test_perfect_predictions():
    gold = [P, U, N, N, P]
    r = evaluate(gold, gold)
    assert (r.accuracy, r.macro_f1) == (1.0, 1.0)


def test_absent_class_contributes_zero_f1():
    r = evaluate([P, N], [P, N])
    assert r.accuracy == 1.0
    assert r.macro_f1 == pytest.approx(2 / 3)


def test_all_neutral_without_neutral_gold():
    r = evaluate([U] * 4, [P, N, P, N])
    assert (r.accuracy, r.macro_f1) == (0.0, 0.0)


def test_evaluate_errors():
    with pytest.raises(ValueError):
        evaluate([P], [P, N])
    with pytest.raises(ValueError):
        evaluate([], [])


labels = st.sampled_from(list(Polarity))


@given(st.integers(1, 30).flatmap(lambda n: st.tuples(st.lists(labels, min_size=n, max_size=n),
                                                      st.lists(labels, min_size=n, max_size=n))))
def test_metrics_against_exact_counts(pair):
    pred, gold = pair
    r = evaluate(pred, gold)
    h = hand_metrics(pred, gold)
    assert abs(r.accuracy - float(h["accuracy"])) < 1e-12
    for i, c in enumerate(Polarity):
        for got, want in zip((r.precision[i], r.recall[i], r.f1[i]), h[c]):
            assert abs(got - float(want)) < 1e-12
    assert abs(r.macro_f1 - float(h["macro_f1"])) < 1e-12
    # micro consistency
    assert r.accuracy == pytest.approx(np.trace(r.confusion) / r.confusion.sum())
    assert r.confusion.sum(axis=1).tolist() == [gold.count(c) for c in Polarity]


def test_metrics_text_blocks():
    r = evaluate([P, N, N, U], [P, P, N, U])
    text = r.as_text()
    assert "accuracy  0.7500" in text and "gold \\ pred" in text
    assert r.as_row()["f1_neutral"] == 1.0


# -- kappa -------------------------------------------------------------------

def pairwise_kappa(matrix):
    """Fleiss' kappa by enumerating rater pairs and pooled rating pairs."""
    ratings = [[j for j, c in enumerate(row) for _ in range(c)] for row in matrix]
    per_subject = []
    for r in ratings:
        pairs = list(combinations(r, 2))
        per_subject.append(Fraction(sum(a == b for a, b in pairs), len(pairs)))
    p_bar = sum(per_subject) / len(per_subject)
    pooled = [x for r in ratings for x in r]
    counts = [pooled.count(j) for j in range(len(matrix[0]))]
    p_e = Fraction(sum(c * c for c in counts), len(pooled) ** 2)
    return (p_bar - p_e) / (1 - p_e), p_bar, p_e


def test_kappa_examples():
    r = fleiss_kappa([[3, 0, 0], [0, 3, 0]])
    assert (r.mean_agreement, r.expected_agreement, r.kappa) == (1.0, 0.5, 1.0)
    assert fleiss_kappa([[3, 0, 0], [0, 0, 3], [0, 3, 0]]).kappa == 1.0


def test_kappa_degenerate_single_category():
    r = fleiss_kappa([[3, 0, 0], [3, 0, 0]])
    assert r.kappa == 1.0 and r.degenerate and r.band is Band.ALMOST_PERFECT


def test_kappa_all_distinct_rows():
    r = fleiss_kappa([[1, 1, 1]] * 4)
    assert r.mean_agreement == 0.0
    assert r.kappa == pytest.approx(-r.expected_agreement / (1 - r.expected_agreement))
    assert r.kappa < 0


def test_kappa_input_errors():
    with pytest.raises(ValueError, match="subject 1"):
        fleiss_kappa([[3, 0, 0], [1, 1, 0]])
    with pytest.raises(ValueError):
        fleiss_kappa([[1, 0, 0], [0, 1, 0]])
    with pytest.raises(ValueError):
        fleiss_kappa([[3, 0, 0]])


@settings(max_examples=200)
@given(st.integers(2, 20), st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_kappa_matches_pairwise(n_subjects, n_raters, seed):
    rng = np.random.default_rng(seed)
    matrix = np.array([np.bincount(rng.integers(0, 3, n_raters), minlength=3) for _ in range(n_subjects)])
    if (matrix.sum(axis=0) == matrix.sum()).any():
        return  # single-category: kappa undefined in the pairwise form
    want, p_bar, p_e = pairwise_kappa(matrix.tolist())
    r = fleiss_kappa(matrix)
    assert abs(r.kappa - float(want)) < 1e-12
    assert abs(r.mean_agreement - float(p_bar)) < 1e-12
    assert -1.0 <= r.kappa <= 1.0


def test_kappa_null_agreement_monte_carlo():
    rng = np.random.default_rng(7)
    matrix = np.array([np.bincount(rng.integers(0, 3, 3), minlength=3) for _ in range(10_000)])
    assert abs(fleiss_kappa(matrix).kappa) < 0.02


@pytest.mark.parametrize("kappa, band", [
    (0.83, Band.ALMOST_PERFECT), (0.68, Band.SUBSTANTIAL), (0.0, Band.SLIGHT),
    (-0.1, Band.POOR), (0.2, Band.SLIGHT), (0.2000001, Band.FAIR), (0.4, Band.FAIR),
    (0.42, Band.MODERATE), (0.6, Band.MODERATE), (0.8, Band.SUBSTANTIAL), (1.0, Band.ALMOST_PERFECT),
])
def test_landis_koch(kappa, band):
    assert landis_koch_band(kappa) is band


def test_landis_koch_out_of_range():
    for bad in (-1.5, 1.01):
        with pytest.raises(ValueError):
            landis_koch_band(bad)


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_landis_koch_monotone(a, b):
    order = list(Band)
    lo, hi = sorted((a, b))
    assert order.index(landis_koch_band(lo)) <= order.index(landis_koch_band(hi))


def test_ratings_from_votes():
    preds = [EnsemblePrediction((P, P, N), P, False), EnsemblePrediction((U, U, U), U, False)]
    assert ratings_from_votes(preds).tolist() == [[2, 0, 1], [0, 3, 0]]
    unanimous = [EnsemblePrediction((p, p, p), p, False) for p in (P, U, N, P)]
    assert fleiss_kappa(ratings_from_votes(unanimous)).kappa == 1.0
    with pytest.raises(ValueError):
        ratings_from_votes([preds[0], EnsemblePrediction((P, P, P, N, N), P, False)])
