import itertools
import subprocess
import sys
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarvote.classifiers import ClassifierSpec, Family, lexicon_model, train
from polarvote.corpus import Document, Polarity
from polarvote.ensemble import (EnsembleError, EnsemblePrediction, EnsembleSpec, VotingEnsemble,
                                disagreement_rate, doc_rng, ensemble_predict, format_percent,
                                majority_vote, write_vote_log)
from polarvote.synthetic import DomainProfile, make_corpus

from conftest import N, P, U


def brute_plurality(labels):
    counts = {p: sum(1 for x in labels if x == p) for p in Polarity}
    best = max(counts.values())
    return [p for p in Polarity if counts[p] == best]


class Const:
    """Stub member that always votes one label."""

    def __init__(self, label):
        self.label = label

    def predict(self, doc):
        return self.label

    def predict_batch(self, docs):
        return [self.label] * len(docs)


def test_examples():
    rng = np.random.default_rng(0)
    assert majority_vote([P, P, N], rng) == (P, False)
    assert majority_vote([U, U, U], rng) == (U, False)


def test_all_triples_against_enumeration():
    rng = np.random.default_rng(1)
    ties = 0
    for triple in itertools.product(Polarity, repeat=3):
        leaders = brute_plurality(triple)
        label, tie = majority_vote(list(triple), rng)
        assert label in leaders
        assert tie == (len(leaders) > 1)
        ties += tie
    assert ties == 6


def test_tie_draw_is_seeded():
    first = majority_vote([P, U, N], np.random.default_rng(42))
    for _ in range(5):
        assert majority_vote([P, U, N], np.random.default_rng(42)) == first
    assert first[1] is True


def test_tie_draw_stable_across_processes():
    code = ("import numpy as np; from polarvote.ensemble import majority_vote, doc_rng;"
            "from polarvote.corpus import Polarity as P;"
            "print([majority_vote([P.POSITIVE, P.NEUTRAL, P.NEGATIVE], doc_rng(42, i))[0].value for i in range(20)])")
    outs = {subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout
            for _ in range(2)}
    assert len(outs) == 1


def test_tie_only_among_leaders_for_larger_ensembles():
    rng = np.random.default_rng(3)
    seen = Counter(majority_vote([P, P, N, N, U], rng)[0] for _ in range(2000))
    assert set(seen) == {P, N}


def test_uniform_tie_break():
    rng = np.random.default_rng(2024)
    n = 100_000
    counts = Counter(majority_vote([P, U, N], rng)[0] for _ in range(n))
    sigma = (n * (1 / 3) * (2 / 3)) ** 0.5
    for p in Polarity:
        assert abs(counts[p] - n / 3) <= 3 * sigma


@pytest.mark.parametrize("labels", [[], [P, N], [P, P, N, N]])
def test_even_or_empty_rejected(labels):
    with pytest.raises(EnsembleError):
        majority_vote(labels, np.random.default_rng(0))


def test_ensemble_predict_flags():
    rng = np.random.default_rng(0)
    same = ensemble_predict([Const(P)] * 3, "x", rng)
    assert (same.final, same.all_disagree, same.tie_broken_randomly) == (P, False, False)
    split = ensemble_predict([Const(P), Const(U), Const(N)], "x", rng)
    assert split.votes == (P, U, N)
    assert split.all_disagree and split.tie_broken_randomly


@given(st.lists(st.sampled_from(list(Polarity)), min_size=3, max_size=3), st.integers(0, 2**32))
def test_three_member_flags_coincide(votes, seed):
    pred = ensemble_predict([Const(v) for v in votes], "x", np.random.default_rng(seed))
    assert pred.tie_broken_randomly == pred.all_disagree == (len(set(votes)) == 3)


@given(st.permutations([P, P, N, U, N]), st.integers(0, 1000))
def test_member_order_does_not_change_outcome(votes, seed):
    a = majority_vote(votes, np.random.default_rng(seed))
    b = majority_vote(sorted(votes), np.random.default_rng(seed))
    assert a == b


def test_member_count_rules():
    for n in (1, 2, 4):
        with pytest.raises(EnsembleError):
            VotingEnsemble([Const(P)] * n)
    spec = ClassifierSpec(Family.LEXICON)
    EnsembleSpec("2.1", (spec,) * 3)
    with pytest.raises(EnsembleError):
        EnsembleSpec("2", (spec,) * 3)
    with pytest.raises(EnsembleError):
        EnsembleSpec("2.1", (spec,) * 1)


def test_identical_models_follow_the_single_model():
    corpus = make_corpus(DomainProfile("s", (50, 50, 50), seed=4))
    model = train(ClassifierSpec(Family.NAIVE_BAYES, "s"), corpus.documents)
    preds = VotingEnsemble([model] * 3).predict_corpus(corpus.documents, seed=1)
    assert [p.final for p in preds] == model.predict_batch(corpus.documents)
    assert disagreement_rate(preds) == 0.0


def test_parallel_lanes_match_sequential():
    docs = [Document(str(i), "x", U) for i in range(300)]
    ens = VotingEnsemble([Const(P), Const(U), Const(N)])
    seq = ens.predict_corpus(docs, seed=5)
    par = ens.predict_corpus(docs, seed=5, workers=4)
    assert seq == par
    assert seq[0] == EnsemblePrediction((P, U, N), majority_vote([P, U, N], doc_rng(5, 0))[0], True)


def test_disagreement_rate_examples():
    unanimous = EnsemblePrediction((P, P, P), P, False)
    split = EnsemblePrediction((P, U, N), U, True)
    assert disagreement_rate([unanimous] * 10) == 0.0
    one_in_125 = [split] + [unanimous] * 124
    assert disagreement_rate(one_in_125) == 0.008
    assert format_percent(disagreement_rate(one_in_125)) == "0.8%"
    assert disagreement_rate([split] * 12 + [unanimous] * 88) == 0.12
    with pytest.raises(EnsembleError):
        disagreement_rate([])


def test_vote_log(tmp_path):
    docs = [Document("a", "x", P), Document("b", "y", N)]
    preds = [EnsemblePrediction((P, P, N), P, False), EnsemblePrediction((P, U, N), N, True)]
    write_vote_log(tmp_path / "v.csv", docs, preds)
    assert (tmp_path / "v.csv").read_text().splitlines() == [
        "doc_id,member1,member2,member3,final,tie",
        "a,positive,positive,negative,positive,false",
        "b,positive,neutral,negative,negative,true",
    ]


def test_lexicon_ensemble_end_to_end():
    ens = VotingEnsemble([lexicon_model()] * 3)
    assert ens.predict("awesome", np.random.default_rng(0)).final is P
