import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarvote.corpus import Document, Polarity
from polarvote.features import Vocabulary, build_vocabulary, oov_rate, tokenize, vectorize
from polarvote.synthetic import DomainProfile, make_corpus


def doc(text):
    return Document("x", text, Polarity.NEUTRAL)


@pytest.mark.parametrize("text, tokens", [
    ("I don't like this phone", ["i", "don't", "like", "this", "phone"]),
    ("", []),
    ("@Mark Not you again...", ["mark", "not", "you", "again"]),
    ("it’s fine -- really!!", ["it's", "fine", "really"]),
    ("'quoted' v2.0 foo_bar", ["quoted", "v2", "0", "foo", "bar"]),
])
def test_tokenize(text, tokens):
    assert tokenize(text) == tokens


@given(st.text(max_size=60))
def test_tokenize_idempotent_on_joined_output(text):
    tokens = tokenize(text)
    assert tokenize(" ".join(tokens)) == tokens


def test_build_vocabulary_thresholds():
    docs = [doc("a b"), doc("a c")]
    v1 = build_vocabulary(docs, 1)
    assert v1.tokens == ("a", "b", "c")
    assert v1.doc_freq == (2, 1, 1)
    assert build_vocabulary(docs, 2).tokens == ("a",)
    with pytest.raises(ValueError):
        build_vocabulary([], 1)
    with pytest.raises(ValueError):
        build_vocabulary(docs, 0)


def test_document_frequency_counts_documents_not_tokens():
    v = build_vocabulary([doc("a a a"), doc("b")], 2)
    assert len(v) == 0


def test_vectorize():
    vocab = build_vocabulary([doc("a b c")])
    assert vectorize(doc("a a b"), vocab) == {0: 2, 1: 1}
    assert vectorize(doc("zzz qqq"), vocab) == {}


def test_oov_rate_on_held_out_split():
    corpus = make_corpus(DomainProfile("s", (334, 333, 333), seed=5))
    train, held = corpus.documents[:800], corpus.documents[800:]
    rate = oov_rate(held, build_vocabulary(train))
    assert 0.0 <= rate < 1.0


@given(st.lists(st.text(alphabet="abc d'", max_size=12), min_size=1, max_size=6),
       st.text(alphabet="abcde d'!", max_size=20))
def test_vectorize_properties(train_texts, probe):
    vocab = build_vocabulary([doc(t) for t in train_texts])
    vec = vectorize(doc(probe), vocab)
    assert all(0 <= i < len(vocab) for i in vec)
    assert all(c >= 1 for c in vec.values())
    in_vocab = [t for t in tokenize(probe) if t in vocab]
    assert sum(vec.values()) == len(in_vocab) <= len(tokenize(probe))


def test_vocabulary_file_round_trip(tmp_path):
    v = build_vocabulary([doc("b a"), doc("a c d")])
    v.save(tmp_path / "v.tsv")
    assert (tmp_path / "v.tsv").read_text().splitlines()[0] == "0\tb\t1"
    assert Vocabulary.load(tmp_path / "v.tsv") == v
    assert all(v.index[t] == i for i, t in enumerate(v.tokens))
