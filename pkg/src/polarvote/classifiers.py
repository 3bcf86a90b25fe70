"""Base polarity classifiers behind one train/predict contract.

Three families fill the ensemble slots:

* ``Lexicon``: training-free word-valence scorer with negation flipping.
* ``NaiveBayes``: multinomial naive Bayes with Laplace smoothing.
* ``Logistic``: multinomial softmax regression trained by SGD.

Every ``predict`` resolves score ties by the fixed order
positive < neutral < negative, so base classifiers stay deterministic.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .corpus import POLARITIES, Document, Polarity
from ._sgd import mean_cross_entropy, sgd_epoch
from .features import Vocabulary, build_vocabulary, tokenize, vectorize_arrays

N_CLASSES = len(POLARITIES)
NEGATORS = frozenset({"not", "no", "never", "n't"})
FORMAT_TAG = "polarvote-model v1"


class Family(str, Enum):
    LEXICON = "Lexicon"
    NAIVE_BAYES = "NaiveBayes"
    LOGISTIC = "Logistic"

    @classmethod
    def parse(cls, text: str) -> "Family":
        key = text.strip().lower().replace("_", "").replace("-", "")
        for fam in cls:
            if fam.value.lower() == key:
                return fam
        aliases = {"nb": cls.NAIVE_BAYES, "lr": cls.LOGISTIC, "lex": cls.LEXICON}
        if key in aliases:
            return aliases[key]
        raise ValueError(f"unknown classifier family {text!r}")


FAMILY_ORDER = (Family.LEXICON, Family.NAIVE_BAYES, Family.LOGISTIC)

DEFAULTS: dict[Family, dict[str, Any]] = {
    Family.LEXICON: {"negation_window": 2},
    Family.NAIVE_BAYES: {"alpha": 1.0, "min_df": 1},
    Family.LOGISTIC: {"epochs": 20, "learning_rate": 0.1, "l2": 1e-4, "min_df": 1},
}


class DegenerateTrainingError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierSpec:
    family: Family
    training_corpus: str = "none"
    hyperparameters: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family) if isinstance(self.family, str) else self.family)
        unknown = set(self.hyperparameters) - set(DEFAULTS[self.family])
        if unknown:
            raise ValueError(f"{self.family.value}: unknown hyperparameters {sorted(unknown)}")
        merged = {**DEFAULTS[self.family], **self.hyperparameters}
        object.__setattr__(self, "hyperparameters", merged)
        if self.family is not Family.LEXICON and self.training_corpus in ("", "none"):
            raise ValueError(f"{self.family.value} needs a training corpus name")

    def __getitem__(self, key):
        return self.hyperparameters[key]

    @property
    def label(self) -> str:
        return f"{self.family.value}:{self.training_corpus}"


# -- lexicon -----------------------------------------------------------------

def load_lexicon(path=None) -> dict[str, int]:
    if path is None:
        text = resources.files("polarvote.data").joinpath("lexicon.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    table = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            word, valence = line.split("\t")
            table[word] = int(valence)
    return table


def _is_negator(token: str) -> bool:
    return token in NEGATORS or token.endswith("n't")


class _Model:
    spec: ClassifierSpec

    def predict(self, doc: Document | str) -> Polarity:
        return POLARITIES[int(np.argmax(self.scores(doc)))]

    def predict_batch(self, docs: Sequence[Document | str]) -> list[Polarity]:
        return [self.predict(d) for d in docs]


@dataclass(frozen=True, eq=False)
class LexiconModel(_Model):
    spec: ClassifierSpec
    lexicon: Mapping[str, int]

    def score(self, doc: Document | str) -> int:
        tokens = tokenize(doc if isinstance(doc, str) else doc.text)
        window = self.spec["negation_window"]
        total = 0
        for i, tok in enumerate(tokens):
            valence = self.lexicon.get(tok)
            if not valence:
                continue
            if any(_is_negator(t) for t in tokens[max(0, i - window):i]):
                valence = -valence
            total += valence
        return total

    def scores(self, doc) -> np.ndarray:
        s = self.score(doc)
        # one-hot so argmax gives positive / neutral / negative by sign
        out = np.zeros(N_CLASSES)
        out[0 if s > 0 else 2 if s < 0 else 1] = 1.0
        return out


@dataclass(frozen=True, eq=False)
class NaiveBayesModel(_Model):
    spec: ClassifierSpec
    vocab: Vocabulary
    log_prior: np.ndarray  # (3,)
    log_likelihood: np.ndarray  # (3, V)

    def scores(self, doc) -> np.ndarray:
        idx, cnt = vectorize_arrays(doc, self.vocab)
        return self.log_prior + self.log_likelihood[:, idx] @ cnt


@dataclass(frozen=True, eq=False)
class LogisticModel(_Model):
    spec: ClassifierSpec
    vocab: Vocabulary
    weights: np.ndarray  # (3, V)
    bias: np.ndarray  # (3,)
    loss_history: tuple[float, ...] = ()

    def scores(self, doc) -> np.ndarray:
        idx, cnt = vectorize_arrays(doc, self.vocab)
        return self.weights[:, idx] @ cnt + self.bias

    def probabilities(self, doc) -> np.ndarray:
        return _softmax(self.scores(doc))


ClassifierModel = LexiconModel | NaiveBayesModel | LogisticModel


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


# -- training ----------------------------------------------------------------

def train(spec: ClassifierSpec, train_docs: Sequence[Document], seed: int = 0) -> ClassifierModel:
    """Fit a model of ``spec.family``; deterministic in (spec, doc order, seed)."""
    if spec.family is Family.LEXICON:
        return lexicon_model(spec)
    if not train_docs:
        raise DegenerateTrainingError(f"{spec.family.value}: empty training set")
    if spec.family is Family.NAIVE_BAYES:
        return _train_naive_bayes(spec, train_docs)
    return _train_logistic(spec, train_docs, seed)


_LEXICON_CACHE: dict[str, int] | None = None


def lexicon_model(spec: ClassifierSpec | None = None) -> LexiconModel:
    """The static lexicon model; what ``train`` returns for the Lexicon family."""
    return LexiconModel(spec or ClassifierSpec(Family.LEXICON), _builtin_lexicon())


def _builtin_lexicon() -> dict[str, int]:
    global _LEXICON_CACHE
    if _LEXICON_CACHE is None:
        _LEXICON_CACHE = load_lexicon()
    return _LEXICON_CACHE


def _train_naive_bayes(spec, docs) -> NaiveBayesModel:
    vocab = build_vocabulary(docs, spec["min_df"])
    alpha = float(spec["alpha"])
    counts = np.zeros((N_CLASSES, len(vocab)))
    class_docs = np.zeros(N_CLASSES)
    for doc in docs:
        idx, cnt = vectorize_arrays(doc, vocab)
        counts[doc.label, idx] += cnt
        class_docs[doc.label] += 1
    with np.errstate(divide="ignore"):
        log_prior = np.log(class_docs / class_docs.sum())
    smoothed = counts + alpha
    log_likelihood = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
    return NaiveBayesModel(spec, vocab, log_prior, log_likelihood)


def _csr(docs, vocab):
    feats = [vectorize_arrays(d, vocab) for d in docs]
    indptr = np.zeros(len(feats) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(idx) for idx, _ in feats])
    indices = np.concatenate([idx for idx, _ in feats]).astype(np.int64) if feats else np.zeros(0, np.int64)
    values = np.concatenate([cnt for _, cnt in feats]) if feats else np.zeros(0)
    labels = np.array([d.label for d in docs], dtype=np.int64)
    return indptr, indices, values, labels


def _train_logistic(spec, docs, seed) -> LogisticModel:
    """Per-document SGD with a 1/(1+epoch) decaying step.

    An epoch that raises the regularized training loss is rolled back and the
    step multiplier halved, so the recorded loss never increases.
    """
    labels = np.array([d.label for d in docs], dtype=np.intp)
    if len(np.unique(labels)) < 2:
        raise DegenerateTrainingError(
            "Logistic: training data needs at least 2 distinct classes"
        )
    vocab = build_vocabulary(docs, spec["min_df"])
    csr = _csr(docs, vocab)
    lr0, l2 = float(spec["learning_rate"]), float(spec["l2"])
    rng = np.random.default_rng(seed)

    weights = np.zeros((N_CLASSES, len(vocab)))
    bias = np.zeros(N_CLASSES)
    loss = _logistic_loss(weights, bias, csr, l2)
    history = []
    backoff = 1.0
    for epoch in range(int(spec["epochs"])):
        lr = backoff * lr0 / (1.0 + epoch)
        raw, new_bias = weights.copy(), bias.copy()
        scale = sgd_epoch(*csr, rng.permutation(len(docs)), raw, 1.0, new_bias, lr, 1.0 - lr * l2)
        new_weights = scale * raw
        new_loss = _logistic_loss(new_weights, new_bias, csr, l2)
        if new_loss <= loss:
            weights, bias, loss = new_weights, new_bias, new_loss
        else:
            backoff *= 0.5
        history.append(loss)
    return LogisticModel(spec, vocab, weights, bias, tuple(history))


def _logistic_loss(weights, bias, csr, l2) -> float:
    return float(mean_cross_entropy(*csr, weights, bias)) + 0.5 * l2 * float(np.sum(weights * weights))


def training_loss(model: LogisticModel, docs: Sequence[Document]) -> float:
    """Mean cross-entropy plus the L2 penalty, as minimized during training."""
    return _logistic_loss(model.weights, model.bias, _csr(docs, model.vocab), float(model.spec["l2"]))


def predict(model: ClassifierModel, doc: Document | str) -> Polarity:
    return model.predict(doc)


def predict_batch(model: ClassifierModel, docs: Sequence[Document | str]) -> list[Polarity]:
    return model.predict_batch(docs)


# -- persistence -------------------------------------------------------------
#
# Line-oriented, tab-separated text. First line is the format tag, then
# "key<TAB>value..." records. Floats are written with repr() so they parse
# back bit-identically. The vocabulary lives in a sidecar file named by the
# "vocab" record, relative to the model file.

def _floats(values) -> list[str]:
    return [repr(float(v)) for v in values]


def save_model(model: ClassifierModel, path) -> None:
    path = Path(path)
    spec = model.spec
    lines = [FORMAT_TAG, f"family\t{spec.family.value}", f"training_corpus\t{spec.training_corpus}"]
    for key in sorted(spec.hyperparameters):
        lines.append(f"param\t{key}\t{spec.hyperparameters[key]!r}")
    if isinstance(model, LexiconModel):
        for word, valence in model.lexicon.items():
            lines.append(f"lexicon\t{word}\t{valence}")
    else:
        vocab_name = path.name + ".vocab.tsv"
        model.vocab.save(path.with_name(vocab_name))
        lines.append(f"vocab\t{vocab_name}\t{len(model.vocab)}")
        if isinstance(model, NaiveBayesModel):
            lines.append("\t".join(["log_prior", *_floats(model.log_prior)]))
            for c in range(N_CLASSES):
                lines.append("\t".join([f"log_likelihood\t{c}", *_floats(model.log_likelihood[c])]))
        else:
            lines.append("\t".join(["bias", *_floats(model.bias)]))
            for c in range(N_CLASSES):
                lines.append("\t".join([f"weights\t{c}", *_floats(model.weights[c])]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> ClassifierModel:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != FORMAT_TAG:
        raise ValueError(f"{path}: not a polarvote model file")
    family = corpus = None
    params: dict[str, Any] = {}
    lexicon: dict[str, int] = {}
    vocab = None
    rows: dict[str, Any] = {}
    for line in lines[1:]:
        key, *rest = line.split("\t")
        if key == "family":
            family = Family.parse(rest[0])
        elif key == "training_corpus":
            corpus = rest[0]
        elif key == "param":
            params[rest[0]] = ast.literal_eval(rest[1])
        elif key == "lexicon":
            lexicon[rest[0]] = int(rest[1])
        elif key == "vocab":
            vocab = Vocabulary.load(path.with_name(rest[0]))
            if len(vocab) != int(rest[1]):
                raise ValueError(f"{path}: vocabulary size mismatch")
        elif key in ("log_prior", "bias"):
            rows[key] = np.array([float(v) for v in rest])
        elif key in ("log_likelihood", "weights"):
            rows.setdefault(key, [None] * N_CLASSES)[int(rest[0])] = [float(v) for v in rest[1:]]
        else:
            raise ValueError(f"{path}: unknown record {key!r}")
    spec = ClassifierSpec(family, corpus, params)
    if family is Family.LEXICON:
        return LexiconModel(spec, lexicon)
    shape = (N_CLASSES, len(vocab))
    if family is Family.NAIVE_BAYES:
        return NaiveBayesModel(spec, vocab, rows["log_prior"],
                               np.array(rows["log_likelihood"]).reshape(shape))
    return LogisticModel(spec, vocab, np.array(rows["weights"]).reshape(shape), rows["bias"])
