"""Seeded synthetic polarity corpora for tests, demos and the acceptance suite.

Each class draws its signal words from its own pool; every document mixes
signal words with class-independent filler. A domain can swap a fraction of
each pool for domain-specific tokens, which controls how much vocabulary two
corpora share. Label noise is applied to the *text*, so exact class counts
(e.g. corpora with the reference class counts) survive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifiers import load_lexicon
from .corpus import POLARITIES, Corpus, Document, Polarity

POOL_SIZE = 120
FILLER_SIZE = 300


@dataclass(frozen=True)
class DomainProfile:
    name: str
    counts: tuple[int, int, int]  # positive, neutral, negative
    seed: int = 0
    noise: float = 0.15
    shift: float = 0.0  # fraction of every pool replaced by domain tokens
    signal_prob: float = 0.5
    min_len: int = 6
    max_len: int = 14


def base_pools() -> dict[str, list[str]]:
    """Shared word pools. Polar pools interleave lexicon words with neutral-looking tokens."""
    lex = load_lexicon()
    pos_words = [w for w, v in lex.items() if v > 0]
    neg_words = [w for w, v in lex.items() if v < 0]
    half = POOL_SIZE // 2

    def interleave(lexical, tag):
        out = []
        for i in range(half):
            out += [lexical[i], f"{tag}{i}"]
        return out

    return {
        "positive": interleave(pos_words, "pa"),
        "neutral": [f"nt{i}" for i in range(POOL_SIZE)],
        "negative": interleave(neg_words, "ng"),
        "filler": [f"w{i}" for i in range(FILLER_SIZE)],
    }


def domain_pools(profile: DomainProfile) -> dict[str, list[str]]:
    rng = np.random.default_rng([profile.seed, 7])
    tag = "".join(c for c in profile.name.lower() if c.isalnum()) or "d"
    pools = {}
    for key, words in base_pools().items():
        words = list(words)
        n_swap = int(round(profile.shift * len(words)))
        for pos in sorted(rng.choice(len(words), size=n_swap, replace=False)):
            words[pos] = f"{tag}{key[:2]}{pos}"
        pools[key] = words
    return pools


def vocabulary_overlap(a: DomainProfile, b: DomainProfile) -> float:
    """Fraction of ``b``'s pool words that also occur in ``a``'s pools."""
    pa, pb = domain_pools(a), domain_pools(b)
    wa = {w for ws in pa.values() for w in ws}
    wb = [w for ws in pb.values() for w in ws]
    return sum(w in wa for w in wb) / len(wb)


def make_corpus(profile: DomainProfile) -> Corpus:
    rng = np.random.default_rng(profile.seed)
    pools = domain_pools(profile)
    labels = np.repeat(np.arange(3), profile.counts)
    rng.shuffle(labels)
    docs = []
    for i, label in enumerate(labels):
        text_class = int(label)
        if rng.random() < profile.noise:
            text_class = int(rng.choice([c for c in range(3) if c != label]))
        pool = pools[POLARITIES[text_class].label]
        length = int(rng.integers(profile.min_len, profile.max_len + 1))
        signal = rng.random(length) < profile.signal_prob
        signal[rng.integers(length)] = True  # at least one signal word
        words = [
            pool[rng.integers(len(pool))] if s else pools["filler"][rng.integers(FILLER_SIZE)]
            for s in signal
        ]
        docs.append(Document(f"{profile.name}-{i:05d}", " ".join(words), Polarity(int(label))))
    return Corpus(profile.name, tuple(docs))


def with_overlap(target: Corpus, source: Corpus, fraction: float, seed: int = 0) -> Corpus:
    """Copy texts of ``source`` into a ``fraction`` of ``target``, label-matched.

    Ids and class counts of ``target`` are unchanged.
    """
    rng = np.random.default_rng([seed, 11])
    n = int(round(fraction * len(target)))
    chosen = set(rng.choice(len(target), size=n, replace=False).tolist())
    by_label = {p: [d for d in source.documents if d.label is p] for p in POLARITIES}
    cursor = {p: 0 for p in POLARITIES}
    docs = []
    for i, doc in enumerate(target.documents):
        donors = by_label[doc.label]
        if i in chosen and cursor[doc.label] < len(donors):
            donor = donors[cursor[doc.label]]
            cursor[doc.label] += 1
            doc = Document(doc.id, donor.text, doc.label)
        docs.append(doc)
    return Corpus(target.name, tuple(docs))


REFERENCE_DOMAINS = {
    "GitHub": 0.0,
    "StackOverflow": 0.25,
    "JIRA": 0.45,
    "API": 0.3,
    "APP": 0.5,
}


def reference_sized_corpora(seed: int = 0, noise: float = 0.15) -> dict[str, Corpus]:
    """Five synthetic stand-ins with exactly the reference class counts."""
    from .corpus import REFERENCE_DISTRIBUTIONS

    out = {}
    for i, (name, shift) in enumerate(REFERENCE_DOMAINS.items()):
        profile = DomainProfile(name, REFERENCE_DISTRIBUTIONS[name], seed=seed * 100 + i,
                                noise=noise, shift=shift)
        out[name] = make_corpus(profile)
    return out
