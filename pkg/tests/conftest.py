import csv
from pathlib import Path

import pytest

from polarvote.corpus import Corpus, Document, Polarity

P, U, N = Polarity.POSITIVE, Polarity.NEUTRAL, Polarity.NEGATIVE

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def make_corpus(name, items):
    return Corpus(name, tuple(Document(f"{name}-{i}", text, label) for i, (text, label) in enumerate(items)))


@pytest.fixture
def tiny_corpus():
    return make_corpus("tiny", [
        ("great work, thanks!", P), ("this build is broken again", N),
        ("merged into main", U), ("awesome fix", P), ("the test fails", N),
        ("see the docs", U), ("love this api", P), ("terrible slow code", N),
        ("version 2 is out", U),
    ])


def small_corpora(seed=0, counts=(30, 45, 25)):
    """Five small synthetic corpora named like the built-in grid corpora."""
    from polarvote.synthetic import REFERENCE_DOMAINS, DomainProfile, make_corpus as synth
    return {name: synth(DomainProfile(name, counts, seed=seed * 100 + i, shift=shift))
            for i, (name, shift) in enumerate(REFERENCE_DOMAINS.items())}


def write_grid_setup(root: Path, corpora, expect=None, seed=7, folds=5, extra=None):
    """Write corpora as CSV plus a run config; returns the config path."""
    import yaml
    from polarvote.corpus import write_corpus
    root.mkdir(parents=True, exist_ok=True)
    entries = {}
    for name, corpus in corpora.items():
        write_corpus(corpus, root / f"{name}.csv")
        entries[name] = {"path": f"{name}.csv"}
        if expect and name in expect:
            entries[name]["expect"] = expect[name]
    data = {"seed": seed, "folds": folds, "output_dir": "out", "corpora": entries, **(extra or {})}
    path = root / "config.yaml"
    path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
    return path
