"""Write the five synthetic stand-in corpora and a matching run config.

Usage: python scripts/make_synthetic_corpora.py OUT_DIR [--seed N] [--noise X]
"""

import argparse
from pathlib import Path

import yaml

from polarvote.corpus import write_corpus
from polarvote.synthetic import reference_sized_corpora


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--noise", type=float, default=0.15)
    args = ap.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    corpora = reference_sized_corpora(args.seed, args.noise)
    entries = {}
    for name, corpus in corpora.items():
        write_corpus(corpus, args.out_dir / f"{name}.csv")
        entries[name] = {"path": f"{name}.csv", "expect": name}
        print(f"{name}: {len(corpus)} documents")
    config = {"seed": 42, "folds": 5, "output_dir": "results", "corpora": entries}
    (args.out_dir / "config.yaml").write_text(yaml.safe_dump(config, sort_keys=False), encoding="utf-8")
    print(f"config: {args.out_dir / 'config.yaml'}")


if __name__ == "__main__":
    main()
