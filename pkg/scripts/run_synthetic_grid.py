"""Generate synthetic corpora, run every grid and print the markdown report.

Usage: python scripts/run_synthetic_grid.py [WORK_DIR] [--grid all]
"""

import argparse
import logging
import time
from pathlib import Path

from polarvote.corpus import write_corpus
from polarvote.experiments import RunConfig, emit_report, prepare, run_grid
from polarvote.synthetic import reference_sized_corpora


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("work_dir", type=Path, nargs="?", default=Path("synthetic_run"))
    ap.add_argument("--grid", default="all", choices=["within", "rq21", "rq22", "all"])
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    args.work_dir.mkdir(parents=True, exist_ok=True)
    corpora = {}
    for name, corpus in reference_sized_corpora(seed=0).items():
        write_corpus(corpus, args.work_dir / f"{name}.csv")
        corpora[name] = {"path": f"{name}.csv", "expect": name}
    config = RunConfig.from_dict({"seed": args.seed, "corpora": corpora, "output_dir": "results"},
                                 base_dir=args.work_dir)

    start = time.perf_counter()
    grids, loaded = prepare(config, args.grid)
    results = run_grid(config, args.grid, loaded, grids)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    emit_report(results, "csv", config.output_dir / "results.csv")
    print(emit_report(results, "md", config.output_dir / "results.md"))
    print(f"{len(results)} rows in {time.perf_counter() - start:.1f}s -> {config.output_dir}")


if __name__ == "__main__":
    main()
