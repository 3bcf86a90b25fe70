"""Config-driven experiment grids: within-domain CV and cross-platform runs."""

from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import yaml

from .classifiers import (FAMILY_ORDER, ClassifierModel, ClassifierSpec, Family, save_model,
                          train)
from .corpus import (Corpus, CorpusError, check_distribution, load_corpus, normalize_text,
                     resolve_expected, short_name)
from .ensemble import (EnsembleSpec, VotingEnsemble, check_member_count, disagreement_rate,
                       format_percent, write_vote_log)
from .evaluation import evaluate, fleiss_kappa, landis_koch_band, ratings_from_votes, stratified_kfold

log = logging.getLogger(__name__)

BEST = "best"
GRID_ORDER = ("within", "rq21", "rq22")


class ConfigError(ValueError):
    def __init__(self, problems: Sequence[str] | str):
        self.problems = [problems] if isinstance(problems, str) else list(problems)
        super().__init__("\n".join(self.problems))


class Mode(str, Enum):
    WITHIN = "within"
    CROSS = "cross"


# -- grid definitions --------------------------------------------------------

@dataclass(frozen=True)
class GridTemplate:
    id: int
    members: tuple[tuple[str, str], ...]  # (family or "best", training corpus)
    tests: tuple[str, ...]


@dataclass(frozen=True)
class GridDefinition:
    name: str
    mode: Mode
    templates: tuple[GridTemplate, ...]
    order: str = "template"  # or "test": all first tests, then all second tests, ...

    def corpora(self) -> set[str]:
        names = set()
        for t in self.templates:
            names.update(t.tests)
            names.update(c for _, c in t.members)
        return names


def _parse_member(text: str) -> tuple[str, str]:
    family, sep, corpus = str(text).partition(":")
    if not sep or not corpus.strip():
        raise ConfigError(f"member {text!r} must look like 'Family:Corpus'")
    family = family.strip()
    if family.lower() != BEST:
        family = Family.parse(family).value
    else:
        family = BEST
    return family, corpus.strip()


def parse_grids(data: Mapping) -> dict[str, GridDefinition]:
    if not isinstance(data, Mapping):
        raise ConfigError("grid file must map grid names to definitions")
    grids = {}
    for name, body in data.items():
        try:
            grids[name] = _parse_grid(name, body)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"grid {name}: {exc!s}") from exc
    return grids


def _parse_grid(name: str, body: Mapping) -> GridDefinition:
    templates = []
    for t in body["templates"]:
        members = tuple(_parse_member(m) for m in t["members"])
        check_member_count(len(members))
        templates.append(GridTemplate(int(t["id"]), members, tuple(t["tests"])))
    order = body.get("order", "template")
    if order not in ("template", "test"):
        raise ConfigError(f"grid {name}: order must be 'template' or 'test', got {order!r}")
    return GridDefinition(name, Mode(body["mode"]), tuple(templates), order)


def load_grids(path=None) -> dict[str, GridDefinition]:
    if path is None:
        text = resources.files("polarvote.data").joinpath("grids.yaml").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_grids(yaml.safe_load(text))


@dataclass(frozen=True)
class ExperimentConfig:
    grid_id: str
    usage: int
    mode: Mode
    members: tuple[ClassifierSpec, ...]
    test_corpus: str
    seed: int
    k: int = 5
    grid: str = ""

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        check_member_count(len(self.members))
        if self.mode is Mode.WITHIN:
            bad = [m.label for m in self.members
                   if m.family is not Family.LEXICON and m.training_corpus != self.test_corpus]
            if bad:
                raise ConfigError(
                    f"run {self.run_id}: within-domain members must train on {self.test_corpus}, got {bad}")
            if self.k < 2:
                raise ConfigError(f"run {self.run_id}: k must be >= 2")
        else:
            bad = [m.label for m in self.members if m.training_corpus == self.test_corpus]
            if bad:
                raise ConfigError(
                    f"run {self.run_id}: cross-platform members trained on the test corpus "
                    f"{self.test_corpus}: {bad}")

    @property
    def run_id(self) -> str:
        return f"{self.grid_id}.{self.usage}"

    @property
    def ensemble(self) -> EnsembleSpec:
        return EnsembleSpec(self.run_id, self.members)


def expand(grid: GridDefinition, seed: int, k: int = 5,
           best: Mapping[str, ClassifierSpec] | None = None) -> list[ExperimentConfig]:
    """Turn templates into runnable configs, numbering usages per template id."""
    usage: dict[int, int] = defaultdict(int)
    configs = []
    for t in grid.templates:
        members = []
        for family, corpus in t.members:
            if family == BEST:
                if best is None or corpus not in best:
                    raise ConfigError(f"grid {grid.name}: no best member resolved for {corpus}")
                members.append(best[corpus])
            else:
                members.append(ClassifierSpec(Family(family), corpus))
        for pos, test in enumerate(t.tests):
            usage[t.id] += 1
            configs.append((pos, ExperimentConfig(str(t.id), usage[t.id], grid.mode, tuple(members),
                                                  test, seed, k, grid.name)))
    if grid.order == "test":
        configs.sort(key=lambda pc: pc[0])  # stable: template order within each position
    return [c for _, c in configs]


# -- results -----------------------------------------------------------------

@dataclass(frozen=True)
class MemberResult:
    family: str
    training_corpus: str
    accuracy: float
    macro_f1: float


@dataclass(frozen=True)
class ExperimentResult:
    run_id: str
    grid: str
    mode: str
    fold: str  # "1".."k" or "mean" for within-domain; "" for cross-platform
    test_corpus: str
    n_test: int
    vc_accuracy: float
    vc_macro_f1: float
    members: tuple[MemberResult, ...]
    disagreement_rate: float
    kappa: float
    band: str
    overlap: float
    seed: int

    @property
    def grid_id(self) -> str:
        return self.run_id.split(".")[0]


def _derive(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def _score(config: ExperimentConfig, models: Sequence[ClassifierModel], test_docs, tie_seed: int,
           fold: str, overlap: float, vote_log: Path | None) -> ExperimentResult:
    gold = [d.label for d in test_docs]
    preds = VotingEnsemble(models, config.ensemble).predict_corpus(test_docs, tie_seed)
    vc = evaluate([p.final for p in preds], gold)
    members = []
    for i, spec in enumerate(config.members):
        m = evaluate([p.votes[i] for p in preds], gold)
        members.append(MemberResult(spec.family.value, spec.training_corpus, float(m.accuracy), float(m.macro_f1)))
    agreement = fleiss_kappa(ratings_from_votes(preds))
    if vote_log is not None:
        vote_log.parent.mkdir(parents=True, exist_ok=True)
        write_vote_log(vote_log, test_docs, preds)
    return ExperimentResult(config.run_id, config.grid, config.mode.value, fold, config.test_corpus,
                            len(test_docs), float(vc.accuracy), float(vc.macro_f1), tuple(members),
                            float(disagreement_rate(preds)), float(agreement.kappa), agreement.band.value,
                            float(overlap), config.seed)


def text_overlap(train_docs: Iterable, test_docs: Sequence) -> float:
    """Fraction of test documents whose normalized text occurs among the training docs."""
    seen = {normalize_text(d.text) for d in train_docs}
    if not test_docs:
        return 0.0
    return sum(normalize_text(d.text) in seen for d in test_docs) / len(test_docs)


def mean_row(rows: Sequence[ExperimentResult]) -> ExperimentResult:
    """Unweighted mean over fold rows; ``n_test`` is the total tested."""
    def avg(values):
        return float(np.mean(values))

    members = tuple(
        MemberResult(ms[0].family, ms[0].training_corpus,
                     avg([m.accuracy for m in ms]), avg([m.macro_f1 for m in ms]))
        for ms in zip(*(r.members for r in rows))
    )
    kappa = avg([r.kappa for r in rows])
    first = rows[0]
    return replace(first, fold="mean", n_test=sum(r.n_test for r in rows),
                   vc_accuracy=avg([r.vc_accuracy for r in rows]),
                   vc_macro_f1=avg([r.vc_macro_f1 for r in rows]), members=members,
                   disagreement_rate=avg([r.disagreement_rate for r in rows]),
                   kappa=kappa, band=landis_koch_band(kappa).value,
                   overlap=avg([r.overlap for r in rows]))


def run_within_domain(config: ExperimentConfig, corpus: Corpus,
                      vote_log_dir: Path | None = None) -> list[ExperimentResult]:
    """k fold rows plus an unweighted mean row."""
    if config.mode is not Mode.WITHIN:
        raise ConfigError(f"run {config.run_id} is not a within-domain config")
    if corpus.name != config.test_corpus:
        raise ConfigError(f"run {config.run_id} expects corpus {config.test_corpus}, got {corpus.name}")
    plan = stratified_kfold(corpus, config.k, config.seed)
    rows = []
    for fold in range(config.k):
        train_docs, test_docs = plan.split(corpus, fold)
        test_ids = {d.id for d in test_docs}
        assert not any(d.id in test_ids for d in train_docs)
        train_seed = _derive(config.seed, fold, 0)
        models = [train(spec, train_docs, train_seed) for spec in config.members]
        log_path = vote_log_dir / f"{config.run_id}_fold{fold + 1}.csv" if vote_log_dir else None
        rows.append(_score(config, models, test_docs, _derive(config.seed, fold, 1),
                           str(fold + 1), text_overlap(train_docs, test_docs), log_path))
    rows.append(mean_row(rows))
    return rows


class ModelCache:
    """Full-corpus models keyed by (spec, seed); cross-platform runs share them."""

    def __init__(self, model_dir: Path | None = None):
        self._models: dict[tuple, ClassifierModel] = {}
        self.model_dir = model_dir

    def get(self, spec: ClassifierSpec, corpus: Corpus | None, seed: int) -> ClassifierModel:
        key = (spec.family, spec.training_corpus, tuple(sorted(spec.hyperparameters.items())), seed)
        if key not in self._models:
            docs = corpus.documents if corpus is not None else ()
            model = train(spec, docs, seed)
            self._models[key] = model
            if self.model_dir is not None:
                self.model_dir.mkdir(parents=True, exist_ok=True)
                save_model(model, self.model_dir / f"{spec.family.value}_{spec.training_corpus}_{seed}.model")
        return self._models[key]


def run_cross_platform(config: ExperimentConfig, corpora: Mapping[str, Corpus],
                       cache: ModelCache | None = None,
                       vote_log_dir: Path | None = None) -> ExperimentResult:
    """Members trained on their full source corpora, scored on the whole test corpus."""
    if config.mode is not Mode.CROSS:
        raise ConfigError(f"run {config.run_id} is not a cross-platform config")
    cache = cache or ModelCache()
    test = corpora[config.test_corpus]
    models, sources = [], []
    for spec in config.members:
        source = None
        if spec.family is not Family.LEXICON or spec.training_corpus in corpora:
            source = corpora[spec.training_corpus]
            if source is test or source.name == test.name:
                raise ConfigError(f"run {config.run_id}: member {spec.label} trains on the test corpus")
            sources.append(source)
        models.append(cache.get(spec, source, config.seed))
    train_docs = [d for s in sources for d in s.documents]
    log_path = vote_log_dir / f"{config.run_id}.csv" if vote_log_dir else None
    return _score(config, models, test.documents, _derive(config.seed, int(config.grid_id), config.usage, 2), "",
                  text_overlap(train_docs, test.documents), log_path)


def best_member_per_corpus(within_results: Sequence[ExperimentResult],
                           corpora: Iterable[str] | None = None,
                           families: Iterable[Family | str] | None = None) -> dict[str, ClassifierSpec]:
    """Per corpus, the family with the best mean fold accuracy, then macro-F1.

    Remaining ties go to the earlier family in ``FAMILY_ORDER``.
    """
    scores: dict[tuple[str, str], list[tuple[float, float]]] = defaultdict(list)
    for r in within_results:
        if r.mode != Mode.WITHIN.value or r.fold == "mean":
            continue
        for m in r.members:
            scores[(r.test_corpus, m.family)].append((m.accuracy, m.macro_f1))
    corpora = sorted({c for c, _ in scores}) if corpora is None else list(corpora)
    families = ([Family(f) for f in {f for _, f in scores}] if families is None
                else [f if isinstance(f, Family) else Family.parse(f) for f in families])
    families = sorted(families, key=FAMILY_ORDER.index)
    missing = [f"{f.value}@{c}" for c in corpora for f in families if (c, f.value) not in scores]
    if missing:
        raise ConfigError(f"within-domain results missing for: {', '.join(missing)}")
    best = {}
    for c in corpora:
        def key(f):
            vals = np.array(scores[(c, f.value)])
            return (vals[:, 0].mean(), vals[:, 1].mean(), -FAMILY_ORDER.index(f))
        best[c] = ClassifierSpec(max(families, key=key), c)
    return best


# -- run configuration -------------------------------------------------------

@dataclass
class RunConfig:
    corpora: dict[str, Path]
    expect: dict[str, tuple[int, int, int] | None]
    seed: int = 42
    k: int = 5
    output_dir: Path = Path("results")
    vote_logs: bool = False
    save_models: bool = False
    grids_file: Path | None = None
    workers: int = 1
    base_dir: Path = field(default=Path("."))

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        return cls.from_dict(data, base_dir=path.parent)

    @classmethod
    def from_dict(cls, data: Mapping, base_dir=Path(".")) -> "RunConfig":
        problems = []
        known = {"seed", "folds", "output_dir", "vote_logs", "save_models", "grids_file",
                 "corpora", "workers"}
        problems += [f"unknown config key {k!r}" for k in data if k not in known]
        seed = data.get("seed")
        if not isinstance(seed, int) or isinstance(seed, bool):
            problems.append(f"seed must be an integer, got {seed!r}")
            seed = 0
        k = data.get("folds", 5)
        if not isinstance(k, int) or k < 2:
            problems.append(f"folds must be an integer >= 2, got {k!r}")
        corpora, expect = {}, {}
        raw = data.get("corpora") or {}
        if not isinstance(raw, Mapping) or not raw:
            problems.append("corpora: expected a mapping of corpus name -> {path, expect}")
            raw = {}
        for name, entry in raw.items():
            if isinstance(entry, str):
                entry = {"path": entry}
            if not isinstance(entry, Mapping) or "path" not in entry:
                problems.append(f"corpus {name}: missing 'path'")
                continue
            p = Path(entry["path"])
            corpora[name] = p if p.is_absolute() else Path(base_dir) / p
            try:
                expect[name] = resolve_expected(entry.get("expect"))
            except ValueError as exc:
                problems.append(f"corpus {name}: {exc}")
        grids_file = data.get("grids_file")
        if grids_file is not None:
            grids_file = Path(base_dir) / grids_file
        if problems:
            raise ConfigError(problems)
        out = Path(data.get("output_dir", "results"))
        return cls(corpora, expect, seed, k, out if out.is_absolute() else Path(base_dir) / out,
                   bool(data.get("vote_logs", False)), bool(data.get("save_models", False)),
                   grids_file, int(data.get("workers", 1)), Path(base_dir))


def _needed_grids(selection: str) -> list[str]:
    if selection == "all":
        return list(GRID_ORDER)
    if selection not in GRID_ORDER:
        raise ConfigError(f"unknown grid {selection!r}; choose from {', '.join(GRID_ORDER)} or all")
    return [selection]


def prepare(config: RunConfig, selection: str) -> tuple[dict[str, GridDefinition], dict[str, Corpus]]:
    """Validate everything a grid run needs; every problem is reported at once."""
    problems = []
    try:
        grids = load_grids(config.grids_file)
    except (OSError, ConfigError, KeyError, ValueError) as exc:
        raise ConfigError(f"grid definitions: {exc}") from exc
    names = _needed_grids(selection)
    missing_grids = [g for g in names if g not in grids]
    if missing_grids:
        raise ConfigError([f"grid {g!r} not defined" for g in missing_grids])
    needed = set()
    for g in names:
        needed |= grids[g].corpora()
    for name in sorted(needed - set(config.corpora)):
        problems.append(f"corpus {name!r} is used by the selected grid(s) but not configured")
    corpora = {}
    for name in sorted(needed & set(config.corpora)):
        path = config.corpora[name]
        try:
            corpus = load_corpus(path, name)
            if config.expect.get(name) is not None:
                check_distribution(corpus, config.expect[name])
            corpora[name] = corpus
        except FileNotFoundError:
            problems.append(f"corpus {name}: file not found: {path}")
        except CorpusError as exc:
            problems.append(f"corpus {name} ({path}): {exc}")
    if problems:
        raise ConfigError(problems)
    return grids, corpora


def run_grid(config: RunConfig, selection: str = "all",
             corpora: Mapping[str, Corpus] | None = None,
             grids: Mapping[str, GridDefinition] | None = None) -> list[ExperimentResult]:
    """Run the selected built-in grid(s); rows come back in grid-definition order."""
    if corpora is None or grids is None:
        grids, corpora = prepare(config, selection)
    names = _needed_grids(selection)
    vote_dir = config.output_dir / "votes" if config.vote_logs else None
    cache = ModelCache(config.output_dir / "models" if config.save_models else None)
    results: list[ExperimentResult] = []
    within_rows: list[ExperimentResult] = []

    def run_within(report: bool, only=None):
        for cfg in expand(grids["within"], config.seed, config.k):
            if only is not None and cfg.test_corpus not in only:
                continue
            log.info("within-domain run %s on %s", cfg.run_id, cfg.test_corpus)
            rows = run_within_domain(cfg, corpora[cfg.test_corpus], vote_dir if report else None)
            within_rows.extend(rows)
            if report:
                results.extend(rows)

    for name in names:
        grid = grids[name]
        if name == "within":
            run_within(report=True)
            continue
        best = None
        if any(f == BEST for t in grid.templates for f, _ in t.members):
            wanted = sorted({c for t in grid.templates for f, c in t.members if f == BEST})
            have = {r.test_corpus for r in within_rows}
            if not set(wanted) <= have:
                run_within(report=False, only=set(wanted) - have)
            best = best_member_per_corpus(within_rows, wanted)
            log.info("best members: %s", {c: s.family.value for c, s in best.items()})
        for cfg in expand(grid, config.seed, config.k, best):
            log.info("cross-platform run %s on %s", cfg.run_id, cfg.test_corpus)
            results.append(run_cross_platform(cfg, corpora, cache, vote_dir))
    return results


# -- reports -----------------------------------------------------------------

def _member_count(results: Sequence[ExperimentResult]) -> int:
    return max(len(r.members) for r in results)


def csv_header(n_members: int) -> list[str]:
    head = ["run_id", "grid", "mode", "fold", "test_corpus", "n_test", "vc_accuracy", "vc_macro_f1"]
    for i in range(1, n_members + 1):
        head += [f"member{i}_family", f"member{i}_training_corpus",
                 f"member{i}_accuracy", f"member{i}_macro_f1"]
    return head + ["disagreement_rate", "kappa", "band", "overlap", "seed"]


def _num(x: float) -> str:
    return repr(float(x))


def results_to_csv(results: Sequence[ExperimentResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    n = _member_count(results)
    writer.writerow(csv_header(n))
    for r in results:
        row = [r.run_id, r.grid, r.mode, r.fold, r.test_corpus, r.n_test, _num(r.vc_accuracy), _num(r.vc_macro_f1)]
        for m in r.members:
            row += [m.family, m.training_corpus, _num(m.accuracy), _num(m.macro_f1)]
        row += [""] * 4 * (n - len(r.members))
        row += [_num(r.disagreement_rate), _num(r.kappa), r.band, _num(r.overlap), r.seed]
        writer.writerow(row)
    return buf.getvalue()


def results_from_csv(text: str) -> list[ExperimentResult]:
    reader = csv.DictReader(io.StringIO(text))
    n = sum(1 for h in reader.fieldnames or [] if h.endswith("_family"))
    out = []
    for row in reader:
        members = tuple(
            MemberResult(row[f"member{i}_family"], row[f"member{i}_training_corpus"],
                         float(row[f"member{i}_accuracy"]), float(row[f"member{i}_macro_f1"]))
            for i in range(1, n + 1) if row[f"member{i}_family"]
        )
        out.append(ExperimentResult(
            row["run_id"], row["grid"], row["mode"], row["fold"], row["test_corpus"], int(row["n_test"]),
            float(row["vc_accuracy"]), float(row["vc_macro_f1"]), members,
            float(row["disagreement_rate"]), float(row["kappa"]), row["band"],
            float(row["overlap"]), int(row["seed"])))
    return out


def _acc(x: float) -> str:
    return f"{x:.2f}"


def row_maxima(result: ExperimentResult) -> list[bool]:
    """Which of [VC, member1, ...] show the row's maximum two-decimal accuracy."""
    shown = [_acc(result.vc_accuracy)] + [_acc(m.accuracy) for m in result.members]
    top = max(shown, key=float)
    return [s == top for s in shown]


def _bold(text: str, on: bool) -> str:
    return f"**{text}**" if on else text


def _member_headers(rows: Sequence[ExperimentResult]) -> tuple[list[str], bool]:
    n = _member_count(rows)
    slot_families = [{r.members[i].family for r in rows if i < len(r.members)} for i in range(n)]
    if all(len(s) == 1 for s in slot_families):
        names = [next(iter(s)) for s in slot_families]
        if len(set(names)) < len(names):
            names = [f"{name}{i + 1}" for i, name in enumerate(names)]
        return names, False
    return [f"Member{i + 1}" for i in range(n)], True


def results_to_markdown(results: Sequence[ExperimentResult]) -> str:
    """Markdown result tables, one per mode block."""
    blocks: list[list[ExperimentResult]] = []
    for r in results:
        if blocks and (blocks[-1][0].grid, blocks[-1][0].mode) == (r.grid, r.mode):
            blocks[-1].append(r)
        else:
            blocks.append([r])
    out = []
    for rows in blocks:
        within = rows[0].mode == Mode.WITHIN.value
        headers, tag_family = _member_headers(rows)
        if within:
            cols = ["ID", "Fold", "#Data", "VC", *headers, "Disagreement", "κ"]
        else:
            cols = ["ID", "Testset", "#Data", "VC", *headers, "Disagreement", "κ", "Overlap"]
        lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
        for r in rows:
            bold = row_maxima(r)
            cells = []
            for i, m in enumerate(r.members):
                cell = _bold(_acc(m.accuracy), bold[i + 1])
                if not within:
                    cell += f" ({short_name(m.training_corpus)})"
                if tag_family:
                    cell += f" {m.family}"
                cells.append(cell)
            cells += [""] * (len(headers) - len(r.members))
            vc = _bold(_acc(r.vc_accuracy), bold[0])
            tail = [format_percent(r.disagreement_rate), f"{r.kappa:.2f}"]
            if within:
                line = [f"{r.run_id} ({short_name(r.test_corpus)})", r.fold, str(r.n_test), vc, *cells, *tail]
            else:
                line = [r.run_id, short_name(r.test_corpus), str(r.n_test), vc, *cells, *tail,
                        format_percent(r.overlap)]
            lines.append("| " + " | ".join(line) + " |")
        out.append("\n".join(lines))
    return "\n\n".join(out) + "\n"


REPORT_FORMATS = {"csv": results_to_csv, "md": results_to_markdown, "markdown": results_to_markdown}


def emit_report(results: Sequence[ExperimentResult], fmt: str, path=None) -> str:
    if not results:
        raise ValueError("no results to report")
    try:
        render = REPORT_FORMATS[fmt.lower()]
    except KeyError:
        raise ValueError(f"unknown report format {fmt!r}; choose csv or md") from None
    text = render(results)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text
