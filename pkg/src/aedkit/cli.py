"""Command line pipeline driver.

Subcommands chain through files in one output directory:

    ingest -> corrupt -> train -> [calibrate] -> detect -> evaluate -> report

Every stage writes its artifacts plus a marker keyed on a hash of the
stage's configuration and input file digests, so reruns skip finished
work unless --force is given. `run` executes the whole chain from a
key=value config file. Exit codes: 0 ok, 2 bad configuration, 3 bad or
missing data.
"""

from __future__ import annotations

import argparse
import hashlib
import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .calibrate import calibrate_bundles
from .corpus import (
    ConfigError,
    Corpus,
    DataError,
    FoldAssignment,
    Task,
    extract_units,
    inject_noise,
    make_folds,
)
from .detect import (
    borda_count,
    classification_uncertainty,
    confident_learning,
    curriculum_spotter,
    datamap_confidence,
    diverse_ensemble,
    dropout_uncertainty,
    irt_flag,
    knn_entropy,
    label_aggregation,
    label_entropy,
    leitner_spotter,
    mean_distance,
    prediction_margin,
    projection_ensemble,
    retag,
    variation_ngrams,
    weighted_discrepancy,
)
from .evaluate import assemble_report, eval_flagger, eval_scorer, records_to_reports
from .formats import (
    KIND_EPOCHS,
    KIND_REPEATED,
    KIND_SINGLE,
    read_corpus,
    read_embeddings,
    read_flags,
    read_folds,
    read_predictions,
    read_scores,
    write_corpus,
    write_embeddings,
    write_flags,
    write_folds,
    write_predictions,
    write_scores,
)
from .models.embed import builtin_embed, gaussian_projection_ensemble
from .models.features import TEXT_FAMILIES, TOKEN_FAMILIES
from .models.irt import fit_irt_2pl
from .models.training import (
    BaselineSpec,
    predict_mc_dropout,
    record_epoch_probs,
    train_and_predict_cv,
    train_and_predict_insample,
)
from .vectors import FlagVector, ScoreVector

# ---------------------------------------------------------------------------
# method registry
# ---------------------------------------------------------------------------

FLAGGER_CODES = ("retag", "cl", "de", "pe", "la", "irt", "vn")
SCORER_CODES = ("cu", "pm", "du", "dm", "cs", "ls", "le", "wd", "md", "knn", "borda")
ALL_CODES = FLAGGER_CODES + SCORER_CODES

# each entry must also appear in the applicability table in README.md
TEXT_ONLY = frozenset({"dm", "cs", "ls"})
SURFACE_ONLY = frozenset({"vn", "le", "wd"})   # need repeated token surfaces
NEEDS_FOLDS = frozenset({"pe", "la", "irt", "du"})
CALIBRATED = frozenset({"cl", "cu", "du", "pm"})

DEFAULT_FOLDS = 10
DEFAULT_RATE = 0.05


def methods_for(task: Task) -> tuple[str, ...]:
    drop = SURFACE_ONLY if task is Task.TEXT else TEXT_ONLY
    return tuple(m for m in ALL_CODES if m not in drop)


def check_methods(methods: tuple[str, ...], task: Task) -> None:
    for m in methods:
        if m not in ALL_CODES:
            raise ConfigError(
                f"unknown method {m!r}; choose from {', '.join(ALL_CODES)}"
            )
        if m not in methods_for(task):
            raise ConfigError(
                f"method {m!r} does not apply to {task.value} corpora; see the "
                "method applicability table in README.md"
            )


# ---------------------------------------------------------------------------
# model specs
# ---------------------------------------------------------------------------

_SPEC_KEYS = ("epochs", "lr", "l2", "seed", "hash_bits")


def parse_model(text: str, task: Task) -> BaselineSpec:
    """``family`` or ``family:epochs=20,lr=0.5,...``."""
    family, _, rest = text.partition(":")
    families = TEXT_FAMILIES if task is Task.TEXT else TOKEN_FAMILIES
    if family not in families:
        raise ConfigError(
            f"model family {family!r} does not fit {task.value} corpora; "
            f"choose from {', '.join(families)}"
        )
    spec = BaselineSpec(family=family)
    if not rest:
        return spec
    for part in rest.split(","):
        key, eq, value = part.partition("=")
        if not eq or key not in _SPEC_KEYS:
            raise ConfigError(
                f"bad model option {part!r}; options are {', '.join(_SPEC_KEYS)}"
            )
        try:
            cast = int(value) if key in ("epochs", "seed", "hash_bits") else float(value)
        except ValueError:
            raise ConfigError(f"model option {key}={value!r} is not a number")
        spec = replace(spec, **{key: cast})
    return spec


def spec_string(spec: BaselineSpec) -> str:
    opts = ",".join(f"{k}={getattr(spec, k)}" for k in _SPEC_KEYS)
    return f"{spec.family}:{opts}"


def default_models(task: Task) -> tuple[str, ...]:
    return ("lr_bow",) if task is Task.TEXT else ("maxent_window",)


# ---------------------------------------------------------------------------
# stage caching
# ---------------------------------------------------------------------------


def _digest_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _stage_key(stage: str, config: dict[str, object], inputs: list[Path]) -> str:
    h = hashlib.sha256()
    h.update(stage.encode())
    for key in sorted(config):
        h.update(f"|{key}={config[key]}".encode())
    for path in inputs:
        h.update(b"|")
        h.update(_digest_file(path).encode())
    return h.hexdigest()


@dataclass
class Workspace:
    out: Path

    def __post_init__(self):
        self.out = Path(self.out)
        self.out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.out / name

    def current_corpus(self) -> Path:
        corrupted = self.path("corrupted.tsv")
        return corrupted if corrupted.exists() else self.path("corpus.tsv")

    def marker(self, stage: str) -> Path:
        return self.path(f".done-{stage}")

    def cached(self, stage: str, key: str, outputs: list[Path], force: bool) -> bool:
        marker = self.marker(stage)
        hit = (not force and marker.exists() and marker.read_text() == key
               and all(p.exists() for p in outputs))
        if hit:
            print(f"{stage}: cached")
        return hit

    def mark(self, stage: str, key: str) -> None:
        self.marker(stage).write_text(key)


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise DataError(f"missing input file {path} ({hint})")
    return path


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------


def stage_ingest(ws: Workspace, task: Task, inp: Path, force: bool) -> None:
    src = _require(Path(inp), "pass --in with a corpus file")
    key = _stage_key("ingest", {"task": task.value}, [src])
    out = ws.path("corpus.tsv")
    if ws.cached("ingest", key, [out], force):
        return
    corpus = read_corpus(src, task)
    write_corpus(corpus, out)
    ws.mark("ingest", key)
    print(f"ingest: wrote {out} ({len(corpus.documents)} documents)")


def stage_corrupt(ws: Workspace, task: Task, rate: float, seed: int, force: bool) -> None:
    src = _require(ws.path("corpus.tsv"), "run ingest first")
    key = _stage_key("corrupt", {"rate": rate, "seed": seed}, [src])
    out = ws.path("corrupted.tsv")
    if ws.cached("corrupt", key, [out], force):
        return
    noisy = inject_noise(read_corpus(src, task), rate, seed=seed)
    write_corpus(noisy, out)
    n_err = sum(1 for u in extract_units(noisy) if u.is_error)
    ws.mark("corrupt", key)
    print(f"corrupt: wrote {out} ({n_err} corrupted units)")


def _train_config(specs, k, seed, no_cv) -> dict[str, object]:
    return {
        "models": ";".join(spec_string(s) for s in specs),
        "folds": k, "seed": seed, "no_cv": no_cv,
    }


def stage_train(ws: Workspace, task: Task, specs: list[BaselineSpec],
                k: int, seed: int, no_cv: bool, force: bool) -> None:
    src = _require(ws.current_corpus(), "run ingest first")
    names = [s.family for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate model families in {names}")
    key = _stage_key("train", _train_config(specs, k, seed, no_cv), [src])
    outs = [ws.path(f"pred-{s.family}.tsv") for s in specs]
    if not no_cv:
        outs.append(ws.path("folds.tsv"))
    if ws.cached("train", key, outs, force):
        return
    corpus = read_corpus(src, task)
    folds = None
    if not no_cv:
        folds = make_folds(corpus, k, seed=seed)
        write_folds(folds, corpus, ws.path("folds.tsv"))
    for spec in specs:
        if no_cv:
            bundle = train_and_predict_insample(corpus, spec)
        else:
            bundle = train_and_predict_cv(corpus, spec, folds)
        write_predictions(bundle, ws.path(f"pred-{spec.family}.tsv"))
    ws.mark("train", key)
    print(f"train: wrote {', '.join(p.name for p in outs)}")


def stage_calibrate(ws: Workspace, task: Task, specs: list[BaselineSpec],
                    k: int, seed: int, no_cv: bool, force: bool) -> None:
    if no_cv:
        raise ConfigError("calibration fits one map per held-out fold; "
                          "it cannot run with --no-cv")
    src = _require(ws.current_corpus(), "run ingest first")
    folds_path = _require(ws.path("folds.tsv"), "run train first")
    pred_paths = [
        _require(ws.path(f"pred-{s.family}.tsv"), "run train first") for s in specs
    ]
    key = _stage_key("calibrate", _train_config(specs, k, seed, no_cv),
                     [src, folds_path, *pred_paths])
    outs = [ws.path(f"pred-{s.family}+cal.tsv") for s in specs]
    if ws.cached("calibrate", key, outs, force):
        return
    corpus = read_corpus(src, task)
    folds = read_folds(folds_path, corpus)
    for spec, pred_path in zip(specs, pred_paths):
        single = read_predictions(pred_path, corpus)
        out, = calibrate_bundles(corpus, folds, single, [single])
        write_predictions(out, ws.path(f"pred-{spec.family}+cal.tsv"))
    ws.mark("calibrate", key)
    print(f"calibrate: wrote {', '.join(p.name for p in outs)}")


# ---------------------------------------------------------------------------
# detect stage: resolves each method's inputs lazily, training what's missing
# ---------------------------------------------------------------------------


@dataclass
class DetectContext:
    """Resolves each method's bundles when the detect stage actually runs.

    Bundles a prior stage declares (the trained singles, their calibrated
    forms) are consumed read-only and must exist. Bundles only this stage
    needs (mc passes, epoch snapshots, built-in embeddings, auto-expanded
    ensemble members) are rebuilt and round-tripped through their files,
    so the values in play never depend on which run produced them.
    """

    ws: Workspace
    corpus: Corpus
    specs: list[BaselineSpec]
    seed: int
    k: int
    no_cv: bool
    calibrate: bool
    extern: dict[str, object]       # kind -> externally supplied bundle
    extern_embed: object | None

    def __post_init__(self):
        self._cache: dict[str, object] = {}

    @property
    def primary(self) -> BaselineSpec:
        return self.specs[0]

    def folds(self) -> FoldAssignment:
        if "folds" not in self._cache:
            path = _require(self.ws.path("folds.tsv"), "run train first")
            self._cache["folds"] = read_folds(path, self.corpus)
        return self._cache["folds"]

    def _calibrated(self, bundle, fit_bundle):
        out, = calibrate_bundles(self.corpus, self.folds(), fit_bundle, [bundle])
        return out

    def single(self, spec: BaselineSpec, calibrated: bool = False):
        tag = f"single:{spec.family}:{calibrated}"
        if tag not in self._cache:
            if calibrated:
                if KIND_SINGLE in self.extern:
                    raw = self.single(spec)
                    self._cache[tag] = self._calibrated(raw, raw)
                else:
                    path = _require(self.ws.path(f"pred-{spec.family}+cal.tsv"),
                                    "run calibrate first")
                    self._cache[tag] = read_predictions(path, self.corpus)
            elif KIND_SINGLE in self.extern and spec.family == self.primary.family:
                self._cache[tag] = self.extern[KIND_SINGLE]
            elif spec in self.specs:
                path = _require(self.ws.path(f"pred-{spec.family}.tsv"),
                                "run train first")
                self._cache[tag] = read_predictions(path, self.corpus)
            else:
                # ensemble member this stage derived for itself
                path = self.ws.path(f"pred-{spec.family}.tsv")
                if self.no_cv:
                    bundle = train_and_predict_insample(self.corpus, spec)
                else:
                    bundle = train_and_predict_cv(self.corpus, spec, self.folds())
                write_predictions(bundle, path)
                self._cache[tag] = read_predictions(path, self.corpus)
        return self._cache[tag]

    def single_for(self, method: str):
        use_cal = self.calibrate and method in CALIBRATED
        return self.single(self.primary, calibrated=use_cal)

    def repeated(self, calibrated: bool = False):
        tag = f"mc:{calibrated}"
        if tag not in self._cache:
            if KIND_REPEATED in self.extern:
                bundle = self.extern[KIND_REPEATED]
                if calibrated:
                    # the calibrator always fits on the raw single bundle
                    bundle = self._calibrated(bundle, self.single(self.primary))
                self._cache[tag] = bundle
            else:
                suffix = "-mc+cal" if calibrated else "-mc"
                path = self.ws.path(f"pred-{self.primary.family}{suffix}.tsv")
                if calibrated:
                    bundle = self._calibrated(
                        self.repeated(), self.single(self.primary))
                else:
                    bundle = predict_mc_dropout(
                        self.corpus, self.primary, self.folds())
                write_predictions(bundle, path)
                self._cache[tag] = read_predictions(path, self.corpus)
        return self._cache[tag]

    def repeated_for(self, method: str):
        return self.repeated(calibrated=self.calibrate and method in CALIBRATED)

    def epoch_bundle(self):
        if "epochs" not in self._cache:
            if KIND_EPOCHS in self.extern:
                self._cache["epochs"] = self.extern[KIND_EPOCHS]
            else:
                path = self.ws.path(f"pred-{self.primary.family}-epochs.tsv")
                bundle, _ = record_epoch_probs(self.corpus, self.primary)
                write_predictions(bundle, path)
                self._cache["epochs"] = read_predictions(path, self.corpus)
        return self._cache["epochs"]

    def traces(self, schedule: str):
        # training dynamics have no file form; recomputed per invocation
        tag = f"traces:{schedule}"
        if tag not in self._cache:
            _, tr = record_epoch_probs(self.corpus, self.primary, schedule=schedule)
            self._cache[tag] = tr
        return self._cache[tag]

    def embeddings(self):
        if "emb" not in self._cache:
            if self.extern_embed is not None:
                self._cache["emb"] = self.extern_embed
            else:
                path = self.ws.path("embed-builtin.tsv")
                write_embeddings(builtin_embed(self.corpus, seed=self.seed), path)
                self._cache["emb"] = read_embeddings(path, self.corpus)
        return self._cache["emb"]

    def ensemble_members(self):
        specs = self.specs
        if len(specs) < 2:
            # one spec only: spread the same knobs over the task's families
            families = TEXT_FAMILIES if self.corpus.task is Task.TEXT else TOKEN_FAMILIES
            specs = [replace(self.primary, family=f) for f in families]
        return [self.single(s) for s in specs]

    def response_matrix(self) -> np.ndarray:
        bundle = self.repeated()
        units = extract_units(self.corpus)
        class_idx = {c: i for i, c in enumerate(bundle.classes)}
        R = np.zeros((bundle.passes, len(units)))
        for i, unit in enumerate(units):
            rows = bundle.rows[unit.uid]
            R[:, i] = rows.argmax(axis=1) == class_idx[unit.label]
        return R


def _run_method(code: str, ctx: DetectContext, scorers_so_far: list[ScoreVector]):
    corpus = ctx.corpus
    if code == "retag":
        return retag(corpus, ctx.single_for(code))
    if code == "cl":
        return confident_learning(corpus, ctx.single_for(code))
    if code == "de":
        return diverse_ensemble(corpus, ctx.ensemble_members())
    if code == "pe":
        members = gaussian_projection_ensemble(
            corpus, ctx.embeddings(), ctx.folds(), seed=ctx.seed)
        return projection_ensemble(corpus, members)
    if code == "la":
        return label_aggregation(corpus, ctx.repeated_for(code))
    if code == "irt":
        return irt_flag(corpus, fit_irt_2pl(ctx.response_matrix(), seed=ctx.seed))
    if code == "vn":
        return variation_ngrams(corpus)
    if code == "cu":
        return classification_uncertainty(corpus, ctx.single_for(code))
    if code == "pm":
        return prediction_margin(corpus, ctx.single_for(code))
    if code == "du":
        return dropout_uncertainty(corpus, ctx.repeated_for(code))
    if code == "dm":
        return datamap_confidence(corpus, ctx.epoch_bundle())
    if code == "cs":
        return curriculum_spotter(corpus, ctx.traces("curriculum"))
    if code == "ls":
        return leitner_spotter(corpus, ctx.traces("leitner"))
    if code == "le":
        return label_entropy(corpus)
    if code == "wd":
        return weighted_discrepancy(corpus)
    if code == "md":
        return mean_distance(corpus, ctx.embeddings())
    if code == "knn":
        return knn_entropy(corpus, ctx.embeddings())
    if code == "borda":
        if not scorers_so_far:
            raise ConfigError("borda aggregates the other requested scorers; "
                              "request at least one scorer besides it")
        return borda_count(scorers_so_far)
    raise ConfigError(f"unknown method {code!r}")


def stage_detect(ws: Workspace, task: Task, methods: tuple[str, ...],
                 specs: list[BaselineSpec], k: int, seed: int, no_cv: bool,
                 calibrate: bool, predictions: list[Path], embeddings: Path | None,
                 force: bool) -> None:
    check_methods(methods, task)
    if no_cv:
        blocked = sorted(set(methods) & NEEDS_FOLDS)
        if blocked:
            raise ConfigError(
                f"methods {', '.join(blocked)} need held-out folds; "
                "drop --no-cv or drop the methods"
            )
        if calibrate:
            raise ConfigError("calibration fits one map per held-out fold; "
                              "it cannot run with --no-cv")

    src = _require(ws.current_corpus(), "run ingest first")
    corpus = read_corpus(src, task)

    extern: dict[str, object] = {}
    for path in predictions:
        bundle = read_predictions(_require(Path(path), "check --predictions"), corpus)
        if bundle.kind in extern:
            raise ConfigError(f"two --predictions files of kind {bundle.kind}")
        extern[bundle.kind] = bundle
    extern_embed = None
    if embeddings is not None:
        extern_embed = read_embeddings(
            _require(Path(embeddings), "check --embeddings"), corpus)

    config = dict(_train_config(specs, k, seed, no_cv))
    config.update({"methods": ",".join(methods), "calibrate": calibrate,
                   "extern": ",".join(sorted(extern)),
                   "extern_embed": embeddings is not None})
    # key on upstream artifacts only; the bundles detect caches for itself
    # (mc, epochs, builtin embeddings) are derived from these
    known = [src] + [p for p in (
        ws.path("folds.tsv"),
        *(ws.path(f"pred-{s.family}{suffix}.tsv") for s in specs
          for suffix in ("", "+cal")),
    ) if p.exists()] + [Path(p) for p in predictions] + (
        [Path(embeddings)] if embeddings is not None else [])
    key = _stage_key("detect", config, known)
    outs = [
        ws.path(f"{'flags' if m in FLAGGER_CODES else 'scores'}-{m}.tsv")
        for m in methods
    ]
    if ws.cached("detect", key, outs, force):
        return

    ctx = DetectContext(ws=ws, corpus=corpus, specs=specs, seed=seed, k=k,
                        no_cv=no_cv, calibrate=calibrate, extern=extern,
                        extern_embed=extern_embed)
    scorers_so_far: list[ScoreVector] = []
    ordered = [m for m in methods if m != "borda"] + (
        ["borda"] if "borda" in methods else [])
    for code in ordered:
        result = _run_method(code, ctx, scorers_so_far)
        if isinstance(result, FlagVector):
            path = ws.path(f"flags-{code}.tsv")
            write_flags(result, path)
        else:
            path = ws.path(f"scores-{code}.tsv")
            write_scores(result, path)
            if code != "borda":
                scorers_so_far.append(result)
        print(f"detect: {code} -> {path.name}")
    ws.mark("detect", key)


def stage_evaluate(ws: Workspace, task: Task, name: str, force: bool) -> None:
    src = _require(ws.current_corpus(), "run ingest first")
    corpus = read_corpus(src, task)
    gold = {u.uid: bool(u.is_error) for u in extract_units(corpus)}
    if not any(u.gold_label is not None for u in extract_units(corpus)):
        raise DataError(f"{src} carries no gold labels; evaluate needs a "
                        "corrupted corpus (or one ingested with gold columns)")

    flag_paths = sorted(ws.out.glob("flags-*.tsv"))
    score_paths = sorted(ws.out.glob("scores-*.tsv"))
    if not flag_paths and not score_paths:
        raise DataError(f"no flags-*.tsv or scores-*.tsv under {ws.out}; "
                        "run detect first")
    key = _stage_key("evaluate", {"name": name}, [src, *flag_paths, *score_paths])
    out = ws.path("eval.json")
    if ws.cached("evaluate", key, [out], force):
        return
    reports = []
    for path in flag_paths:
        reports.append(eval_flagger(read_flags(path, corpus), gold, task))
    for path in score_paths:
        reports.append(eval_scorer(read_scores(path, corpus), gold, task))
    doc = assemble_report({name: reports})
    out.write_text(doc.records)
    ws.mark("evaluate", key)
    print(f"evaluate: wrote {out} ({len(reports)} reports)")


def stage_report(ws: Workspace, eval_paths: list[Path], force: bool) -> None:
    paths = [_require(Path(p), "run evaluate first") for p in eval_paths]
    key = _stage_key("report", {}, paths)
    outs = [ws.path("report.tsv"), ws.path("report.json"), ws.path("summary.txt")]
    if ws.cached("report", key, outs, force):
        return
    merged = {}
    for path in paths:
        for dataset, reports in records_to_reports(path.read_text()).items():
            if dataset in merged:
                raise DataError(f"dataset {dataset!r} appears in two eval files")
            merged[dataset] = reports
    doc = assemble_report(merged)
    outs[0].write_text(doc.tsv)
    outs[1].write_text(doc.records)
    outs[2].write_text(doc.summary)
    ws.mark("report", key)
    print(f"report: wrote {', '.join(p.name for p in outs)}")


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, *names: str) -> None:
    if "task" in names:
        p.add_argument("--task", required=True,
                       choices=[t.value for t in Task])
    if "out" in names:
        p.add_argument("--out", required=True, help="working directory")
    if "seed" in names:
        p.add_argument("--seed", type=int, default=0)
    if "folds" in names:
        p.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    if "model" in names:
        p.add_argument("--model", action="append", default=None,
                       help="family or family:key=val,... (repeatable)")
    if "no_cv" in names:
        p.add_argument("--no-cv", action="store_true", dest="no_cv")
    p.add_argument("--force", action="store_true",
                   help="recompute even when stage markers match")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aedkit",
        description="Annotation error detection over file-based pipelines.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and canonicalize a corpus")
    p.add_argument("--in", dest="inp", required=True)
    _add_common(p, "task", "out")

    p = sub.add_parser("corrupt", help="flip a fraction of labels, keeping gold")
    p.add_argument("--rate", type=float, default=DEFAULT_RATE)
    _add_common(p, "task", "out", "seed")

    p = sub.add_parser("train", help="train baselines, write prediction bundles")
    _add_common(p, "task", "out", "seed", "folds", "model", "no_cv")

    p = sub.add_parser("calibrate", help="write recalibrated bundle variants")
    _add_common(p, "task", "out", "seed", "folds", "model", "no_cv")

    p = sub.add_parser("detect", help="run detection methods over the bundles")
    p.add_argument("--methods", default="all",
                   help="comma list or 'all' (default)")
    p.add_argument("--calibrate", action="store_true",
                   help="feed calibrated bundles to cl/cu/du/pm")
    p.add_argument("--predictions", action="append", default=None,
                   help="externally produced bundle file (repeatable)")
    p.add_argument("--embeddings", default=None,
                   help="externally produced embedding file")
    _add_common(p, "task", "out", "seed", "folds", "model", "no_cv")

    p = sub.add_parser("evaluate", help="score all detector outputs against gold")
    p.add_argument("--name", default=None, help="dataset name in the report")
    _add_common(p, "task", "out")

    p = sub.add_parser("report", help="merge eval files into the report triple")
    p.add_argument("--in", dest="inp", default=None,
                   help="comma list of eval.json files (default: <out>/eval.json)")
    _add_common(p, "out")

    p = sub.add_parser("run", help="full pipeline from a key=value config file")
    p.add_argument("config", help="config file path")
    p.add_argument("--force", action="store_true")
    return parser


def _resolve_models(args, task: Task) -> list[BaselineSpec]:
    texts = args.model if args.model else default_models(task)
    return [parse_model(t, task) for t in texts]


def _resolve_methods(text: str, task: Task) -> tuple[str, ...]:
    if text == "all":
        return methods_for(task)
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    if not methods:
        raise ConfigError("--methods named no methods")
    return methods


# ---------------------------------------------------------------------------
# run: whole pipeline from a config file
# ---------------------------------------------------------------------------

_RUN_KEYS = {
    "task", "in", "out", "name", "seed", "folds", "rate",
    "methods", "model", "no_cv", "calibrate",
}

_TRUE = {"1", "true", "yes"}
_FALSE = {"0", "false", "no"}


def parse_config(path: Path) -> dict[str, object]:
    raw: dict[str, object] = {"model": []}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, eq, value = line.partition("=")
        key = key.strip()
        # trailing comments need whitespace before the hash, so uids and
        # paths containing '#' survive
        value = re.sub(r"\s#.*$", "", value).strip()
        if not eq or not key:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        if key not in _RUN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}; "
                              f"known keys: {', '.join(sorted(_RUN_KEYS))}")
        if key == "model":
            raw["model"].append(value)
        elif key in ("no_cv", "calibrate"):
            if value.lower() not in _TRUE | _FALSE:
                raise ConfigError(f"{path}:{lineno}: {key} must be true or false")
            raw[key] = value.lower() in _TRUE
        elif key in ("seed", "folds"):
            try:
                raw[key] = int(value)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: {key} must be an integer, "
                                  f"got {value!r}") from None
        elif key == "rate":
            try:
                raw[key] = float(value)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: rate must be a number, "
                                  f"got {value!r}") from None
        else:
            raw[key] = value
    return raw


def cmd_run(args) -> None:
    cfg = parse_config(_require(Path(args.config), "pass a config file path"))
    for required in ("task", "in", "out"):
        if required not in cfg:
            raise ConfigError(f"config file must set {required}=")
    try:
        task = Task(str(cfg["task"]))
    except ValueError:
        raise ConfigError(f"task must be one of {[t.value for t in Task]}, "
                          f"got {cfg['task']!r}") from None
    ws = Workspace(Path(cfg["out"]))
    seed = int(cfg.get("seed", 0))
    k = int(cfg.get("folds", DEFAULT_FOLDS))
    rate = float(cfg.get("rate", DEFAULT_RATE))
    no_cv = bool(cfg.get("no_cv", False))
    calibrate = bool(cfg.get("calibrate", False))
    methods = _resolve_methods(str(cfg.get("methods", "all")), task)
    model_texts = cfg["model"] or list(default_models(task))
    specs = [parse_model(t, task) for t in model_texts]
    name = str(cfg.get("name", ws.out.name))
    check_methods(methods, task)    # reject before any compute

    stage_ingest(ws, task, Path(cfg["in"]), args.force)
    if rate > 0:
        stage_corrupt(ws, task, rate, seed, args.force)
    stage_train(ws, task, specs, k, seed, no_cv, args.force)
    if calibrate:
        stage_calibrate(ws, task, specs, k, seed, no_cv, args.force)
    stage_detect(ws, task, methods, specs, k, seed, no_cv, calibrate,
                 [], None, args.force)
    stage_evaluate(ws, task, name, args.force)
    stage_report(ws, [ws.path("eval.json")], args.force)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def dispatch(args) -> None:
    if args.command == "run":
        cmd_run(args)
        return
    if args.command == "report":
        ws = Workspace(Path(args.out))
        paths = ([Path(p) for p in args.inp.split(",")] if args.inp
                 else [ws.path("eval.json")])
        stage_report(ws, paths, args.force)
        return

    task = Task(args.task)
    ws = Workspace(Path(args.out))
    if args.command == "ingest":
        stage_ingest(ws, task, Path(args.inp), args.force)
    elif args.command == "corrupt":
        stage_corrupt(ws, task, args.rate, args.seed, args.force)
    elif args.command == "train":
        stage_train(ws, task, _resolve_models(args, task), args.folds,
                    args.seed, args.no_cv, args.force)
    elif args.command == "calibrate":
        stage_calibrate(ws, task, _resolve_models(args, task), args.folds,
                        args.seed, args.no_cv, args.force)
    elif args.command == "detect":
        methods = _resolve_methods(args.methods, task)
        stage_detect(ws, task, methods, _resolve_models(args, task),
                     args.folds, args.seed, args.no_cv, args.calibrate,
                     [Path(p) for p in args.predictions or []],
                     Path(args.embeddings) if args.embeddings else None,
                     args.force)
    elif args.command == "evaluate":
        stage_evaluate(ws, task, args.name or ws.out.name, args.force)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
