"""Detector evaluation and report assembly.

Flaggers are scored as binary classifiers (precision, recall, F1, fraction
flagged). Scorers are scored as rankers: units are ordered by suspicion with
ties broken by uid, and the ranking is summarized by average precision plus
precision and recall at the top 10 percent cutoff. ROC AUC is intentionally
not computed anywhere in this module; on corpora where errors are rare it
paints far too rosy a picture.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import ConfigError, DataError, Task
from .vectors import FlagVector, Polarity, ScoreVector

REPORT_MAGIC = "#aed-report"
CUTOFF_FRACTION = 0.10

FLAGGER_METRICS = ("precision", "recall", "f1", "pct_flagged")
SCORER_METRICS = ("average_precision", "precision_at_10pct", "recall_at_10pct")

_TSV_COLUMNS = ("dataset", "method", "task", "kind", "n_units", "n_errors") + \
    FLAGGER_METRICS + SCORER_METRICS

_FLOAT = "%.12g"


# ---------------------------------------------------------------------------
# report record
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    """One detector evaluated on one dataset."""

    method: str
    task: Task
    kind: str  # "flagger" or "scorer"
    n_units: int
    n_errors: int
    metrics: dict[str, float]
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("flagger", "scorer"):
            raise DataError(f"unknown report kind {self.kind!r}")
        allowed = FLAGGER_METRICS if self.kind == "flagger" else SCORER_METRICS
        required = set(allowed) - {"average_precision"}
        got = set(self.metrics)
        if not got <= set(allowed) or not required <= got:
            raise DataError(
                f"{self.kind} metrics must be {sorted(allowed)} "
                f"(average_precision may be absent), got {sorted(got)}")
        for name, value in self.metrics.items():
            if not (0.0 <= value <= 1.0) or not math.isfinite(value):
                raise DataError(f"metric {name}={value} outside [0, 1]")
        if not 0 <= self.n_errors <= self.n_units:
            raise DataError(
                f"n_errors={self.n_errors} inconsistent with n_units={self.n_units}")

    @property
    def headline(self) -> float | None:
        """F1 for flaggers, average precision for scorers (None if absent)."""
        key = "f1" if self.kind == "flagger" else "average_precision"
        return self.metrics.get(key)


def _check_gold(gold: Mapping[str, bool], uids: Iterable[str], what: str) -> None:
    missing = sorted(set(uids) - set(gold))
    if missing:
        raise DataError(f"gold labels missing for {len(missing)} units in {what}, "
                        f"first {missing[0]!r}")


# ---------------------------------------------------------------------------
# flagger metrics
# ---------------------------------------------------------------------------


def eval_flagger(flags: FlagVector, gold: Mapping[str, bool], task: Task) -> EvalReport:
    """Precision, recall, F1, and fraction flagged; every 0/0 reads as 0."""
    _check_gold(gold, flags.flags, f"flags from {flags.method}")
    tp = fp = fn = 0
    for uid, flagged in flags.flags.items():
        err = bool(gold[uid])
        if flagged and err:
            tp += 1
        elif flagged:
            fp += 1
        elif err:
            fn += 1
    n = len(flags.flags)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(
        method=flags.method, task=task, kind="flagger",
        n_units=n, n_errors=tp + fn,
        metrics={
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "pct_flagged": (tp + fp) / n,
        },
    )


# ---------------------------------------------------------------------------
# scorer metrics
# ---------------------------------------------------------------------------


def rank_by_suspicion(scores: ScoreVector) -> list[str]:
    """Most suspicious first; equal suspicion falls back to uid order."""
    return sorted(scores.scores, key=lambda u: (-scores.suspicion(u), u))


def eval_scorer(scores: ScoreVector, gold: Mapping[str, bool], task: Task) -> EvalReport:
    _check_gold(gold, scores.scores, f"scores from {scores.method}")
    order = rank_by_suspicion(scores)
    err = [bool(gold[u]) for u in order]
    n = len(order)
    n_errors = sum(err)
    m = math.ceil(CUTOFF_FRACTION * n)
    hits = sum(err[:m])

    metrics: dict[str, float] = {}
    notes: tuple[str, ...] = ()
    if n_errors:
        seen = 0
        total = 0.0
        for rank, is_err in enumerate(err, start=1):
            if is_err:
                seen += 1
                total += seen / rank
        metrics["average_precision"] = total / n_errors
    else:
        notes = ("average precision undefined: gold marks no errors",)
    metrics["precision_at_10pct"] = hits / m
    metrics["recall_at_10pct"] = hits / n_errors if n_errors else 0.0
    return EvalReport(method=scores.method, task=task, kind="scorer",
                      n_units=n, n_errors=n_errors, metrics=metrics, notes=notes)


def scorer_to_flags(scores: ScoreVector, fraction: float = CUTOFF_FRACTION) -> FlagVector:
    """Flag the ceil(fraction * n) most suspicious units."""
    if not 0.0 < fraction <= 1.0:
        raise ConfigError(f"fraction must be in (0, 1], got {fraction}")
    order = rank_by_suspicion(scores)
    cut = math.ceil(fraction * len(order))
    top = set(order[:cut])
    label = f"top{_FLOAT % (100 * fraction)}pct"
    return FlagVector(method=f"{scores.method}+{label}",
                      flags={uid: uid in top for uid in scores.scores})


# ---------------------------------------------------------------------------
# cross-dataset summary
# ---------------------------------------------------------------------------


def harmonic_mean(values: Sequence[float]) -> float:
    if not values:
        raise DataError("harmonic mean of nothing")
    if any(v < 0 for v in values):
        raise DataError("harmonic mean needs nonnegative values")
    if any(v == 0 for v in values):
        return 0.0
    return len(values) / sum(1.0 / v for v in values)


def harmonic_mean_summary(reports: Sequence[EvalReport]) -> float:
    """Harmonic mean of the headline metric across datasets for one method."""
    if not reports:
        raise DataError("no reports to summarize")
    kinds = {r.kind for r in reports}
    if len(kinds) != 1:
        raise DataError(f"cannot mix report kinds {sorted(kinds)} in one summary")
    values = []
    for r in reports:
        if r.headline is None:
            raise DataError(f"{r.method}: headline metric absent ({'; '.join(r.notes)})")
        values.append(r.headline)
    return harmonic_mean(values)


# ---------------------------------------------------------------------------
# report documents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReportDocument:
    tsv: str
    records: str
    summary: str


def _sorted_rows(by_dataset: Mapping[str, Sequence[EvalReport]]):
    for dataset in sorted(by_dataset):
        for rep in sorted(by_dataset[dataset], key=lambda r: (r.kind, r.method)):
            yield dataset, rep


def _tsv(by_dataset: Mapping[str, Sequence[EvalReport]]) -> str:
    lines = [f"{REPORT_MAGIC} v1", "\t".join(_TSV_COLUMNS)]
    for dataset, rep in _sorted_rows(by_dataset):
        cells = [dataset, rep.method, rep.task.value, rep.kind,
                 str(rep.n_units), str(rep.n_errors)]
        for key in FLAGGER_METRICS + SCORER_METRICS:
            value = rep.metrics.get(key)
            cells.append("-" if value is None else _FLOAT % value)
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def _records(by_dataset: Mapping[str, Sequence[EvalReport]]) -> str:
    datasets: dict[str, list[dict]] = {}
    for dataset, rep in _sorted_rows(by_dataset):
        datasets.setdefault(dataset, []).append({
            "method": rep.method,
            "task": rep.task.value,
            "kind": rep.kind,
            "n_units": rep.n_units,
            "n_errors": rep.n_errors,
            "metrics": {k: rep.metrics[k] for k in sorted(rep.metrics)},
            "notes": list(rep.notes),
        })
    doc = {"schema": "aed-report", "version": 1, "datasets": datasets}
    return json.dumps(doc, indent=2) + "\n"


def _summary(by_dataset: Mapping[str, Sequence[EvalReport]]) -> str:
    lines = []
    per_method: dict[tuple[str, str], list[EvalReport]] = {}
    for dataset, rep in _sorted_rows(by_dataset):
        per_method.setdefault((rep.kind, rep.method), []).append(rep)
        m = rep.metrics
        if rep.kind == "flagger":
            body = (f"P={m['precision']:.3f} R={m['recall']:.3f} F1={m['f1']:.3f} "
                    f"flagged={100 * m['pct_flagged']:.1f}%")
        else:
            ap = m.get("average_precision")
            ap_txt = f"{ap:.3f}" if ap is not None else "n/a (no gold errors)"
            body = (f"AP={ap_txt} P@10%={m['precision_at_10pct']:.3f} "
                    f"R@10%={m['recall_at_10pct']:.3f}")
        lines.append(f"{dataset:<16} {rep.method:<24} {rep.kind:<8} {body}")
    if len(by_dataset) > 1:
        lines.append("")
        for (kind, method), reps in sorted(per_method.items()):
            if len(reps) < 2 or any(r.headline is None for r in reps):
                continue
            label = "F1" if kind == "flagger" else "AP"
            lines.append(f"H({label}) {method} = {harmonic_mean_summary(reps):.3f} "
                         f"over {len(reps)} datasets")
    return "\n".join(lines) + "\n"


def assemble_report(by_dataset: Mapping[str, Sequence[EvalReport]]) -> ReportDocument:
    """Build the machine table, the record file, and the human summary."""
    if not by_dataset:
        raise DataError("no evaluation results to assemble")
    return ReportDocument(tsv=_tsv(by_dataset), records=_records(by_dataset),
                          summary=_summary(by_dataset))


def records_to_reports(text: str) -> dict[str, list[EvalReport]]:
    """Parse a record file back into reports, validating the schema."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"report records are not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema") != "aed-report":
        raise DataError("not an aed-report record file")
    if doc.get("version") != 1:
        raise DataError(f"unsupported report version {doc.get('version')!r}")
    out: dict[str, list[EvalReport]] = {}
    for dataset, rows in doc.get("datasets", {}).items():
        reports = []
        for row in rows:
            try:
                reports.append(EvalReport(
                    method=row["method"], task=Task(row["task"]), kind=row["kind"],
                    n_units=int(row["n_units"]), n_errors=int(row["n_errors"]),
                    metrics={k: float(v) for k, v in row["metrics"].items()},
                    notes=tuple(row.get("notes", ())),
                ))
            except (KeyError, ValueError, TypeError) as exc:
                raise DataError(f"bad report row in dataset {dataset!r}: {exc}") from None
        out[dataset] = reports
    return out
