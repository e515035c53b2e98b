"""Span utilities: BIO codec, alignment between span sets, probability rollup.

Alignment matches two span sets by maximizing total token overlap under a
one-to-one constraint. Reference spans with no overlapping partner come back
paired with ``None`` (a genuine miss, kept visible downstream); candidate
spans with no partner are dropped. Labels play no role in matching, which is
what lets label disagreements on matched spans surface as errors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corpus import DataError, NO_ENTITY, Span

log = logging.getLogger(__name__)

# Label reported for a reference span whose counterpart does not exist.
MISSING = "__MISSING__"

AGG_MODES = ("mean", "min", "max", "median")


# ---------------------------------------------------------------------------
# BIO codec
# ---------------------------------------------------------------------------


def bio_to_spans(tags: Sequence[str]) -> list[Span]:
    """Decode a BIO tag sequence into spans.

    Repair policy: an I-X that does not continue an open X span opens a new
    span, as if it were B-X. Each repair is logged.
    """
    spans: list[Span] = []
    begin = -1
    label = ""
    for i, tag in enumerate(tags):
        if tag == NO_ENTITY:
            prefix, name = "O", ""
        elif len(tag) > 2 and tag[1] == "-" and tag[0] in ("B", "I"):
            prefix, name = tag[0], tag[2:]
        else:
            raise DataError(f"malformed BIO tag {tag!r} at position {i}")
        if prefix == "I" and label == name:
            continue
        if begin >= 0:
            spans.append(Span(begin, i, label))
            begin, label = -1, ""
        if prefix == "I":
            log.warning("I-%s at position %d opens a span; reading it as B-%s", name, i, name)
            prefix = "B"
        if prefix == "B":
            begin, label = i, name
    if begin >= 0:
        spans.append(Span(begin, len(tags), label))
    return spans


def spans_to_bio(spans: Sequence[Span], length: int, gold: bool = False) -> list[str]:
    """Encode non-overlapping spans as BIO tags over ``length`` tokens."""
    tags = [NO_ENTITY] * length
    last_end = 0
    for sp in sorted(spans):
        if not (0 <= sp.begin < sp.end <= length):
            raise DataError(f"span ({sp.begin}, {sp.end}) outside sequence of length {length}")
        if sp.begin < last_end:
            raise DataError(f"span ({sp.begin}, {sp.end}) overlaps a previous span")
        last_end = sp.end
        name = sp.gold_label if gold else sp.label
        if name is None:
            raise DataError(f"span ({sp.begin}, {sp.end}) has no gold label")
        tags[sp.begin] = f"B-{name}"
        for i in range(sp.begin + 1, sp.end):
            tags[i] = f"I-{name}"
    return tags


# ---------------------------------------------------------------------------
# alignment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlignedPair:
    ref: Span
    cand: Span | None  # None: nothing on the candidate side overlaps ref

    @property
    def cand_label(self) -> str:
        return MISSING if self.cand is None else self.cand.label


@dataclass(frozen=True)
class Alignment:
    pairs: tuple[AlignedPair, ...]
    dropped: tuple[Span, ...]
    total_overlap: int


def overlap(a: Span, b: Span) -> int:
    return max(0, min(a.end, b.end) - max(a.begin, b.begin))


def align_spans(ref: Sequence[Span], cand: Sequence[Span]) -> Alignment:
    """One-to-one alignment maximizing total overlap (exact, not greedy).

    Zero-overlap pairings are never made. Among equal-overlap optima the
    result is deterministic, preferring pairs with smaller
    (ref.begin, ref.end, cand.begin, cand.end).
    """
    refs = sorted(ref)
    cands = sorted(cand)
    n, m = len(refs), len(cands)
    if n == 0 and m == 0:
        return Alignment(pairs=(), dropped=(), total_overlap=0)

    # Square matrix with dummy rows/cols so any span may stay unmatched at
    # cost 0. Real pairs earn -overlap, scaled to dominate the tiny rank
    # epsilons that pin down a canonical optimum.
    size = n + m
    scale = float(size + 1)
    eps = 1.0 / (n * m + 2) if n and m else 0.0
    cost = np.zeros((size, size))
    rank = 0
    for i in range(n):
        for j in range(m):
            ov = overlap(refs[i], cands[j])
            if ov > 0:
                cost[i, j] = -ov * scale + (rank + 1) * eps
            rank += 1
    rows, cols = linear_sum_assignment(cost)

    matched_cand: set[int] = set()
    pair_of_ref: dict[int, int] = {}
    for r, c in zip(rows, cols):
        if r < n and c < m and overlap(refs[r], cands[c]) > 0:
            pair_of_ref[r] = c
            matched_cand.add(c)
    pairs = tuple(
        AlignedPair(refs[i], cands[pair_of_ref[i]] if i in pair_of_ref else None)
        for i in range(n)
    )
    dropped = tuple(cands[j] for j in range(m) if j not in matched_cand)
    total = sum(overlap(p.ref, p.cand) for p in pairs if p.cand is not None)
    return Alignment(pairs=pairs, dropped=dropped, total_overlap=total)


# ---------------------------------------------------------------------------
# probability rollup
# ---------------------------------------------------------------------------


def aggregate_span_probs(rows: np.ndarray, mode: str = "mean") -> np.ndarray:
    """Collapse per-token probability rows into one renormalized row.

    rows: array (T, C), one row per token. A min-aggregated row can be all
    zero when token supports are disjoint; that falls back to uniform.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise DataError("aggregate_span_probs needs a non-empty (T, C) array")
    if mode == "mean":
        out = rows.mean(axis=0)
    elif mode == "min":
        out = rows.min(axis=0)
    elif mode == "max":
        out = rows.max(axis=0)
    elif mode == "median":
        out = np.median(rows, axis=0)
    else:
        raise DataError(f"unknown aggregation mode {mode!r}; pick one of {AGG_MODES}")
    total = out.sum()
    if total <= 0.0:
        return np.full(rows.shape[1], 1.0 / rows.shape[1])
    return out / total


def span_label_distribution(
    token_rows: np.ndarray,
    bio_classes: Sequence[str],
    mode: str = "mean",
) -> tuple[list[str], np.ndarray]:
    """Turn per-token BIO rows into one distribution over span classes.

    Per token, class X receives mass(B-X) + mass(I-X) and NO_ENTITY keeps the
    O mass; the resulting rows are then rolled up with ``mode``. Returns the
    span class list (sorted labels plus NO_ENTITY last) and the row.
    """
    token_rows = np.asarray(token_rows, dtype=float)
    names: list[str] = []
    for tag in bio_classes:
        if tag == NO_ENTITY:
            continue
        if len(tag) > 2 and tag[1] == "-" and tag[0] in ("B", "I"):
            if tag[2:] not in names:
                names.append(tag[2:])
        else:
            raise DataError(f"malformed BIO class {tag!r}")
    classes = sorted(names) + [NO_ENTITY]
    idx = {c: i for i, c in enumerate(classes)}
    mapped = np.zeros((token_rows.shape[0], len(classes)))
    for j, tag in enumerate(bio_classes):
        target = NO_ENTITY if tag == NO_ENTITY else tag[2:]
        mapped[:, idx[target]] += token_rows[:, j]
    return classes, aggregate_span_probs(mapped, mode=mode)
