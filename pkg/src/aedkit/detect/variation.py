"""Variation n-grams: inconsistent labels inside repeated contexts.

Token variant: every maximal repeated token sequence of length >= 2 is a
context; at each position of each context, occurrences whose label loses a
strict majority vote get flagged. Span variant: the context is the span's
token sequence plus one token of context either side.

Repeats are found with a generalized suffix automaton over the token-id
stream, one unique separator per sentence so no repeat crosses a boundary.
Within an automaton state every substring shares its occurrence set, so
checking all columns of the state's longest string covers every shorter
(n-gram, column) decision for free.
"""

from __future__ import annotations

from ..corpus import ConfigError, Corpus, Task, extract_units
from ..vectors import FlagVector

BOUNDARY = "<s>"


# ---------------------------------------------------------------------------
# suffix automaton
# ---------------------------------------------------------------------------


class _Automaton:
    """Suffix automaton over a sequence of integer symbols."""

    def __init__(self):
        self.next: list[dict[int, int]] = [{}]
        self.link: list[int] = [-1]
        self.length: list[int] = [0]
        self.last = 0

    def append(self, sym: int) -> int:
        cur = len(self.length)
        self.next.append({})
        self.length.append(self.length[self.last] + 1)
        self.link.append(-1)
        p = self.last
        while p >= 0 and sym not in self.next[p]:
            self.next[p][sym] = cur
            p = self.link[p]
        if p == -1:
            self.link[cur] = 0
        else:
            q = self.next[p][sym]
            if self.length[p] + 1 == self.length[q]:
                self.link[cur] = q
            else:
                clone = len(self.length)
                self.next.append(dict(self.next[q]))
                self.length.append(self.length[p] + 1)
                self.link.append(self.link[q])
                while p >= 0 and self.next[p].get(sym) == q:
                    self.next[p][sym] = clone
                    p = self.link[p]
                self.link[q] = clone
                self.link[cur] = clone
        self.last = cur
        return cur


def _repeat_occurrences(stream: list[int]):
    """Yield (longest length, end positions) per automaton state with >= 2 occurrences."""
    sam = _Automaton()
    end_state = []
    for sym in stream:
        end_state.append(sam.append(sym))

    n_states = len(sam.length)
    endpos: list[list[int]] = [[] for _ in range(n_states)]
    for pos, state in enumerate(end_state):
        endpos[state].append(pos)

    order = sorted(range(1, n_states), key=lambda s: -sam.length[s])
    for state in order:
        positions = endpos[state]
        if sam.length[state] >= 2 and len(positions) >= 2:
            yield sam.length[state], positions
        parent = sam.link[state]
        if parent > 0:
            endpos[parent].extend(positions)
        endpos[state] = []


# ---------------------------------------------------------------------------
# the two task variants
# ---------------------------------------------------------------------------


def _token_variation(corpus: Corpus) -> dict[str, bool]:
    units = extract_units(corpus)
    flags = {u.uid: False for u in units}

    symbol: dict[str, int] = {}
    stream: list[int] = []
    origin: list[tuple[str, int] | None] = []     # (doc_id, token index) per stream slot
    labels: list[str | None] = []
    sep = -1
    for doc in corpus.documents:
        for i, tok in enumerate(doc.tokens):
            sym = symbol.setdefault(tok.lower(), len(symbol))
            stream.append(sym)
            origin.append((doc.id, i))
            labels.append(doc.token_labels[i])
        stream.append(sep)                        # unique per sentence
        origin.append(None)
        labels.append(None)
        sep -= 1

    for length, ends in _repeat_occurrences(stream):
        for col in range(length):
            slots = [e - length + 1 + col for e in ends]
            counts: dict[str, int] = {}
            for s in slots:
                counts[labels[s]] = counts.get(labels[s], 0) + 1
            if len(counts) < 2:
                continue
            top = max(counts.values())
            winners = [lab for lab, c in counts.items() if c == top]
            if len(winners) != 1:
                continue                          # tie: flag nothing
            majority = winners[0]
            for s in slots:
                if labels[s] != majority:
                    doc_id, idx = origin[s]
                    flags[f"{doc_id}#{idx}"] = True
    return flags


def _span_variation(corpus: Corpus) -> dict[str, bool]:
    units = extract_units(corpus)
    flags = {u.uid: False for u in units}
    docs = {d.id: d for d in corpus.documents}

    groups: dict[tuple, list] = {}
    for u in units:
        doc = docs[u.doc_id]
        lo, hi = u.position
        left = doc.tokens[lo - 1].lower() if lo > 0 else BOUNDARY
        right = doc.tokens[hi].lower() if hi < len(doc.tokens) else BOUNDARY
        key = (left, tuple(t.lower() for t in doc.tokens[lo:hi]), right)
        groups.setdefault(key, []).append(u)

    for members in groups.values():
        if len(members) < 2:
            continue
        counts: dict[str, int] = {}
        for u in members:
            counts[u.label] = counts.get(u.label, 0) + 1
        if len(counts) < 2:
            continue
        top = max(counts.values())
        winners = [lab for lab, c in counts.items() if c == top]
        if len(winners) != 1:
            continue
        for u in members:
            if u.label != winners[0]:
                flags[u.uid] = True
    return flags


def variation_ngrams(corpus: Corpus) -> FlagVector:
    if corpus.task is Task.TEXT:
        raise ConfigError("variation n-grams need token or span units")
    if corpus.task is Task.TOKEN:
        flags = _token_variation(corpus)
    else:
        flags = _span_variation(corpus)
    return FlagVector(method="variation_ngrams", flags=flags)
