"""Deterministic synthetic corpora with planted structure.

Three generators, one per task. Each is pure: the same (n, seed) pair
always yields the same corpus, so pipelines built on them are exactly
reproducible. The vocabularies are designed, not sampled: class words
separate the text corpus cleanly, entity surfaces repeat so that
surface-form methods have something to chew on, and ORG/LOC entity
interiors share connective tokens to keep span interiors ambiguous.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, Document, Span, Task

NEG_WORDS = (
    "awful", "bad", "boring", "broken", "cheap", "dull", "faulty", "gloomy",
    "greasy", "poor", "sour", "stale", "tedious", "weak", "worse",
)
POS_WORDS = (
    "bright", "calm", "clean", "clever", "crisp", "fine", "fresh", "good",
    "great", "happy", "neat", "sharp", "solid", "sweet", "warm",
)
FILLER_WORDS = ("the", "a", "it", "was", "and", "very", "quite", "this", "that", "really")

CLASS_WORDS = {"neg": NEG_WORDS, "pos": POS_WORDS}

# entity interiors deliberately overlap: "of" appears inside both ORG and
# LOC entities, and the tail-name pool is shared across the two classes.
# Surfaces are used zipfian at draw time, so a few repeat densely (food for
# the surface-form methods) while the tail of the inventory is rare
_TAILS = ("arden", "solis", "marrow", "calder", "weavers", "glass", "holt",
          "verity", "quill", "senna", "brock", "fallow", "ember", "rusk")
_ORG_HEADS = ("bank", "house", "union", "guild", "order")
_LOC_HEADS = ("gulf", "isle", "vale", "sea", "port")
_PER_FIRST = ("mara", "ivan", "lena", "omar", "june", "tomas", "edda")
_PER_LAST = ("voss", "petrov", "ortiz", "haddad", "park", "abel", "lin")

def _interleave(*pools):
    out = []
    longest = max(len(p) for p in pools)
    for i in range(longest):
        out.extend(p[i] for p in pools if i < len(p))
    return tuple(out)


ORG_ENTITIES = _interleave(
    tuple((h, "of", "the", t) for h, t in zip(_ORG_HEADS, _TAILS[4:9])),
    tuple((h, "of", t) for i, h in enumerate(_ORG_HEADS) for t in _TAILS[i::3]),
    (("novacorp",), ("zenbank",), ("tessa", "holdings"), ("calder", "trust")),
)
LOC_ENTITIES = _interleave(
    tuple((h, "of", "the", t) for h, t in zip(_LOC_HEADS, _TAILS[7:12])),
    tuple((h, "of", t) for i, h in enumerate(_LOC_HEADS) for t in _TAILS[(i + 1) % 3::3]),
    (("northfield",), ("eastmoor",), ("calder", "bay"), ("arden", "ridge")),
)
PER_ENTITIES = _interleave(
    tuple((f, l) for i, f in enumerate(_PER_FIRST) for l in _PER_LAST[i % 2::2]),
    (("silas",), ("wren",)),
)
ENTITY_CLASSES = {"ORG": ORG_ENTITIES, "LOC": LOC_ENTITIES, "PER": PER_ENTITIES}

# zipfian context pool: a handful of very frequent words plus a long tail
# of rare ones, mimicking natural token frequencies
_SYLLABLES = ("ka", "lo", "mi", "re", "su", "ta", "ven", "dor", "bel", "nim")
CONTEXT_POOL = tuple(
    a + b + c for a in _SYLLABLES for b in _SYLLABLES[:5] for c in ("", "n", "s")
)[:400]
_CONTEXT_WEIGHTS = np.array([1.0 / (r + 1) for r in range(len(CONTEXT_POOL))])
_CONTEXT_WEIGHTS /= _CONTEXT_WEIGHTS.sum()

# words with fixed part-of-speech tags; sentences are drawn from shape
# templates so the same contexts recur across the corpus
TAGGED_VOCAB = {
    "DET": ("the", "a", "that", "each"),
    "ADJ": ("old", "fast", "quiet", "grey", "small"),
    "NOUN": ("dog", "ship", "river", "market", "signal", "engine"),
    "VERB": ("barks", "sails", "turns", "hums", "drifts", "stalls"),
}


def separable_text_corpus(n: int = 1000, seed: int = 0) -> Corpus:
    """Two cleanly separated sentiment-style classes, ``n`` documents."""
    rng = np.random.default_rng(seed)
    classes = ("neg", "pos")
    docs = []
    for i in range(n):
        label = classes[int(rng.integers(2))]
        words = list(rng.choice(CLASS_WORDS[label], size=6, replace=True))
        words += list(rng.choice(FILLER_WORDS, size=2, replace=True))
        rng.shuffle(words)
        docs.append(Document(id=f"d{i:04d}", tokens=tuple(words), label=label))
    return Corpus(task=Task.TEXT, classes=classes, documents=tuple(docs))


def entity_corpus(n: int = 400, seed: int = 0) -> Corpus:
    """Span-labeled sentences over a small recurring entity inventory.

    Entity surfaces repeat corpus-wide while the surrounding context is
    drawn from the zipfian pool, so most sentences carry at least one rare
    word. About 30 percent of sentences hold two entities, the rest one.
    """
    rng = np.random.default_rng(seed)
    names = tuple(ENTITY_CLASSES)
    docs = []
    for i in range(n):
        n_entities = 2 if rng.random() < 0.3 else 1
        picks = []
        for _ in range(n_entities):
            cls = names[int(rng.integers(len(names)))]
            pool = ENTITY_CLASSES[cls]
            weights = _CONTEXT_WEIGHTS[:len(pool)] / _CONTEXT_WEIGHTS[:len(pool)].sum()
            picks.append((cls, pool[int(rng.choice(len(pool), p=weights))]))
        ctx = iter(rng.choice(len(CONTEXT_POOL), size=3, p=_CONTEXT_WEIGHTS))

        tokens: list[str] = []
        spans: list[Span] = []

        def put(entity):
            cls, surface = entity
            begin = len(tokens)
            tokens.extend(surface)
            spans.append(Span(begin, len(tokens), cls))

        def ctxword():
            tokens.append(CONTEXT_POOL[int(next(ctx))])

        shape = int(rng.integers(4)) if n_entities == 1 else 4
        if shape == 0:
            ctxword()
            ctxword()
            put(picks[0])
            ctxword()
        elif shape == 1:
            put(picks[0])
            tokens.append("announced")
            ctxword()
            ctxword()
        elif shape == 2:
            tokens.append("the")
            ctxword()
            tokens.append("about")
            put(picks[0])
            ctxword()
        elif shape == 3:
            ctxword()
            put(picks[0])
            ctxword()
        else:
            tokens.append("both")
            put(picks[0])
            tokens.append("and")
            put(picks[1])
            ctxword()
        docs.append(Document(id=f"d{i:04d}", tokens=tuple(tokens), spans=tuple(spans)))
    return Corpus(task=Task.SPAN, classes=("LOC", "ORG", "PER", "O"),
                  documents=tuple(docs))


def tagged_corpus(n: int = 200, seed: int = 0) -> Corpus:
    """Part-of-speech style token corpus built from repeating templates."""
    rng = np.random.default_rng(seed)
    templates = (
        ("DET", "NOUN", "VERB"),
        ("DET", "ADJ", "NOUN", "VERB"),
        ("DET", "NOUN", "VERB", "and", "VERB"),
        ("that", "ADJ", "NOUN", "VERB"),
    )
    docs = []
    for i in range(n):
        template = templates[int(rng.integers(len(templates)))]
        tokens = []
        tags = []
        for slot in template:
            if slot in TAGGED_VOCAB:
                pool = TAGGED_VOCAB[slot]
                tokens.append(pool[int(rng.integers(len(pool)))])
                tags.append(slot)
            else:
                tokens.append(slot)
                tags.append("DET" if slot == "that" else "CONJ")
        docs.append(Document(id=f"d{i:04d}", tokens=tuple(tokens),
                             token_labels=tuple(tags)))
    return Corpus(task=Task.TOKEN, classes=("ADJ", "CONJ", "DET", "NOUN", "VERB"),
                  documents=tuple(docs))


def generate(task: Task, n: int, seed: int) -> Corpus:
    if task is Task.TEXT:
        return separable_text_corpus(n, seed)
    if task is Task.SPAN:
        return entity_corpus(n, seed)
    return tagged_corpus(n, seed)


def main(argv=None) -> int:
    import argparse

    from .corpus import extract_units
    from .formats import write_corpus

    parser = argparse.ArgumentParser(
        prog="aedkit.synth",
        description="Write a deterministic synthetic corpus to a file.")
    parser.add_argument("--task", required=True, choices=[t.value for t in Task])
    parser.add_argument("--n", type=int, default=200, help="number of documents")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="output corpus path")
    args = parser.parse_args(argv)
    corpus = generate(Task(args.task), args.n, args.seed)
    write_corpus(corpus, args.out)
    n_units = len(extract_units(corpus))
    print(f"wrote {len(corpus.documents)} documents ({n_units} units) to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
