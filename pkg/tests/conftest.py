"""Shared fixtures: tiny corpora in all three tasks."""

from __future__ import annotations

import pytest

from aedkit import Corpus, Document, Span, Task


@pytest.fixture
def text_corpus() -> Corpus:
    docs = (
        Document(id="d1", tokens=("the movie was great",), label="pos"),
        Document(id="d2", tokens=("terrible waste of time",), label="neg"),
        Document(id="d3", tokens=("loved every minute",), label="pos"),
    )
    return Corpus(task=Task.TEXT, classes=("neg", "pos"), documents=docs)


@pytest.fixture
def token_corpus() -> Corpus:
    docs = (
        Document(
            id="s1",
            tokens=("the", "club", "opened", "early"),
            token_labels=("DET", "NOUN", "VERB", "ADV"),
        ),
        Document(
            id="s2",
            tokens=("we", "club", "together", "at", "night"),
            token_labels=("PRON", "VERB", "ADV", "ADP", "NOUN"),
        ),
    )
    classes = ("ADP", "ADV", "DET", "NOUN", "PRON", "VERB")
    return Corpus(task=Task.TOKEN, classes=classes, documents=docs)


@pytest.fixture
def span_corpus() -> Corpus:
    docs = (
        Document(
            id="s1",
            tokens=("alice", "met", "bob", "in", "paris"),
            spans=(Span(0, 1, "PER"), Span(2, 3, "PER"), Span(4, 5, "LOC")),
        ),
        Document(
            id="s2",
            tokens=("acme", "corp", "hired", "alice"),
            spans=(Span(0, 2, "ORG"), Span(3, 4, "PER")),
        ),
    )
    return Corpus(task=Task.SPAN, classes=("LOC", "ORG", "PER", "O"), documents=docs)
