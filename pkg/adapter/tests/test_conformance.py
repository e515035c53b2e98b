"""Conformance against the toolkit: every exported file must be accepted
by the toolkit's own readers as written, and the numbers must line up.

The toolkit package is imported here, in the tests only; the adapter
itself never touches it.
"""

from __future__ import annotations

import re
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from aedkit import Task
from aedkit.corpus import corpus_digest as toolkit_digest
from aedkit.detect import retag
from aedkit.formats import (
    read_corpus,
    read_embeddings,
    read_predictions,
    write_embeddings,
)

import aed_adapter


def run(*args: str, cwd: Path) -> subprocess.CompletedProcess:
    return subprocess.run([*map(str, args)], capture_output=True, text=True, cwd=cwd)


@pytest.fixture(scope="module")
def ws(tmp_path_factory) -> dict:
    """A toolkit workspace plus one adapter export of every kind."""
    root = tmp_path_factory.mktemp("ws")
    steps = (
        (sys.executable, "-m", "aedkit.synth", "--task", "token",
         "--n", "120", "--seed", "1", "--out", "raw.tsv"),
        ("aedkit", "ingest", "--task", "token", "--in", "raw.tsv", "--out", "work"),
        ("aedkit", "corrupt", "--task", "token", "--out", "work", "--rate", "0.08"),
        ("aedkit", "train", "--task", "token", "--out", "work", "--folds", "6"),
    )
    for step in steps:
        proc = run(*step, cwd=root)
        assert proc.returncode == 0, proc.stderr

    exports = {
        "single": ("predictions", "--model", "logreg", "--kind", "single"),
        "repeated": ("predictions", "--model", "logreg", "--kind", "repeated:5"),
        "epochs": ("predictions", "--model", "sgd", "--kind", "epochs:4"),
        "emb": ("embeddings", "--dim", "32"),
    }
    out = {"root": root}
    for name, (command, *extra) in exports.items():
        args = ["aed-export", command, "--task", "token",
                "--in", "work/corrupted.tsv", "--seed", "0",
                "--out", f"ext-{name}.tsv", *extra]
        if command == "predictions":
            args += ["--fold-file", "work/folds.tsv"]
        proc = run(*args, cwd=root)
        assert proc.returncode == 0, proc.stderr
        out[name] = root / f"ext-{name}.tsv"
        if name == "single":
            m = re.search(r"disagreements=(\d+)", proc.stdout)
            assert m, proc.stdout
            out["disagreements"] = int(m.group(1))
    out["corpus"] = read_corpus(root / "work" / "corrupted.tsv", Task.TOKEN)
    return out


# ---------------------------------------------------------------------------
# bundles under the toolkit readers
# ---------------------------------------------------------------------------


def test_single_bundle_validates(ws):
    bundle = read_predictions(ws["single"], ws["corpus"])
    assert bundle.kind == "single" and bundle.passes == 1
    assert bundle.model == "logreg"


def test_repeated_bundle_has_five_rows_per_uid(ws):
    bundle = read_predictions(ws["repeated"], ws["corpus"])
    assert bundle.kind == "repeated" and bundle.passes == 5
    n_classes = len(ws["corpus"].classes)
    assert all(arr.shape == (5, n_classes) for arr in bundle.rows.values())


def test_epoch_bundle_has_four_rows_per_uid(ws):
    bundle = read_predictions(ws["epochs"], ws["corpus"])
    assert bundle.kind == "epochs" and bundle.passes == 4


def test_no_invented_uids(ws):
    from aedkit.corpus import extract_units
    want = {u.uid for u in extract_units(ws["corpus"])}
    for name in ("single", "repeated", "epochs"):
        got = set(read_predictions(ws[name], ws["corpus"]).rows)
        assert got == want


def test_retag_reproduces_adapter_disagreement_count(ws):
    bundle = read_predictions(ws["single"], ws["corpus"])
    flags = retag(ws["corpus"], bundle)
    assert sum(flags.flags.values()) == ws["disagreements"]


def test_toolkit_cli_consumes_the_exports(ws):
    proc = run("aedkit", "detect", "--task", "token", "--out", "work",
               "--folds", "6", "--methods", "retag,du,knn",
               "--predictions", "ext-single.tsv",
               "--predictions", "ext-repeated.tsv",
               "--embeddings", "ext-emb.tsv", "--force", cwd=ws["root"])
    assert proc.returncode == 0, proc.stderr
    flag_lines = (ws["root"] / "work" / "flags-retag.tsv").read_text().splitlines()[1:]
    n_flagged = sum(int(line.split("\t")[1]) for line in flag_lines if line)
    assert n_flagged == ws["disagreements"]
    assert (ws["root"] / "work" / "scores-du.tsv").exists()
    assert (ws["root"] / "work" / "scores-knn.tsv").exists()


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------


def test_embeddings_validate_unit_norm_and_round_trip(ws):
    emb = read_embeddings(ws["emb"], ws["corpus"])
    assert emb.dim == 32
    norms = np.array([np.linalg.norm(v) for v in emb.vectors.values()])
    assert np.all(np.abs(norms - 1.0) < 1e-9)
    # writing the parsed set back through the toolkit reproduces the file
    rt = ws["root"] / "ext-emb-rt.tsv"
    write_embeddings(emb, rt)
    assert rt.read_bytes() == ws["emb"].read_bytes()


def test_duplicate_sentences_map_to_identical_vectors(tmp_path):
    rows = []
    for sent in (["the", "cat", "sat"], ["dogs", "bark", "loudly"],
                 ["the", "cat", "sat"], ["rain", "fell", "hard"]):
        rows += [f"{w}\tNOUN" for w in sent] + [""]
    (tmp_path / "dup.tsv").write_text("\n".join(rows))
    proc = run("aed-export", "embeddings", "--task", "token", "--in", "dup.tsv",
               "--dim", "8", "--seed", "0", "--out", "emb.tsv", cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    corpus = read_corpus(tmp_path / "dup.tsv", Task.TOKEN)
    emb = read_embeddings(tmp_path / "emb.tsv", corpus)
    for t in range(3):
        a, b = emb.vectors[f"s00000#{t}"], emb.vectors[f"s00002#{t}"]
        cos = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
        assert cos > 0.999999


# ---------------------------------------------------------------------------
# digest and guard rails
# ---------------------------------------------------------------------------


def test_digest_matches_toolkit_on_both_corpora(ws):
    # with the gold column (corrupted) and without (pristine): the
    # adapter's independent digest must agree with the toolkit's
    for name in ("corrupted.tsv", "corpus.tsv"):
        path = ws["root"] / "work" / name
        ours = aed_adapter.corpus_digest(aed_adapter.read_corpus(path, "token"))
        theirs = toolkit_digest(read_corpus(path, Task.TOKEN))
        assert ours == theirs


def test_fold_file_for_another_corpus_rejected(ws, tmp_path):
    lines = (ws["root"] / "work" / "corrupted.tsv").read_text().splitlines()
    lines[0] = lines[0].replace("\t", "X\t", 1)     # perturb one token
    (tmp_path / "other.tsv").write_text("\n".join(lines) + "\n")
    proc = run("aed-export", "predictions", "--task", "token",
               "--in", "other.tsv",
               "--fold-file", ws["root"] / "work" / "folds.tsv",
               "--out", "nope.tsv", cwd=tmp_path)
    assert proc.returncode == 3
    assert "different corpus" in proc.stderr
    assert not (tmp_path / "nope.tsv").exists()


def test_unknown_recipe_names_the_alternatives(ws):
    proc = run("aed-export", "predictions", "--task", "token",
               "--in", "work/corrupted.tsv", "--fold-file", "work/folds.tsv",
               "--model", "bert", "--out", "nope.tsv", cwd=ws["root"])
    assert proc.returncode == 2
    assert "logreg" in proc.stderr and "sgd" in proc.stderr


def test_recipe_kind_mismatch_is_actionable(ws):
    proc = run("aed-export", "predictions", "--task", "token",
               "--in", "work/corrupted.tsv", "--fold-file", "work/folds.tsv",
               "--model", "logreg", "--kind", "epochs:3",
               "--out", "nope.tsv", cwd=ws["root"])
    assert proc.returncode == 2
    assert "sgd" in proc.stderr


def test_bad_kind_token(ws):
    proc = run("aed-export", "predictions", "--task", "token",
               "--in", "work/corrupted.tsv", "--fold-file", "work/folds.tsv",
               "--kind", "sometimes", "--out", "nope.tsv", cwd=ws["root"])
    assert proc.returncode == 2


# ---------------------------------------------------------------------------
# the other corpus shapes
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("task,n", [("text", 80), ("span", 60)])
def test_single_export_on_other_tasks(task, n, tmp_path):
    steps = (
        (sys.executable, "-m", "aedkit.synth", "--task", task,
         "--n", str(n), "--seed", "2", "--out", "raw.tsv"),
        ("aedkit", "ingest", "--task", task, "--in", "raw.tsv", "--out", "work"),
        ("aedkit", "train", "--task", task, "--out", "work", "--folds", "5"),
        ("aed-export", "predictions", "--task", task, "--in", "work/corpus.tsv",
         "--fold-file", "work/folds.tsv", "--out", "ext.tsv"),
    )
    for step in steps:
        proc = run(*step, cwd=tmp_path)
        assert proc.returncode == 0, proc.stderr
    corpus = read_corpus(tmp_path / "work" / "corpus.tsv", Task(task))
    bundle = read_predictions(tmp_path / "ext.tsv", corpus)
    assert bundle.passes == 1
    flags = retag(corpus, bundle)
    assert set(flags.flags) == set(bundle.rows)
