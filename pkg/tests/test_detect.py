"""Detection methods: flaggers, scorers, variation n-grams, aggregation."""

import math

import numpy as np
import pytest

from aedkit import ConfigError, Corpus, DataError, Document, Span, Task, extract_units
from aedkit.detect import (
    Polarity,
    ScoreVector,
    aggregate_repeated_labels,
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
from aedkit.formats import (
    EmbeddingSet,
    KIND_EPOCHS,
    KIND_REPEATED,
    KIND_SINGLE,
    PredictionBundle,
)
from aedkit.models.irt import IrtFit
from aedkit.models.training import EpochTraces

from oracles import brute_force_repeated_ngrams, entropy


def text_corpus_of(labels, classes=("a", "b")):
    docs = tuple(
        Document(id=f"u{i}", tokens=("tok",), label=lab) for i, lab in enumerate(labels)
    )
    return Corpus(task=Task.TEXT, classes=classes, documents=docs)


def bundle_of(rows, classes=("a", "b"), kind=KIND_SINGLE, passes=1):
    shaped = {uid: np.atleast_2d(np.asarray(r, dtype=float)) for uid, r in rows.items()}
    return PredictionBundle(model="m", kind=kind, passes=passes, classes=classes,
                            rows=shaped)


# ---------------------------------------------------------------------------
# flaggers
# ---------------------------------------------------------------------------


class TestRetag:
    def test_agreement_and_disagreement(self):
        corpus = text_corpus_of(["a", "a"])
        bundle = bundle_of({"u0#0": [0.9, 0.1], "u1#0": [0.4, 0.6]})
        flags = retag(corpus, bundle).flags
        assert flags == {"u0#0": False, "u1#0": True}

    def test_argmax_tie_lowest_index(self):
        corpus = text_corpus_of(["a", "b"])
        bundle = bundle_of({"u0#0": [0.5, 0.5], "u1#0": [0.5, 0.5]})
        flags = retag(corpus, bundle).flags
        assert flags == {"u0#0": False, "u1#0": True}

    def test_matches_direct_recomputation(self):
        rng = np.random.default_rng(0)
        labels = rng.choice(["a", "b", "c"], size=60)
        corpus = text_corpus_of(labels, classes=("a", "b", "c"))
        raw = rng.dirichlet(np.ones(3), size=60)
        bundle = bundle_of({f"u{i}#0": raw[i] for i in range(60)}, classes=("a", "b", "c"))
        flags = retag(corpus, bundle).flags
        for i, lab in enumerate(labels):
            assert flags[f"u{i}#0"] == (("a", "b", "c")[raw[i].argmax()] != lab)

    def test_cover_mismatch_rejected(self):
        corpus = text_corpus_of(["a", "b"])
        with pytest.raises(DataError, match="missing"):
            retag(corpus, bundle_of({"u0#0": [0.9, 0.1]}))


class TestConfidentLearning:
    def test_four_unit_hand_case(self):
        # thresholds: t_a = (.9+.4)/2 = .65, t_b = (.8+.3)/2 = .55
        corpus = text_corpus_of(["a", "a", "b", "b"])
        bundle = bundle_of({
            "u0#0": [0.9, 0.1],
            "u1#0": [0.4, 0.6],
            "u2#0": [0.2, 0.8],
            "u3#0": [0.7, 0.3],
        })
        flags = confident_learning(corpus, bundle).flags
        assert flags == {"u0#0": False, "u1#0": True, "u2#0": False, "u3#0": True}

    def test_perfect_predictions_no_flags(self):
        corpus = text_corpus_of(["a", "b", "a"])
        bundle = bundle_of({
            "u0#0": [0.95, 0.05], "u1#0": [0.1, 0.9], "u2#0": [0.85, 0.15],
        })
        assert not any(confident_learning(corpus, bundle).flags.values())

    def test_no_candidates_abstains(self):
        # u2 sits below both thresholds: no candidate class, stays unflagged
        corpus = text_corpus_of(["a", "b", "a"])
        bundle = bundle_of({
            "u0#0": [0.9, 0.1], "u1#0": [0.1, 0.9], "u2#0": [0.5, 0.5],
        })
        flags = confident_learning(corpus, bundle).flags
        assert flags["u2#0"] is False

    def test_empty_class_never_candidate(self):
        # nothing labeled b: t_b = +inf, so b can't attract units
        corpus = text_corpus_of(["a", "a"])
        bundle = bundle_of({"u0#0": [0.6, 0.4], "u1#0": [0.1, 0.9]})
        flags = confident_learning(corpus, bundle).flags
        assert not any(flags.values())


class TestEnsembles:
    def make(self, argmax_rows, labels):
        corpus = text_corpus_of(labels)
        bundles = []
        for member in argmax_rows:
            rows = {}
            for i, cls in enumerate(member):
                row = [0.8, 0.2] if cls == 0 else [0.2, 0.8]
                rows[f"u{i}#0"] = row
            bundles.append(bundle_of(rows))
        return corpus, bundles

    def test_plurality_disagreement_flags(self):
        corpus, bundles = self.make([[1], [1], [0]], ["a"])
        assert diverse_ensemble(corpus, bundles).flags["u0#0"] is True

    def test_tie_does_not_flag(self):
        corpus, bundles = self.make([[0], [1]], ["a"])
        assert diverse_ensemble(corpus, bundles).flags["u0#0"] is False

    def test_unanimous_agreement_never_flags(self):
        corpus, bundles = self.make([[0, 1], [0, 1], [0, 1]], ["a", "b"])
        assert not any(diverse_ensemble(corpus, bundles).flags.values())

    def test_member_floor(self):
        corpus, bundles = self.make([[0]], ["a"])
        with pytest.raises(DataError, match="at least 2"):
            diverse_ensemble(corpus, bundles)
        with pytest.raises(DataError, match="at least 2"):
            projection_ensemble(corpus, bundles)

    def test_seventeen_member_majority_hand_check(self):
        rng = np.random.default_rng(42)
        labels = list(rng.choice(["a", "b"], size=12))
        members = [list(rng.integers(0, 2, size=12)) for _ in range(17)]
        corpus, bundles = self.make(members, labels)
        flags = projection_ensemble(corpus, bundles).flags
        for i, lab in enumerate(labels):
            votes = [m[i] for m in members]
            n1 = sum(votes)
            if n1 > len(votes) - n1:
                expect = ("b" != lab)
            elif n1 < len(votes) - n1:
                expect = ("a" != lab)
            else:
                expect = False
            assert flags[f"u{i}#0"] == expect, i


class TestLabelAggregation:
    def test_unanimous_disagreement_flags(self):
        corpus = text_corpus_of(["a"])
        rows = {"u0#0": np.tile([0.1, 0.9], (5, 1))}
        bundle = PredictionBundle(model="m", kind=KIND_REPEATED, passes=5,
                                  classes=("a", "b"), rows=rows)
        assert label_aggregation(corpus, bundle).flags["u0#0"] is True

    def test_all_passes_match_labels_no_flags(self):
        labels = ["a", "b", "a", "b"]
        corpus = text_corpus_of(labels)
        rows = {
            f"u{i}#0": np.tile([0.9, 0.1] if lab == "a" else [0.1, 0.9], (4, 1))
            for i, lab in enumerate(labels)
        }
        bundle = PredictionBundle(model="m", kind=KIND_REPEATED, passes=4,
                                  classes=("a", "b"), rows=rows)
        assert not any(label_aggregation(corpus, bundle).flags.values())

    def test_em_agrees_with_majority_when_near_diagonal(self):
        votes = np.array([
            [0, 0, 1],
            [1, 1, 1],
            [2, 2, 2],
            [0, 0, 0],
            [2, 1, 2],
            [1, 1, 0],
        ])
        post = aggregate_repeated_labels(votes, 3)
        for i in range(votes.shape[0]):
            counts = np.bincount(votes[i], minlength=3)
            assert post[i].argmax() == counts.argmax()

    def test_single_pass_rejected(self):
        corpus = text_corpus_of(["a"])
        bundle = bundle_of({"u0#0": [0.9, 0.1]})
        with pytest.raises(DataError, match="repeated passes"):
            label_aggregation(corpus, bundle)


class TestIrtFlag:
    def test_sign_rule(self):
        corpus = text_corpus_of(["a", "b", "a"])
        fit = IrtFit(theta=np.zeros(2), a=np.array([-0.5, 0.0, 1.2]),
                     b=np.zeros(3), log_posterior=0.0)
        flags = irt_flag(corpus, fit).flags
        assert flags == {"u0#0": True, "u1#0": False, "u2#0": False}

    def test_item_count_mismatch(self):
        corpus = text_corpus_of(["a", "b"])
        fit = IrtFit(theta=np.zeros(2), a=np.zeros(3), b=np.zeros(3), log_posterior=0.0)
        with pytest.raises(DataError, match="items"):
            irt_flag(corpus, fit)


# ---------------------------------------------------------------------------
# variation n-grams
# ---------------------------------------------------------------------------


def pos_sentence(i, tokens, tags):
    return Document(id=f"s{i}", tokens=tuple(tokens), token_labels=tuple(tags))


class TestVariationNgrams:
    def test_majority_flags_minority(self):
        docs = tuple(
            pos_sentence(i, ["the", "club", "opened"], ["DET", tag, "VERB"])
            for i, tag in enumerate(["NOUN", "NOUN", "VERB"])
        )
        corpus = Corpus(task=Task.TOKEN, classes=("DET", "NOUN", "VERB"), documents=docs)
        flags = variation_ngrams(corpus).flags
        assert flags["s2#1"] is True
        assert sum(flags.values()) == 1

    def test_tie_flags_neither(self):
        docs = tuple(
            pos_sentence(i, ["the", "club", "opened"], ["DET", tag, "VERB"])
            for i, tag in enumerate(["NOUN", "VERB"])
        )
        corpus = Corpus(task=Task.TOKEN, classes=("DET", "NOUN", "VERB"), documents=docs)
        assert not any(variation_ngrams(corpus).flags.values())

    def test_no_repeats_no_flags(self):
        docs = (
            pos_sentence(0, ["alpha", "beta"], ["X", "Y"]),
            pos_sentence(1, ["gamma", "delta"], ["X", "Y"]),
        )
        corpus = Corpus(task=Task.TOKEN, classes=("X", "Y"), documents=docs)
        assert not any(variation_ngrams(corpus).flags.values())

    def test_case_insensitive_contexts(self):
        docs = tuple(
            pos_sentence(i, toks, ["DET", tag, "VERB"])
            for i, (toks, tag) in enumerate([
                (["The", "Club", "opened"], "NOUN"),
                (["the", "club", "OPENED"], "NOUN"),
                (["THE", "club", "opened"], "VERB"),
            ])
        )
        corpus = Corpus(task=Task.TOKEN, classes=("DET", "NOUN", "VERB"), documents=docs)
        assert variation_ngrams(corpus).flags["s2#1"] is True

    def test_text_task_rejected(self):
        corpus = text_corpus_of(["a"])
        with pytest.raises(ConfigError, match="token or span"):
            variation_ngrams(corpus)

    def test_matches_dictionary_oracle(self):
        rng = np.random.default_rng(9)
        vocab = ["aa", "bb", "cc", "dd"]
        tags = ("P", "Q", "R")
        for trial in range(25):
            sentences = []
            labels = []
            for _ in range(rng.integers(3, 7)):
                length = int(rng.integers(2, 8))
                sentences.append([vocab[int(v)] for v in rng.integers(0, len(vocab), length)])
                labels.append([tags[int(t)] for t in rng.integers(0, 3, length)])
            docs = tuple(
                pos_sentence(i, sent, labs)
                for i, (sent, labs) in enumerate(zip(sentences, labels))
            )
            corpus = Corpus(task=Task.TOKEN, classes=tags, documents=docs)
            got = {uid for uid, f in variation_ngrams(corpus).flags.items() if f}

            expected = set()
            occs = brute_force_repeated_ngrams(sentences)
            by_decision: dict[tuple, list[tuple[int, int]]] = {}
            for gram, column, d, start in occs:
                by_decision.setdefault((gram, column), []).append((d, start + column))
            for (gram, column), places in by_decision.items():
                counts: dict[str, int] = {}
                for d, pos in places:
                    lab = labels[d][pos]
                    counts[lab] = counts.get(lab, 0) + 1
                top = max(counts.values())
                winners = [l for l, c in counts.items() if c == top]
                if len(winners) != 1:
                    continue
                for d, pos in places:
                    if labels[d][pos] != winners[0]:
                        expected.add(f"s{d}#{pos}")
            assert got == expected, f"trial {trial}"

    def test_span_minority_flagged(self):
        def doc(i, label):
            return Document(id=f"d{i}", tokens=("visit", "acme", "corp", "today"),
                            spans=(Span(1, 3, label),))
        docs = tuple(doc(i, lab) for i, lab in enumerate(["ORG", "ORG", "PER"]))
        corpus = Corpus(task=Task.SPAN, classes=("ORG", "PER", "O"), documents=docs)
        flags = variation_ngrams(corpus).flags
        assert flags["d2#1-3"] is True
        assert flags["d0#1-3"] is False

    def test_span_context_distinguishes(self):
        # same span tokens, different right context: separate keys, no flags
        a = Document(id="a", tokens=("acme", "corp", "rose"), spans=(Span(0, 2, "ORG"),))
        b = Document(id="b", tokens=("acme", "corp", "fell"), spans=(Span(0, 2, "PER"),))
        corpus = Corpus(task=Task.SPAN, classes=("ORG", "PER", "O"), documents=(a, b))
        assert not any(variation_ngrams(corpus).flags.values())

    def test_span_boundary_sentinel_groups(self):
        # spans at the sentence edge share the out-of-bounds sentinel context
        def doc(i, label):
            return Document(id=f"e{i}", tokens=("acme", "corp", "rose"),
                            spans=(Span(0, 2, label),))
        docs = tuple(doc(i, lab) for i, lab in enumerate(["ORG", "ORG", "LOC"]))
        corpus = Corpus(task=Task.SPAN, classes=("LOC", "ORG", "O"), documents=docs)
        assert variation_ngrams(corpus).flags["e2#0-2"] is True


# ---------------------------------------------------------------------------
# probability scorers
# ---------------------------------------------------------------------------


class TestClassificationUncertainty:
    def test_values_and_polarity(self):
        corpus = text_corpus_of(["a", "b"])
        bundle = bundle_of({"u0#0": [0.9, 0.1], "u1#0": [0.0, 1.0]})
        sv = classification_uncertainty(corpus, bundle)
        assert sv.polarity is Polarity.HIGH
        assert sv.scores["u0#0"] == pytest.approx(0.1)
        assert sv.scores["u1#0"] == pytest.approx(0.0)


class TestPredictionMargin:
    def test_hand_values(self):
        corpus = text_corpus_of(["a", "b", "c"], classes=("a", "b", "c"))
        bundle = bundle_of({
            "u0#0": [0.6, 0.3, 0.1],
            "u1#0": [1 / 3, 1 / 3, 1 / 3],
            "u2#0": [1.0, 0.0, 0.0],
        }, classes=("a", "b", "c"))
        sv = prediction_margin(corpus, bundle)
        assert sv.polarity is Polarity.LOW
        assert sv.scores["u0#0"] == pytest.approx(0.3)
        assert sv.scores["u1#0"] == pytest.approx(0.0)
        assert sv.scores["u2#0"] == pytest.approx(1.0)

    def test_single_class_degenerate(self):
        corpus = text_corpus_of(["a"], classes=("a",))
        bundle = bundle_of({"u0#0": [1.0]}, classes=("a",))
        assert prediction_margin(corpus, bundle).scores["u0#0"] == 1.0


class TestDropoutUncertainty:
    def test_hand_values(self):
        corpus = text_corpus_of(["a", "b", "a"])
        rows = {
            "u0#0": np.tile([0.5, 0.5], (3, 1)),
            "u1#0": np.tile([1.0, 0.0], (3, 1)),
            "u2#0": np.array([[0.5, 0.5], [1.0, 0.0]]),
        }
        bundle = PredictionBundle(model="m", kind=KIND_REPEATED, passes=3,
                                  classes=("a", "b"), rows={
                                      "u0#0": rows["u0#0"],
                                      "u1#0": rows["u1#0"],
                                      "u2#0": np.vstack([rows["u2#0"], [[0.5, 0.5]]]),
                                  })
        sv = dropout_uncertainty(corpus, bundle)
        assert sv.polarity is Polarity.HIGH
        assert sv.scores["u0#0"] == pytest.approx(math.log(2), abs=1e-9)
        assert sv.scores["u1#0"] == pytest.approx(0.0, abs=1e-9)

    def test_two_pass_hand_mean(self):
        corpus = text_corpus_of(["a"])
        bundle = PredictionBundle(model="m", kind=KIND_REPEATED, passes=2,
                                  classes=("a", "b"),
                                  rows={"u0#0": np.array([[0.5, 0.5], [1.0, 0.0]])})
        sv = dropout_uncertainty(corpus, bundle)
        assert sv.scores["u0#0"] == pytest.approx(math.log(2) / 2, abs=1e-4)

    def test_wrong_kind_rejected(self):
        corpus = text_corpus_of(["a"])
        with pytest.raises(DataError, match="repeated"):
            dropout_uncertainty(corpus, bundle_of({"u0#0": [1.0, 0.0]}))


class TestDatamapConfidence:
    def test_mean_over_epochs(self):
        corpus = text_corpus_of(["a", "b"])
        rows = {
            "u0#0": np.array([[0.2, 0.8], [0.4, 0.6], [0.6, 0.4]]),
            "u1#0": np.array([[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]]),
        }
        bundle = PredictionBundle(model="m", kind=KIND_EPOCHS, passes=3,
                                  classes=("a", "b"), rows=rows)
        sv = datamap_confidence(corpus, bundle)
        assert sv.polarity is Polarity.LOW
        assert sv.scores["u0#0"] == pytest.approx(0.4)
        assert sv.scores["u1#0"] == pytest.approx(1.0)

    def test_single_epoch_reduces_to_p(self):
        corpus = text_corpus_of(["a"])
        bundle = PredictionBundle(model="m", kind=KIND_EPOCHS, passes=1,
                                  classes=("a", "b"),
                                  rows={"u0#0": np.array([[0.7, 0.3]])})
        assert datamap_confidence(corpus, bundle).scores["u0#0"] == pytest.approx(0.7)

    def test_token_task_rejected(self, token_corpus):
        units = extract_units(token_corpus)
        rows = {u.uid: np.tile(1.0 / 6, (2, 6)) for u in units}
        bundle = PredictionBundle(model="m", kind=KIND_EPOCHS, passes=2,
                                  classes=token_corpus.classes, rows=rows)
        with pytest.raises(ConfigError, match="text classification"):
            datamap_confidence(token_corpus, bundle)


# ---------------------------------------------------------------------------
# training-dynamics scorers
# ---------------------------------------------------------------------------


class TestCurriculumSpotter:
    def test_mean_after_inclusion(self):
        corpus = text_corpus_of(["a", "b"])
        half = -math.log(0.5)
        traces = EpochTraces(
            schedule="curriculum", n_epochs=4,
            losses={
                "u0#0": np.array([np.nan, np.nan, half, half]),
                "u1#0": np.array([0.01, 0.01, 0.01, 0.01]),
            },
            included_at={"u0#0": 2, "u1#0": 0},
        )
        sv = curriculum_spotter(corpus, traces)
        assert sv.polarity is Polarity.HIGH
        assert sv.scores["u0#0"] == pytest.approx(math.log(2))
        assert sv.scores["u1#0"] == pytest.approx(0.01)

    def test_five_unit_ordering(self):
        labels = ["a"] * 5
        corpus = text_corpus_of(labels)
        losses = {
            f"u{i}#0": np.array([np.nan] * i + [float(i + 1)] * (5 - i))
            for i in range(5)
        }
        traces = EpochTraces(schedule="curriculum", n_epochs=5, losses=losses,
                             included_at={f"u{i}#0": i for i in range(5)})
        sv = curriculum_spotter(corpus, traces)
        ordered = sorted(sv.scores, key=sv.scores.get)
        assert ordered == [f"u{i}#0" for i in range(5)]

    def test_wrong_schedule_rejected(self):
        corpus = text_corpus_of(["a"])
        traces = EpochTraces(schedule="plain", n_epochs=1,
                             losses={"u0#0": np.array([0.1])})
        with pytest.raises(DataError, match="curriculum"):
            curriculum_spotter(corpus, traces)


class TestLeitnerSpotter:
    def test_hand_trace(self):
        corpus = text_corpus_of(["a", "b"])
        traces = EpochTraces(
            schedule="leitner", n_epochs=4, losses={},
            decks={
                "u0#0": np.array([0, 1, 0, 0]),
                "u1#0": np.array([0, 0, 0, 0]),
            },
        )
        sv = leitner_spotter(corpus, traces)
        assert sv.scores["u0#0"] == pytest.approx(0.75)
        assert sv.scores["u1#0"] == pytest.approx(1.0)

    def test_wrong_schedule_rejected(self):
        corpus = text_corpus_of(["a"])
        traces = EpochTraces(schedule="curriculum", n_epochs=1,
                             losses={"u0#0": np.array([0.1])})
        with pytest.raises(DataError, match="leitner"):
            leitner_spotter(corpus, traces)


# ---------------------------------------------------------------------------
# surface-form scorers
# ---------------------------------------------------------------------------


def club_corpus():
    """Four occurrences of "club": ORG x3, WEAPON x1."""
    docs = []
    for i, tag in enumerate(["ORG", "ORG", "ORG", "WEAPON"]):
        docs.append(Document(id=f"c{i}", tokens=("the", "club", "won"),
                             token_labels=("O", tag, "O")))
    return Corpus(task=Task.TOKEN, classes=("O", "ORG", "WEAPON"), documents=tuple(docs))


class TestLabelEntropy:
    def test_club_hand_value(self):
        sv = label_entropy(club_corpus())
        expected = entropy([3, 1])
        assert expected == pytest.approx(0.5623, abs=1e-4)
        assert sv.scores["c3#1"] == pytest.approx(expected, abs=1e-9)
        for i in range(3):
            assert sv.scores[f"c{i}#1"] == 0.0

    def test_unambiguous_and_singleton_zero(self):
        sv = label_entropy(club_corpus())
        # "the" and "won" carry one label each; every unit scores 0
        for i in range(4):
            assert sv.scores[f"c{i}#0"] == 0.0
            assert sv.scores[f"c{i}#2"] == 0.0

    def test_tie_scores_everyone(self):
        docs = tuple(
            Document(id=f"t{i}", tokens=("club",), token_labels=(tag,))
            for i, tag in enumerate(["ORG", "WEAPON"])
        )
        corpus = Corpus(task=Task.TOKEN, classes=("ORG", "WEAPON"), documents=docs)
        sv = label_entropy(corpus)
        assert sv.scores["t0#0"] == pytest.approx(math.log(2))
        assert sv.scores["t1#0"] == pytest.approx(math.log(2))

    def test_text_task_rejected(self):
        with pytest.raises(ConfigError, match="token or span"):
            label_entropy(text_corpus_of(["a"]))


class TestWeightedDiscrepancy:
    def test_club_hand_value(self):
        sv = weighted_discrepancy(club_corpus())
        assert sv.scores["c3#1"] == pytest.approx(0.5)
        for i in range(3):
            assert sv.scores[f"c{i}#1"] == 0.0

    def test_even_split_boundary(self):
        docs = tuple(
            Document(id=f"t{i}", tokens=("club",), token_labels=(tag,))
            for i, tag in enumerate(["ORG", "WEAPON"])
        )
        corpus = Corpus(task=Task.TOKEN, classes=("ORG", "WEAPON"), documents=docs)
        sv = weighted_discrepancy(corpus)
        assert sv.scores["t0#0"] == 0.0
        assert sv.scores["t1#0"] == 0.0

    def test_span_surface_forms(self):
        def doc(i, label):
            return Document(id=f"d{i}", tokens=("acme", "corp"),
                            spans=(Span(0, 2, label),))
        docs = tuple(doc(i, lab) for i, lab in enumerate(["ORG", "ORG", "ORG", "PER"]))
        corpus = Corpus(task=Task.SPAN, classes=("ORG", "PER", "O"), documents=docs)
        sv = weighted_discrepancy(corpus)
        assert sv.scores["d3#0-2"] == pytest.approx(0.5)
        assert sv.scores["d0#0-2"] == 0.0


# ---------------------------------------------------------------------------
# embedding scorers
# ---------------------------------------------------------------------------


def embedded_corpus(points, labels):
    docs = tuple(
        Document(id=f"p{i}", tokens=("t",), label=lab) for i, lab in enumerate(labels)
    )
    corpus = Corpus(task=Task.TEXT, classes=tuple(sorted(set(labels))), documents=docs)
    emb = EmbeddingSet(name="hand", dim=len(points[0]),
                       vectors={f"p{i}#0": np.array(p, dtype=float)
                                for i, p in enumerate(points)})
    return corpus, emb


class TestMeanDistance:
    def test_two_point_class(self):
        corpus, emb = embedded_corpus([(0, 0), (2, 0)], ["x", "x"])
        sv = mean_distance(corpus, emb)
        assert sv.scores["p0#0"] == pytest.approx(1.0)
        assert sv.scores["p1#0"] == pytest.approx(1.0)

    def test_at_centroid_zero(self):
        corpus, emb = embedded_corpus([(1, 1), (0, 0), (2, 2)], ["x", "x", "x"])
        assert mean_distance(corpus, emb).scores["p0#0"] == pytest.approx(0.0)

    def test_singleton_class_zero(self):
        corpus, emb = embedded_corpus([(5, 5), (0, 0)], ["x", "y"])
        sv = mean_distance(corpus, emb)
        assert sv.scores["p0#0"] == 0.0
        assert sv.scores["p1#0"] == 0.0


class TestKnnEntropy:
    def test_two_equidistant_neighbors(self):
        corpus, emb = embedded_corpus([(0, 0), (1, 0), (-1, 0)], ["a", "a", "b"])
        sv = knn_entropy(corpus, emb, k=2)
        assert sv.scores["p0#0"] == pytest.approx(math.log(2), abs=1e-9)

    def test_unanimous_neighbors_zero(self):
        corpus, emb = embedded_corpus([(0, 0), (1, 0), (2, 0), (3, 0)],
                                      ["b", "a", "a", "a"])
        assert knn_entropy(corpus, emb, k=3).scores["p0#0"] == pytest.approx(0.0)

    def test_three_point_hand_softmax(self):
        corpus, emb = embedded_corpus([(0, 0), (1, 0), (2, 0)], ["a", "a", "b"])
        sv = knn_entropy(corpus, emb, k=2)
        expected = entropy([math.exp(-1), math.exp(-2)])
        assert sv.scores["p0#0"] == pytest.approx(expected, abs=1e-9)

    def test_k_capped_at_population(self):
        corpus, emb = embedded_corpus([(0, 0), (1, 0)], ["a", "b"])
        sv = knn_entropy(corpus, emb, k=10)
        assert sv.scores["p0#0"] == pytest.approx(0.0)   # single neighbor


# ---------------------------------------------------------------------------
# borda
# ---------------------------------------------------------------------------


def score_vec(method, scores, polarity=Polarity.HIGH):
    return ScoreVector(method=method, scores=dict(scores), polarity=polarity)


class TestBorda:
    def test_two_scorer_hand_case(self):
        s1 = score_vec("s1", {"a": 3.0, "b": 2.0, "c": 1.0})
        s2 = score_vec("s2", {"b": 9.0, "a": 5.0, "c": 0.0})
        out = borda_count([s1, s2])
        assert out.scores == {"a": 5.0, "b": 5.0, "c": 2.0}
        assert out.polarity is Polarity.HIGH

    def test_single_input_rank_preserving(self):
        s1 = score_vec("s1", {"a": 0.9, "b": 0.5, "c": 0.1})
        out = borda_count([s1])
        assert sorted(out.scores, key=out.scores.get, reverse=True) == ["a", "b", "c"]

    def test_duplicated_input_doubles(self):
        s1 = score_vec("s1", {"a": 0.9, "b": 0.5})
        once = borda_count([s1])
        twice = borda_count([s1, s1])
        for uid in once.scores:
            assert twice.scores[uid] == pytest.approx(2 * once.scores[uid])

    def test_low_polarity_respected(self):
        high = score_vec("h", {"a": 0.9, "b": 0.1})
        low = score_vec("l", {"a": 0.1, "b": 0.9}, polarity=Polarity.LOW)
        out = borda_count([high, low])
        # both scorers consider a most suspicious
        assert out.scores["a"] == 4.0
        assert out.scores["b"] == 2.0

    def test_ties_share_mean_points(self):
        s1 = score_vec("s1", {"a": 0.5, "b": 0.5, "c": 0.1})
        out = borda_count([s1])
        assert out.scores["a"] == pytest.approx(2.5)
        assert out.scores["b"] == pytest.approx(2.5)
        assert out.scores["c"] == pytest.approx(1.0)

    def test_n_top_truncates(self):
        s1 = score_vec("s1", {"a": 2.0, "b": 1.0})
        s2 = score_vec("s2", {"a": 2.0, "b": 1.0})
        s3 = score_vec("s3", {"a": 2.0, "b": 1.0})
        s4 = score_vec("s4", {"a": 0.0, "b": 9.0})
        out = borda_count([s1, s2, s3, s4], n_top=3)
        assert out.scores["a"] == 6.0
        assert out.scores["b"] == 3.0

    def test_cover_mismatch_rejected(self):
        s1 = score_vec("s1", {"a": 1.0})
        s2 = score_vec("s2", {"b": 1.0})
        with pytest.raises(DataError, match="different unit set"):
            borda_count([s1, s2])

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(4)
        uids = [f"u{i}" for i in range(30)]
        raw = {u: float(rng.random()) for u in uids}
        transformed = {u: raw[u] ** 3 + raw[u] for u in uids}
        base = borda_count([score_vec("x", raw)])
        warped = borda_count([score_vec("x", transformed)])
        assert base.scores == warped.scores
