from __future__ import annotations

import itertools

import numpy as np
import pytest

from conftest import make_record
from esgnews.evaluation import (
    AgreementMatrix,
    AnnotationError,
    AnnotationRecord,
    LlmLabel,
    accuracy,
    agreement_matrix,
    aggregate_aspect,
    evaluate,
    fleiss_kappa,
    load_annotations,
    load_llm_labels,
    majority_sentiment,
    relevance_agreement_table,
    relevancy_agreement,
    render_relevance_table,
    sample_classification_eval,
    sample_summary_eval,
    simplify_sentiment,
    write_annotations,
    write_report,
)
from oracles import (
    SIMPLIFY_TABLE,
    annotator_options,
    aspect_oracle,
    fleiss_kappa_bruteforce,
    majority_oracle,
    random_ratings,
)

SENTS = ("negative", "neutral", "positive")
ASPS = ("E", "S", "G")


def _ann(sample="s1", annotator="a1", sentiments=(), not_sure=False, aspects=(), most=None, relevant=True):
    return AnnotationRecord(
        annotator, sample, None, relevant, frozenset(sentiments), not_sure, frozenset(aspects), most
    )




def test_simplify_examples():
    assert simplify_sentiment(_ann(sentiments={"neutral", "positive"})) == "positive"
    assert simplify_sentiment(_ann(sentiments={"positive", "negative"})) == "neutral"
    assert simplify_sentiment(_ann(not_sure=True)) == "neutral"
    assert simplify_sentiment(_ann(sentiments={"negative"})) == "negative"


def test_simplify_exhaustive_rule_table():
    for selection, expected in SIMPLIFY_TABLE.items():
        assert simplify_sentiment(_ann(sentiments=selection)) == expected
        assert simplify_sentiment(_ann(sentiments=selection, not_sure=True)) == "neutral"
    with pytest.raises(AnnotationError):
        simplify_sentiment(_ann())


def test_simplify_idempotent():
    for selection in SIMPLIFY_TABLE:
        once = simplify_sentiment(_ann(sentiments=selection))
        assert simplify_sentiment(_ann(sentiments={once})) == once


def test_majority_examples():
    assert majority_sentiment(["positive", "positive", "negative"]) == "positive"
    assert majority_sentiment(["positive", "negative"]) == "neutral"
    assert majority_sentiment(["neutral", "positive"]) == "positive"


def test_majority_exhaustive_and_order_invariant():
    for n in range(1, 6):
        for votes in itertools.product(SENTS, repeat=n):
            expected = majority_oracle(votes)
            assert majority_sentiment(list(votes)) == expected
            assert majority_sentiment(list(reversed(votes))) == expected


def test_aspect_examples():
    recs = [_ann(annotator="a", aspects={"E"}), _ann(annotator="b", aspects={"E", "S"}), _ann(annotator="c", aspects={"S"}, most="S")]
    # E: 2, S: 2 draw; most-relevant votes favour S.
    assert aggregate_aspect(recs).aspect == "S"
    assert aggregate_aspect([_ann(aspects={"E"}), _ann(annotator="b", aspects={"E", "S"})]).aspect == "E"
    assert aggregate_aspect([_ann(aspects={"S", "G"}, most="G")]).aspect == "G"
    assert aggregate_aspect([_ann(aspects={"S"})]).aspect == "S"
    residual = aggregate_aspect([_ann(aspects={"S", "G"})])
    assert residual.aspect == "S" and residual.tie_broken_by_order


def test_aspect_exhaustive_rule_table():
    options = list(annotator_options())
    assert len(options) == 19
    n_cases = 0
    for k in (1, 2, 3):
        for combo in itertools.product(options, repeat=k):
            recs = [_ann(annotator=f"x{i}", aspects=sel, most=m) for i, (sel, m) in enumerate(combo)]
            got = aggregate_aspect(recs)
            assert (got.aspect, got.tie_broken_by_order) == aspect_oracle(combo)
            assert aggregate_aspect(list(reversed(recs))) == got
            n_cases += 1
    assert n_cases == 19 + 19**2 + 19**3


def test_annotation_invariants():
    with pytest.raises(AnnotationError):
        _ann(aspects={"E"}, most="S")
    with pytest.raises(AnnotationError):
        _ann(sentiments={"great"})


# ------------------------------------------------------------------ kappa


def test_kappa_examples():
    assert fleiss_kappa([[3, 0], [0, 3], [3, 0]]).kappa == 1.0
    r = fleiss_kappa([[2, 0], [0, 2]])
    assert (r.p_bar, r.p_e, r.kappa) == (1.0, 0.5, 1.0)


def test_kappa_degenerate():
    r = fleiss_kappa([[4, 0, 0], [4, 0, 0]])
    assert r.degenerate and np.isnan(r.kappa)


def test_kappa_input_validation():
    with pytest.raises(ValueError):
        fleiss_kappa([[2, 1], [1, 1]])
    with pytest.raises(ValueError):
        fleiss_kappa([[1, 0]])
    with pytest.raises(ValueError):
        AgreementMatrix(np.array([[1, 1], [2, 1]]))


def test_kappa_matches_bruteforce_on_1000_random_matrices():
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 1000:
        ratings, k = random_ratings(rng)
        m = np.zeros((len(ratings), k), dtype=int)
        for i, labels in enumerate(ratings):
            for lab in labels:
                m[i, lab] += 1
        res = fleiss_kappa(m)
        if res.degenerate:
            continue
        assert abs(res.kappa - fleiss_kappa_bruteforce(ratings, k)) <= 1e-12
        checked += 1


def test_kappa_matches_statsmodels():
    sm = pytest.importorskip("statsmodels.stats.inter_rater")
    rng = np.random.default_rng(7)
    for _ in range(200):
        ratings, k = random_ratings(rng)
        m = agreement_matrix([[str(x) for x in row] for row in ratings], [str(j) for j in range(k)])
        res = fleiss_kappa(m)
        if not res.degenerate:
            assert res.kappa == pytest.approx(sm.fleiss_kappa(m, method="fleiss"), abs=1e-12)


def test_kappa_one_iff_rows_concentrated():
    rng = np.random.default_rng(11)
    for _ in range(500):
        ratings, k = random_ratings(rng)
        if rng.random() < 0.5:
            ratings = [[row[0]] * len(row) for row in ratings]
        m = agreement_matrix([[str(x) for x in row] for row in ratings], [str(j) for j in range(k)])
        res = fleiss_kappa(m)
        if res.degenerate:
            continue
        concentrated = all((row > 0).sum() == 1 for row in m)
        assert (abs(res.kappa - 1.0) < 1e-12) == concentrated


# --------------------------------------------------------------- accuracy


def test_accuracy():
    assert accuracy({"a": "E", "b": "S"}, {"a": "E", "b": "S"}).accuracy == 1.0
    r = accuracy({"a": "E", "b": None, "c": "G"}, {"a": "E", "b": "S", "c": "S", "d": "E"})
    assert (r.accuracy, r.n, r.excluded) == (0.5, 2, 2)


def test_relevancy_agreement_levels():
    samples = {
        "s1": [_ann("s1", a, relevant=True) for a in "abcde"],
        "s2": [_ann("s2", a, relevant=a in "abc") for a in "abcde"],
        "s3": [_ann("s3", a, relevant=a == "a") for a in "abcde"],
        "s4": [_ann("s4", a, relevant=False) for a in "abcde"],
    }
    r = relevancy_agreement(samples)
    assert (r.all_relevant, r.majority_relevant, r.any_relevant, r.n) == (0.25, 0.5, 0.75, 4)


def test_relevance_table_and_dash_rendering():
    samples = {
        "s1": [_ann("s1", "a"), _ann("s1", "b", relevant=False)],
        "s2": [_ann("s2", "a"), _ann("s2", "b")],
        "s3": [_ann("s3", "a", relevant=False)],
    }
    table = relevance_agreement_table(samples, {"s1": 8, "s2": 8, "s3": 9})
    assert {s: (b.irrelevant, b.total) for s, b in table.items()} == {8: (1, 2), 9: (1, 1)}
    rows = dict((s, (c, r)) for s, c, r in render_relevance_table(table))
    assert rows[8] == ("1/2", "0.50") and rows[1] == ("-", "-")


# --------------------------------------------------------------- sampling


def test_summary_sampling():
    recs = [make_record(c, s) for c in ("A", "B") for s in ("positive", "negative")] + [make_record("A", "positive")]
    picks = sample_summary_eval(recs, 3)
    assert len(picks) == 4
    assert picks == sample_summary_eval(recs, 3)
    assert {(recs[i].company, recs[i].sentiment) for i in picks} == {
        ("A", "positive"), ("A", "negative"), ("B", "positive"), ("B", "negative")
    }
    single = [make_record("Z", "neutral")]
    assert sample_summary_eval(single, 0) == [0]


def test_classification_sampling_caps_k():
    recs = [make_record("A"), make_record("A")]
    assert sorted(sample_classification_eval(recs, [np.array([1.0, 0]), np.array([0, 1.0])], 0)) == [0, 1]


def test_classification_sampling_picks_blob_medoids():
    rng = np.random.default_rng(5)
    centers = np.eye(6)[:3] * 5
    x = np.vstack([c + rng.normal(scale=0.2, size=(8, 6)) for c in centers])
    recs = [make_record("A") for _ in range(len(x))]
    picks = sample_classification_eval(recs, list(x), 0)
    assert len(picks) == 3
    # Brute force: in each blob the member most cosine-similar to the blob mean.
    expected = set()
    for b in range(3):
        idx = range(8 * b, 8 * b + 8)
        mean = x[list(idx)].mean(axis=0)
        sims = {i: float(x[i] @ mean / (np.linalg.norm(x[i]) * np.linalg.norm(mean))) for i in idx}
        expected.add(max(sims, key=sims.get))
    assert set(picks) == expected


# -------------------------------------------------------------- end to end


def test_evaluate_round_trip(tmp_path):
    anns = []
    for sid, sel in [("s1", {"positive"}), ("s2", {"negative", "neutral"}), ("s3", {"neutral"})]:
        for a in ("a", "b", "c"):
            anns.append(_ann(sid, a, sentiments=sel, aspects={"E"}, most="E"))
    path = tmp_path / "ann.jsonl"
    write_annotations(anns, path)
    loaded = load_annotations(path)
    assert loaded == anns
    labels_path = tmp_path / "llm.csv"
    labels_path.write_text("sample_id,sentiment,aspect,relevance_score\ns1,positiv,Umwelt,8\ns2,negative,S,8\ns3,neutral,E,9\n")
    labels = load_llm_labels(labels_path)
    assert labels["s1"] == LlmLabel("s1", "positive", "E", 8, "")
    report = evaluate(loaded, labels)
    assert report.sentiment_kappa.kappa == 1.0
    assert report.sentiment_accuracy.accuracy == 1.0
    assert report.aspect_accuracy.accuracy == pytest.approx(2 / 3)
    assert report.aspect_kappa.degenerate
    write_report(report, tmp_path / "m.csv", tmp_path / "m.txt")
    assert "kappa_sentiment" in (tmp_path / "m.csv").read_text()


def test_csv_annotation_import(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text(
        "annotator,id,relevant,sentiments,aspects,most_relevant_aspect\n"
        "u1,s1,yes,\"positiv|neutral\",\"Umwelt,Soziales\",Soziales\n"
        "u2,s1,no,not sure,,\n"
    )
    a, b = load_annotations(p)
    assert a.sentiments_selected == {"positive", "neutral"} and a.most_relevant_aspect == "S"
    assert b.not_sure and b.relevant is False and not b.aspects_selected
