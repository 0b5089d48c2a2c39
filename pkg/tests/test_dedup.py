from __future__ import annotations

from datetime import timedelta

import numpy as np
import pytest

from conftest import T0, make_article
from esgnews.corpus import CompanySpec, assign_companies
from esgnews.dedup import (
    DedupConfig,
    DedupConfigError,
    SummaryItem,
    cosine_similarity,
    dedup_paragraph_stage,
    dedup_stream,
    dedup_summary_stage,
)
from esgnews.providers import EmbeddingClient, MockEmbedder
from oracles import greedy_dedup_oracle, random_dedup_instance


def test_cosine_examples():
    assert cosine_similarity((1, 0), (1, 0)) == pytest.approx(1.0)
    assert cosine_similarity((1, 0), (0, 1)) == pytest.approx(0.0)
    assert cosine_similarity((1, 2, 3), (4, 5, 6)) == pytest.approx(32 / (14**0.5 * 77**0.5), abs=1e-12)
    assert cosine_similarity((1, 2, 3), (4, 5, 6)) == pytest.approx(0.974631846, abs=1e-9)
    with pytest.raises(ValueError):
        cosine_similarity((0, 0), (1, 0))


def _item(i, days, vec):
    return (i, T0 + timedelta(days=days), [np.asarray(vec, dtype=float)])


def test_single_item_kept():
    out = dedup_stream([_item("a", 0, (1, 0))])
    assert out.kept_ids == ["a"] and out.discarded == {}


def test_identical_one_day_apart_discarded():
    out = dedup_stream([_item("b", 1, (1, 0)), _item("a", 0, (1, 0))])
    assert out.kept_ids == ["a"] and out.discarded == {"b": "a"}


def test_identical_eight_days_apart_kept():
    out = dedup_stream([_item("a", 0, (1, 0)), _item("b", 8, (1, 0))])
    assert out.kept_ids == ["a", "b"]


def test_window_is_inclusive_at_exactly_seven_days():
    out = dedup_stream([_item("a", 0, (1, 0)), _item("b", 7, (1, 0))])
    assert out.discarded == {"b": "a"}


def test_discarded_items_are_not_compared_against():
    # c resembles b only; b is a duplicate of a, so c must survive.
    a, b, c = (1, 0), (0.8, 0.6), (0.28, 0.96)
    assert cosine_similarity(a, b) >= 0.8 and cosine_similarity(b, c) >= 0.8 and cosine_similarity(a, c) < 0.8
    out = dedup_stream([_item("a", 0, a), _item("b", 1, b), _item("c", 2, c)])
    assert out.kept_ids == ["a", "c"]


def test_mean_vs_max_aggregation():
    items = [
        ("a", T0, [np.array([1.0, 0.0]), np.array([0.0, 1.0])]),
        ("b", T0 + timedelta(days=1), [np.array([1.0, 0.0])]),
    ]
    assert dedup_stream(items, DedupConfig(aggregation="max")).discarded == {"b": "a"}
    assert dedup_stream(items, DedupConfig(aggregation="mean")).discarded == {}


def test_config_and_input_validation():
    with pytest.raises(DedupConfigError):
        DedupConfig(similarity_threshold=-0.1)
    with pytest.raises(DedupConfigError):
        DedupConfig(aggregation="median")
    with pytest.raises(DedupConfigError):
        dedup_stream([_item("a", 0, (1, 0)), _item("a", 1, (1, 0))])
    with pytest.raises(DedupConfigError):
        dedup_stream([_item("a", 0, (1, 0)), _item("b", 1, (1, 0, 0))])
    # Threshold above 1 keeps everything.
    assert len(dedup_stream([_item("a", 0, (1, 0)), _item("b", 0, (1, 0))], DedupConfig(1.01)).kept_ids) == 2


@pytest.mark.parametrize("seed", range(40))
def test_matches_bruteforce_greedy_oracle(seed):
    rng = np.random.default_rng(seed)
    items = random_dedup_instance(rng, int(rng.integers(1, 51)))
    cfg = DedupConfig(
        similarity_threshold=float(rng.choice([0.5, 0.8, 0.95])),
        aggregation=str(rng.choice(["max", "mean"])),
    )
    out = dedup_stream(items, cfg)
    kept, discarded = greedy_dedup_oracle(items, cfg)
    assert out.kept_ids == kept
    assert out.discarded == discarded
    out.check_partition([it[0] for it in items])


def test_paragraph_stage_reprint_and_company_isolation():
    specs = [CompanySpec("vw", "VW", ("Volkswagen",)), CompanySpec("bmw", "BMW", ("BMW",))]
    text = "Volkswagen und BMW bauen ein gemeinsames Werk."
    arts = [
        make_article("a", [text], days=0),
        make_article("b", [text], days=2),
        make_article("c", ["Volkswagen meldet Zahlen."], days=3),
    ]
    streams = [s for a in arts for s in assign_companies(a, specs)]
    emb = EmbeddingClient(MockEmbedder())
    joint = dedup_paragraph_stage(streams, emb)
    assert joint.discarded == {"b::vw": "a::vw", "b::bmw": "a::bmw"}
    # Running each company alone gives the same per-company outcome.
    for cid in ("vw", "bmw"):
        alone = dedup_paragraph_stage([s for s in streams if s.article.company_id == cid], emb)
        assert alone.kept_ids == [i for i in joint.kept_ids if i.endswith("::" + cid)]


def test_paragraph_stage_excludes_records_without_matches():
    from esgnews.corpus import CompanyStream

    stream = CompanyStream(make_article("z", ["Nothing"], company_id="vw"), [])
    out = dedup_paragraph_stage([stream], EmbeddingClient(MockEmbedder()))
    assert out.excluded == ["z::vw"] and out.kept_ids == []


def test_summary_stage():
    items = [
        SummaryItem("a", "vw", T0, "VW baut ein Werk in Sachsen"),
        SummaryItem("b", "vw", T0 + timedelta(days=1), "VW baut ein Werk in Sachsen"),
        SummaryItem("c", "bmw", T0 + timedelta(days=1), "VW baut ein Werk in Sachsen"),
        SummaryItem("d", "vw", T0 + timedelta(days=1), " "),
    ]
    out = dedup_summary_stage(items, EmbeddingClient(MockEmbedder()))
    assert out.discarded == {"b": "a"}
    assert sorted(out.kept_ids) == ["a", "c"]
    assert out.excluded == ["d"]
