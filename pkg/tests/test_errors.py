import random

import pytest

from clinlabel.corpus import Task
from clinlabel.errors import (
    ClinicalRelevance, ErrorCause, ErrorRecord, ErrorStore, ErrorType, align, align_errors, aggregate_report,
)

from helpers import ann, conv_from_text, random_spans, span

SX = Task.SYMPTOMS


def test_identical_gives_no_records():
    a = ann([span("a", 0, 0, 2, "GI:Nausea", "Experienced"), span("b", 0, 3, 4, "Property:Frequency")], task=SX)
    assert align_errors(a, a) == []


def test_orthopnea_substitution():
    c = conv_from_text("PT: it is hard to breathe when I lie down", cid="c1")
    ref = ann([span("r", 0, 2, 5, "Respiratory:Shortness of Breath", "Experienced")], task=SX)
    pred = ann([span("p", 0, 2, 5, "Respiratory:Orthopnea", "Experienced")], task=SX)
    (rec,) = align_errors(ref, pred, c)
    assert rec.error_type is ErrorType.SUBSTITUTION
    assert rec.ref_span.tag == "Respiratory:Shortness of Breath"
    assert rec.pred_span.tag == "Respiratory:Orthopnea"
    assert "hard to breathe" in rec.context


def test_insertion_in_empty_turn():
    ref = ann([span("r", 0, 0, 1, "Drug")])
    pred = ann([span("r", 0, 0, 1, "Drug"), span("p", 1, 2, 3, "Drug")])
    (rec,) = align_errors(ref, pred)
    assert rec.error_type is ErrorType.INSERTION and rec.ref_span is None


def test_deletion():
    (rec,) = align_errors(ann([span("r", 0, 0, 1, "Drug")]), ann())
    assert rec.error_type is ErrorType.DELETION and rec.pred_span is None


def test_status_difference_is_substitution():
    ref = ann([span("r", 0, 0, 1, "GI:Nausea", "Experienced")], task=SX)
    pred = ann([span("p", 0, 0, 1, "GI:Nausea", "Not Experienced")], task=SX)
    assert [r.error_type for r in align_errors(ref, pred)] == [ErrorType.SUBSTITUTION]


def test_larger_overlap_paired_first():
    ref = ann([span("r", 0, 0, 4, "Drug")])
    pred = ann([span("a", 0, 0, 1, "Property:Dose"), span("b", 0, 1, 4, "Drug")])
    al = align(ref, pred)
    assert [(r.span_id, p.span_id) for r, p in al.correct] == [("r", "b")]
    assert [r.error_type for r in al.records] == [ErrorType.INSERTION]


def test_mismatched_pair_rejected():
    with pytest.raises(ValueError):
        align_errors(ann(cid="a"), ann(cid="b"))


def test_record_sides_enforced():
    with pytest.raises(ValueError):
        ErrorRecord("x", "c", "symptoms", ErrorType.DELETION, None, span("p", 0, 0, 1, "Drug"))


def test_count_identity_random():
    rng = random.Random(0)
    tags = ["Drug", "Property:Dose", "Property:Mode"]
    for _ in range(500):
        lengths = [rng.randint(1, 8) for _ in range(rng.randint(1, 3))]
        ref = ann(random_spans(rng, lengths, tags))
        pred = ann(random_spans(rng, lengths, tags))
        al = align(ref, pred)
        kinds = [r.error_type for r in al.records]
        dels, ins, subs = (kinds.count(k) for k in (ErrorType.DELETION, ErrorType.INSERTION, ErrorType.SUBSTITUTION))
        assert dels + subs + len(al.correct) == len(ref.spans)
        assert ins + subs + len(al.correct) == len(pred.spans)
        seen_r = [p for pair in al.correct for p in pair[:1]] + [r.ref_span for r in al.records if r.ref_span]
        seen_p = [p for pair in al.correct for p in pair[1:]] + [r.pred_span for r in al.records if r.pred_span]
        assert sorted(s.span_id for s in seen_r) == sorted(s.span_id for s in ref.spans)
        assert sorted(s.span_id for s in seen_p) == sorted(s.span_id for s in pred.spans)
        assert align(pred, pred).records == []


def test_record_ids_stable():
    ref = ann([span("r", 0, 0, 1, "Drug")])
    a = align_errors(ref, ann())[0].record_id
    b = align_errors(ann([span("other-id", 0, 0, 1, "Drug")]), ann())[0].record_id
    assert a == b and len(a) == 16


@pytest.fixture
def store():
    ref = ann([span("r1", 0, 0, 1, "Drug"), span("r2", 0, 2, 3, "Drug"), span("r3", 1, 0, 1, "Drug"),
               span("r4", 1, 2, 3, "Drug"), span("r5", 2, 0, 1, "Drug")])
    return ErrorStore(align_errors(ref, ann()))


def test_annotate_stored_verbatim(store):
    rid = next(iter(store.records))
    rec = store.record_category(rid, "FailToUseContext", "Relevant", "rater1", timestamp="t0")
    assert rec.error_cause is ErrorCause.FAIL_TO_USE_CONTEXT
    assert rec.clinical_relevance is ClinicalRelevance.RELEVANT
    assert rec.rater_id == "rater1"
    assert rec.audit == ({"timestamp": "t0", "rater_id": "rater1", "error_cause": "FailToUseContext",
                          "clinical_relevance": "Relevant"},)


def test_annotate_rejects_bad_input(store):
    rid = next(iter(store.records))
    with pytest.raises(ValueError):
        store.record_category(rid, "BadLuck", "Relevant", "r")
    with pytest.raises(ValueError):
        store.record_category(rid, "AgreeWithModel", "Maybe", "r")
    with pytest.raises(KeyError):
        store.record_category("nope", "AgreeWithModel", "Relevant", "r")


def test_second_rater_latest_wins(store):
    rid = next(iter(store.records))
    store.record_category(rid, "AgreeWithModel", "NotRelevant", "r1", timestamp="t1")
    rec = store.record_category(rid, "NoClearReason", "Relevant", "r2", timestamp="t2")
    assert [e["rater_id"] for e in rec.audit] == ["r1", "r2"]
    rep = aggregate_report(store.records.values())
    assert rep["proportion_by_cause"] == {"NoClearReason": 1.0}


def test_store_round_trip(store, tmp_path):
    rid = next(iter(store.records))
    store.record_category(rid, "AgreeWithModel", "NA", "r1", timestamp="t1")
    store.save(tmp_path / "e.jsonl")
    again = ErrorStore.load(tmp_path / "e.jsonl")
    assert again.records == store.records


def test_aggregate(store):
    ids = list(store.records)
    for rid, rel in zip(ids[:4], ["Relevant", "NotRelevant", "NotRelevant", "NA"]):
        store.record_category(rid, "AgreeWithModel", rel, "r", timestamp="t")
    rep = aggregate_report(store.records.values())
    assert rep["proportion_by_relevance"]["Relevant"] == 0.25
    assert rep["proportion_by_cause"] == {"AgreeWithModel": 1.0}
    assert rep["categorized"] == 4 and rep["uncategorized"] == 1 and rep["total"] == 5
    assert rep["counts_by_type"] == {"Deletion": 5, "Insertion": 0, "Substitution": 0}


def test_aggregate_empty():
    assert aggregate_report([]) == {}


def test_enums_match_schema():
    assert {c.value for c in ErrorCause} == {
        "AgreeWithModel", "IncorrectSpan", "AmbiguousTag", "IrrelevantAttribute", "FailToUseContext",
        "NeedClinicalExpertise", "BreakInConversationFlow", "ClinicallyEquivalent", "NoClearReason"}
    assert {c.value for c in ClinicalRelevance} == {"Relevant", "NotRelevant", "NA"}
