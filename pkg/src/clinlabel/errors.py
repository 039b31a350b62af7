"""Deletion/Insertion/Substitution alignment and manual error categorization."""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional

from .corpus import AnnotationSet, Conversation, LabeledSpan, iter_jsonl


class ErrorType(str, Enum):
    DELETION = "Deletion"
    INSERTION = "Insertion"
    SUBSTITUTION = "Substitution"


class ErrorCause(str, Enum):
    AGREE_WITH_MODEL = "AgreeWithModel"
    INCORRECT_SPAN = "IncorrectSpan"
    AMBIGUOUS_TAG = "AmbiguousTag"
    IRRELEVANT_ATTRIBUTE = "IrrelevantAttribute"
    FAIL_TO_USE_CONTEXT = "FailToUseContext"
    NEED_CLINICAL_EXPERTISE = "NeedClinicalExpertise"
    BREAK_IN_CONVERSATION_FLOW = "BreakInConversationFlow"
    CLINICALLY_EQUIVALENT = "ClinicallyEquivalent"
    NO_CLEAR_REASON = "NoClearReason"


class ClinicalRelevance(str, Enum):
    """Also called ErrorImpact."""

    RELEVANT = "Relevant"
    NOT_RELEVANT = "NotRelevant"
    NA = "NA"


@dataclass(frozen=True)
class ErrorRecord:
    record_id: str
    conversation_id: str
    task: str
    error_type: ErrorType
    ref_span: Optional[LabeledSpan] = None
    pred_span: Optional[LabeledSpan] = None
    context: str = ""
    error_cause: Optional[ErrorCause] = None
    clinical_relevance: Optional[ClinicalRelevance] = None
    rater_id: Optional[str] = None
    audit: tuple[dict, ...] = ()

    def __post_init__(self):
        has_ref, has_pred = self.ref_span is not None, self.pred_span is not None
        expected = {ErrorType.DELETION: (True, False), ErrorType.INSERTION: (False, True),
                    ErrorType.SUBSTITUTION: (True, True)}[self.error_type]
        if (has_ref, has_pred) != expected:
            raise ValueError(f"{self.error_type.value} record has wrong span sides")

    def to_dict(self) -> dict:
        def span(s):
            return None if s is None else {"span_id": s.span_id, "turn": s.turn_index, "start": s.start,
                                           "end": s.end, "tag": s.tag, "status": s.status}
        return {
            "record_id": self.record_id, "conversation_id": self.conversation_id, "task": self.task,
            "error_type": self.error_type.value, "ref_span": span(self.ref_span), "pred_span": span(self.pred_span),
            "context": self.context,
            "error_cause": self.error_cause.value if self.error_cause else None,
            "clinical_relevance": self.clinical_relevance.value if self.clinical_relevance else None,
            "rater_id": self.rater_id, "audit": list(self.audit),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ErrorRecord":
        def span(x):
            return None if x is None else LabeledSpan(x["span_id"], x["turn"], x["start"], x["end"], x["tag"],
                                                      x.get("status"))
        return cls(
            d["record_id"], d["conversation_id"], d["task"], ErrorType(d["error_type"]),
            span(d.get("ref_span")), span(d.get("pred_span")), d.get("context", ""),
            ErrorCause(d["error_cause"]) if d.get("error_cause") else None,
            ClinicalRelevance(d["clinical_relevance"]) if d.get("clinical_relevance") else None,
            d.get("rater_id"), tuple(d.get("audit", ())),
        )


@dataclass
class Alignment:
    correct: list[tuple[LabeledSpan, LabeledSpan]]
    records: list[ErrorRecord]


def _overlap(a: LabeledSpan, b: LabeledSpan) -> int:
    if a.turn_index != b.turn_index:
        return 0
    return max(0, min(a.end, b.end) - max(a.start, b.start))


def record_id(conversation_id: str, task: str, error_type: ErrorType, ref, pred) -> str:
    key = json.dumps([conversation_id, task, error_type.value,
                      None if ref is None else [ref.turn_index, ref.start, ref.end, ref.composed_tag],
                      None if pred is None else [pred.turn_index, pred.start, pred.end, pred.composed_tag]])
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:16]


def _context(conv: Optional[Conversation], turn: int, window: int = 1) -> str:
    if conv is None:
        return ""
    lo, hi = max(0, turn - window), min(len(conv.turns), turn + window + 1)
    return " / ".join(f"{t.speaker.value}: {t.text}" for t in conv.turns[lo:hi])


def align(reference: AnnotationSet, predicted: AnnotationSet, conversation: Optional[Conversation] = None) -> Alignment:
    """Greedy one-to-one pairing of overlapping spans, largest overlap first.

    Paired spans with equal composed tags are correct, otherwise a
    Substitution; unpaired reference spans are Deletions and unpaired
    predictions Insertions.
    """
    cands = []
    for i, r in enumerate(reference.spans):
        for j, p in enumerate(predicted.spans):
            ov = _overlap(r, p)
            if ov:
                cands.append((-ov, r.extent, p.extent, i, j))
    cands.sort()
    used_r, used_p = set(), set()
    correct, records = [], []
    cid, task = reference.conversation_id, reference.task.value

    def make(kind, r, p):
        turn = (r or p).turn_index
        return ErrorRecord(record_id(cid, task, kind, r, p), cid, task, kind, r, p, _context(conversation, turn))

    for _, _, _, i, j in cands:
        if i in used_r or j in used_p:
            continue
        used_r.add(i)
        used_p.add(j)
        r, p = reference.spans[i], predicted.spans[j]
        if r.composed_tag == p.composed_tag:
            correct.append((r, p))
        else:
            records.append(make(ErrorType.SUBSTITUTION, r, p))
    for i, r in enumerate(reference.spans):
        if i not in used_r:
            records.append(make(ErrorType.DELETION, r, None))
    for j, p in enumerate(predicted.spans):
        if j not in used_p:
            records.append(make(ErrorType.INSERTION, None, p))
    records.sort(key=lambda rec: ((rec.ref_span or rec.pred_span).extent, rec.error_type.value))
    return Alignment(correct, records)


def align_errors(reference: AnnotationSet, predicted: AnnotationSet, conversation=None) -> list[ErrorRecord]:
    if reference.conversation_id != predicted.conversation_id or reference.task != predicted.task:
        raise ValueError("reference and prediction must share conversation and task")
    return align(reference, predicted, conversation).records


class ErrorStore:
    """Error records keyed by record_id, with JSON Lines persistence."""

    def __init__(self, records: Iterable[ErrorRecord] = ()):
        self.records: dict[str, ErrorRecord] = {}
        for rec in records:
            self.records[rec.record_id] = rec

    @classmethod
    def load(cls, path) -> "ErrorStore":
        return cls(ErrorRecord.from_dict(d) for _, d in iter_jsonl(path))

    def save(self, path) -> None:
        Path(path).write_text(
            "".join(json.dumps(r.to_dict(), ensure_ascii=False) + "\n" for r in self.records.values()),
            encoding="utf-8")

    def record_category(self, record_id: str, error_cause, clinical_relevance, rater_id: str,
                        timestamp: Optional[str] = None) -> ErrorRecord:
        if record_id not in self.records:
            raise KeyError(f"unknown record {record_id!r}")
        cause = ErrorCause(error_cause)
        relevance = ClinicalRelevance(clinical_relevance)
        ts = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
        rec = self.records[record_id]
        entry = {"timestamp": ts, "rater_id": rater_id, "error_cause": cause.value,
                 "clinical_relevance": relevance.value}
        rec = replace(rec, error_cause=cause, clinical_relevance=relevance, rater_id=rater_id,
                      audit=rec.audit + (entry,))
        self.records[record_id] = rec
        return rec


def aggregate_report(records: Iterable[ErrorRecord]) -> dict:
    records = list(records)
    if not records:
        return {}
    by_type = Counter(r.error_type.value for r in records)
    causes = Counter(r.error_cause.value for r in records if r.error_cause is not None)
    relevance = Counter(r.clinical_relevance.value for r in records if r.clinical_relevance is not None)
    n_cause, n_rel = sum(causes.values()), sum(relevance.values())
    return {
        "counts_by_type": {t.value: by_type.get(t.value, 0) for t in ErrorType},
        "proportion_by_cause": {c: k / n_cause for c, k in sorted(causes.items())},
        "proportion_by_relevance": {c: k / n_rel for c, k in sorted(relevance.items())},
        "categorized": sum(r.error_cause is not None or r.clinical_relevance is not None for r in records),
        "uncategorized": sum(r.error_cause is None and r.clinical_relevance is None for r in records),
        "total": len(records),
    }
