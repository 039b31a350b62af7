"""Relaxed/strict span F-scores, conversation-level set scores and relation scores.

Each reference span earns a recall credit from the predicted tags on its
tokens and each predicted span earns a precision credit from the reference
tags on its tokens. Relaxed mode credits the fraction of matching tokens;
strict mode credits 1 only when every token matches.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .bio import OverlapError
from .corpus import AnnotationSet, LabeledSpan


class Mode(str, Enum):
    RELAXED = "relaxed"
    STRICT = "strict"


class Key(str, Enum):
    TAG = "tag"
    TAG_PLUS_STATUS = "tag_plus_status"


def f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass
class LabelScore:
    recall: float
    precision: float
    f1: float
    n: int
    m: int


@dataclass
class ScoreReport:
    per_label: dict[str, LabelScore]
    overall: LabelScore
    mode: str = Mode.RELAXED.value
    granularity: str = "span"

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "granularity": self.granularity,
            "overall": asdict(self.overall),
            "per_label": {k: asdict(v) for k, v in sorted(self.per_label.items())},
        }


def span_key(span: LabeledSpan, key: Key) -> str:
    return span.composed_tag if Key(key) is Key.TAG_PLUS_STATUS else span.tag


def project_tokens(annotation: AnnotationSet, key: Key = Key.TAG_PLUS_STATUS) -> dict[tuple[int, int], str]:
    """Map each labeled ``(turn, token)`` to its tag; unlabeled tokens are absent (O)."""
    return _project(annotation.spans, key)


def _project(spans: Iterable[LabeledSpan], key: Key) -> dict[tuple[int, int], str]:
    out: dict[tuple[int, int], str] = {}
    owner: dict[tuple[int, int], str] = {}
    for s in spans:
        label = span_key(s, key)
        for pos in s.tokens():
            if pos in owner:
                raise OverlapError([owner[pos], s.span_id])
            owner[pos] = s.span_id
            out[pos] = label
    return out


def _credit(span: LabeledSpan, label: str, other: Mapping, mode: Mode) -> float:
    hits = [other.get(pos, "O") == label for pos in span.tokens()]
    if mode is Mode.STRICT:
        return 1.0 if all(hits) else 0.0
    return sum(hits) / len(hits)


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs)


def _summarize(r_credits: Sequence[float], p_credits: Sequence[float]) -> LabelScore:
    n, m = len(r_credits), len(p_credits)
    r = _mean(r_credits) if n else 1.0
    p = _mean(p_credits) if m else 1.0
    return LabelScore(r, p, 1.0 if n == 0 and m == 0 else f1(p, r), n, m)


def score_corpus(
    references: Iterable[AnnotationSet],
    predictions: Iterable[AnnotationSet],
    mode: Mode = Mode.RELAXED,
    key: Key = Key.TAG_PLUS_STATUS,
    tags: Optional[Iterable[str]] = None,
) -> ScoreReport:
    """Span scores pooled over every span of every paired conversation.

    Pairs are matched on (conversation_id, task); a missing side counts as an
    empty annotation. ``tags`` restricts scoring to spans with those bare tags.
    """
    mode, key = Mode(mode), Key(key)
    keep = set(tags) if tags is not None else None
    refs = {(a.conversation_id, a.task): a for a in references}
    preds = {(a.conversation_id, a.task): a for a in predictions}
    r_by: dict[str, list[float]] = defaultdict(list)
    p_by: dict[str, list[float]] = defaultdict(list)
    r_all: list[float] = []
    p_all: list[float] = []
    for pair in sorted(set(refs) | set(preds), key=lambda k: (k[0], k[1].value)):
        ref, pred = refs.get(pair), preds.get(pair)
        ref_spans = [s for s in (ref.spans if ref else ()) if keep is None or s.tag in keep]
        pred_spans = [s for s in (pred.spans if pred else ()) if keep is None or s.tag in keep]
        ref_map = _project(ref_spans, key)
        pred_map = _project(pred_spans, key)
        for s in ref_spans:
            label = span_key(s, key)
            c = _credit(s, label, pred_map, mode)
            r_by[label].append(c)
            r_all.append(c)
        for s in pred_spans:
            label = span_key(s, key)
            c = _credit(s, label, ref_map, mode)
            p_by[label].append(c)
            p_all.append(c)
    per_label = {lab: _summarize(r_by.get(lab, ()), p_by.get(lab, ())) for lab in set(r_by) | set(p_by)}
    return ScoreReport(per_label, _summarize(r_all, p_all), mode.value, "span")


def score_spans(
    reference: AnnotationSet,
    predicted: AnnotationSet,
    mode: Mode = Mode.RELAXED,
    key: Key = Key.TAG_PLUS_STATUS,
) -> ScoreReport:
    if reference.task != predicted.task:
        raise ValueError(f"task mismatch: {reference.task.value} vs {predicted.task.value}")
    if reference.conversation_id != predicted.conversation_id:
        raise ValueError("reference and prediction belong to different conversations")
    return score_corpus([reference], [predicted], mode, key)


def _set_prf(ref: set, pred: set) -> tuple[float, float, float]:
    tp = len(ref & pred)
    r = tp / len(ref) if ref else 1.0
    p = tp / len(pred) if pred else 1.0
    return p, r, (1.0 if not ref and not pred else f1(p, r))


def score_conversation_set(
    references: Iterable[AnnotationSet],
    predictions: Iterable[AnnotationSet],
    key: Key = Key.TAG,
    tags: Optional[Iterable[str]] = None,
) -> ScoreReport:
    """Distinct-key set precision and recall per conversation, macro-averaged.

    Repeated mentions of the same key within a conversation count once.
    Per-label entries report the fraction of conversations where the label
    was found (recall) or confirmed (precision).
    """
    key = Key(key)
    keep = set(tags) if tags is not None else None
    refs = {(a.conversation_id, a.task): a for a in references}
    preds = {(a.conversation_id, a.task): a for a in predictions}
    ps, rs = [], []
    r_by: dict[str, list[float]] = defaultdict(list)
    p_by: dict[str, list[float]] = defaultdict(list)
    n = m = 0
    for pair in sorted(set(refs) | set(preds), key=lambda k: (k[0], k[1].value)):
        ref_set = _key_set(refs.get(pair), key, keep)
        pred_set = _key_set(preds.get(pair), key, keep)
        p, r, _ = _set_prf(ref_set, pred_set)
        ps.append(p)
        rs.append(r)
        n += len(ref_set)
        m += len(pred_set)
        for lab in ref_set:
            r_by[lab].append(float(lab in pred_set))
        for lab in pred_set:
            p_by[lab].append(float(lab in ref_set))
    per_label = {lab: _summarize(r_by.get(lab, ()), p_by.get(lab, ())) for lab in set(r_by) | set(p_by)}
    if ps:
        r, p = _mean(rs), _mean(ps)
        overall = LabelScore(r, p, f1(p, r), n, m)
    else:
        overall = LabelScore(1.0, 1.0, 1.0, 0, 0)
    return ScoreReport(per_label, overall, Mode.STRICT.value, "conversation_set")


def _key_set(ann: Optional[AnnotationSet], key: Key, keep) -> set[str]:
    if ann is None:
        return set()
    return {span_key(s, key) for s in ann.spans if keep is None or s.tag in keep}


def relation_keys(ann: AnnotationSet) -> set[frozenset]:
    spans = ann.span_by_id()
    out = set()
    for a, b in ann.relations:
        if a in spans and b in spans:
            out.add(frozenset({(spans[a].extent, spans[a].tag), (spans[b].extent, spans[b].tag)}))
    return out


def score_relations(
    references: Iterable[AnnotationSet],
    predictions: Iterable[AnnotationSet],
) -> ScoreReport:
    """P/R/F1 over undirected links whose endpoints match exactly (extent and tag)."""
    refs = {(a.conversation_id, a.task): a for a in references}
    preds = {(a.conversation_id, a.task): a for a in predictions}
    tp = n = m = 0
    for pair in set(refs) | set(preds):
        rk = relation_keys(refs[pair]) if pair in refs else set()
        pk = relation_keys(preds[pair]) if pair in preds else set()
        tp += len(rk & pk)
        n += len(rk)
        m += len(pk)
    r = tp / n if n else 1.0
    p = tp / m if m else 1.0
    overall = LabelScore(r, p, 1.0 if n == 0 and m == 0 else f1(p, r), n, m)
    return ScoreReport({}, overall, Mode.STRICT.value, "relation")


def format_table(rows: Mapping[str, Mapping[str, Optional[LabelScore]]], columns: Sequence[str]) -> str:
    """Aligned text table of ``F1 (Precision, Recall)`` cells."""
    header = "Performance F1 (Precision, Recall)"
    row_w = max([len(r) for r in rows] + [8])
    cells = {
        r: [("---" if rows[r].get(c) is None else
             f"{rows[r][c].f1:.2f} ({rows[r][c].precision:.2f}, {rows[r][c].recall:.2f})") for c in columns]
        for r in rows
    }
    col_w = [max([len(c)] + [len(cells[r][i]) for r in rows]) for i, c in enumerate(columns)]
    lines = [header, " " * row_w + " | " + " | ".join(c.ljust(w) for c, w in zip(columns, col_w))]
    lines.append("-" * len(lines[1]))
    for r in rows:
        lines.append(r.ljust(row_w) + " | " + " | ".join(v.ljust(w) for v, w in zip(cells[r], col_w)))
    return "\n".join(lines) + "\n"
