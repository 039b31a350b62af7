"""Label and relation counts per conversation."""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Optional

from .corpus import AnnotationSet, Conversation


def surface(span, conv: Conversation) -> str:
    return " ".join(conv.turns[span.turn_index].tokens[span.start:span.end]).lower()


def label_stats(annotations: Iterable[AnnotationSet], conversations: Optional[Iterable[Conversation]] = None) -> dict:
    """Per-task totals and per-conversation means.

    With conversations available, ``unique`` counts distinct highlighted
    surface strings (per conversation for the mean, corpus-wide for the total).
    """
    convs = {c.id: c for c in conversations} if conversations is not None else None
    acc = defaultdict(lambda: {"conversations": 0, "spans": 0, "relations": 0, "unique_per_conv": 0,
                               "surfaces": set(), "by_tag": defaultdict(int)})
    for ann in annotations:
        row = acc[ann.task.value]
        row["conversations"] += 1
        row["spans"] += len(ann.spans)
        row["relations"] += len(ann.relations)
        for s in ann.spans:
            row["by_tag"][s.tag] += 1
        if convs is not None and ann.conversation_id in convs:
            surfaces = {surface(s, convs[ann.conversation_id]) for s in ann.spans}
            row["unique_per_conv"] += len(surfaces)
            row["surfaces"] |= surfaces
    out = {}
    for task in sorted(acc):
        row = acc[task]
        n = row["conversations"]
        entry = {
            "conversations": n,
            "spans": row["spans"],
            "relations": row["relations"],
            "spans_per_conversation": row["spans"] / n,
            "relations_per_conversation": row["relations"] / n,
            "by_tag": dict(sorted(row["by_tag"].items())),
        }
        if convs is not None:
            entry["unique_spans"] = len(row["surfaces"])
            entry["unique_per_conversation"] = row["unique_per_conv"] / n
        out[task] = entry
    return out
