"""Task-specific validation rules for a single annotation set."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Optional

from .corpus import AnnotationSet
from .ontology import Ontology

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class Violation:
    rule_id: str
    conversation_id: str
    labeler_id: str
    message: str
    severity: str = ERROR
    span_id: Optional[str] = None
    relation: Optional[tuple[str, str]] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["relation"] is not None:
            d["relation"] = list(d["relation"])
        return d


Rule = Callable[[AnnotationSet, Ontology], list[Violation]]
RULES: dict[str, tuple[str, Rule]] = {}


def rule(rule_id: str, severity: str = ERROR):
    def register(fn: Rule) -> Rule:
        RULES[rule_id] = (severity, fn)
        return fn
    return register


def _v(ann, rule_id, msg, **kw) -> Violation:
    return Violation(rule_id, ann.conversation_id, ann.labeler_id, msg, RULES[rule_id][0], **kw)


@rule("R1")
def orphan_attribute(ann: AnnotationSet, onto: Ontology) -> list[Violation]:
    """Attribute span not linked to any entity span."""
    spans = ann.span_by_id()
    linked = set()
    for a, b in ann.relations:
        if a in spans and b in spans:
            if onto.is_entity(spans[b].tag):
                linked.add(a)
            if onto.is_entity(spans[a].tag):
                linked.add(b)
    return [
        _v(ann, "R1", f"attribute {s.tag!r} is not linked to an entity", span_id=s.span_id)
        for s in ann.spans
        if onto.is_attribute(s.tag) and s.span_id not in linked
    ]


@rule("R2")
def missing_status(ann: AnnotationSet, onto: Ontology) -> list[Violation]:
    if not onto.status_required:
        return []
    return [
        _v(ann, "R2", f"entity {s.tag!r} has no status", span_id=s.span_id)
        for s in ann.spans
        if onto.is_entity(s.tag) and not s.status
    ]


@rule("R3", severity=WARNING)
def relation_kind(ann: AnnotationSet, onto: Ontology) -> list[Violation]:
    """Links should join an attribute to an entity."""
    spans = ann.span_by_id()
    out = []
    for a, b in ann.relations:
        if a not in spans or b not in spans:
            continue
        ea, eb = onto.is_entity(spans[a].tag), onto.is_entity(spans[b].tag)
        aa, ab = onto.is_attribute(spans[a].tag), onto.is_attribute(spans[b].tag)
        if (ea and eb) or (aa and ab):
            kind = "entities" if ea else "attributes"
            out.append(_v(ann, "R3", f"relation links two {kind}", relation=(a, b)))
    return out


@rule("R4")
def unknown_tag(ann: AnnotationSet, onto: Ontology) -> list[Violation]:
    return [
        _v(ann, "R4", f"tag {s.tag!r} is not in the {onto.task.value} ontology", span_id=s.span_id)
        for s in ann.spans
        if s.tag not in onto.all_tags
    ]


@rule("R5")
def invalid_status(ann: AnnotationSet, onto: Ontology) -> list[Violation]:
    """Status on a non-entity span or outside the allowed statuses."""
    out = []
    for s in ann.spans:
        if not s.status:
            continue
        if not onto.is_entity(s.tag) or s.status not in onto.statuses:
            out.append(_v(ann, "R5", f"status {s.status!r} not allowed on {s.tag!r}", span_id=s.span_id))
    return out


def validate_annotation(ann: AnnotationSet, ontology: Ontology, rules=None) -> list[Violation]:
    out = []
    for rule_id in sorted(rules or RULES):
        out.extend(RULES[rule_id][1](ann, ontology))
    return out


def has_errors(violations) -> bool:
    return any(v.severity != WARNING for v in violations)
