"""Task ontologies: tag inventories, organ systems, statuses and pruning."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .corpus import AnnotationSet, CorpusError, Task

OTHER = "Other"


@dataclass(frozen=True)
class EntityDef:
    tag: str
    system: Optional[str] = None
    aliases: tuple[str, ...] = ()
    synthetic: bool = False

    @property
    def prefix(self) -> str:
        return self.tag.split(":", 1)[0]


@dataclass(frozen=True)
class AttributeDef:
    tag: str
    numeric_like: bool = False


@dataclass(frozen=True)
class Ontology:
    task: Task
    entities: tuple[EntityDef, ...]
    attributes: tuple[AttributeDef, ...]
    statuses: tuple[str, ...] = ()
    status_required: bool = False
    preference_order: tuple[str, ...] = ()

    def __post_init__(self):
        tags = [e.tag for e in self.entities] + [a.tag for a in self.attributes]
        dupes = {t for t in tags if tags.count(t) > 1}
        if dupes:
            raise CorpusError(f"duplicate ontology tags: {sorted(dupes)}")
        unknown = set(self.preference_order) - self.attribute_tags
        if unknown:
            raise CorpusError(f"preference_order names non-attribute tags: {sorted(unknown)}")
        if self.status_required and not self.statuses:
            raise CorpusError("status_required but no statuses listed")

    @property
    def entity_tags(self) -> frozenset[str]:
        return frozenset(e.tag for e in self.entities)

    @property
    def attribute_tags(self) -> frozenset[str]:
        return frozenset(a.tag for a in self.attributes)

    @property
    def all_tags(self) -> frozenset[str]:
        return self.entity_tags | self.attribute_tags

    def is_entity(self, tag: str) -> bool:
        return tag in self.entity_tags

    def is_attribute(self, tag: str) -> bool:
        return tag in self.attribute_tags

    def entity(self, tag: str) -> Optional[EntityDef]:
        for e in self.entities:
            if e.tag == tag:
                return e
        return None

    def system_of(self, tag: str) -> Optional[str]:
        e = self.entity(tag)
        return e.system if e else None

    def same_system(self, tag: str) -> list[str]:
        """Entity tags sharing ``tag``'s organ system (including ``tag``)."""
        system = self.system_of(tag)
        if system is None:
            return [tag]
        return sorted(e.tag for e in self.entities if e.system == system)


def ontology_from_record(rec: Mapping) -> Ontology:
    return Ontology(
        task=Task.parse(rec["task"]),
        entities=tuple(
            EntityDef(e["tag"], e.get("system"), tuple(e.get("aliases", ())), bool(e.get("synthetic", False)))
            for e in rec.get("entities", [])
        ),
        attributes=tuple(AttributeDef(a["tag"], bool(a.get("numeric_like", False))) for a in rec.get("attributes", [])),
        statuses=tuple(rec.get("statuses", ())),
        status_required=bool(rec.get("status_required", False)),
        preference_order=tuple(rec.get("preference_order", ())),
    )


def ontology_to_record(onto: Ontology) -> dict:
    entities = []
    for e in onto.entities:
        rec = {"tag": e.tag, "system": e.system, "aliases": list(e.aliases)}
        if e.synthetic:
            rec["synthetic"] = True
        entities.append(rec)
    return {
        "task": onto.task.value,
        "entities": entities,
        "attributes": [{"tag": a.tag, "numeric_like": a.numeric_like} for a in onto.attributes],
        "statuses": list(onto.statuses),
        "status_required": onto.status_required,
        "preference_order": list(onto.preference_order),
    }


def read_ontology(path) -> Ontology:
    try:
        rec = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"invalid JSON: {exc.msg}", str(path), exc.lineno) from None
    try:
        return ontology_from_record(rec)
    except (KeyError, TypeError) as exc:
        raise CorpusError(f"malformed ontology ({exc!r})", str(path)) from None


def write_ontology(path, onto: Ontology) -> None:
    Path(path).write_text(json.dumps(ontology_to_record(onto), indent=2) + "\n", encoding="utf-8")


def default_ontology(task) -> Ontology:
    """One of the bundled ontologies (``symptoms``, ``medications``, ``conditions``)."""
    task = Task.parse(task) if isinstance(task, str) else task
    text = resources.files("clinlabel.data").joinpath(f"{task.value}.json").read_text(encoding="utf-8")
    return ontology_from_record(json.loads(text))


def resolve_preference(candidates: Iterable[str], ontology: Ontology) -> str:
    """Pick the attribute tag to use when several are equally valid.

    Tags listed in ``preference_order`` win in that order; unlisted tags rank
    after all listed ones, alphabetically.
    """
    cands = set(candidates)
    if not cands:
        raise ValueError("no candidate attribute tags")
    unknown = cands - ontology.attribute_tags
    if unknown:
        raise ValueError(f"not attribute tags of this ontology: {sorted(unknown)}")
    order = {tag: i for i, tag in enumerate(ontology.preference_order)}
    return min(cands, key=lambda t: (order.get(t, len(order)), t))


def other_tag(entity: EntityDef) -> Optional[str]:
    if entity.system is None:
        return None
    return f"{entity.prefix}:{OTHER}"


def prune(
    ontology: Ontology,
    counts: Mapping[str, int],
    kappas: Mapping[str, float],
    min_count: int,
    min_kappa: float,
) -> tuple[Ontology, dict[str, Optional[str]]]:
    """Drop rare or unreliable entity tags.

    Returns the pruned ontology and a remap from every original entity tag to
    its replacement: itself when kept, ``<prefix>:Other`` when it has an
    organ system, ``None`` when it is removed outright. ``*:Other`` tags are
    the fallback targets and are always kept.
    """
    missing = [e.tag for e in ontology.entities if e.tag not in counts or e.tag not in kappas]
    if missing:
        raise ValueError(f"counts/kappas missing for {missing[:5]}")
    kept: list[EntityDef] = []
    remap: dict[str, Optional[str]] = {}
    for e in ontology.entities:
        is_other = e.tag.endswith(":" + OTHER)
        if is_other or (counts[e.tag] >= min_count and kappas[e.tag] >= min_kappa):
            kept.append(e)
            remap[e.tag] = e.tag
        else:
            remap[e.tag] = other_tag(e)
    kept_tags = {e.tag for e in kept}
    for e in ontology.entities:
        target = remap[e.tag]
        if target is not None and target not in kept_tags:
            kept.append(EntityDef(target, e.system, (), synthetic=True))
            kept_tags.add(target)
    return replace(ontology, entities=tuple(kept)), remap


def apply_remap(ann: AnnotationSet, remap: Mapping[str, Optional[str]]) -> AnnotationSet:
    """Rewrite span tags through a prune remap; spans mapped to None are dropped."""
    spans = []
    for s in ann.spans:
        target = remap.get(s.tag, s.tag)
        if target is None:
            continue
        spans.append(replace(s, tag=target))
    kept = {s.span_id for s in spans}
    relations = tuple(r for r in ann.relations if r[0] in kept and r[1] in kept)
    return replace(ann, spans=tuple(spans), relations=relations)
