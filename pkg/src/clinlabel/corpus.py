"""Conversations, annotation sets and their line-delimited file formats."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Optional


class CorpusError(ValueError):
    """Raised for malformed corpus files; carries the offending line number."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class Speaker(str, Enum):
    DR = "DR"
    PT = "PT"
    OTHER = "OTHER"


class Task(str, Enum):
    SYMPTOMS = "symptoms"
    MEDICATIONS = "medications"
    CONDITIONS = "conditions"

    @classmethod
    def parse(cls, value: str) -> "Task":
        try:
            return cls(value.lower())
        except ValueError:
            raise CorpusError(f"unknown task {value!r}") from None


@dataclass(frozen=True)
class Turn:
    speaker: Speaker
    tokens: tuple[str, ...]

    def __post_init__(self):
        if not self.tokens:
            raise CorpusError("turn has no tokens")
        for tok in self.tokens:
            if not tok or any(ch.isspace() for ch in tok):
                raise CorpusError(f"token {tok!r} is empty or contains whitespace")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class Conversation:
    id: str
    turns: tuple[Turn, ...]

    def __post_init__(self):
        if not self.id:
            raise CorpusError("conversation id is empty")
        if not self.turns:
            raise CorpusError(f"conversation {self.id!r} has no turns")

    @property
    def turn_lengths(self) -> list[int]:
        return [len(t.tokens) for t in self.turns]


@dataclass(frozen=True)
class LabeledSpan:
    """A tagged token range ``[start, end)`` inside a single turn."""

    span_id: str
    turn_index: int
    start: int
    end: int
    tag: str
    status: Optional[str] = None

    @property
    def length(self) -> int:
        return self.end - self.start

    @property
    def composed_tag(self) -> str:
        return compose_tag(self.tag, self.status)

    @property
    def extent(self) -> tuple[int, int, int]:
        return (self.turn_index, self.start, self.end)

    def tokens(self) -> Iterator[tuple[int, int]]:
        for t in range(self.start, self.end):
            yield (self.turn_index, t)


@dataclass(frozen=True)
class AnnotationSet:
    conversation_id: str
    labeler_id: str
    task: Task
    spans: tuple[LabeledSpan, ...] = ()
    relations: tuple[tuple[str, str], ...] = ()

    def span_by_id(self) -> dict[str, LabeledSpan]:
        return {s.span_id: s for s in self.spans}


@dataclass(frozen=True)
class TokenLabel:
    tag: str = "O"
    bio: str = "O"

    def __post_init__(self):
        if self.bio not in ("B", "I", "O"):
            raise ValueError(f"bio mark must be B, I or O, got {self.bio!r}")
        if (self.bio == "O") != (self.tag == "O"):
            raise ValueError(f"inconsistent token label ({self.tag!r}, {self.bio!r})")

    def __str__(self) -> str:
        return "O" if self.bio == "O" else f"{self.tag}_{self.bio}"


OUTSIDE = TokenLabel()
STATUS_SEP = "|"


def compose_tag(tag: str, status: Optional[str]) -> str:
    return f"{tag}{STATUS_SEP}{status}" if status else tag


def decompose_tag(composed: str) -> tuple[str, Optional[str]]:
    tag, sep, status = composed.partition(STATUS_SEP)
    return tag, (status if sep else None)


@dataclass(frozen=True)
class Violation:
    kind: str
    conversation_id: str
    labeler_id: str
    message: str
    ref: Optional[str] = None


# ---------------------------------------------------------------------------
# parsing

def _conversation_from_record(rec: dict) -> Conversation:
    turns = []
    for t in rec["turns"]:
        try:
            speaker = Speaker(t["speaker"])
        except ValueError:
            raise CorpusError(f"unknown speaker {t['speaker']!r}") from None
        turns.append(Turn(speaker, tuple(t["tokens"])))
    return Conversation(str(rec["id"]), tuple(turns))


def _annotation_from_record(rec: dict) -> AnnotationSet:
    spans = []
    for s in rec.get("spans", []):
        start, end = int(s["start"]), int(s["end"])
        if start < 0 or end <= start:
            raise CorpusError(f"span {s.get('span_id')!r} has empty or negative range [{start}, {end})")
        spans.append(LabeledSpan(
            span_id=str(s["span_id"]),
            turn_index=int(s["turn"]),
            start=start,
            end=end,
            tag=str(s["tag"]),
            status=s.get("status") or None,
        ))
    ids = [s.span_id for s in spans]
    if len(set(ids)) != len(ids):
        raise CorpusError("duplicate span_id in annotation set")
    relations = []
    for pair in rec.get("relations", []):
        if len(pair) != 2:
            raise CorpusError(f"relation {pair!r} must have exactly two endpoints")
        relations.append((str(pair[0]), str(pair[1])))
    return AnnotationSet(
        conversation_id=str(rec["conversation_id"]),
        labeler_id=str(rec["labeler_id"]),
        task=Task.parse(rec["task"]),
        spans=tuple(spans),
        relations=tuple(relations),
    )


def conversation_to_record(conv: Conversation) -> dict:
    return {
        "id": conv.id,
        "turns": [{"speaker": t.speaker.value, "tokens": list(t.tokens)} for t in conv.turns],
    }


def annotation_to_record(ann: AnnotationSet) -> dict:
    spans = []
    for s in ann.spans:
        rec = {"span_id": s.span_id, "turn": s.turn_index, "start": s.start, "end": s.end, "tag": s.tag}
        if s.status:
            rec["status"] = s.status
        spans.append(rec)
    return {
        "conversation_id": ann.conversation_id,
        "labeler_id": ann.labeler_id,
        "task": ann.task.value,
        "spans": spans,
        "relations": [list(r) for r in ann.relations],
    }


def iter_jsonl(path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"invalid JSON: {exc.msg}", str(path), lineno) from None
            if not isinstance(rec, dict):
                raise CorpusError("record is not a JSON object", str(path), lineno)
            yield lineno, rec


def read_conversations(path) -> list[Conversation]:
    out: list[Conversation] = []
    seen: set[str] = set()
    for lineno, rec in iter_jsonl(path):
        try:
            conv = _conversation_from_record(rec)
        except CorpusError as exc:
            raise CorpusError(str(exc), str(path), lineno) from None
        except (KeyError, TypeError) as exc:
            raise CorpusError(f"malformed conversation record ({exc!r})", str(path), lineno) from None
        if conv.id in seen:
            raise CorpusError(f"duplicate conversation id {conv.id!r}", str(path), lineno)
        seen.add(conv.id)
        out.append(conv)
    return out


def read_annotations(path) -> list[AnnotationSet]:
    out = []
    for lineno, rec in iter_jsonl(path):
        try:
            out.append(_annotation_from_record(rec))
        except CorpusError as exc:
            raise CorpusError(str(exc), str(path), lineno) from None
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"malformed annotation record ({exc!r})", str(path), lineno) from None
    return out


def load_corpus(path, kind: str):
    """Parse ``path`` as one of the toolkit's file kinds.

    ``kind`` is ``conversations``, ``annotations``, ``ontology`` or ``lexicon``.
    Loading is syntax-only; referential checks live in :func:`cross_validate`.
    """
    if kind == "conversations":
        return read_conversations(path)
    if kind == "annotations":
        return read_annotations(path)
    if kind == "ontology":
        from .ontology import read_ontology
        return read_ontology(path)
    if kind == "lexicon":
        from .suggest import read_lexicon
        return read_lexicon(path)
    raise ValueError(f"unknown corpus kind {kind!r}")


def dumps_jsonl(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)


def write_conversations(path, conversations: Iterable[Conversation]) -> None:
    Path(path).write_text(dumps_jsonl(conversation_to_record(c) for c in conversations), encoding="utf-8")


def write_annotations(path, annotations: Iterable[AnnotationSet]) -> None:
    Path(path).write_text(dumps_jsonl(annotation_to_record(a) for a in annotations), encoding="utf-8")


# ---------------------------------------------------------------------------
# referential checks

def cross_validate(annotations, conversations, ontology=None) -> list[Violation]:
    """Return every referential problem between annotations and the corpus.

    Checks conversation existence, span ranges (one turn, half-open), tags
    against ``ontology`` (when given) and relation endpoints.
    """
    by_id = {c.id: c for c in conversations}
    known = ontology.all_tags if ontology is not None else None
    out: list[Violation] = []
    for ann in annotations:
        def add(kind, msg, ref=None):
            out.append(Violation(kind, ann.conversation_id, ann.labeler_id, msg, ref))

        conv = by_id.get(ann.conversation_id)
        if conv is None:
            add("unknown-conversation", f"no conversation {ann.conversation_id!r}")
        if ontology is not None and ontology.task != ann.task:
            add("task-mismatch", f"annotation task {ann.task.value} vs ontology {ontology.task.value}")
        ids = set()
        for s in ann.spans:
            if s.span_id in ids:
                add("duplicate-span", f"span_id {s.span_id!r} repeated", s.span_id)
            ids.add(s.span_id)
            if conv is not None:
                if not 0 <= s.turn_index < len(conv.turns):
                    add("out-of-range", f"turn {s.turn_index} outside 0..{len(conv.turns) - 1}", s.span_id)
                elif not 0 <= s.start < s.end <= len(conv.turns[s.turn_index].tokens):
                    add("out-of-range",
                        f"span [{s.start}, {s.end}) outside turn of {len(conv.turns[s.turn_index].tokens)} tokens",
                        s.span_id)
            if known is not None and s.tag not in known:
                add("unknown-tag", f"tag {s.tag!r} not in ontology", s.span_id)
        for a, b in ann.relations:
            ref = f"{a}-{b}"
            if a == b:
                add("self-relation", f"relation endpoints are identical ({a!r})", ref)
            for end in (a, b):
                if end not in ids:
                    add("dangling-relation", f"relation endpoint {end!r} has no span", ref)
    return out
