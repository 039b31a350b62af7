"""Dictionary-based mention suggestions and the simulated recall experiment."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional

from .corpus import AnnotationSet, Conversation, CorpusError, LabeledSpan, iter_jsonl
from .scoring import Mode, score_corpus


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class Lexicon:
    entries: Mapping[tuple[str, ...], str]

    def __post_init__(self):
        if any(len(k) == 0 for k in self.entries):
            raise CorpusError("lexicon has an empty surface form")

    @property
    def max_len(self) -> int:
        return max((len(k) for k in self.entries), default=0)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "Lexicon":
        return cls({tuple(surface.lower().split()): tag for surface, tag in pairs})

    @classmethod
    def from_ontology(cls, ontology) -> "Lexicon":
        return cls.from_pairs((alias, e.tag) for e in ontology.entities for alias in e.aliases)


def read_lexicon(path) -> Lexicon:
    pairs = []
    for lineno, rec in iter_jsonl(path):
        try:
            pairs.append((str(rec["surface"]), str(rec["tag"])))
        except KeyError as exc:
            raise CorpusError(f"lexicon record missing {exc}", str(path), lineno) from None
        if not pairs[-1][0].strip():
            raise CorpusError("empty surface form", str(path), lineno)
    return Lexicon.from_pairs(pairs)


def write_lexicon(path, lexicon: Lexicon) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for surface, tag in sorted(lexicon.entries.items()):
            fh.write(json.dumps({"surface": " ".join(surface), "tag": tag}) + "\n")


def suggest(
    conversation: Conversation,
    lexicon: Lexicon,
    train_ids: Optional[Iterable[str]] = None,
) -> list[LabeledSpan]:
    """Greedy longest-match lexicon hits, left to right, case-insensitive.

    When ``train_ids`` is given, suggesting for a conversation outside it is
    refused so suggestions never reach evaluation data.
    """
    if train_ids is not None and conversation.id not in set(train_ids):
        raise SplitError(f"conversation {conversation.id!r} is not in the training split")
    out = []
    longest = lexicon.max_len
    for ti, turn in enumerate(conversation.turns):
        low = [t.lower() for t in turn.tokens]
        t = 0
        while t < len(low):
            for n in range(min(longest, len(low) - t), 0, -1):
                tag = lexicon.entries.get(tuple(low[t:t + n]))
                if tag is not None:
                    out.append(LabeledSpan(f"sg{len(out) + 1}", ti, t, t + n, tag))
                    t += n
                    break
            else:
                t += 1
    return out


def recall_experiment(
    gold: Iterable[AnnotationSet],
    conversations: Iterable[Conversation],
    lexicon: Lexicon,
    miss_rate: float,
    accept_rate: float,
    seed: int = 0,
) -> dict[str, float]:
    """Simulate a labeler who misses spans, with and without suggestions.

    Each gold span is dropped with probability ``miss_rate``. In the assisted
    condition a dropped span is restored when a suggestion has the same
    extent and tag and the labeler accepts it (probability ``accept_rate``).
    Recall is the pooled relaxed recall against gold.
    """
    if not (0 <= miss_rate <= 1 and 0 <= accept_rate <= 1):
        raise ValueError("rates must lie in [0, 1]")
    rng = random.Random(seed)
    convs = {c.id: c for c in conversations}
    gold = sorted(gold, key=lambda a: (a.conversation_id, a.task.value))
    without, with_ = [], []
    for ann in gold:
        hits = {(s.extent, s.tag) for s in suggest(convs[ann.conversation_id], lexicon)}
        kept, assisted = [], []
        for s in ann.spans:
            if rng.random() < miss_rate:
                if (s.extent, s.tag) in hits and rng.random() < accept_rate:
                    assisted.append(s)
                continue
            kept.append(s)
        without.append(replace(ann, labeler_id="SIM", spans=tuple(kept), relations=()))
        with_.append(replace(ann, labeler_id="SIM+", spans=tuple(kept + assisted), relations=()))
    r0 = score_corpus(gold, without, Mode.RELAXED).overall.recall
    r1 = score_corpus(gold, with_, Mode.RELAXED).overall.recall
    return {"recall_without": r0, "recall_with": r1, "delta": r1 - r0}
