"""Voted reference construction from several labelers.

Tags and BIO marks are voted separately. The tag at each token is a
plurality over labelers; the B/I mark is then chosen as the more probable
value given the current tag and the previous token's tag, with those
probabilities counted from the labelers' own sequences.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .bio import decode_bio, encode_bio
from .corpus import OUTSIDE, AnnotationSet, Conversation, TokenLabel

START = "<start>"
VOTED = "VOTED"

Sequences = Sequence[Sequence[TokenLabel]]


@dataclass
class TransitionStats:
    counts: Counter = field(default_factory=Counter)
    smoothing: float = 1.0

    def add_sequences(self, sequences: Sequences) -> None:
        for seq in sequences:
            prev = START
            for lab in seq:
                self.counts[(prev, lab.tag, lab.bio)] += 1
                prev = lab.tag

    def merge(self, other: "TransitionStats") -> "TransitionStats":
        return TransitionStats(self.counts + other.counts, self.smoothing)

    def prob(self, bio: str, tag: str, prev: str) -> float:
        """Smoothed P(bio | tag, prev) over the two marks B and I."""
        a = self.smoothing
        b = self.counts[(prev, tag, "B")]
        i = self.counts[(prev, tag, "I")]
        num = (b if bio == "B" else i) + a
        den = b + i + 2 * a
        return num / den if den > 0 else 0.5


def labeler_sequences(ann: AnnotationSet, conv: Conversation) -> list[list[TokenLabel]]:
    return encode_bio(ann.spans, conv.turn_lengths, compose_status=True)


def estimate_transition_stats(
    annotations: Iterable[AnnotationSet],
    conversations: Iterable[Conversation],
    smoothing: float = 1.0,
) -> TransitionStats:
    by_id = {c.id: c for c in conversations}
    stats = TransitionStats(smoothing=smoothing)
    for ann in annotations:
        stats.add_sequences(labeler_sequences(ann, by_id[ann.conversation_id]))
    return stats


def plurality_tag(tags: Sequence[str]) -> str:
    counts = Counter(tags)
    # most votes, then non-O, then alphabetical
    return min(counts, key=lambda t: (-counts[t], t == "O", t))


def vote(per_labeler: Sequence[Sequences], stats: TransitionStats) -> list[list[TokenLabel]]:
    """Merge K aligned labelers' sequences into one."""
    if not per_labeler:
        raise ValueError("need at least one labeler")
    shape = [len(seq) for seq in per_labeler[0]]
    for other in per_labeler[1:]:
        if [len(seq) for seq in other] != shape:
            raise ValueError("labeler sequences differ in turn/token shape")
    out = []
    for turn, n in enumerate(shape):
        prev = START
        seq = []
        for t in range(n):
            tag = plurality_tag([lab[turn][t].tag for lab in per_labeler])
            if tag == "O":
                seq.append(OUTSIDE)
            else:
                p_b = stats.prob("B", tag, prev)
                p_i = stats.prob("I", tag, prev)
                if p_b > p_i:
                    bio = "B"
                elif p_i > p_b:
                    bio = "I"
                else:
                    bio = "B" if tag != prev else "I"
                seq.append(TokenLabel(tag, bio))
            prev = tag
        out.append(seq)
    return out


def naive_vote(per_labeler: Sequence[Sequences]) -> list[list[Optional[TokenLabel]]]:
    """Per-cell majority over whole BIO labels; ``None`` marks an unresolved tie."""
    out = []
    for turn in range(len(per_labeler[0])):
        seq = []
        for t in range(len(per_labeler[0][turn])):
            counts = Counter(lab[turn][t] for lab in per_labeler).most_common()
            if len(counts) > 1 and counts[0][1] == counts[1][1]:
                seq.append(None)
            else:
                seq.append(counts[0][0])
        out.append(seq)
    return out


def build_voted_reference(
    annotations: Iterable[AnnotationSet],
    conversations: Iterable[Conversation],
    stats: Optional[TransitionStats] = None,
    relations_from: Optional[str] = None,
) -> list[AnnotationSet]:
    """One ``VOTED`` annotation set per (conversation, task).

    Relations are not voted. When ``relations_from`` names a labeler, its
    links are carried over for any of its spans that survive verbatim.
    """
    annotations = list(annotations)
    convs = {c.id: c for c in conversations}
    if stats is None:
        stats = estimate_transition_stats(annotations, convs.values())
    groups: dict[tuple, list[AnnotationSet]] = defaultdict(list)
    for ann in annotations:
        groups[(ann.conversation_id, ann.task)].append(ann)
    out = []
    for (cid, task), anns in groups.items():
        conv = convs[cid]
        anns = sorted(anns, key=lambda a: a.labeler_id)
        voted = vote([labeler_sequences(a, conv) for a in anns], stats)
        spans = decode_bio(voted, decompose_status=True, id_prefix="v")
        relations: tuple = ()
        if relations_from is not None:
            relations = _carry_relations(spans, [a for a in anns if a.labeler_id == relations_from])
        out.append(AnnotationSet(cid, VOTED, task, tuple(spans), relations))
    return out


def _carry_relations(spans, sources) -> tuple:
    if not sources:
        return ()
    src = sources[0]
    by_key = {(s.extent, s.tag): s.span_id for s in spans}
    src_spans = src.span_by_id()
    rels = []
    for a, b in src.relations:
        ka = (src_spans[a].extent, src_spans[a].tag) if a in src_spans else None
        kb = (src_spans[b].extent, src_spans[b].tag) if b in src_spans else None
        if ka in by_key and kb in by_key:
            rels.append((by_key[ka], by_key[kb]))
    return tuple(rels)


def token_accuracy(candidate: AnnotationSet, gold: AnnotationSet, conv: Conversation) -> float:
    """Fraction of tokens whose composed tag (O included) matches gold."""
    a = labeler_sequences(candidate, conv)
    b = labeler_sequences(gold, conv)
    total = sum(conv.turn_lengths)
    same = sum(x.tag == y.tag for sa, sb in zip(a, b) for x, y in zip(sa, sb))
    return same / total
