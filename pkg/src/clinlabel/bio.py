"""Span lists <-> per-token (tag, BIO) sequences."""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from .corpus import OUTSIDE, LabeledSpan, TokenLabel, decompose_tag


class OverlapError(ValueError):
    def __init__(self, span_ids: Sequence[str]):
        self.span_ids = tuple(span_ids)
        super().__init__(f"overlapping spans: {', '.join(self.span_ids)}")


def encode_bio(
    spans: Iterable[LabeledSpan],
    turn_lengths: Sequence[int],
    compose_status: bool = False,
) -> list[list[TokenLabel]]:
    seqs = [[OUTSIDE] * n for n in turn_lengths]
    owner: dict[tuple[int, int], str] = {}
    clashes: list[str] = []
    for s in spans:
        if not 0 <= s.turn_index < len(seqs) or not 0 <= s.start < s.end <= turn_lengths[s.turn_index]:
            raise ValueError(f"span {s.span_id!r} outside conversation bounds")
        tag = s.composed_tag if compose_status else s.tag
        for t in range(s.start, s.end):
            key = (s.turn_index, t)
            if key in owner:
                clashes.extend(x for x in (owner[key], s.span_id) if x not in clashes)
                continue
            owner[key] = s.span_id
            seqs[s.turn_index][t] = TokenLabel(tag, "B" if t == s.start else "I")
    if clashes:
        raise OverlapError(clashes)
    return seqs


def iter_runs(seq: Sequence[TokenLabel]) -> Iterable[tuple[int, int, str]]:
    """Yield ``(start, end, tag)`` chunks, coercing stray I marks to B.

    An I opens a new chunk when it follows O or a different tag.
    """
    start: Optional[int] = None
    cur = None
    for t, lab in enumerate(seq):
        continues = lab.bio == "I" and cur == lab.tag
        if start is not None and not continues:
            yield (start, t, cur)
            start, cur = None, None
        if lab.bio != "O" and start is None:
            start, cur = t, lab.tag
    if start is not None:
        yield (start, len(seq), cur)


def decode_bio(
    sequences: Sequence[Sequence[TokenLabel]],
    decompose_status: bool = True,
    id_prefix: str = "s",
) -> list[LabeledSpan]:
    spans = []
    for turn, seq in enumerate(sequences):
        for start, end, tag in iter_runs(seq):
            status = None
            if decompose_status:
                tag, status = decompose_tag(tag)
            spans.append(LabeledSpan(f"{id_prefix}{len(spans) + 1}", turn, start, end, tag, status))
    return spans


def normalize_bio(sequences: Sequence[Sequence[TokenLabel]]) -> list[list[TokenLabel]]:
    """Apply the I-to-B coercion without leaving sequence form."""
    out = []
    for seq in sequences:
        norm = [OUTSIDE] * len(seq)
        for start, end, tag in iter_runs(seq):
            norm[start] = TokenLabel(tag, "B")
            for t in range(start + 1, end):
                norm[t] = TokenLabel(tag, "I")
        out.append(norm)
    return out


def parse_label(text: str) -> TokenLabel:
    """``"Drug_B"`` -> TokenLabel("Drug", "B"); ``"O"`` -> outside."""
    if text == "O":
        return OUTSIDE
    tag, _, bio = text.rpartition("_")
    return TokenLabel(tag, bio)
