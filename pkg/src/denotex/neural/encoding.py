"""Turning linked question/answer pairs into model inputs."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..linker import LinkedUtterance

PAD, UNK, UNK_ENTITY = "<pad>", "<unk>", "<ent>"
RESERVED = (PAD, UNK, UNK_ENTITY)


@dataclass
class Vocabulary:
    """Word and entity indices sharing one dense index space.

    Positional symbols live in their own one-hot space: question positions
    ``0..P-1``, then NULL (``P``) and ZERO (``P+1``).
    """

    words: dict[str, int] = field(default_factory=dict)
    entities: dict[str, int] = field(default_factory=dict)
    positions: int = 0

    def __post_init__(self) -> None:
        if not self.words:
            self.words = {tok: i for i, tok in enumerate(RESERVED)}

    def __len__(self) -> int:
        return len(self.words) + len(self.entities)

    @property
    def null(self) -> int:
        return self.positions

    @property
    def zero(self) -> int:
        return self.positions + 1

    @property
    def positional_width(self) -> int:
        return self.positions + 2

    def word_index(self, word: str) -> int:
        return self.words.get(word, self.words[UNK])

    def entity_index(self, eid: str) -> int:
        return self.entities.get(eid, self.words[UNK_ENTITY])

    @classmethod
    def build(
        cls,
        pairs: Iterable[tuple[LinkedUtterance, LinkedUtterance]],
        entity_min_count: int = 2,
    ) -> "Vocabulary":
        """Collect words from the training pairs.

        Entities seen fewer than ``entity_min_count`` times share one index so
        the model learns a representation that transfers to unseen entities.
        """
        word_counts: Counter[str] = Counter()
        ent_counts: Counter[str] = Counter()
        max_q_entities = 0
        for linked_q, linked_a in pairs:
            max_q_entities = max(max_q_entities, len(linked_q.links))
            for lu in (linked_q, linked_a):
                for item, is_entity in _segments(lu):
                    (ent_counts if is_entity else word_counts)[item] += 1
        vocab = cls(positions=max_q_entities)
        for w in sorted(word_counts):
            if w not in vocab.words:
                vocab.words[w] = len(vocab.words)
        offset = len(vocab.words)
        for e in sorted(e for e, c in ent_counts.items() if c >= entity_min_count):
            vocab.entities[e] = offset + len(vocab.entities)
        return vocab

    def to_dict(self) -> dict:
        return {"words": self.words, "entities": self.entities, "positions": self.positions}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(dict(d["words"]), dict(d["entities"]), int(d["positions"]))


def _segments(lu: LinkedUtterance):
    """Yield (word, False) for plain tokens and (entity id, True) per link."""
    tokens = lu.utterance.tokens
    starts = {l.span[0]: l for l in lu.links}
    i = 0
    while i < len(tokens):
        link = starts.get(i)
        if link is not None:
            yield link.entity, True
            i = link.span[1]
        else:
            yield tokens[i], False
            i += 1


@dataclass
class EncodedSequence:
    token_indices: np.ndarray
    words: list[str | None]
    positional_features: np.ndarray
    answer_entity_mask: np.ndarray
    entity_ids: list[str | None]
    gold_position: int | None = None

    def __len__(self) -> int:
        return len(self.token_indices)


class EncodingError(ValueError):
    pass


def encode_pair(
    vocab: Vocabulary,
    linked_q: LinkedUtterance,
    linked_a: LinkedUtterance,
    gold: str | None = None,
) -> EncodedSequence:
    indices: list[int] = []
    words: list[str | None] = []
    positional: list[int] = []
    mask: list[bool] = []
    entity_ids: list[str | None] = []

    question_order: dict[str, int] = {}
    for k, link in enumerate(linked_q.links):
        question_order.setdefault(link.entity, k)

    for item, is_entity in _segments(linked_q):
        indices.append(vocab.entity_index(item) if is_entity else vocab.word_index(item))
        words.append(None if is_entity else item)
        positional.append(vocab.zero)
        mask.append(False)
        entity_ids.append(item if is_entity else None)

    gold_position = None
    for item, is_entity in _segments(linked_a):
        if is_entity:
            k = question_order.get(item)
            slot = k if k is not None and k < vocab.positions else vocab.null
            if gold is not None and item == gold and gold_position is None:
                gold_position = len(indices)
            indices.append(vocab.entity_index(item))
            words.append(None)
            positional.append(slot)
            mask.append(True)
            entity_ids.append(item)
        else:
            indices.append(vocab.word_index(item))
            words.append(item)
            positional.append(vocab.zero)
            mask.append(False)
            entity_ids.append(None)

    if gold is not None and gold_position is None:
        raise EncodingError(f"gold entity {gold!r} is not among the answer links")

    onehot = np.zeros((len(indices), vocab.positional_width))
    onehot[np.arange(len(indices)), positional] = 1.0
    return EncodedSequence(
        np.asarray(indices, dtype=np.int64),
        words,
        onehot,
        np.asarray(mask, dtype=bool),
        entity_ids,
        gold_position,
    )


def load_pretrained(path: str | Path) -> dict[str, np.ndarray]:
    """Read whitespace-separated word vectors (GloVe text format)."""
    table: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip().split()
            if not parts:
                continue
            vec = np.asarray([float(x) for x in parts[1:]], dtype=np.float64)
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise ValueError(f"{path}:{lineno}: vector has {len(vec)} dims, expected {dim}")
            table[parts[0]] = vec
    return table


def pretrained_matrix(
    words: Sequence[str | None], table: dict[str, np.ndarray], dim: int
) -> np.ndarray:
    """Rows of the fixed table; entities and unknown words get zeros."""
    out = np.zeros((len(words), dim))
    for t, w in enumerate(words):
        if w is not None and w in table:
            out[t] = table[w]
    return out
