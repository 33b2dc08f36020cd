"""Glue between linking, identification and evaluation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .data import DialoguePair
from .evaluation import PredictionRecord
from .kb import KnowledgeBase
from .linker import LinkedUtterance, LinkerConfig, Utterance, link_pair
from .rules import (
    NgramPriorTable,
    basic_cancellation,
    cancellation_with_enumeration,
    cancellation_with_priors,
)


@dataclass
class LinkedPair:
    id: str
    gold: str
    question: LinkedUtterance
    answers: list[LinkedUtterance]

    @property
    def top_answer(self) -> LinkedUtterance:
        return self.answers[0]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "gold": self.gold,
            "question": self.question.to_dict(),
            "answer_nbest": [a.to_dict() for a in self.answers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinkedPair":
        return cls(
            d["id"],
            d["gold"],
            LinkedUtterance.from_dict(d["question"]),
            [LinkedUtterance.from_dict(a) for a in d["answer_nbest"]],
        )


def link_dataset(
    kb: KnowledgeBase,
    pairs: Iterable[DialoguePair],
    cfg: LinkerConfig | None = None,
    method: str = "relation_max",
) -> list[LinkedPair]:
    cfg = cfg or LinkerConfig()
    out = []
    for p in pairs:
        q, answers = link_pair(kb, Utterance.from_text(p.question), Utterance.from_text(p.answer_hint), cfg, method)
        out.append(LinkedPair(p.id, p.gold_denotation, q, answers))
    return out


def save_linked(pairs: Iterable[LinkedPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(json.dumps(p.to_dict(), sort_keys=True) + "\n")


def load_linked(path: str | Path) -> list[LinkedPair]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(LinkedPair.from_dict(json.loads(line)))
            except (KeyError, ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad linked-pair record ({exc})") from exc
    return out


def identify_rules(
    kb: KnowledgeBase,
    pairs: Sequence[LinkedPair],
    identifier: str,
    priors: NgramPriorTable | None = None,
) -> list[str | None]:
    if identifier == "basic":
        return [basic_cancellation(p.question, p.top_answer, kb).entity for p in pairs]
    if identifier == "enum":
        return [cancellation_with_enumeration(p.question, p.top_answer, kb).entity for p in pairs]
    if identifier == "priors":
        if priors is None:
            raise ValueError("the priors identifier needs a trained prior table")
        return [cancellation_with_priors(p.question, p.top_answer, kb, priors).entity for p in pairs]
    raise ValueError(f"unknown rule identifier {identifier!r}")


def identify_neural(model, pairs: Sequence[LinkedPair]) -> list[str | None]:
    from .neural import encode_pair

    out: list[str | None] = []
    for p in pairs:
        seq = encode_pair(model.vocab, p.question, p.top_answer)
        out.append(model.predict(seq)[1] if seq.answer_entity_mask.any() else None)
    return out


def prediction_records(pairs: Sequence[LinkedPair], chosen: Sequence[str | None]) -> list[PredictionRecord]:
    return [
        PredictionRecord(p.id, p.gold, [a.entity_ids for a in p.answers], c)
        for p, c in zip(pairs, chosen)
    ]


def training_triples(pairs: Iterable[LinkedPair]):
    return [(p.question, p.top_answer, p.gold) for p in pairs]
