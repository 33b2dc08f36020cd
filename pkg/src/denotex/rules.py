"""Context entity cancellation and its refinements."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .kb import KnowledgeBase
from .linker import Link, LinkedUtterance

log = logging.getLogger(__name__)

PLACEHOLDER = "#ENTITY"
PAD = "<s>"
ENUMERATION_KEYWORDS = frozenset({"or"})
# tokens allowed between an entity and the enumeration keyword ("male or a female")
ENUMERATION_GAP = 1


@dataclass
class IdentificationResult:
    chosen: Link | None
    scores: dict[str, float] = field(default_factory=dict)

    @property
    def entity(self) -> str | None:
        return self.chosen.entity if self.chosen else None


@dataclass
class NgramPriorTable:
    n: int
    counts: dict[str, tuple[int, int]] = field(default_factory=dict)
    smoothing_alpha: float = 1.0
    skipped: int = 0

    def prior(self, pattern: str) -> float:
        den, extra = self.counts.get(pattern, (0, 0))
        a = self.smoothing_alpha
        return (den + a) / (den + extra + 2 * a)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# n={self.n} alpha={self.smoothing_alpha!r}\n")
            for pattern in sorted(self.counts):
                den, extra = self.counts[pattern]
                fh.write(f"{pattern}\t{den}\t{extra}\n")

    @classmethod
    def load(cls, path: str | Path) -> "NgramPriorTable":
        n, alpha = None, 1.0
        counts: dict[str, tuple[int, int]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("# "):
                    for item in line[2:].split():
                        key, _, value = item.partition("=")
                        if key == "n":
                            n = int(value)
                        elif key == "alpha":
                            alpha = float(value)
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected pattern<TAB>den<TAB>extra")
                den, extra = int(parts[1]), int(parts[2])
                if den < 0 or extra < 0:
                    raise ValueError(f"{path}:{lineno}: negative count")
                counts[parts[0]] = (den, extra)
                if n is None:
                    n = len(parts[0].split())
        return cls(n or 3, counts, alpha)


def context_pattern(tokens: Sequence[str], start: int, n: int) -> str:
    """The n-1 tokens before an entity slot followed by the placeholder."""
    window = [tokens[i] if i >= 0 else PAD for i in range(start - (n - 1), start)]
    return " ".join([*window, PLACEHOLDER])


def _pick(linked_a: LinkedUtterance, remaining: Iterable[Link], score) -> IdentificationResult:
    best: Link | None = None
    best_score = float("-inf")
    scores: dict[str, float] = {}
    for link in remaining:
        s = score(link)
        if s > scores.get(link.entity, float("-inf")):
            scores[link.entity] = s
        if s > best_score:
            best, best_score = link, s
    return IdentificationResult(best, scores)


def basic_cancellation(
    linked_q: LinkedUtterance, linked_a: LinkedUtterance, kb: KnowledgeBase
) -> IdentificationResult:
    question_ids = set(linked_q.entity_ids)
    remaining = [l for l in linked_a.links if l.entity not in question_ids]
    return _pick(linked_a, remaining, lambda l: kb.popularity(l.entity))


def detect_enumeration(question: LinkedUtterance) -> bool:
    """Keyword spotting: an "or" with an entity link close on both sides."""
    tokens = question.utterance.tokens
    for pos, tok in enumerate(tokens):
        if tok not in ENUMERATION_KEYWORDS:
            continue
        left = any(0 <= pos - l.span[1] <= ENUMERATION_GAP for l in question.links)
        right = any(0 <= l.span[0] - pos - 1 <= ENUMERATION_GAP for l in question.links)
        if left and right:
            return True
    return False


def _remaining(linked_q: LinkedUtterance, linked_a: LinkedUtterance) -> list[Link]:
    question_ids = set(linked_q.entity_ids)
    if detect_enumeration(linked_q):
        return [l for l in linked_a.links if l.entity in question_ids]
    return [l for l in linked_a.links if l.entity not in question_ids]


def cancellation_with_enumeration(
    linked_q: LinkedUtterance, linked_a: LinkedUtterance, kb: KnowledgeBase
) -> IdentificationResult:
    return _pick(linked_a, _remaining(linked_q, linked_a), lambda l: kb.popularity(l.entity))


def cancellation_with_priors(
    linked_q: LinkedUtterance,
    linked_a: LinkedUtterance,
    kb: KnowledgeBase,
    priors: NgramPriorTable,
) -> IdentificationResult:
    tokens = linked_a.utterance.tokens

    def score(link: Link) -> float:
        return kb.popularity(link.entity) * priors.prior(context_pattern(tokens, link.span[0], priors.n))

    return _pick(linked_a, _remaining(linked_q, linked_a), score)


def train_ngram_priors(
    training_pairs: Iterable[tuple[LinkedUtterance, LinkedUtterance, str]],
    n: int = 3,
    smoothing_alpha: float = 1.0,
) -> NgramPriorTable:
    """Count how often each context pattern precedes the gold entity versus an
    extra entity in the answer hints."""
    if n < 2:
        raise ValueError("n-gram order must be >= 2")
    den: dict[str, int] = defaultdict(int)
    extra: dict[str, int] = defaultdict(int)
    skipped = 0
    for _, linked_a, gold in training_pairs:
        if gold not in linked_a.entity_ids:
            skipped += 1
            continue
        tokens = linked_a.utterance.tokens
        for link in linked_a.links:
            pattern = context_pattern(tokens, link.span[0], n)
            if link.entity == gold:
                den[pattern] += 1
            else:
                extra[pattern] += 1
    if skipped:
        log.info("skipped %d training pairs whose gold entity is not linked", skipped)
    counts = {p: (den.get(p, 0), extra.get(p, 0)) for p in set(den) | set(extra)}
    return NgramPriorTable(n, counts, smoothing_alpha, skipped)


IDENTIFIERS = {
    "basic": basic_cancellation,
    "enum": cancellation_with_enumeration,
}
