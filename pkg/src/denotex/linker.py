"""Entity linking: n-gram candidates, overlap resolution and disambiguation."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .kb import DEFAULT_MAX_DISTANCE, KnowledgeBase, normalize

EXACT_SEARCH_LIMIT = 100_000
SEARCH_BEAM = 100

Span = tuple[int, int]


@dataclass(frozen=True)
class Utterance:
    raw: str
    tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, raw: str) -> "Utterance":
        return cls(raw, tuple(normalize(raw).split()))

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class EntityCandidate:
    span: Span
    surface: str
    matches: tuple[tuple[str, float], ...]

    def __len__(self) -> int:
        return self.span[1] - self.span[0]


@dataclass(frozen=True)
class Link:
    span: Span
    entity: str


@dataclass(frozen=True)
class LinkedUtterance:
    utterance: Utterance
    links: tuple[Link, ...] = ()

    @property
    def entity_ids(self) -> list[str]:
        return [l.entity for l in self.links]

    def to_dict(self) -> dict:
        return {
            "raw": self.utterance.raw,
            "tokens": list(self.utterance.tokens),
            "links": [[l.span[0], l.span[1], l.entity] for l in self.links],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinkedUtterance":
        utt = Utterance(d["raw"], tuple(d["tokens"]))
        links = tuple(Link((int(s), int(e)), eid) for s, e, eid in d["links"])
        return cls(utt, links)


@dataclass(frozen=True)
class LinkerConfig:
    max_ngram_order: int = 4
    max_normalized_distance: float = DEFAULT_MAX_DISTANCE
    beam_width: int = 5

    def __post_init__(self) -> None:
        if self.max_ngram_order < 1:
            raise ValueError("max_ngram_order must be positive")
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if not 0.0 <= self.max_normalized_distance <= 1.0:
            raise ValueError("max_normalized_distance must lie in [0, 1]")


@dataclass(frozen=True)
class Assignment:
    """One entity per candidate, with the scores used for ranking."""

    entities: tuple[str, ...]
    objective: int = field(default=0, compare=False)
    popularity: int = field(default=0, compare=False)
    distance: float = field(default=0.0, compare=False)


def generate_candidates(
    kb: KnowledgeBase, utt: Utterance, cfg: LinkerConfig
) -> list[EntityCandidate]:
    out = []
    n_tok = len(utt.tokens)
    for start in range(n_tok):
        for order in range(1, cfg.max_ngram_order + 1):
            end = start + order
            if end > n_tok:
                break
            surface = " ".join(utt.tokens[start:end])
            matches = kb.lookup_surface(surface, cfg.max_normalized_distance)
            if matches:
                out.append(EntityCandidate((start, end), surface, tuple(matches)))
    return out


def _overlaps(a: Span, b: Span) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def resolve_overlaps(candidates: Sequence[EntityCandidate]) -> list[EntityCandidate]:
    """Drop shorter candidates in favour of overlapping longer ones.

    A candidate overlapping any strictly longer one is discarded. Remaining
    equal-length overlaps are settled greedily from the left.
    """
    survivors = [
        c for c in candidates
        if not any(len(o) > len(c) and _overlaps(o.span, c.span) for o in candidates)
    ]
    kept: list[EntityCandidate] = []
    for c in sorted(survivors, key=lambda c: (c.span[0], -len(c), c.span[1])):
        if not any(_overlaps(c.span, k.span) for k in kept):
            kept.append(c)
    return kept


def _pair_score(kb: KnowledgeBase, a: str, b: str) -> int:
    # the same entity picked twice (or also in context) adds nothing
    return 0 if a == b else kb.relation_count(a, b)


def relation_objective(
    kb: KnowledgeBase, entities: Sequence[str], context: Sequence[str] = ()
) -> int:
    total = 0
    for i, j in itertools.combinations(range(len(entities)), 2):
        total += _pair_score(kb, entities[i], entities[j])
    for e in entities:
        for c in context:
            total += _pair_score(kb, e, c)
    return total


def _rank_key(a: Assignment) -> tuple:
    return (-a.objective, -a.popularity, a.distance, a.entities)


def disambiguate_relation_max(
    kb: KnowledgeBase,
    candidates: Sequence[EntityCandidate],
    context: Sequence[str] = (),
    beam_width: int = 1,
) -> list[Assignment]:
    """Rank complete assignments by the number of KB relations among the chosen
    entities and between them and the context entities.

    Exhaustive when the assignment space is small, otherwise a left-to-right
    beam search.
    """
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    if not candidates:
        return [Assignment(())]
    context = list(dict.fromkeys(context))
    options = [c.matches for c in candidates]

    ctx_score = [[sum(_pair_score(kb, eid, c) for c in context) for eid, _ in opts] for opts in options]
    pop = [[kb.popularity(eid) for eid, _ in opts] for opts in options]

    space = 1
    for opts in options:
        space *= len(opts)

    def build(choice: Sequence[int]) -> Assignment:
        ents = tuple(options[k][i][0] for k, i in enumerate(choice))
        obj = sum(ctx_score[k][i] for k, i in enumerate(choice))
        for a, b in itertools.combinations(range(len(ents)), 2):
            obj += _pair_score(kb, ents[a], ents[b])
        return Assignment(
            ents,
            obj,
            sum(pop[k][i] for k, i in enumerate(choice)),
            sum(options[k][i][1] for k, i in enumerate(choice)),
        )

    if space <= EXACT_SEARCH_LIMIT:
        ranked = (build(ch) for ch in itertools.product(*(range(len(o)) for o in options)))
        return _distinct_top(ranked, beam_width)

    beam: list[tuple[int, ...]] = [()]
    for k in range(len(options)):
        grown = [prefix + (i,) for prefix in beam for i in range(len(options[k]))]
        scored = [(_partial_key(kb, options, ctx_score, pop, ch), ch) for ch in grown]
        scored.sort(key=lambda x: x[0])
        beam = [ch for _, ch in scored[: max(SEARCH_BEAM, beam_width)]]
    return _distinct_top((build(ch) for ch in beam), beam_width)


def _partial_key(kb, options, ctx_score, pop, choice) -> tuple:
    ents = [options[k][i][0] for k, i in enumerate(choice)]
    obj = sum(ctx_score[k][i] for k, i in enumerate(choice))
    for a, b in itertools.combinations(range(len(ents)), 2):
        obj += _pair_score(kb, ents[a], ents[b])
    p = sum(pop[k][i] for k, i in enumerate(choice))
    d = sum(options[k][i][1] for k, i in enumerate(choice))
    return (-obj, -p, d, tuple(ents))


def _distinct_top(assignments: Iterable[Assignment], n: int) -> list[Assignment]:
    seen: dict[tuple[str, ...], Assignment] = {}
    for a in assignments:
        prev = seen.get(a.entities)
        if prev is None or _rank_key(a) < _rank_key(prev):
            seen[a.entities] = a
    return heapq.nsmallest(n, seen.values(), key=_rank_key)


def disambiguate_popularity(
    kb: KnowledgeBase, candidates: Sequence[EntityCandidate], beam_width: int = 1
) -> list[Assignment]:
    """Context-free baseline: each candidate prefers its most popular match.

    The n-best list draws every candidate from its top-n matches and ranks the
    combinations by total popularity (then distance, then ids).
    """
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    if not candidates:
        return [Assignment(())]
    per_candidate = []
    for c in candidates:
        ranked = sorted(c.matches, key=lambda m: (-kb.popularity(m[0]), m[1], m[0]))
        per_candidate.append([(eid, kb.popularity(eid), dist) for eid, dist in ranked[:beam_width]])

    # the order is translation invariant, so pruning partial sums to top-n is exact
    partial: list[tuple[tuple, tuple[str, ...], int, float]] = [((0, 0.0, ()), (), 0, 0.0)]
    for opts in per_candidate:
        grown = []
        for _, ents, p, d in partial:
            for eid, ep, ed in opts:
                ne, np_, nd = ents + (eid,), p + ep, d + ed
                grown.append(((-np_, nd, ne), ne, np_, nd))
        grown.sort(key=lambda x: x[0])
        partial = grown[:beam_width]
    return [Assignment(ents, relation_objective(kb, ents), p, d) for _, ents, p, d in partial]


def _to_linked(utt: Utterance, cands: Sequence[EntityCandidate], a: Assignment) -> LinkedUtterance:
    links = tuple(
        Link(c.span, eid) for c, eid in sorted(zip(cands, a.entities), key=lambda x: x[0].span)
    )
    return LinkedUtterance(utt, links)


def link_utterance(
    kb: KnowledgeBase,
    utt: Utterance,
    cfg: LinkerConfig,
    method: str = "relation_max",
    context: Sequence[str] = (),
) -> list[LinkedUtterance]:
    """n-best linked versions of a single utterance."""
    cands = sorted(resolve_overlaps(generate_candidates(kb, utt, cfg)), key=lambda c: c.span)
    if method == "relation_max":
        ranked = disambiguate_relation_max(kb, cands, context, cfg.beam_width)
    elif method == "popularity":
        ranked = disambiguate_popularity(kb, cands, cfg.beam_width)
    else:
        raise ValueError(f"unknown linking method {method!r}")
    return [_to_linked(utt, cands, a) for a in ranked]


def link_pair(
    kb: KnowledgeBase,
    question: Utterance,
    answer: Utterance,
    cfg: LinkerConfig | None = None,
    method: str = "relation_max",
) -> tuple[LinkedUtterance, list[LinkedUtterance]]:
    """Link the question first, then the answer hint using the question's
    entities as context. Returns the top question and the answer n-best."""
    cfg = cfg or LinkerConfig()
    linked_q = link_utterance(kb, question, cfg, method)[0]
    answers = link_utterance(kb, answer, cfg, method, context=linked_q.entity_ids)
    return linked_q, answers
