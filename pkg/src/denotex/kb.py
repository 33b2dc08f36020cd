"""In-memory triple knowledge base with a fuzzy surface-form index."""

from __future__ import annotations

import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from rapidfuzz.distance import Levenshtein

DEFAULT_MAX_DISTANCE = 0.2


class KBFormatError(ValueError):
    """Raised for malformed knowledge-base files."""


def normalize(text: str) -> str:
    """Case-fold, drop punctuation and collapse whitespace."""
    folded = text.casefold()
    kept = "".join(ch for ch in folded if not unicodedata.category(ch).startswith("P"))
    return " ".join(kept.split())


def normalized_distance(a: str, b: str) -> float:
    """Levenshtein distance of two already-normalized strings over the longer length."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return Levenshtein.distance(a, b) / longest


@dataclass(frozen=True)
class Entity:
    id: str
    canonical_name: str
    aliases: tuple[str, ...] = ()

    def surfaces(self) -> tuple[str, ...]:
        return (self.canonical_name, *self.aliases)


@dataclass(frozen=True)
class Triple:
    subject: str
    relation: str
    object: str


@dataclass
class KnowledgeBase:
    """Immutable-after-load triple store.

    ``adjacency`` keeps every triple from both endpoints, so a self-loop shows
    up twice in its entity's bag.
    """

    entities: dict[str, Entity]
    triples: list[Triple]
    surface_index: dict[str, frozenset[str]] = field(default_factory=dict)
    adjacency: dict[str, list[tuple[str, str]]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for t in self.triples:
            for end in (t.subject, t.object):
                if end not in self.entities:
                    raise KBFormatError(f"triple {t} references unknown entity {end!r}")
        index: dict[str, set[str]] = defaultdict(set)
        for ent in self.entities.values():
            for s in ent.surfaces():
                key = normalize(s)
                if key:
                    index[key].add(ent.id)
        self.surface_index = {k: frozenset(v) for k, v in index.items()}

        adjacency: dict[str, list[tuple[str, str]]] = {eid: [] for eid in self.entities}
        self._popularity: Counter[str] = Counter()
        self._pair_counts: dict[str, Counter[str]] = defaultdict(Counter)
        for t in self.triples:
            adjacency[t.subject].append((t.relation, t.object))
            adjacency[t.object].append((t.relation, t.subject))
            self._popularity[t.subject] += 1
            self._popularity[t.object] += 1
            if t.subject != t.object:
                self._pair_counts[t.subject][t.object] += 1
                self._pair_counts[t.object][t.subject] += 1
        self.adjacency = adjacency

        # surfaces bucketed by length so fuzzy lookup can skip hopeless lengths
        self._by_length: dict[int, list[str]] = defaultdict(list)
        for key in sorted(self.surface_index):
            self._by_length[len(key)].append(key)

    def _check(self, eid: str) -> None:
        if eid not in self.entities:
            raise KeyError(f"unknown entity id {eid!r}")

    def popularity(self, eid: str) -> int:
        self._check(eid)
        return self._popularity[eid]

    def relation_count(self, a: str, b: str) -> int:
        """Number of triples between two distinct entities, either direction."""
        self._check(a)
        self._check(b)
        if a == b:
            raise ValueError("relation_count needs two distinct entities")
        return self._pair_counts[a][b] if a in self._pair_counts else 0

    def neighbors(self, eid: str) -> set[str]:
        self._check(eid)
        return {n for _, n in self.adjacency[eid]}

    def lookup_surface(
        self, surface: str, max_normalized_distance: float = DEFAULT_MAX_DISTANCE
    ) -> list[tuple[str, float]]:
        """Entities with a name or alias within the normalized edit-distance threshold.

        Sorted by ascending distance, then descending popularity, then id.
        """
        if not surface or not surface.strip():
            raise ValueError("surface must be non-empty")
        query = normalize(surface)
        if not query:
            return []
        best: dict[str, float] = {}
        for eid in self.surface_index.get(query, ()):
            best[eid] = 0.0
        if max_normalized_distance > 0:
            qlen = len(query)
            for length, keys in self._by_length.items():
                longest = max(qlen, length)
                budget = int(max_normalized_distance * longest + 1e-9)
                if abs(length - qlen) > budget:
                    continue
                for key in keys:
                    d = Levenshtein.distance(query, key, score_cutoff=budget)
                    if d > budget:
                        continue
                    dist = d / longest
                    if dist > max_normalized_distance:
                        continue
                    for eid in self.surface_index[key]:
                        if dist < best.get(eid, 2.0):
                            best[eid] = dist
        return sorted(best.items(), key=lambda x: (x[1], -self._popularity[x[0]], x[0]))


def _read_lines(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip() or line.startswith("#"):
                continue
            yield lineno, line


def load_kb(triples_path: str | Path, lexicon_path: str | Path) -> KnowledgeBase:
    """Load a KB from a tab-separated triples file and lexicon file.

    Entities that appear only in triples get their id as canonical name.
    """
    triples_path, lexicon_path = Path(triples_path), Path(lexicon_path)
    entities: dict[str, Entity] = {}
    for lineno, line in _read_lines(lexicon_path):
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise KBFormatError(
                f"{lexicon_path}:{lineno}: expected 2 or 3 tab-separated fields, got {len(parts)}"
            )
        eid, name = parts[0].strip(), parts[1].strip()
        if not eid or not name:
            raise KBFormatError(f"{lexicon_path}:{lineno}: empty id or canonical name")
        if eid in entities:
            raise KBFormatError(f"{lexicon_path}:{lineno}: duplicate entity id {eid!r}")
        aliases = ()
        if len(parts) == 3 and parts[2].strip():
            aliases = tuple(a.strip() for a in parts[2].split("|") if a.strip())
        entities[eid] = Entity(eid, name, aliases)

    triples: list[Triple] = []
    for lineno, line in _read_lines(triples_path):
        parts = line.split("\t")
        if len(parts) != 3 or not all(p.strip() for p in parts):
            raise KBFormatError(
                f"{triples_path}:{lineno}: expected subject<TAB>relation<TAB>object"
            )
        s, r, o = (p.strip() for p in parts)
        for end in (s, o):
            if end not in entities:
                entities[end] = Entity(end, end)
        triples.append(Triple(s, r, o))
    return KnowledgeBase(entities, triples)


def write_kb(kb: KnowledgeBase, triples_path: str | Path, lexicon_path: str | Path) -> None:
    with open(lexicon_path, "w", encoding="utf-8", newline="\n") as fh:
        for ent in kb.entities.values():
            fh.write(f"{ent.id}\t{ent.canonical_name}\t{'|'.join(ent.aliases)}\n")
    with open(triples_path, "w", encoding="utf-8", newline="\n") as fh:
        for t in kb.triples:
            fh.write(f"{t.subject}\t{t.relation}\t{t.object}\n")
