"""Word-level alignment of per-modality embedding spaces.

Visual vectors arrive per image and are max-pooled to synset level, then
propagated up a synset hierarchy and projected onto lexemes. Knowledge-graph
vectors are re-keyed from concept ids to their most frequent surface form.
The three word-level vocabularies are finally intersected into one aligned
concept space with a matrix per modality (concepts as columns).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .embedding_io import EmbeddingSpace

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynsetHierarchy:
    """Child/parent edges between synsets plus synset-to-lexeme assignments."""

    edges: list[tuple[str, str]]
    synset_lexemes: list[tuple[str, str]]

    @classmethod
    def from_tsv(cls, edges_path, lexemes_path=None) -> "SynsetHierarchy":
        edges = load_hierarchy_edges(edges_path)
        lexemes = load_synset_lexemes(lexemes_path) if lexemes_path else []
        return cls(edges, lexemes)

    def children_map(self) -> dict[str, list[str]]:
        children: dict[str, list[str]] = {}
        for child, parent in self.edges:
            children.setdefault(parent, []).append(child)
        return children


@dataclass(frozen=True)
class SurfaceFormTable:
    """Usage counts of textual surface forms per knowledge-graph concept."""

    rows: list[tuple[str, str, int]]

    def __post_init__(self):
        seen = set()
        for concept, form, count in self.rows:
            if not isinstance(count, int) or count < 0:
                raise ValueError(
                    f"surface form count for ({concept!r}, {form!r}) must be a "
                    f"non-negative integer, got {count!r}"
                )
            if (concept, form) in seen:
                raise ValueError(f"duplicate surface form row ({concept!r}, {form!r})")
            seen.add((concept, form))


@dataclass(frozen=True)
class AlignedConceptSpace:
    """Shared vocabulary with one matrix per modality, concepts as columns."""

    concepts: list[str]
    T: np.ndarray  # text,   t x n
    G: np.ndarray  # kg,     g x n
    V: np.ndarray  # visual, v x n

    def __post_init__(self):
        n = len(self.concepts)
        for name in ("T", "G", "V"):
            mat = np.asarray(getattr(self, name), dtype=np.float64)
            if mat.ndim != 2 or mat.shape[1] != n:
                raise ValueError(
                    f"{name} must have one column per concept ({n}), got shape {mat.shape}"
                )
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"{name} contains non-finite values")
            zero = ~np.any(mat != 0.0, axis=0)
            if np.any(zero):
                bad = self.concepts[int(np.argmax(zero))]
                raise ValueError(f"all-zero {name} column for concept {bad!r}")
            mat.setflags(write=False)
            object.__setattr__(self, name, mat)

    @property
    def n(self) -> int:
        return len(self.concepts)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.T.shape[0], self.G.shape[0], self.V.shape[0]

    def index(self, concept: str) -> int:
        # linear scan is avoided by callers that build their own index
        return self.concepts.index(concept)


def _parse_tsv(path, n_fields: int):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != n_fields:
                raise ValueError(
                    f"{path}: line {lineno}: expected {n_fields} tab-separated "
                    f"fields, got {len(fields)}"
                )
            yield lineno, fields


def load_hierarchy_edges(path) -> list[tuple[str, str]]:
    """Read `child_id<TAB>parent_id` lines."""
    return [(child, parent) for _, (child, parent) in _parse_tsv(path, 2)]


def load_synset_lexemes(path) -> list[tuple[str, str]]:
    """Read `synset_id<TAB>lexeme` lines."""
    return [(synset, lexeme) for _, (synset, lexeme) in _parse_tsv(path, 2)]


def load_surface_forms(path) -> SurfaceFormTable:
    """Read `concept_id<TAB>surface_form<TAB>count` lines."""
    rows = []
    for lineno, (concept, form, count) in _parse_tsv(path, 3):
        try:
            count_int = int(count)
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: count {count!r} is not an integer") from None
        rows.append((concept, form, count_int))
    return SurfaceFormTable(rows)


def group_image_vectors(space: EmbeddingSpace) -> dict[str, list[np.ndarray]]:
    """Group per-image vectors by synset; tokens are `synset_id/image_id`."""
    groups: dict[str, list[np.ndarray]] = {}
    for token, row in zip(space.tokens, space.vectors):
        synset, sep, _ = token.partition("/")
        if not sep:
            raise ValueError(f"token {token!r} has no 'synset_id/image_id' separator")
        groups.setdefault(synset, []).append(row)
    return groups


def pool_image_vectors(groups: Mapping[str, Sequence]) -> EmbeddingSpace:
    """Componentwise max over each synset's image vectors.

    Every group must be non-empty and all vectors must share one dimension.
    """
    tokens = list(groups)
    if not tokens:
        raise ValueError("no image groups given")
    dim = None
    rows = []
    for synset in tokens:
        vectors = groups[synset]
        if len(vectors) == 0:
            raise ValueError(f"synset {synset!r} has no image vectors")
        stacked = np.asarray(vectors, dtype=np.float64)
        if stacked.ndim != 2:
            raise ValueError(f"synset {synset!r}: image vectors have inconsistent dimensions")
        if dim is None:
            dim = stacked.shape[1]
        elif stacked.shape[1] != dim:
            raise ValueError(
                f"synset {synset!r}: vectors have dimension {stacked.shape[1]}, expected {dim}"
            )
        rows.append(stacked.max(axis=0))
    return EmbeddingSpace(tokens, np.asarray(rows), dim, "visual")


def _check_acyclic_topo(children: dict[str, list[str]]) -> list[str]:
    """DFS over parent->child edges; returns nodes in finish order
    (descendants before ancestors). Raises on a cycle, naming a witness."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[str, int] = {}
    nodes = set(children)
    for kids in children.values():
        nodes.update(kids)
    finish: list[str] = []
    for start in sorted(nodes):
        if color.get(start, WHITE) != WHITE:
            continue
        path = [start]
        stack = [(start, iter(children.get(start, ())))]
        color[start] = GRAY
        while stack:
            node, it = stack[-1]
            child = next(it, None)
            if child is None:
                color[node] = BLACK
                finish.append(node)
                path.pop()
                stack.pop()
                continue
            state = color.get(child, WHITE)
            if state == GRAY:
                cycle = path[path.index(child):] + [child]
                raise ValueError("hierarchy contains a cycle: " + " -> ".join(cycle))
            if state == WHITE:
                color[child] = GRAY
                path.append(child)
                stack.append((child, iter(children.get(child, ()))))
    return finish


def abstract_hierarchy(hierarchy: SynsetHierarchy, leaves: EmbeddingSpace) -> EmbeddingSpace:
    """Add vectors for internal synsets by max-pooling their covered subtrees.

    An internal synset (one with children) that has no vector of its own gets
    the componentwise max over all covered synsets in its subtree; internal
    synsets whose subtree contains no covered synset are omitted. The output
    keeps all original vectors and appends the abstracted synsets (sorted).
    """
    children = hierarchy.children_map()
    finish_order = _check_acyclic_topo(children)

    covered = set(leaves.tokens)
    # max over covered synsets in the subtree rooted at each node (incl. itself)
    subtree_max: dict[str, np.ndarray] = {}
    for node in finish_order:
        parts = []
        if node in covered:
            parts.append(leaves.vector(node))
        for child in children.get(node, ()):
            if child in subtree_max:
                parts.append(subtree_max[child])
        if parts:
            subtree_max[node] = parts[0] if len(parts) == 1 else np.max(parts, axis=0)

    abstracted = {
        node: vec
        for node, vec in subtree_max.items()
        if node in children and node not in covered
    }
    log.info("abstracted %d internal synsets", len(abstracted))

    tokens = list(leaves.tokens) + sorted(abstracted)
    rows = np.vstack(
        [leaves.vectors] + [abstracted[s][None, :] for s in sorted(abstracted)]
    ) if abstracted else np.array(leaves.vectors)
    return EmbeddingSpace(tokens, rows, leaves.dim, leaves.modality_tag)


def project_synsets_to_lexemes(
    synsets: EmbeddingSpace, synset_lexemes: Iterable[tuple[str, str]]
) -> EmbeddingSpace:
    """Max-pool each lexeme's covered synsets into a word-level vector.

    Lexemes whose synsets all lack vectors are dropped (count logged).
    """
    by_lexeme: dict[str, list[str]] = {}
    for synset, lexeme in synset_lexemes:
        by_lexeme.setdefault(lexeme, []).append(synset)

    tokens = []
    rows = []
    dropped = 0
    for lexeme in sorted(by_lexeme):
        vecs = [synsets.vector(s) for s in by_lexeme[lexeme] if s in synsets]
        if not vecs:
            dropped += 1
            continue
        tokens.append(lexeme)
        rows.append(vecs[0] if len(vecs) == 1 else np.max(vecs, axis=0))
    if dropped:
        log.info("dropped %d lexemes with no covered synset", dropped)
    if not tokens:
        raise ValueError("no lexeme has a covered synset")
    return EmbeddingSpace(tokens, np.asarray(rows), synsets.dim, synsets.modality_tag)


def select_surface_forms(concepts: EmbeddingSpace, table: SurfaceFormTable) -> EmbeddingSpace:
    """Re-key each concept to its most frequent surface form.

    Per concept the highest-count form wins, ties going to the
    lexicographically smaller form; spaces become underscores. When two
    concepts claim the same form, the higher count keeps it (ties: smaller
    concept id). Concepts without any surface form are dropped.
    """
    best: dict[str, tuple[int, str]] = {}
    for concept, form, count in table.rows:
        cur = best.get(concept)
        if cur is None or count > cur[0] or (count == cur[0] and form < cur[1]):
            best[concept] = (count, form)

    claimed: dict[str, tuple[int, str]] = {}  # token -> (count, concept)
    for concept in concepts.tokens:
        if concept not in best:
            continue
        count, form = best[concept]
        token = form.replace(" ", "_")
        cur = claimed.get(token)
        if cur is None or count > cur[0] or (count == cur[0] and concept < cur[1]):
            claimed[token] = (count, concept)

    winners = {concept: token for token, (_, concept) in claimed.items()}
    tokens = []
    rows = []
    for i, concept in enumerate(concepts.tokens):
        token = winners.get(concept)
        if token is None:
            continue
        tokens.append(token)
        rows.append(concepts.vectors[i])
    dropped = len(concepts) - len(tokens)
    if dropped:
        log.info("dropped %d concepts without a usable surface form", dropped)
    if not tokens:
        raise ValueError("no concept has a surface form")
    return EmbeddingSpace(tokens, np.asarray(rows), concepts.dim, concepts.modality_tag)


def build_aligned_space(
    text: EmbeddingSpace, kg: EmbeddingSpace, visual: EmbeddingSpace
) -> AlignedConceptSpace:
    """Intersect the three word-level vocabularies into one concept space.

    Concepts are the sorted intersection; a concept carrying an all-zero
    vector in any modality is dropped (logged).
    """
    common = sorted(set(text.tokens) & set(kg.tokens) & set(visual.tokens))
    if not common:
        raise ValueError("the three vocabularies have an empty intersection")

    kept = []
    dropped = []
    for concept in common:
        if any(not np.any(s.vector(concept)) for s in (text, kg, visual)):
            dropped.append(concept)
        else:
            kept.append(concept)
    if dropped:
        log.info("dropped %d concepts with an all-zero vector: %s%s",
                 len(dropped), ", ".join(dropped[:5]), "..." if len(dropped) > 5 else "")
    if not kept:
        raise ValueError("every intersected concept has an all-zero vector in some modality")

    def columns(space: EmbeddingSpace) -> np.ndarray:
        return np.stack([space.vector(c) for c in kept], axis=1)

    return AlignedConceptSpace(kept, columns(text), columns(kg), columns(visual))
