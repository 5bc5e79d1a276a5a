"""Translational knowledge-graph embeddings trained with margin ranking.

A triple (h, r, t) is scored by the distance between head + relation and
tail; training pushes observed triples below corrupted ones by a margin.
Negative sampling honors per-relation type constraints: by default the
candidate heads/tails of a relation are exactly those observed with it
(local closed-world assumption), optionally overridden by an explicit
constraint table. Trained entity vectors export to the embedding text
format for use as the knowledge-graph modality.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .embedding_io import EmbeddingSpace

log = logging.getLogger(__name__)

DISTANCES = ("l1", "l2")


@dataclass(frozen=True)
class TransEConfig:
    rank: int = 50
    gamma: float = 0.3
    lr_embeddings: float = 0.2
    lr_parameters: float = 0.5
    epochs: int = 100
    seed: int = 0
    distance: str = "l2"

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError(f"rank must be positive, got {self.rank}")
        for name in ("gamma", "lr_embeddings", "lr_parameters"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 1:
            raise ValueError(f"epochs must be positive, got {self.epochs}")
        object.__setattr__(self, "distance", self.distance.lower())
        if self.distance not in DISTANCES:
            raise ValueError(f"distance must be one of {DISTANCES}, got {self.distance!r}")


@dataclass(frozen=True)
class TripleStore:
    """Entity/relation vocabularies, index triples, optional type constraints.

    ``head_candidates`` / ``tail_candidates`` map a relation index to the
    entity indices allowed on that side; ``None`` means unconstrained.
    """

    entities: list[str]
    relations: list[str]
    triples: list[tuple[int, int, int]]
    head_candidates: dict[int, tuple[int, ...]] | None = None
    tail_candidates: dict[int, tuple[int, ...]] | None = None

    def __post_init__(self):
        n_e, n_r = len(self.entities), len(self.relations)
        seen = set()
        for h, r, t in self.triples:
            if not (0 <= h < n_e and 0 <= t < n_e and 0 <= r < n_r):
                raise ValueError(f"triple ({h}, {r}, {t}) has an out-of-range index")
            if (h, r, t) in seen:
                raise ValueError(f"duplicate triple ({h}, {r}, {t})")
            seen.add((h, r, t))

    def with_lcwa_constraints(self) -> "TripleStore":
        """Candidates = entities observed as head/tail of each relation."""
        heads: dict[int, set[int]] = {}
        tails: dict[int, set[int]] = {}
        for h, r, t in self.triples:
            heads.setdefault(r, set()).add(h)
            tails.setdefault(r, set()).add(t)
        return TripleStore(
            self.entities,
            self.relations,
            self.triples,
            {r: tuple(sorted(s)) for r, s in heads.items()},
            {r: tuple(sorted(s)) for r, s in tails.items()},
        )

    def without_constraints(self) -> "TripleStore":
        return TripleStore(self.entities, self.relations, self.triples)


@dataclass
class TransEModel:
    entity_vectors: np.ndarray  # |E| x rank
    relation_vectors: np.ndarray  # |R| x rank
    distance: str = "l2"
    epoch_losses: list[float] = field(default_factory=list)


def load_triples(path) -> TripleStore:
    """Read `head<TAB>relation<TAB>tail` lines; vocabularies in first-occurrence
    order, duplicate triples dropped (count logged)."""
    entities: dict[str, int] = {}
    relations: dict[str, int] = {}
    triples: list[tuple[int, int, int]] = []
    seen = set()
    duplicates = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 3:
                raise ValueError(
                    f"{path}: line {lineno}: expected 'head<TAB>relation<TAB>tail', "
                    f"got {len(fields)} fields"
                )
            head, rel, tail = fields
            h = entities.setdefault(head, len(entities))
            t = entities.setdefault(tail, len(entities))
            r = relations.setdefault(rel, len(relations))
            if (h, r, t) in seen:
                duplicates += 1
                continue
            seen.add((h, r, t))
            triples.append((h, r, t))
    if duplicates:
        log.info("%s: dropped %d duplicate triples", path, duplicates)
    if not triples:
        raise ValueError(f"{path}: no triples found")
    return TripleStore(list(entities), list(relations), triples)


def load_type_constraints(path, store: TripleStore) -> TripleStore:
    """Apply an explicit `relation<TAB>domain|range<TAB>entity` table.

    Starts from the store's local closed-world candidates and replaces the
    sides the file mentions.
    """
    constrained = store.with_lcwa_constraints()
    heads = {r: set() for r in range(len(store.relations))}
    tails = {r: set() for r in range(len(store.relations))}
    mentioned: set[tuple[int, str]] = set()
    rel_index = {name: i for i, name in enumerate(store.relations)}
    ent_index = {name: i for i, name in enumerate(store.entities)}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 3 or fields[1] not in ("domain", "range"):
                raise ValueError(
                    f"{path}: line {lineno}: expected "
                    f"'relation<TAB>domain|range<TAB>entity'"
                )
            rel, side, ent = fields
            if rel not in rel_index:
                raise ValueError(f"{path}: line {lineno}: unknown relation {rel!r}")
            if ent not in ent_index:
                raise ValueError(f"{path}: line {lineno}: unknown entity {ent!r}")
            r, e = rel_index[rel], ent_index[ent]
            (heads if side == "domain" else tails)[r].add(e)
            mentioned.add((r, side))
    head_c = dict(constrained.head_candidates)
    tail_c = dict(constrained.tail_candidates)
    for r, side in mentioned:
        if side == "domain":
            head_c[r] = tuple(sorted(heads[r]))
        else:
            tail_c[r] = tuple(sorted(tails[r]))
    return TripleStore(store.entities, store.relations, store.triples, head_c, tail_c)


def _residual(ent: np.ndarray, rel: np.ndarray, triple) -> np.ndarray:
    h, r, t = triple
    return ent[h] + rel[r] - ent[t]


def _distance(u: np.ndarray, distance: str) -> float:
    if distance == "l1":
        return float(np.abs(u).sum())
    return float(np.linalg.norm(u))


def _distance_grad(u: np.ndarray, distance: str) -> np.ndarray:
    # subgradient 0 at the non-differentiable origin
    if distance == "l1":
        return np.sign(u)
    norm = np.linalg.norm(u)
    if norm == 0.0:
        return np.zeros_like(u)
    return u / norm


def transe_score(model: TransEModel, h: int, r: int, t: int) -> float:
    """Dissimilarity of a triple; lower means more plausible."""
    return _distance(
        _residual(model.entity_vectors, model.relation_vectors, (h, r, t)),
        model.distance,
    )


def margin_loss_and_gradients(
    entity_vectors: np.ndarray,
    relation_vectors: np.ndarray,
    positive: tuple[int, int, int],
    negative: tuple[int, int, int],
    gamma: float,
    distance: str = "l2",
) -> tuple[float, dict[int, np.ndarray], dict[int, np.ndarray]]:
    """Hinge loss max(0, gamma + d(pos) - d(neg)) and its (sub)gradients.

    Returns (loss, entity gradients, relation gradients); gradients are
    accumulated per index, so shared entities between the positive and the
    corrupted triple are handled.
    """
    d_pos = _distance(_residual(entity_vectors, relation_vectors, positive), distance)
    d_neg = _distance(_residual(entity_vectors, relation_vectors, negative), distance)
    loss = gamma + d_pos - d_neg
    ent_grads: dict[int, np.ndarray] = {}
    rel_grads: dict[int, np.ndarray] = {}
    if loss <= 0.0:
        return 0.0, ent_grads, rel_grads

    def accumulate(grads, idx, value):
        if idx in grads:
            grads[idx] = grads[idx] + value
        else:
            grads[idx] = value

    for triple, sign in ((positive, 1.0), (negative, -1.0)):
        h, r, t = triple
        g = sign * _distance_grad(
            _residual(entity_vectors, relation_vectors, triple), distance
        )
        accumulate(ent_grads, h, g)
        accumulate(ent_grads, t, -g)
        accumulate(rel_grads, r, g)
    return float(loss), ent_grads, rel_grads


def sample_corruption(
    rng: np.random.Generator,
    triple: tuple[int, int, int],
    observed: frozenset,
    n_entities: int,
    head_candidates: dict[int, tuple[int, ...]] | None,
    tail_candidates: dict[int, tuple[int, ...]] | None,
) -> tuple[int, int, int] | None:
    """One corrupted triple: head or tail replaced (each side with prob 1/2)
    by a uniform draw from the side's candidate set, never reproducing an
    observed triple. Falls back to the other side if one side has no valid
    replacement; returns None if neither does."""
    h, r, t = triple
    corrupt_head = rng.random() < 0.5
    for side_is_head in (corrupt_head, not corrupt_head):
        if side_is_head:
            pool = head_candidates.get(r, ()) if head_candidates is not None else range(n_entities)
            valid = [e for e in pool if (e, r, t) not in observed]
            if valid:
                return (valid[rng.integers(len(valid))], r, t)
        else:
            pool = tail_candidates.get(r, ()) if tail_candidates is not None else range(n_entities)
            valid = [e for e in pool if (h, r, e) not in observed]
            if valid:
                return (h, r, valid[rng.integers(len(valid))])
    return None


def transe_train(store: TripleStore, config: TransEConfig) -> TransEModel:
    """Stochastic gradient training of the margin ranking objective.

    One corrupted triple per observed triple per epoch; entity vectors are
    projected back onto the unit ball after every epoch. Deterministic for a
    fixed seed (single-threaded).
    """
    if not store.triples:
        raise ValueError("triple store is empty")
    used_relations = sorted({r for _, r, _ in store.triples})
    for cand, side in ((store.head_candidates, "head"), (store.tail_candidates, "tail")):
        if cand is None:
            continue
        for r in used_relations:
            if not cand.get(r, ()):
                raise ValueError(
                    f"relation {store.relations[r]!r} has an empty {side} candidate set"
                )

    rng = np.random.default_rng(config.seed)
    n_e, n_r = len(store.entities), len(store.relations)
    bound = 6.0 / math.sqrt(config.rank)
    ent = rng.uniform(-bound, bound, size=(n_e, config.rank))
    rel = rng.uniform(-bound, bound, size=(n_r, config.rank))
    norms = np.linalg.norm(rel, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    rel /= norms  # relations unit-normalized once at init

    observed = frozenset(store.triples)
    losses: list[float] = []
    for _ in range(config.epochs):
        total = 0.0
        for idx in rng.permutation(len(store.triples)):
            positive = store.triples[idx]
            negative = sample_corruption(
                rng, positive, observed, n_e,
                store.head_candidates, store.tail_candidates,
            )
            if negative is None:
                continue
            loss, ent_grads, rel_grads = margin_loss_and_gradients(
                ent, rel, positive, negative, config.gamma, config.distance
            )
            total += loss
            for e, g in ent_grads.items():
                ent[e] -= config.lr_embeddings * g
            for r, g in rel_grads.items():
                rel[r] -= config.lr_parameters * g
        norms = np.linalg.norm(ent, axis=1)
        over = norms > 1.0
        ent[over] /= norms[over, None]
        losses.append(total / len(store.triples))
    return TransEModel(ent, rel, config.distance, losses)


def _side_scores(model: TransEModel, triple, side: str) -> np.ndarray:
    h, r, t = triple
    ent, rel = model.entity_vectors, model.relation_vectors
    if side == "head":
        u = ent + rel[r] - ent[t]
    elif side == "tail":
        u = (ent[h] + rel[r]) - ent
    else:
        raise ValueError(f"side must be 'head' or 'tail', got {side!r}")
    if model.distance == "l1":
        return np.abs(u).sum(axis=1)
    return np.linalg.norm(u, axis=1)


def rank_entities(
    model: TransEModel, store: TripleStore, triple: tuple[int, int, int], side: str
) -> int:
    """Filtered 1-based rank of the true entity on one side of a triple.

    All entities are scored as replacements; those forming other observed
    triples are skipped; ties are broken by entity index.
    """
    h, r, t = triple
    true = h if side == "head" else t
    scores = _side_scores(model, triple, side)
    observed = set(store.triples)
    rank = 1
    for e in range(len(store.entities)):
        if e == true:
            continue
        candidate = (e, r, t) if side == "head" else (h, r, e)
        if candidate in observed:
            continue
        if scores[e] < scores[true] or (scores[e] == scores[true] and e < true):
            rank += 1
    return rank


def link_prediction_metrics(
    model: TransEModel, store: TripleStore, k: int = 3
) -> tuple[float, float]:
    """(mean rank, hits@k) over head and tail replacement of every triple."""
    ranks = [
        rank_entities(model, store, triple, side)
        for triple in store.triples
        for side in ("head", "tail")
    ]
    hits = sum(1 for rk in ranks if rk <= k) / len(ranks)
    return float(np.mean(ranks)), hits


def entity_space(
    model: TransEModel, store: TripleStore, modality_tag: str = "kg"
) -> EmbeddingSpace:
    """Trained entity vectors as an embedding space (spaces in names become
    underscores so tokens stay whitespace-free)."""
    tokens = [name.replace(" ", "_") for name in store.entities]
    rank = model.entity_vectors.shape[1]
    return EmbeddingSpace(tokens, np.array(model.entity_vectors), rank, modality_tag)
